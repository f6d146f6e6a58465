"""CSV and JSON serialization for matrices, panels, curves, bands and reports.

All numbers are written with full round-trip precision and parsed as plain
decimal floating point; no locale-dependent formats. Band CSVs carry one row
per grid point (t, lower, upper, in_validity) with a JSON metadata sidecar.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .bootstrap import BootstrapSupDistribution
from .bounds import ConfidenceBand
from .empirical import IndexSet, RiskCurve
from .harness import MetricsReport
from .losses import UNCONSTRAINED, BinaryScorePanel, LossMatrix, ParameterGrid


class ParseError(ValueError):
    """A file exists but its contents cannot be interpreted."""


def _fmt(x: float) -> str:
    return repr(float(x))


def _parse_row(row: list[str], path, line: int) -> list[float]:
    try:
        return [float(cell) for cell in row]
    except ValueError as exc:
        raise ParseError(f"{path}:{line}: non-numeric cell ({exc})") from None


def read_loss_matrix(path, orientation: str = UNCONSTRAINED) -> LossMatrix:
    """Loss matrix CSV: header row of grid values, one data row per sample."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if len(rows) < 2:
        raise ParseError(f"{path}: need a grid header row and at least one sample row")
    grid_values = _parse_row(rows[0], path, 1)
    data = []
    for i, row in enumerate(rows[1:], start=2):
        values = _parse_row(row, path, i)
        if len(values) != len(grid_values):
            raise ParseError(f"{path}:{i}: row has {len(values)} cells, expected {len(grid_values)}")
        data.append(values)
    try:
        return LossMatrix(ParameterGrid(grid_values), np.array(data), orientation)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None


def write_loss_matrix(matrix: LossMatrix, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_fmt(t) for t in matrix.grid.values)
        for row in matrix.values:
            writer.writerow(_fmt(x) for x in row)


def _read_numeric_table(path) -> np.ndarray:
    """Headerless numeric CSV; a leading non-numeric row is skipped."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ParseError(f"{path}: empty file")
    start = 0
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        start = 1
    if start >= len(rows):
        raise ParseError(f"{path}: no data rows")
    data = [_parse_row(row, path, i) for i, row in enumerate(rows[start:], start=start + 1)]
    widths = {len(r) for r in data}
    if len(widths) != 1:
        raise ParseError(f"{path}: ragged rows (widths {sorted(widths)})")
    return np.array(data)


def read_panel(scores_path, labels_path) -> BinaryScorePanel:
    """Paired K-column CSVs of model scores and binary labels."""
    scores = _read_numeric_table(scores_path)
    labels = _read_numeric_table(labels_path)
    try:
        return BinaryScorePanel(scores, labels)
    except ValueError as exc:
        raise ParseError(f"{scores_path} / {labels_path}: {exc}") from None


def write_curve(curve: RiskCurve, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "value"])
        for t, v in zip(curve.grid.values, curve.values):
            writer.writerow([_fmt(t), _fmt(v)])


def curve_record(curve: RiskCurve) -> dict:
    return {
        "t": curve.grid.values.tolist(),
        "value": curve.values.tolist(),
        "sample_size": curve.sample_size,
    }


def write_band(band: ConfidenceBand, path, sidecar_extra: dict | None = None) -> Path:
    """Band CSV plus a JSON sidecar next to it; returns the sidecar path."""
    path = Path(path)
    mask = np.zeros(len(band.grid), dtype=bool)
    mask[band.validity.indices] = True
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "lower", "upper", "in_validity"])
        for j, t in enumerate(band.grid.values):
            lower = _fmt(band.lower[j]) if band.lower is not None else ""
            upper = _fmt(band.upper[j]) if band.upper is not None else ""
            writer.writerow([_fmt(t), lower, upper, int(mask[j])])
    sidecar = path.with_suffix(path.suffix + ".json")
    payload = band.metadata()
    if sidecar_extra:
        payload.update(sidecar_extra)
    sidecar.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return sidecar


def read_band(path) -> ConfidenceBand:
    """Band CSV plus its JSON sidecar, reassembled into a ConfidenceBand.

    The sidecar (written by ``write_band``) supplies method, delta, sample
    size and the simultaneity flag; the CSV supplies the per-point sides and
    validity mask.
    """
    path = Path(path)
    sidecar = path.with_suffix(path.suffix + ".json")
    if not sidecar.exists():
        raise ParseError(f"{path}: missing metadata sidecar {sidecar}")
    try:
        meta = json.loads(sidecar.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{sidecar}: invalid JSON ({exc})") from None
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["t", "lower", "upper", "in_validity"]:
        raise ParseError(f"{path}: expected a band CSV header")
    t, lower, upper, mask = [], [], [], []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise ParseError(f"{path}:{i}: expected 4 cells")
        try:
            t.append(float(row[0]))
            lower.append(float(row[1]) if row[1] else None)
            upper.append(float(row[2]) if row[2] else None)
            mask.append(bool(int(row[3])))
        except ValueError as exc:
            raise ParseError(f"{path}:{i}: {exc}") from None
    has_lower = any(v is not None for v in lower)
    has_upper = any(v is not None for v in upper)
    if (has_lower and None in lower) or (has_upper and None in upper):
        raise ParseError(f"{path}: a band side must be present at every grid point or absent")
    try:
        return ConfidenceBand(
            grid=ParameterGrid(t),
            lower=np.array(lower, dtype=float) if has_lower else None,
            upper=np.array(upper, dtype=float) if has_upper else None,
            validity=IndexSet.from_mask(np.array(mask)),
            delta=float(meta["delta"]),
            method=str(meta["method"]),
            width_info=meta.get("width"),
            sample_size=int(meta.get("sample_size", 0)),
            simultaneous=bool(meta.get("simultaneous", True)),
            notes=tuple(meta.get("notes", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from None


def write_sup_distribution(dist: BootstrapSupDistribution, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sup"])
        for v in dist.sorted_values:
            writer.writerow([_fmt(v)])


_METRIC_COLUMNS = ("metric", "method", "family", "n", "runs", "estimate", "std_error")


def write_metrics_csv(reports: list[MetricsReport], path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_METRIC_COLUMNS + ("extra",))
        for rep in reports:
            cfg = rep.config
            writer.writerow([
                rep.metric,
                cfg.get("method", ""),
                cfg.get("family", ""),
                cfg.get("n", ""),
                rep.runs,
                _fmt(rep.estimate),
                _fmt(rep.std_error),
                json.dumps(rep.extra, sort_keys=True),
            ])


def write_metrics_json(reports: list[MetricsReport], path, header: dict | None = None) -> None:
    path = Path(path)
    payload = {"reports": [rep.as_dict() for rep in reports]}
    if header:
        payload.update(header)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

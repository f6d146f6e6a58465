"""Loss matrices over threshold grids.

Core data model: a grid of threshold values and an n-by-m matrix of bounded
per-sample losses evaluated at each threshold, with a declared monotonicity
orientation. Includes the multi-label classification losses (false negative /
false positive / false discovery proportions and prediction-set size), exact
orientation validation, and the monotonization and batching transforms that
restore monotonicity for nearly-monotone losses.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

NONINCREASING = "nonincreasing"
NONDECREASING = "nondecreasing"
UNCONSTRAINED = "unconstrained"
ORIENTATIONS = (NONINCREASING, NONDECREASING, UNCONSTRAINED)

LOSS_KINDS = ("FNP", "FPP", "FDP", "SetSize")

# Column-block size used when materializing prediction tensors, to keep the
# intermediate n x K x block boolean array small.
_GRID_BLOCK = 256


def _frozen(values, dtype=float) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ParameterGrid:
    """Strictly increasing threshold values shared by curves, bands and matrices."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("grid must be a nonempty 1-D sequence")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        if v.size > 1 and not np.all(np.diff(v) > 0):
            raise ValueError("grid values must be strictly increasing")
        object.__setattr__(self, "values", _frozen(v))

    def __len__(self) -> int:
        return int(self.values.size)

    def __eq__(self, other) -> bool:
        return isinstance(other, ParameterGrid) and np.array_equal(self.values, other.values)

    @classmethod
    def linspace(cls, low: float, high: float, size: int) -> "ParameterGrid":
        return cls(np.linspace(low, high, size))


@dataclass(frozen=True)
class LossMatrix:
    """n samples by m grid points of losses in [0, 1] with a declared orientation.

    The orientation is a declaration about how each row behaves as the
    threshold grows; it is not enforced at construction (``validate`` checks
    it), so that genuinely non-monotone losses such as the false discovery
    proportion can be represented and then monotonized.
    """

    grid: ParameterGrid
    values: np.ndarray
    orientation: str = UNCONSTRAINED

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("loss values must be a 2-D array (samples x grid)")
        if v.shape[0] < 1:
            raise ValueError("need at least one sample row")
        if v.shape[1] != len(self.grid):
            raise ValueError(
                f"loss matrix has {v.shape[1]} columns but grid has {len(self.grid)} points"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("loss values must be finite")
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise ValueError("loss values must lie in [0, 1]")
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"unknown orientation {self.orientation!r}")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def m(self) -> int:
        return int(self.values.shape[1])


@dataclass(frozen=True)
class BinaryScorePanel:
    """Model scores and ground-truth labels for K-class multi-label data."""

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=float)
        y = np.asarray(self.labels)
        if s.ndim != 2 or y.ndim != 2 or s.shape != y.shape:
            raise ValueError("scores and labels must be 2-D arrays of identical shape")
        if s.size == 0:
            raise ValueError("panel must be nonempty")
        if s.min() < 0.0 or s.max() > 1.0:
            raise ValueError("scores must lie in [0, 1]")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("labels must be binary (0/1)")
        object.__setattr__(self, "scores", _frozen(s))
        object.__setattr__(self, "labels", _frozen(y, dtype=np.int64))

    @property
    def n(self) -> int:
        return int(self.scores.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.scores.shape[1])


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of an exact bounds-and-orientation check.

    ``first_row``/``first_col`` locate the first violating entry (0-based;
    for orientation failures the column is the right-hand element of the
    offending adjacent pair).
    """

    passed: bool
    kind: str | None = None  # 'bounds' | 'orientation'
    first_row: int | None = None
    first_col: int | None = None
    message: str = "ok"


def validate(matrix: LossMatrix, tolerance: float = 0.0) -> ValidationReport:
    """Check that entries are in [0, 1] and the declared orientation holds.

    Violations are reported, never raised. The orientation check is exact by
    default (``tolerance`` 0); a positive tolerance permits monotonicity
    violations up to that size, for user-supplied matrices with float dust.
    """
    v = matrix.values
    bad = (v < 0.0) | (v > 1.0)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        return ValidationReport(False, "bounds", int(r), int(c),
                                f"entry ({r},{c}) outside [0,1]")
    if matrix.orientation == UNCONSTRAINED or matrix.m == 1:
        return ValidationReport(True)
    diffs = np.diff(v, axis=1)
    if matrix.orientation == NONINCREASING:
        bad = diffs > tolerance
    else:
        bad = diffs < -tolerance
    if bad.any():
        r, c = np.argwhere(bad)[0]
        return ValidationReport(False, "orientation", int(r), int(c) + 1,
                                f"row {r} violates {matrix.orientation} at column {c + 1}")
    return ValidationReport(True)


def threshold_losses(panel: BinaryScorePanel, grid: ParameterGrid, kind: str) -> LossMatrix:
    """Per-sample multi-label classification losses over a threshold grid.

    The classifier predicts class k at threshold t when ``score_k > 1 - t``.
    Loss kinds (all denominators guarded below by 1):

    - ``FNP``: missed positive classes over positive classes (nonincreasing in t)
    - ``FPP``: predicted negative classes over negative classes (nondecreasing)
    - ``FDP``: predicted negative classes over predicted classes (unconstrained)
    - ``SetSize``: predicted classes over K (nondecreasing)
    """
    if kind not in LOSS_KINDS:
        raise ValueError(f"kind must be one of {LOSS_KINDS}, got {kind!r}")
    t = grid.values
    if t.min() < 0.0 or t.max() > 1.0:
        raise ValueError("classification grids must lie in [0, 1]")

    scores, labels = panel.scores, panel.labels
    n, K = scores.shape
    pos = labels == 1
    n_pos = pos.sum(axis=1)
    denom_pos = np.maximum(1, n_pos).astype(float)[:, None]
    denom_neg = np.maximum(1, K - n_pos).astype(float)[:, None]

    out = np.empty((n, len(grid)))
    cutoffs = 1.0 - t
    for start in range(0, len(grid), _GRID_BLOCK):
        stop = min(start + _GRID_BLOCK, len(grid))
        preds = scores[:, :, None] > cutoffs[None, None, start:stop]  # (n, K, block)
        if kind == "FNP":
            miss = (~preds) & pos[:, :, None]
            out[:, start:stop] = miss.sum(axis=1) / denom_pos
        elif kind == "FPP":
            fp = preds & (~pos)[:, :, None]
            out[:, start:stop] = fp.sum(axis=1) / denom_neg
        elif kind == "FDP":
            fp = preds & (~pos)[:, :, None]
            sel = np.maximum(1, preds.sum(axis=1)).astype(float)
            out[:, start:stop] = fp.sum(axis=1) / sel
        else:  # SetSize
            out[:, start:stop] = preds.sum(axis=1) / float(K)

    orientation = {
        "FNP": NONINCREASING,
        "FPP": NONDECREASING,
        "FDP": UNCONSTRAINED,
        "SetSize": NONDECREASING,
    }[kind]
    return LossMatrix(grid, out, orientation)


def monotonize(matrix: LossMatrix, direction: str) -> LossMatrix:
    """Replace each row by its running prefix minimum or maximum.

    ``running-min`` yields nonincreasing rows sitting below the input;
    ``running-max`` yields nondecreasing rows sitting above it. Both are
    idempotent.
    """
    if direction == "running-min":
        values = np.minimum.accumulate(matrix.values, axis=1)
        orientation = NONINCREASING
    elif direction == "running-max":
        values = np.maximum.accumulate(matrix.values, axis=1)
        orientation = NONDECREASING
    else:
        raise ValueError("direction must be 'running-min' or 'running-max'")
    return LossMatrix(matrix.grid, values, orientation)


def batch(matrix: LossMatrix, k: int) -> LossMatrix:
    """Average consecutive blocks of k rows into one row each.

    Trailing rows that do not fill a block are dropped (reported via a
    warning) so every output row is an average of exactly k samples.
    Orientation is preserved: averaging monotone rows stays monotone.
    """
    k = int(k)
    if k <= 0:
        raise ValueError("batch size must be positive")
    n = matrix.n
    if k > n:
        raise ValueError(f"batch size {k} exceeds sample count {n}")
    dropped = n % k
    if dropped:
        warnings.warn(
            f"batch: dropping {dropped} trailing row(s); {n} rows do not divide into blocks of {k}",
            stacklevel=2,
        )
    kept = n - dropped
    values = matrix.values[:kept].reshape(kept // k, k, matrix.m).mean(axis=1)
    return LossMatrix(matrix.grid, values, matrix.orientation)

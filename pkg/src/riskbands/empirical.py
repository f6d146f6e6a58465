"""Empirical risk curves, rescaled supremum deviations, and sublevel sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import LossMatrix, ParameterGrid, _frozen

FULL_GRID = "full-grid"
SUBLEVEL = "sublevel"
ADJUSTED_SUBLEVEL = "adjusted-sublevel"
CUSTOM = "custom"
PROVENANCES = (FULL_GRID, SUBLEVEL, ADJUSTED_SUBLEVEL, CUSTOM)


@dataclass(frozen=True)
class RiskCurve:
    """Per-grid-point risk values with the sample size that produced them.

    ``sample_size`` 0 marks an analytic truth curve; such curves are rejected
    wherever a sqrt(n) rescaling is required.
    """

    grid: ParameterGrid
    values: np.ndarray
    sample_size: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size != len(self.grid):
            raise ValueError("curve length must match the grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("curve values must be finite")
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("curve values must lie in [0, 1]")
        if int(self.sample_size) < 0:
            raise ValueError("sample_size must be nonnegative")
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "sample_size", int(self.sample_size))


@dataclass(frozen=True)
class IndexSet:
    """Sorted, deduplicated subset of grid indices with a provenance tag."""

    indices: np.ndarray
    provenance: str = CUSTOM

    def __post_init__(self):
        idx = np.unique(np.asarray(self.indices, dtype=np.int64))
        if idx.size and idx[0] < 0:
            raise ValueError("grid indices must be nonnegative")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        frozen = idx.copy()
        frozen.flags.writeable = False
        object.__setattr__(self, "indices", frozen)

    def __len__(self) -> int:
        return int(self.indices.size)

    @property
    def is_empty(self) -> bool:
        return self.indices.size == 0

    def check_against(self, grid: ParameterGrid) -> None:
        if self.indices.size and self.indices[-1] >= len(grid):
            raise ValueError("index set refers to points outside the grid")

    def intersect(self, other: "IndexSet", provenance: str = CUSTOM) -> "IndexSet":
        return IndexSet(np.intersect1d(self.indices, other.indices), provenance)

    def issubset(self, other: "IndexSet") -> bool:
        return bool(np.isin(self.indices, other.indices).all())

    @classmethod
    def full(cls, grid: ParameterGrid) -> "IndexSet":
        return cls(np.arange(len(grid), dtype=np.int64), FULL_GRID)

    @classmethod
    def from_mask(cls, mask: np.ndarray, provenance: str = CUSTOM) -> "IndexSet":
        return cls(np.flatnonzero(np.asarray(mask, dtype=bool)), provenance)


def empirical_risk(matrix: LossMatrix) -> RiskCurve:
    """Column means of the loss matrix, as a curve keyed by sample size."""
    values = matrix.values.mean(axis=0)
    # means of in-range entries are in range; clip strips float dust only
    return RiskCurve(matrix.grid, np.clip(values, 0.0, 1.0), matrix.n)


def _resolve_scale(a: RiskCurve, b: RiskCurve, n: int | None) -> int:
    if n is not None:
        n = int(n)
        if n < 1:
            raise ValueError("scale sample size must be >= 1")
        return n
    sizes = {s for s in (a.sample_size, b.sample_size) if s > 0}
    if len(sizes) == 1:
        return sizes.pop()
    if not sizes:
        raise ValueError("sqrt(n) scaling undefined: both curves are analytic (sample_size 0)")
    raise ValueError("ambiguous sqrt(n) scale: curves carry different sample sizes; pass n")


def sup_deviation(
    a: RiskCurve,
    b: RiskCurve,
    subset: IndexSet | None = None,
    sign: str = "plus",
    n: int | None = None,
) -> float:
    """Supremum over a grid subset of +/- sqrt(n) * (a(t) - b(t)).

    The scale n defaults to the unique positive sample size carried by the
    curves. An empty subset returns 0 (the neutral element; downstream bands
    then degenerate to the empirical curve on an empty validity set).
    """
    if a.grid != b.grid:
        raise ValueError("curves must share a grid")
    if sign not in ("plus", "minus"):
        raise ValueError("sign must be 'plus' or 'minus'")
    scale = np.sqrt(_resolve_scale(a, b, n))
    if subset is None:
        subset = IndexSet.full(a.grid)
    subset.check_against(a.grid)
    if subset.is_empty:
        return 0.0
    d = a.values[subset.indices] - b.values[subset.indices]
    if sign == "minus":
        d = -d
    return float(scale * d.max())


def sublevel_set(curve: RiskCurve, r: float) -> IndexSet:
    """Grid indices where the curve is at most r."""
    return IndexSet.from_mask(curve.values <= r, SUBLEVEL)

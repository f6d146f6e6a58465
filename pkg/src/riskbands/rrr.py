"""Restricted risk resampling: a localized bootstrap band.

Three steps: (1) a two-sided global bootstrap quantile over the full grid at
a small budget delta_glob quantifies estimation error both ways; (2) the
empirical sublevel set at tolerance r is inflated by twice that quantile to
an adjusted set large enough (with high probability) to contain the set being
targeted; (3) a one-sided local quantile over the adjusted set at budget
delta_loc sets the band width. The band is valid simultaneously over the
un-inflated empirical sublevel set with total budget delta_glob + delta_loc.
The guarantee is asymptotic in n; the test suite checks it empirically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bootstrap import SeedRecord, _sup_values, conservative_quantile
from .bounds import ConfidenceBand
from .empirical import ADJUSTED_SUBLEVEL, IndexSet, RiskCurve, empirical_risk, sublevel_set
from .losses import UNCONSTRAINED, LossMatrix, validate


@dataclass(frozen=True)
class RRRConfig:
    """Risk tolerance, split error budgets, replicate count and seed.

    Defaults follow the 9:1 local-to-global split of a total budget 0.1 with
    risk tolerance 0.1 and 1000 replicates.
    """

    seed: SeedRecord
    r: float = 0.1
    delta_glob: float = 0.01
    delta_loc: float = 0.09
    B: int = 1000

    def __post_init__(self):
        if isinstance(self.seed, int):
            object.__setattr__(self, "seed", SeedRecord(self.seed))
        if not 0.0 <= self.r <= 1.0:
            raise ValueError("risk tolerance r must lie in [0, 1]")
        if not (0.0 < self.delta_glob < 1.0 and 0.0 < self.delta_loc < 1.0):
            raise ValueError("delta_glob and delta_loc must lie in (0, 1)")
        if self.delta_glob + self.delta_loc >= 1.0:
            raise ValueError("delta_glob + delta_loc must be below 1")
        if int(self.B) < 1:
            raise ValueError("need B >= 1")

    @property
    def delta(self) -> float:
        return self.delta_glob + self.delta_loc


@dataclass(frozen=True)
class RRRResult:
    """Band plus the quantiles and index sets the three steps produced."""

    band: ConfidenceBand
    q_glob: float
    q_loc: float
    sublevel: IndexSet
    adjusted: IndexSet
    r: float
    r_adjusted: float | None = None


def _global_pass(matrix: LossMatrix, config: RRRConfig, workers: int):
    report = validate(matrix)
    if matrix.orientation == UNCONSTRAINED:
        raise ValueError("restricted risk resampling needs a monotone orientation; "
                         "monotonize the matrix first")
    if not report.passed:
        raise ValueError(f"loss matrix fails validation: {report.message}")
    curve = empirical_risk(matrix)
    cache: list[np.ndarray] = []
    sups = _sup_values(np.ascontiguousarray(matrix.values), matrix.n, "two-sided",
                       config.seed, config.B, workers=workers, counts_cache=cache)
    sups.sort()
    q_glob = conservative_quantile(sups, config.delta_glob)
    return curve, q_glob, cache


def _local_pass(
    matrix: LossMatrix,
    config: RRRConfig,
    curve: RiskCurve,
    q_glob: float,
    cache: list[np.ndarray],
    level: float,
    r_adjusted: float | None,
    workers: int,
) -> RRRResult:
    n = matrix.n
    sqrt_n = math.sqrt(n)
    sub_set = sublevel_set(curve, level)
    adjusted = IndexSet.from_mask(
        curve.values <= level + 2.0 * q_glob / sqrt_n, ADJUSTED_SUBLEVEL
    )

    # paired replicates: replay the counts generated by the global pass
    loc_values = np.ascontiguousarray(matrix.values[:, adjusted.indices])
    loc_sups = _sup_values(loc_values, n, "minus", config.seed, config.B,
                           workers=workers, counts_cache=cache)
    loc_sups.sort()
    q_loc = conservative_quantile(loc_sups, config.delta_loc)

    width = q_loc / sqrt_n
    notes: tuple[str, ...] = ()
    if sub_set.is_empty:
        notes = ("empty-validity",)
    if r_adjusted is not None and r_adjusted < 0.0:
        notes = notes + ("negative-adjusted-level",)
    band = ConfidenceBand(
        grid=matrix.grid,
        lower=None,
        upper=curve.values + width,
        validity=sub_set,
        delta=config.delta,
        method="rrr",
        width_info=width,
        sample_size=n,
        simultaneous=True,
        notes=notes,
        info={
            "B": config.B,
            "r": config.r,
            "r_adjusted": r_adjusted,
            "delta_glob": config.delta_glob,
            "delta_loc": config.delta_loc,
            "q_glob": q_glob,
            "q_loc": q_loc,
            "seed": config.seed.as_dict(),
        },
    )
    return RRRResult(band, q_glob, q_loc, sub_set, adjusted, config.r, r_adjusted)


def rrr_band(matrix: LossMatrix, config: RRRConfig, workers: int = 1) -> RRRResult:
    """Upper band valid simultaneously over the empirical sublevel set at r.

    An empty sublevel set yields a band with empty validity and a warning
    note rather than an error (the condition is data dependent).
    """
    curve, q_glob, cache = _global_pass(matrix, config, workers)
    return _local_pass(matrix, config, curve, q_glob, cache, config.r, None, workers)


def rrr_band_population(matrix: LossMatrix, config: RRRConfig, workers: int = 1) -> RRRResult:
    """Variant targeting the population sublevel set at r.

    Runs the identical pipeline at the deflated level r - q_glob / sqrt(n),
    so that the resulting empirical sublevel set is contained in the
    population sublevel set at r with high probability. A negative deflated
    level yields an empty validity set with a warning note.
    """
    curve, q_glob, cache = _global_pass(matrix, config, workers)
    r_adj = config.r - q_glob / math.sqrt(matrix.n)
    return _local_pass(matrix, config, curve, q_glob, cache, r_adj, r_adj, workers)

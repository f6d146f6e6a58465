"""Closed-form confidence bands.

Two families:

- a nonasymptotic fixed-width band, uniform over the grid, with additive
  half-width sqrt(log(e/delta) / (2n)) coming from a sub-Gaussian tail bound
  e * exp(-2 * lambda^2) on the supremum of the centered, rescaled risk
  process of a monotone loss;
- a per-threshold betting (capital-process) upper bound for means of [0,1]
  variables, valid at each fixed threshold separately but not simultaneously.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .empirical import IndexSet, RiskCurve
from .losses import LossMatrix, ParameterGrid, _frozen

METHOD_TAGS = ("nasm", "rr", "rrr", "pointwise", "composed")
SIDES = ("upper", "lower", "two-sided")

# Absolute bisection tolerance on the betting bound; far below any
# statistical resolution of the data.
WSR_BISECTION_TOL = 1e-9


@dataclass(frozen=True)
class ConfidenceBand:
    """Fixed-width per-grid-point bounds with a validity subset.

    Either side may be absent for one-sided bands. Present sides are clamped
    to [0, 1]. ``validity`` is the set of grid indices on which the stated
    coverage guarantee applies; ``simultaneous`` records whether the guarantee
    is joint over that set or only per-point. ``width_info`` is the additive
    half-width where the band is of the form curve +/- width. ``info`` echoes
    method-specific parameters for reproducibility.
    """

    grid: ParameterGrid
    lower: np.ndarray | None
    upper: np.ndarray | None
    validity: IndexSet
    delta: float
    method: str
    width_info: float | None = None
    sample_size: int = 0
    simultaneous: bool = True
    notes: tuple[str, ...] = ()
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHOD_TAGS:
            raise ValueError(f"unknown method tag {self.method!r}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        m = len(self.grid)
        for name in ("lower", "upper"):
            side = getattr(self, name)
            if side is None:
                continue
            side = np.asarray(side, dtype=float)
            if side.shape != (m,):
                raise ValueError(f"{name} band must have one value per grid point")
            object.__setattr__(self, name, _frozen(np.clip(side, 0.0, 1.0)))
        if self.lower is None and self.upper is None:
            raise ValueError("at least one side must be present")
        if self.lower is not None and self.upper is not None:
            if np.any(self.lower > self.upper):
                raise ValueError("lower band exceeds upper band")
        self.validity.check_against(self.grid)

    def metadata(self) -> dict:
        md = {
            "method": self.method,
            "delta": self.delta,
            "sample_size": self.sample_size,
            "width": self.width_info,
            "simultaneous": self.simultaneous,
            "sides": [s for s in ("lower", "upper") if getattr(self, s) is not None],
            "validity_provenance": self.validity.provenance,
            "validity_size": len(self.validity),
            "validity_indices": self.validity.indices.tolist(),
            "notes": list(self.notes),
        }
        md.update(self.info)
        return md


def nasm_width(n: int, delta: float) -> float:
    """Half-width sqrt(log(e/delta) / (2n)) of the nonasymptotic uniform band."""
    n = int(n)
    if n < 1:
        raise ValueError("sample size must be >= 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return math.sqrt(math.log(math.e / delta) / (2.0 * n))


def tail_bound(lam: float) -> float:
    """Upper bound e * exp(-2 lam^2) on the one-sided supremum deviation tail."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return math.e * math.exp(-2.0 * lam * lam)


def nasm_band(curve: RiskCurve, delta: float, side: str = "upper") -> ConfidenceBand:
    """Uniform fixed-width band around an empirical curve.

    One-sided bands spend the whole budget on their side; the two-sided band
    splits delta evenly because the tail bound controls each side separately.
    """
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    n = curve.sample_size
    if n < 1:
        raise ValueError("analytic curves (sample_size 0) cannot be banded")
    width = nasm_width(n, delta if side != "two-sided" else delta / 2.0)
    upper = curve.values + width if side in ("upper", "two-sided") else None
    lower = curve.values - width if side in ("lower", "two-sided") else None
    return ConfidenceBand(
        grid=curve.grid,
        lower=lower,
        upper=upper,
        validity=IndexSet.full(curve.grid),
        delta=delta,
        method="nasm",
        width_info=width,
        sample_size=n,
        simultaneous=True,
        info={"side": side},
    )


def _wsr_lambdas(losses: np.ndarray, delta: float) -> np.ndarray:
    """Betting fractions for each observation (columnwise when 2-D).

    Running mean and variance with prior weight 1/2 and 1/4 respectively;
    the fraction at step i uses the variance through step i-1, scaled by the
    total sample size, and is truncated at 1.
    """
    n = losses.shape[0]
    steps = np.arange(1, n + 1, dtype=float)
    if losses.ndim == 2:
        steps = steps[:, None]
    csum = np.cumsum(losses, axis=0)
    mu = (0.5 + csum) / (1.0 + steps)
    s2 = (0.25 + np.cumsum((losses - mu) ** 2, axis=0)) / (1.0 + steps)
    s2_prev = np.concatenate([np.full_like(s2[:1], 0.25), s2[:-1]], axis=0)
    return np.minimum(1.0, np.sqrt(2.0 * np.log(1.0 / delta) / (n * s2_prev)))


def _capital_rejects(losses: np.ndarray, lam: np.ndarray, p, log_threshold: float) -> np.ndarray:
    """Whether the running capital max_i prod_{j<=i} (1 - lam_j (l_j - p)) exceeds 1/delta.

    Works columnwise: ``losses`` and ``lam`` are (n,) or (n, m); ``p`` is a
    scalar or a length-m vector of candidate means. Factors are nonnegative
    because lam <= 1 and |l - p| <= 1, so the test runs in log space.
    """
    factors = 1.0 - lam * (losses - p)
    with np.errstate(divide="ignore"):
        logs = np.log(factors)
    running = np.cumsum(logs, axis=0)
    return running.max(axis=0) > log_threshold


def wsr_upper(losses: np.ndarray, delta: float) -> float:
    """Betting upper confidence bound for the mean of one loss sequence.

    Returns the smallest p in [0, 1] at which the capital process first
    exceeds 1/delta, located by bisection to absolute tolerance 1e-9
    (the capital is nondecreasing in p), and 1 if no p <= 1 is rejected.
    """
    losses = np.asarray(losses, dtype=float)
    if losses.ndim != 1 or losses.size < 1:
        raise ValueError("losses must be a nonempty 1-D sequence")
    if losses.min() < 0.0 or losses.max() > 1.0:
        raise ValueError("losses must lie in [0, 1]")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    lam = _wsr_lambdas(losses, delta)
    log_thr = math.log(1.0 / delta)
    if _capital_rejects(losses, lam, 0.0, log_thr):
        return 0.0
    if not _capital_rejects(losses, lam, 1.0, log_thr):
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > WSR_BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if _capital_rejects(losses, lam, mid, log_thr):
            hi = mid
        else:
            lo = mid
    return hi


def wsr_band(matrix: LossMatrix, delta: float) -> ConfidenceBand:
    """Columnwise betting upper bounds, tagged as pointwise-only.

    The validity set is the full grid but the guarantee holds at each point
    separately, never jointly; the band is marked not simultaneous.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    values = matrix.values
    m = matrix.m
    lam = _wsr_lambdas(values, delta)
    log_thr = math.log(1.0 / delta)

    at_zero = _capital_rejects(values, lam, np.zeros(m), log_thr)
    at_one = _capital_rejects(values, lam, np.ones(m), log_thr)
    lo = np.zeros(m)
    hi = np.ones(m)
    # fixed iteration count reaches the 1e-9 tolerance on every column
    iters = int(math.ceil(math.log2(1.0 / WSR_BISECTION_TOL)))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        rej = _capital_rejects(values, lam, mid, log_thr)
        hi = np.where(rej, mid, hi)
        lo = np.where(rej, lo, mid)
    upper = np.where(at_zero, 0.0, np.where(~at_one, 1.0, hi))
    return ConfidenceBand(
        grid=matrix.grid,
        lower=None,
        upper=upper,
        validity=IndexSet.full(matrix.grid),
        delta=delta,
        method="pointwise",
        width_info=None,
        sample_size=matrix.n,
        simultaneous=False,
        info={"bisection_tol": WSR_BISECTION_TOL},
    )


def wsr_rejects(matrix: LossMatrix, p: np.ndarray, delta: float) -> np.ndarray:
    """Columnwise test of whether the betting bound falls strictly below p.

    Equivalent to ``p > wsr_band(matrix, delta).upper`` without the bisection:
    the rejection region in p is an up-set, so the bound is below p exactly
    when the capital at p itself exceeds 1/delta. Used by the evaluation
    harness to decide exceedance events without computing the bound.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    p = np.asarray(p, dtype=float)
    if p.shape != (matrix.m,):
        raise ValueError("need one candidate mean per grid column")
    lam = _wsr_lambdas(matrix.values, delta)
    return _capital_rejects(matrix.values, lam, p, math.log(1.0 / delta))

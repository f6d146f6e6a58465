"""Bands for combinations of monotone risks.

Given per-component bands and a map psi from component risks to a combined
risk, the combined band at each grid point is the range of psi over the box
of component intervals, with error budgets added across components. With
per-coordinate monotonicity flags the box extremes sit at two corners; for
general psi a bracketing grid scan over the box is used instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .bounds import ConfidenceBand
from .empirical import CUSTOM, IndexSet


@dataclass(frozen=True)
class ComponentBandSet:
    """Component bands on a shared grid whose budgets sum below 1."""

    bands: tuple[ConfidenceBand, ...]

    def __post_init__(self):
        bands = tuple(self.bands)
        if not bands:
            raise ValueError("need at least one component band")
        grid = bands[0].grid
        for b in bands[1:]:
            if b.grid != grid:
                raise ValueError("component bands must share a grid")
        if sum(b.delta for b in bands) >= 1.0:
            raise ValueError("component error budgets must sum below 1")
        object.__setattr__(self, "bands", bands)

    @property
    def delta(self) -> float:
        return float(sum(b.delta for b in self.bands))


def _box_sides(band: ConfidenceBand, m: int) -> tuple[np.ndarray, np.ndarray]:
    lo = band.lower if band.lower is not None else np.zeros(m)
    hi = band.upper if band.upper is not None else np.ones(m)
    return lo, hi


def combine(
    bands: ComponentBandSet | Sequence[ConfidenceBand],
    psi: Callable[..., np.ndarray],
    psi_monotonicity: Sequence[str] | None = None,
    scan_resolution: int = 33,
) -> ConfidenceBand:
    """Band for psi(risk_1, ..., risk_k) from per-component bands.

    ``psi`` must accept k equal-length numpy arrays and return one. With
    ``psi_monotonicity`` ('increasing' / 'decreasing' per coordinate) the box
    extremes are corner evaluations; otherwise a dense scan with
    ``scan_resolution`` points per axis brackets them, and the resolution is
    recorded in the band info. Outputs outside [0, 1] are clamped with a note.
    Validity is the intersection of the component validity sets; the combined
    budget is the exact sum of the component budgets.
    """
    if not isinstance(bands, ComponentBandSet):
        bands = ComponentBandSet(tuple(bands))
    comps = bands.bands
    k = len(comps)
    grid = comps[0].grid
    m = len(grid)

    validity = comps[0].validity
    for b in comps[1:]:
        validity = validity.intersect(b.validity)
    validity = IndexSet(validity.indices, CUSTOM)

    lows, highs = zip(*(_box_sides(b, m) for b in comps))

    if psi_monotonicity is not None:
        flags = tuple(psi_monotonicity)
        if len(flags) != k or any(f not in ("increasing", "decreasing") for f in flags):
            raise ValueError("need one 'increasing'/'decreasing' flag per component")
        up_args = [h if f == "increasing" else l for f, l, h in zip(flags, lows, highs)]
        lo_args = [l if f == "increasing" else h for f, l, h in zip(flags, lows, highs)]
        upper = np.asarray(psi(*up_args), dtype=float)
        lower = np.asarray(psi(*lo_args), dtype=float)
        scan_info = None
    else:
        s = int(scan_resolution)
        if s < 2:
            raise ValueError("scan_resolution must be at least 2")
        fracs = np.linspace(0.0, 1.0, s)
        axes = [lo + fracs[:, None] * (hi - lo) for lo, hi in zip(lows, highs)]
        upper = np.full(m, -np.inf)
        lower = np.full(m, np.inf)
        for combo in product(range(s), repeat=k):
            vals = np.asarray(psi(*(axes[i][c] for i, c in enumerate(combo))), dtype=float)
            np.maximum(upper, vals, out=upper)
            np.minimum(lower, vals, out=lower)
        scan_info = s

    notes: tuple[str, ...] = ()
    if upper.shape != (m,) or lower.shape != (m,):
        raise ValueError("psi must return one value per grid point")
    if (upper > 1.0 + 1e-12).any() or (lower < -1e-12).any():
        notes = ("psi-output-clamped",)

    sizes = {b.sample_size for b in comps}
    info = {
        "component_deltas": [b.delta for b in comps],
        "component_methods": [b.method for b in comps],
    }
    if psi_monotonicity is not None:
        info["psi_monotonicity"] = list(psi_monotonicity)
    else:
        info["scan_resolution"] = scan_info
    return ConfidenceBand(
        grid=grid,
        lower=np.clip(lower, 0.0, 1.0),
        upper=np.clip(upper, 0.0, 1.0),
        validity=validity,
        delta=bands.delta,
        method="composed",
        width_info=None,
        sample_size=sizes.pop() if len(sizes) == 1 else 0,
        simultaneous=all(b.simultaneous for b in comps),
        notes=notes,
        info=info,
    )


def selective_ratio_upper(
    numerator_band: ConfidenceBand,
    denominator_band: ConfidenceBand,
    floor: float | None = None,
) -> ConfidenceBand:
    """Upper band for a conditional-risk ratio numerator / denominator.

    Divides the numerator's upper band by the denominator's lower band,
    flooring the denominator at ``floor`` (default 1 / (2n)) so a vanishing
    denominator degrades to the trivial bound 1 instead of blowing up.
    """
    num, den = numerator_band, denominator_band
    if num.grid != den.grid:
        raise ValueError("bands must share a grid")
    if num.upper is None:
        raise ValueError("numerator band must carry an upper side")
    if den.lower is None:
        raise ValueError("denominator band must carry a lower side")
    if floor is None:
        if num.sample_size < 1:
            raise ValueError("floor must be given when the sample size is unknown")
        floor = 1.0 / (2.0 * num.sample_size)
    if not floor > 0.0:
        raise ValueError("floor must be positive")
    upper = np.minimum(1.0, num.upper / np.maximum(den.lower, floor))
    return ConfidenceBand(
        grid=num.grid,
        lower=None,
        upper=upper,
        validity=num.validity.intersect(den.validity),
        delta=num.delta + den.delta,
        method="composed",
        width_info=None,
        sample_size=num.sample_size if num.sample_size == den.sample_size else 0,
        simultaneous=num.simultaneous and den.simultaneous,
        info={"ratio_floor": floor,
              "component_deltas": [num.delta, den.delta]},
    )

"""Synthetic generators, ground-truth oracles, and Monte Carlo metrics.

The synthetic family draws batches of equi-correlated Gaussians and scores
them with the normalized batch count-below-threshold loss, so the population
risk is exactly the standard normal CDF regardless of the correlation. The
metrics measure how often a band fails to dominate the truth somewhere
(anywhere / selected-set miscoverage) and how far above the truth the band
sits at a data-dependently selected threshold (conservatism). A holdout /
sampling split turns a finite dataset into a surrogate generator with a known
surrogate truth.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtr

from .bootstrap import SeedRecord, conservative_quantile, rr_band
from .bounds import ConfidenceBand, nasm_band, wsr_band, wsr_rejects
from .empirical import empirical_risk, sublevel_set
from .losses import NONDECREASING, NONINCREASING, LossMatrix, ParameterGrid
from .rrr import RRRConfig, rrr_band
from .selection import select_elbow, select_even_tradeoff

EQUICORRELATED = "equicorrelated-gaussian-cdf"
CONSTANT = "constant"
CUSTOM = "custom"
FAMILIES = (EQUICORRELATED, CONSTANT, CUSTOM)

METHOD_NAMES = ("nasm", "rr", "rrr", "pointwise")

DEFAULT_RHOS = (-0.2, 0.2, 0.6)


def default_synthetic_grid(size: int = 1000) -> ParameterGrid:
    """1000 evenly spaced thresholds on [-3, 3]."""
    return ParameterGrid.linspace(-3.0, 3.0, size)


def default_classification_grid(size: int = 500) -> ParameterGrid:
    """500 evenly spaced thresholds on [0, 1]."""
    return ParameterGrid.linspace(0.0, 1.0, size)


@dataclass(frozen=True)
class GeneratorSpec:
    """A loss-matrix generator with an accessible truth curve.

    ``realize(n, seed)`` returns a fresh loss matrix plus the truth values it
    should be compared against (per-realization for custom generators such as
    the holdout surrogate, fixed for the analytic families).
    """

    family: str
    grid: ParameterGrid
    rho: float = 0.0
    batch_size: int = 5
    value: float = 0.5
    tradeoff_shift: float = 1.0
    realize_fn: Callable[[int, SeedRecord], tuple[LossMatrix, np.ndarray]] | None = None
    pair_fn: Callable[[int, SeedRecord], tuple[LossMatrix, LossMatrix, np.ndarray]] | None = None
    label: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown generator family {self.family!r}")
        if self.family == EQUICORRELATED:
            b = int(self.batch_size)
            if b < 1:
                raise ValueError("batch size must be >= 1")
            lo = -1.0 / (b - 1) if b > 1 else -1.0
            if not lo <= self.rho <= 1.0:
                raise ValueError(
                    f"rho must lie in [{lo}, 1] to keep the batch covariance PSD"
                )
        if self.family == CONSTANT and not 0.0 <= self.value <= 1.0:
            raise ValueError("constant value must lie in [0, 1]")
        if self.family == CUSTOM and self.realize_fn is None:
            raise ValueError("custom generators need a realize_fn")

    def truth_values(self) -> np.ndarray:
        if self.family == EQUICORRELATED:
            return ndtr(self.grid.values)
        if self.family == CONSTANT:
            return np.full(len(self.grid), self.value)
        raise ValueError("custom generators carry per-realization truth; use realize()")

    def _draw_batches(self, n: int, rng: np.random.Generator) -> np.ndarray:
        # correlated batch z = b*g + c*sum(g): closed-form square root of the
        # equicorrelation matrix, valid for the whole PSD range of rho
        b = int(self.batch_size)
        g = rng.standard_normal((n, b))
        root_small = math.sqrt(1.0 - self.rho)
        root_big = math.sqrt(1.0 + (b - 1) * self.rho)
        if b == 1:
            return g
        return root_small * g + ((root_big - root_small) / b) * g.sum(axis=1, keepdims=True)

    def realize(self, n: int, seed: SeedRecord) -> tuple[LossMatrix, np.ndarray]:
        n = int(n)
        if n < 1:
            raise ValueError("need n >= 1")
        if self.family == EQUICORRELATED:
            z = self._draw_batches(n, seed.generator())
            values = (z[:, :, None] <= self.grid.values[None, None, :]).mean(axis=1)
            return LossMatrix(self.grid, values, NONDECREASING), self.truth_values()
        if self.family == CONSTANT:
            values = np.full((n, len(self.grid)), self.value)
            return LossMatrix(self.grid, values, NONDECREASING), self.truth_values()
        return self.realize_fn(n, seed)

    def realize_pair(self, n: int, seed: SeedRecord) -> tuple[LossMatrix, LossMatrix, np.ndarray]:
        """Loss matrix, an opposing (nonincreasing) companion, and the truth.

        The companion loss is the complement of the primary loss evaluated at
        a shifted threshold, giving a genuine tradeoff: the sum of the two
        population risks is minimized strictly inside the grid.
        """
        n = int(n)
        if self.family == EQUICORRELATED:
            z = self._draw_batches(n, seed.generator())
            inside = z[:, :, None]
            values = (inside <= self.grid.values[None, None, :]).mean(axis=1)
            shifted = (inside <= (self.grid.values + self.tradeoff_shift)[None, None, :]).mean(axis=1)
            primary = LossMatrix(self.grid, values, NONDECREASING)
            companion = LossMatrix(self.grid, 1.0 - shifted, NONINCREASING)
            return primary, companion, self.truth_values()
        if self.family == CONSTANT:
            primary = LossMatrix(self.grid, np.full((n, len(self.grid)), self.value),
                                 NONDECREASING)
            companion = LossMatrix(self.grid, np.full((n, len(self.grid)), 1.0 - self.value),
                                   NONINCREASING)
            return primary, companion, self.truth_values()
        if self.pair_fn is not None:
            return self.pair_fn(n, seed)
        raise ValueError("this generator has no tradeoff companion; "
                         "supply a pair_fn or use an analytic family")


def gen_equicorrelated(
    n: int,
    rho: float,
    grid: ParameterGrid | None = None,
    seed: SeedRecord | int = 0,
) -> LossMatrix:
    """One synthetic loss matrix whose population risk is the normal CDF."""
    if grid is None:
        grid = default_synthetic_grid()
    if isinstance(seed, int):
        seed = SeedRecord(seed)
    spec = GeneratorSpec(EQUICORRELATED, grid, rho=rho)
    matrix, _ = spec.realize(n, seed)
    return matrix


@dataclass(frozen=True)
class MetricsReport:
    """One Monte Carlo estimate with its standard error and configuration."""

    metric: str
    estimate: float
    runs: int
    std_error: float
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.runs) < 1:
            raise ValueError("need at least one run")
        if self.metric.startswith("miscoverage") and not 0.0 <= self.estimate <= 1.0:
            raise ValueError("probability estimates must lie in [0, 1]")

    def as_dict(self) -> dict:
        return {
            "metric": self.metric,
            "estimate": self.estimate,
            "runs": self.runs,
            "std_error": self.std_error,
            "config": dict(self.config),
            "extra": dict(self.extra),
        }


@dataclass(frozen=True)
class MethodSpec:
    """A named upper-band method with its parameters."""

    name: str
    delta: float = 0.1
    B: int = 1000
    r: float = 0.1
    delta_glob: float = 0.01
    delta_loc: float = 0.09

    def __post_init__(self):
        if self.name not in METHOD_NAMES:
            raise ValueError(f"method must be one of {METHOD_NAMES}")

    def upper_band(self, matrix: LossMatrix, seed: SeedRecord, workers: int = 1) -> ConfidenceBand:
        if self.name == "nasm":
            return nasm_band(empirical_risk(matrix), self.delta, side="upper")
        if self.name == "rr":
            return rr_band(matrix, self.delta, self.B, seed, side="upper", workers=workers)
        if self.name == "rrr":
            cfg = RRRConfig(seed=seed, r=self.r, delta_glob=self.delta_glob,
                            delta_loc=self.delta_loc, B=self.B)
            return rrr_band(matrix, cfg, workers=workers).band
        return wsr_band(matrix, self.delta)

    def miscovers(
        self,
        matrix: LossMatrix,
        truth: np.ndarray,
        seed: SeedRecord,
        restrict: np.ndarray | None = None,
        workers: int = 1,
    ) -> bool:
        """Whether the truth exceeds the upper band anywhere on validity.

        ``restrict`` optionally intersects the validity set with extra grid
        indices (e.g. a selected set). The betting method skips the bisection
        and tests the capital process at the truth directly, which decides
        the same event.
        """
        if self.name == "pointwise":
            if restrict is None:
                return bool(wsr_rejects(matrix, truth, self.delta).any())
            idx = np.asarray(restrict)
            if idx.size == 0:
                return False
            sub = LossMatrix(ParameterGrid(matrix.grid.values[idx]),
                             matrix.values[:, idx], "unconstrained")
            return bool(wsr_rejects(sub, truth[idx], self.delta).any())
        band = self.upper_band(matrix, seed, workers=workers)
        idx = band.validity.indices
        if restrict is not None:
            idx = np.intersect1d(idx, restrict)
        if idx.size == 0:
            return False
        return bool((truth[idx] > band.upper[idx]).any())

    def config_echo(self) -> dict:
        echo = {"method": self.name, "delta": self.delta}
        if self.name in ("rr", "rrr"):
            echo["B"] = self.B
        if self.name == "rrr":
            echo.update({"r": self.r, "delta_glob": self.delta_glob,
                         "delta_loc": self.delta_loc})
        return echo


def _spec_echo(spec: GeneratorSpec, n: int, runs: int, seed: SeedRecord) -> dict:
    echo = {"family": spec.family, "n": int(n), "runs": int(runs), "seed": seed.as_dict()}
    if spec.family == EQUICORRELATED:
        echo.update({"rho": spec.rho, "batch_size": spec.batch_size})
    if spec.family == CONSTANT:
        echo["value"] = spec.value
    if spec.label:
        echo["label"] = spec.label
    return echo


def _map_runs(fn, runs: int, workers: int) -> None:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fn, range(runs)))
    else:
        for run in range(runs):
            fn(run)


def oracle_sup_quantile(
    spec: GeneratorSpec,
    n: int,
    delta: float,
    runs: int,
    seed: SeedRecord | int,
    workers: int = 1,
) -> float:
    """Conservative 1-delta quantile of sup_t (truth - empirical risk).

    Simulated from the generator itself; this is the best achievable width of
    a fixed-width upper band at level delta, unscaled by sqrt(n).
    """
    if isinstance(seed, int):
        seed = SeedRecord(seed)
    sups = np.empty(runs)

    def one(run: int) -> None:
        matrix, truth = spec.realize(n, seed.child(run, 0))
        curve = empirical_risk(matrix)
        sups[run] = (truth - curve.values).max()

    _map_runs(one, runs, workers)
    sups.sort()
    return conservative_quantile(sups, delta)


def miscoverage_anywhere(
    method: MethodSpec,
    spec: GeneratorSpec,
    n: int,
    runs: int,
    seed: SeedRecord | int,
    workers: int = 1,
    trace: list | None = None,
) -> MetricsReport:
    """Fraction of runs where the truth exceeds the band somewhere on validity."""
    if isinstance(seed, int):
        seed = SeedRecord(seed)
    events = np.zeros(runs, dtype=bool)

    def one(run: int) -> None:
        run_seed = seed.child(run)
        matrix, truth = spec.realize(n, run_seed.child(0))
        events[run] = method.miscovers(matrix, truth, run_seed.child(1))

    _map_runs(one, runs, workers)
    if trace is not None:
        trace.extend({"run": i, "event": bool(events[i])} for i in range(runs))
    p = float(events.mean())
    config = {**method.config_echo(), **_spec_echo(spec, n, runs, seed)}
    return MetricsReport("miscoverage-anywhere", p, runs,
                         math.sqrt(p * (1.0 - p) / runs), config)


def miscoverage_selected(
    method: MethodSpec,
    spec: GeneratorSpec,
    n: int,
    runs: int,
    seed: SeedRecord | int,
    r: float = 0.1,
    workers: int = 1,
    trace: list | None = None,
) -> MetricsReport:
    """Miscoverage restricted to the empirical sublevel set at tolerance r.

    A run with an empty selected set counts as covered.
    """
    if isinstance(seed, int):
        seed = SeedRecord(seed)
    events = np.zeros(runs, dtype=bool)

    def one(run: int) -> None:
        run_seed = seed.child(run)
        matrix, truth = spec.realize(n, run_seed.child(0))
        selected = sublevel_set(empirical_risk(matrix), r)
        events[run] = method.miscovers(matrix, truth, run_seed.child(1),
                                       restrict=selected.indices)

    _map_runs(one, runs, workers)
    if trace is not None:
        trace.extend({"run": i, "event": bool(events[i])} for i in range(runs))
    p = float(events.mean())
    config = {**method.config_echo(), **_spec_echo(spec, n, runs, seed), "r": r}
    return MetricsReport("miscoverage-selected", p, runs,
                         math.sqrt(p * (1.0 - p) / runs), config)


def conservatism(
    method: MethodSpec,
    spec: GeneratorSpec,
    n: int,
    runs: int,
    seed: SeedRecord | int,
    scheme: str = "even-tradeoff",
    r: float = 0.1,
    workers: int = 1,
    trace: list | None = None,
) -> MetricsReport:
    """Mean gap between the band and the truth at a selected threshold.

    The threshold comes from a selection scheme applied to the primary and
    companion empirical risks, constrained to the sublevel set at r. Runs
    where no threshold can be selected, or where the selected threshold falls
    outside the band's validity set, are excluded and counted.
    """
    if isinstance(seed, int):
        seed = SeedRecord(seed)
    if scheme not in ("even-tradeoff", "elbow"):
        raise ValueError("scheme must be 'even-tradeoff' or 'elbow'")
    select = select_even_tradeoff if scheme == "even-tradeoff" else select_elbow
    gaps = np.full(runs, np.nan)

    def one(run: int) -> None:
        run_seed = seed.child(run)
        primary, companion, truth = spec.realize_pair(n, run_seed.child(0))
        curve_l = empirical_risk(primary)
        curve_q = empirical_risk(companion)
        constraint = sublevel_set(curve_l, r)
        if constraint.is_empty:
            return
        chosen = select(curve_l, curve_q, constraint)
        band = method.upper_band(primary, run_seed.child(1))
        if chosen.index not in band.validity.indices:
            return
        gaps[run] = band.upper[chosen.index] - truth[chosen.index]

    _map_runs(one, runs, workers)
    if trace is not None:
        trace.extend(
            {"run": i, "gap": None if np.isnan(gaps[i]) else float(gaps[i])}
            for i in range(runs)
        )
    kept = gaps[~np.isnan(gaps)]
    excluded = runs - kept.size
    if kept.size == 0:
        raise ValueError("every run was excluded; no threshold had a valid band value")
    estimate = float(kept.mean())
    se = float(kept.std(ddof=1) / math.sqrt(kept.size)) if kept.size > 1 else 0.0
    config = {**method.config_echo(), **_spec_echo(spec, n, runs, seed),
              "scheme": scheme, "r": r}
    return MetricsReport("conservatism", estimate, runs, se, config,
                         extra={"excluded_runs": int(excluded)})


def split_surrogate(matrix: LossMatrix, seed: SeedRecord | int) -> tuple[LossMatrix, LossMatrix]:
    """Random half/half row split into (holdout, sampling) matrices.

    The holdout empirical curve serves as surrogate truth; evaluation then
    resamples from the sampling half. Deterministic in the seed.
    """
    if isinstance(seed, int):
        seed = SeedRecord(seed)
    n = matrix.n
    if n < 2:
        raise ValueError("need at least two rows to split")
    perm = seed.generator().permutation(n)
    half = n // 2
    holdout = LossMatrix(matrix.grid, matrix.values[perm[:half]], matrix.orientation)
    sampling = LossMatrix(matrix.grid, matrix.values[perm[half:]], matrix.orientation)
    return holdout, sampling


def surrogate_generator(
    base: LossMatrix,
    companion: LossMatrix | None = None,
    label: str = "surrogate",
) -> GeneratorSpec:
    """Generator that re-splits a finite dataset on every realization.

    Each realization splits the base matrix into holdout and sampling halves,
    treats the holdout empirical curve as ground truth, and draws n rows with
    replacement from the sampling half. Miscoverage at large n is an artifact
    of the finite base population and should be read accordingly.

    ``companion``: a second loss matrix over the same rows (e.g. the opposing
    classification loss) enables the tradeoff-selection metrics; the same
    split and the same resampled row indices are applied to both.
    """
    if companion is not None and companion.n != base.n:
        raise ValueError("companion must cover the same rows as the base matrix")

    def draw_rows(n: int, seed: SeedRecord):
        perm = seed.child(0).generator().permutation(base.n)
        half = base.n // 2
        hold_idx, samp_idx = perm[:half], perm[half:]
        rng = seed.child(1).generator()
        picks = samp_idx[rng.integers(0, samp_idx.size, size=int(n))]
        return hold_idx, picks

    def realize(n: int, seed: SeedRecord) -> tuple[LossMatrix, np.ndarray]:
        hold_idx, picks = draw_rows(n, seed)
        truth = np.clip(base.values[hold_idx].mean(axis=0), 0.0, 1.0)
        return LossMatrix(base.grid, base.values[picks], base.orientation), truth

    def realize_pair(n: int, seed: SeedRecord):
        hold_idx, picks = draw_rows(n, seed)
        truth = np.clip(base.values[hold_idx].mean(axis=0), 0.0, 1.0)
        primary = LossMatrix(base.grid, base.values[picks], base.orientation)
        paired = LossMatrix(companion.grid, companion.values[picks],
                            companion.orientation)
        return primary, paired, truth

    return GeneratorSpec(CUSTOM, base.grid, realize_fn=realize,
                         pair_fn=realize_pair if companion is not None else None,
                         label=label)

"""Multinomial resampling of loss rows and supremum-statistic distributions.

Each replicate reweights the sample rows by multinomial counts (equivalent to
drawing n rows with replacement), forms the resampled risk curve, and records
the supremum over a grid subset of the centered, rescaled deviation from the
empirical curve. Quantiles of those suprema give fixed-width uniform bands.

Determinism contract: replicate b is generated from a counter-based stream
keyed by (seed record, b), and suprema are computed in fixed-size blocks, so
the sorted output is bit-identical under serial and parallel execution and
under any scheduling of the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import numpy as np

from .bounds import ConfidenceBand, SIDES
from .empirical import IndexSet, empirical_risk
from .losses import LossMatrix

SIGNS = ("plus", "minus", "two-sided")

# Replicates per block. Fixed as part of the algorithm (not tied to the
# executor) so that scheduling cannot change which GEMM calls are made.
_BLOCK = 64

# Hard cap on replicate growth in suggest_b.
_B_CAP = 2**20


@dataclass(frozen=True)
class SeedRecord:
    """Master seed plus a stream-splitting path; fully determines all draws.

    Streams are derived by spawn keys, so ``child(i)`` and ``generator(i)``
    depend only on (seed, path, i) and never on evaluation order.
    """

    seed: int
    path: tuple[int, ...] = ()
    scheme: str = "numpy-seedsequence-spawn-key"
    algorithm: str = "pcg64"

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit nonnegative integer")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "path", tuple(int(i) for i in self.path))

    def child(self, *indices: int) -> "SeedRecord":
        return SeedRecord(self.seed, self.path + tuple(int(i) for i in indices),
                          self.scheme, self.algorithm)

    def generator(self, *indices: int) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed,
                                    spawn_key=self.path + tuple(int(i) for i in indices))
        return np.random.Generator(np.random.PCG64(ss))

    def as_dict(self) -> dict:
        return {"seed": self.seed, "path": list(self.path),
                "scheme": self.scheme, "algorithm": self.algorithm}


@dataclass(frozen=True)
class BootstrapSupDistribution:
    """Sorted supremum statistics from B replicates, with full provenance."""

    sorted_values: np.ndarray
    B: int
    sign: str
    subset: IndexSet
    seed: SeedRecord

    def __post_init__(self):
        v = np.asarray(self.sorted_values, dtype=float)
        if v.ndim != 1 or v.size != self.B or self.B < 1:
            raise ValueError("need B >= 1 sorted supremum values")
        if np.any(np.diff(v) < 0):
            raise ValueError("supremum values must be sorted nondecreasing")
        if self.sign not in SIGNS:
            raise ValueError(f"sign must be one of {SIGNS}")
        if self.sign == "two-sided" and v.size and v[0] < 0:
            raise ValueError("two-sided suprema must be nonnegative")
        frozen = v.copy()
        frozen.flags.writeable = False
        object.__setattr__(self, "sorted_values", frozen)


def resample_counts(n: int, seed: SeedRecord, replicate_index: int) -> np.ndarray:
    """Multinomial(n; uniform) row counts for one replicate.

    Drawn as n uniform row indices with replacement, then tallied; the result
    is a deterministic function of (seed, replicate_index).
    """
    n = int(n)
    if n < 1:
        raise ValueError("need n >= 1")
    rng = seed.generator(int(replicate_index))
    return np.bincount(rng.integers(0, n, size=n), minlength=n)


def conservative_quantile(sorted_values: np.ndarray, delta: float) -> float:
    """Order statistic k = min(B, ceil((B+1)(1-delta))) of a sorted sample.

    This finite-B convention keeps the exceedance probability of the returned
    value at most delta (up to Monte Carlo error), which the plain empirical
    quantile does not guarantee.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    b = len(sorted_values)
    if b < 1:
        raise ValueError("empty sample")
    k = _conservative_index(b, delta)
    return float(sorted_values[k - 1])


def _conservative_index(b: int, delta: float) -> int:
    # the 1e-9 guard keeps float dust from pushing an exactly-integer
    # (B+1)(1-delta) up to the next order statistic
    k = math.ceil((b + 1) * (1.0 - delta) - 1e-9)
    return max(1, min(b, k))


def _block_sups(sub: np.ndarray, n: int, sign: str, counts: np.ndarray) -> np.ndarray:
    """Suprema for a block of replicates given raw counts (block x n).

    ``sub`` holds column-centered losses: since the counts sum to n, the
    deviation sqrt(n) (L*(t) - L(t)) equals ((counts - 1) @ centered) /
    sqrt(n), and centering makes it exactly zero for constant columns.
    """
    if sub.shape[1] == 0:
        return np.zeros(counts.shape[0])
    g = (counts - 1.0) @ sub
    g /= math.sqrt(n)
    if sign == "plus":
        return g.max(axis=1)
    if sign == "minus":
        return (-g).max(axis=1)
    return np.abs(g).max(axis=1)


def _count_blocks(n: int, seed: SeedRecord, b0: int, b1: int) -> np.ndarray:
    counts = np.empty((b1 - b0, n))
    for j in range(b1 - b0):
        counts[j] = resample_counts(n, seed, b0 + j)
    return counts


def _sup_values(
    sub: np.ndarray,
    n: int,
    sign: str,
    seed: SeedRecord,
    B: int,
    workers: int = 1,
    counts_cache: list[np.ndarray] | None = None,
) -> np.ndarray:
    """Unsorted per-replicate suprema, streamed in fixed blocks.

    ``counts_cache``: pass an empty list to capture the generated count
    blocks for reuse (e.g. a second pass over a different subset with paired
    replicates), or a previously captured list to replay them.
    """
    sub = sub - sub.mean(axis=0)
    out = np.empty(B)
    blocks = [(b0, min(b0 + _BLOCK, B)) for b0 in range(0, B, _BLOCK)]
    replay = counts_cache is not None and len(counts_cache) == len(blocks)

    def work(item):
        i, (b0, b1) = item
        if replay:
            counts = counts_cache[i]
        else:
            counts = _count_blocks(n, seed, b0, b1)
            if counts_cache is not None:
                counts_cache[i] = counts
        out[b0:b1] = _block_sups(sub, n, sign, counts)

    if counts_cache is not None and not replay:
        counts_cache.extend([None] * len(blocks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, enumerate(blocks)))
    else:
        for item in enumerate(blocks):
            work(item)
    return out


def sup_distribution(
    matrix: LossMatrix,
    subset: IndexSet | None,
    sign: str,
    B: int,
    seed: SeedRecord,
    workers: int = 1,
) -> BootstrapSupDistribution:
    """Distribution of the supremum deviation statistic over B replicates.

    For each replicate, rows are reweighted by multinomial counts, the
    resampled curve is formed, and the supremum over ``subset`` of the signed
    (or, for ``two-sided``, absolute) centered, rescaled deviation is taken.
    An empty subset yields all-zero suprema.
    """
    if sign not in SIGNS:
        raise ValueError(f"sign must be one of {SIGNS}")
    B = int(B)
    if B < 1:
        raise ValueError("need B >= 1")
    if subset is None:
        subset = IndexSet.full(matrix.grid)
    subset.check_against(matrix.grid)
    sub = np.ascontiguousarray(matrix.values[:, subset.indices])
    values = _sup_values(sub, matrix.n, sign, seed, B, workers=workers)
    values.sort()
    return BootstrapSupDistribution(values, B, sign, subset, seed)


def quantile_upper(dist: BootstrapSupDistribution, delta: float) -> float:
    """Conservative upper 1-delta quantile of the supremum distribution."""
    return conservative_quantile(dist.sorted_values, delta)


def rr_band(
    matrix: LossMatrix,
    delta: float,
    B: int,
    seed: SeedRecord | int,
    side: str = "upper",
    workers: int = 1,
) -> ConfidenceBand:
    """Risk-resampling band: empirical curve +/- bootstrap quantile / sqrt(n).

    The upper band uses the quantile of the negated-process supremum, the
    lower band the positive-process supremum, and the two-sided band a single
    quantile of the two-sided supremum at the full delta.
    """
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    if isinstance(seed, int):
        seed = SeedRecord(seed)
    curve = empirical_risk(matrix)
    n = matrix.n
    full = IndexSet.full(matrix.grid)
    sign = {"upper": "minus", "lower": "plus", "two-sided": "two-sided"}[side]
    dist = sup_distribution(matrix, full, sign, B, seed, workers=workers)
    q = quantile_upper(dist, delta)
    width = q / math.sqrt(n)
    upper = curve.values + width if side in ("upper", "two-sided") else None
    lower = curve.values - width if side in ("lower", "two-sided") else None
    return ConfidenceBand(
        grid=matrix.grid,
        lower=lower,
        upper=upper,
        validity=full,
        delta=delta,
        method="rr",
        width_info=width,
        sample_size=n,
        simultaneous=True,
        info={"B": B, "q_hat": q, "side": side, "seed": seed.as_dict()},
    )


@dataclass(frozen=True)
class SuggestBResult:
    """Replicate-count recommendation with bracket diagnostics."""

    B: int
    q_boot: float
    bracket_low: float
    bracket_high: float
    bracket_width: float
    met: bool
    degenerate: bool = False
    capped: bool = False
    history: tuple[tuple[int, float, float], ...] = field(default=())


def suggest_b(
    matrix: LossMatrix,
    delta: float,
    seed: SeedRecord | int,
    initial_b: int = 1000,
    sign: str = "minus",
    rel_tol: float = 0.01,
    bracket_confidence: float = 0.95,
    workers: int = 1,
) -> SuggestBResult:
    """Grow B until the quantile is pinned down to ``rel_tol`` relative width.

    An ECDF confidence band of half-width sqrt(log(2/eta)/(2B)) around the
    replicate distribution brackets the target quantile between two order
    statistics; B doubles until that bracket is narrower than
    ``rel_tol * q_boot`` or the hard cap 2**20 is reached. A zero bootstrap
    quantile (degenerate matrix) short-circuits with a zero-width flag.
    """
    if isinstance(seed, int):
        seed = SeedRecord(seed)
    if initial_b < 100:
        raise ValueError("initial_b must be at least 100")
    if not 0.0 < bracket_confidence < 1.0:
        raise ValueError("bracket_confidence must lie in (0, 1)")
    eps_num = math.log(2.0 / (1.0 - bracket_confidence))
    history: list[tuple[int, float, float]] = []
    b = int(initial_b)
    while True:
        dist = sup_distribution(matrix, None, sign, b, seed, workers=workers)
        v = dist.sorted_values
        q_boot = quantile_upper(dist, delta)
        if q_boot == 0.0:
            history.append((b, 0.0, 0.0))
            return SuggestBResult(b, 0.0, 0.0, 0.0, 0.0, met=False,
                                  degenerate=True, history=tuple(history))
        eps = math.sqrt(eps_num / (2.0 * b))
        k_low = max(1, math.ceil(b * (1.0 - delta - eps) - 1e-9))
        k_high = math.ceil(b * (1.0 - delta + eps) - 1e-9)
        if k_high > b:
            low, high, width = float(v[k_low - 1]), math.inf, math.inf
        else:
            low, high = float(v[k_low - 1]), float(v[k_high - 1])
            width = high - low
        history.append((b, q_boot, width))
        if width < rel_tol * q_boot:
            return SuggestBResult(b, q_boot, low, high, width, met=True,
                                  history=tuple(history))
        if b >= _B_CAP:
            return SuggestBResult(b, q_boot, low, high, width, met=False,
                                  capped=True, history=tuple(history))
        b = min(_B_CAP, 2 * b)

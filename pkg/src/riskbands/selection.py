"""Data-dependent threshold selection schemes.

These model how an analyst picks a threshold after seeing the data: either
minimizing the sum of two empirical risks, or maximizing the distance of the
empirical risk pair from the diagonal line through (1, 0) and (0, 1) (the
elbow of an ROC-style curve). Both are deterministic with smallest-index tie
breaking, and can be constrained to a sublevel set of the primary risk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .empirical import IndexSet, RiskCurve, sublevel_set

SCHEMES = ("even-tradeoff", "elbow")

DEFAULT_CONSTRAINT_R = 0.1


@dataclass(frozen=True)
class SelectionResult:
    index: int
    t_value: float
    scheme: str
    objective: float
    constraint: IndexSet
    flags: tuple[str, ...] = ()


def _resolve(curve_l: RiskCurve, curve_q: RiskCurve, constraint: IndexSet | None) -> IndexSet:
    if curve_l.grid != curve_q.grid:
        raise ValueError("curves must share a grid")
    if constraint is None:
        constraint = sublevel_set(curve_l, DEFAULT_CONSTRAINT_R)
    constraint.check_against(curve_l.grid)
    if constraint.is_empty:
        raise ValueError("selection constraint set is empty")
    return constraint


def select_even_tradeoff(
    curve_l: RiskCurve, curve_q: RiskCurve, constraint: IndexSet | None = None
) -> SelectionResult:
    """Threshold minimizing the sum of the two empirical risks.

    The constraint defaults to the sublevel set of the primary curve at 0.1
    (usually non-binding); ties break to the smallest grid index.
    """
    constraint = _resolve(curve_l, curve_q, constraint)
    idx = constraint.indices
    total = curve_l.values[idx] + curve_q.values[idx]
    pos = int(np.argmin(total))  # first minimum = smallest index (idx is sorted)
    j = int(idx[pos])
    return SelectionResult(j, float(curve_l.grid.values[j]), "even-tradeoff",
                           float(total[pos]), constraint)


def select_elbow(
    curve_l: RiskCurve, curve_q: RiskCurve, constraint: IndexSet | None = None
) -> SelectionResult:
    """Threshold maximizing distance from (L(t), Q(t)) to the line x + y = 1.

    Only points strictly below the line compete; if none lies below, the
    unsigned distance is used instead and the result is flagged. Ties break
    to the smallest grid index.
    """
    constraint = _resolve(curve_l, curve_q, constraint)
    idx = constraint.indices
    signed = (1.0 - (curve_l.values[idx] + curve_q.values[idx])) / math.sqrt(2.0)
    below = signed > 0.0
    flags: tuple[str, ...] = ()
    if below.any():
        cand = idx[below]
        vals = signed[below]
    else:
        cand = idx
        vals = np.abs(signed)
        flags = ("no-point-below-line",)
    pos = int(np.argmax(vals))
    j = int(cand[pos])
    return SelectionResult(j, float(curve_l.grid.values[j]), "elbow",
                           float(vals[pos]), constraint, flags)

"""Harvest-poor regime (beta * gamma < 1).

The four closed-form cases fix p_1 to the source budget or to the common
middle level, and let the last phase absorb what the final constraint allows.
They miss optima where several trailing constraints are tight at once, so the
search continues over "tail" families: constraints m..N tight, forwarding
decaying as p_{m+k} = b**k * p_m, phases 2..m-1 sharing one level, and phase
one either pinned to the source budget (TIGHT), equal to the middle level
(EQUAL) or free (FREE, m = 2 only).
"""

from collections.abc import Iterator
from functools import partial

import numpy as np

from ..logging import get_logger
from ..model import (
    Branch,
    DerivedRatios,
    FloatArray,
    SolveReport,
    SystemParams,
    tail_branch,
)
from .candidates import (
    FEASIBILITY_TOL,
    UNIT_TOL,
    AffineFamily,
    CaseCandidate,
    ReducedProblem,
    best_candidate,
    build_candidate,
)
from .fallback import oracle_fallback

logger = get_logger("ehrelay.closedform.branch_lt1")


def _within(alpha: float, lower: float, upper: float) -> bool:
    return lower - FEASIBILITY_TOL <= alpha <= upper + FEASIBILITY_TOL


def _case1(pb: ReducedProblem) -> tuple[FloatArray, float] | None:
    n, a, b, T = pb.n, pb.source, pb.harvest, pb.budget
    lower = max((T - n * a) / n, T - a - (n - 1) * b * T / (n - 1 + b))
    upper = T - n * a
    alpha = lower
    if alpha < -FEASIBILITY_TOL or not _within(alpha, lower, upper):
        return None
    rest = (T - a - alpha) / (n - 1)
    return np.concatenate(([a], np.full(n - 1, rest))), alpha


def _case2(pb: ReducedProblem) -> tuple[FloatArray, float] | None:
    n, a, b, T = pb.n, pb.source, pb.harvest, pb.budget
    alpha = max(0.0, T - n * a, T - a - (n * T - a) * b / (n + b))
    if not _within(alpha, alpha, T):
        return None
    return np.full(n, (T - alpha) / n), alpha


def _case3(pb: ReducedProblem) -> tuple[FloatArray, float] | None:
    n, a, b, g, T = pb.n, pb.source, pb.harvest, pb.rate, pb.budget
    if b <= 0:
        return None
    lower = max(
        0.0,
        T - a - T * (n - 2 + b) * b / ((1 + b) * b + n - 2),
        T / (1 + (n - 1) * b) - a,
    )
    upper = min((T - a * (1 + (n - 1) * b)) / (1 + b), T - a - (n - 1) * b * T / (n - 1 + b))
    if lower > upper + FEASIBILITY_TOL:
        return None
    stationary = (
        T / ((n - 1) * (1 + b))
        + T * (1 - b) * (n - 2) / (n - 1)
        - b * b * (n - 2) / ((1 + b) * (n - 1) * g)
        - a
    )
    alpha = float(np.clip(stationary, lower, max(lower, upper)))
    last = T + (a + alpha - T) / b
    middle = (T - (a + alpha) * (1 + b)) / ((n - 2) * b) if n > 2 else 0.0
    return np.concatenate(([a], np.full(n - 2, middle), [last])), alpha


def _case4(pb: ReducedProblem) -> tuple[FloatArray, float] | None:
    n, a, b, g, T = pb.n, pb.source, pb.harvest, pb.rate, pb.budget
    if b <= 0:
        return None
    lower = max(
        0.0,
        (T - a * (1 + (n - 1) * b)) / (1 + b),
        (T * (n - 1 - (n - 2) * b) - a * (b + n - 1)) / (n - 1 + (1 + b) * b),
    )
    upper = min((T - a) / (1 + b), T - a - b * (n * T - a) / (n + b))
    if lower > upper + FEASIBILITY_TOL:
        return None
    stationary = (
        g * (T - a) * ((1 + b) * n - b) - T * (n - 1) * (1 + b) * b * g - b * b * (n - 1)
    ) / (n * (1 + b) * g)
    alpha = float(np.clip(stationary, lower, max(lower, upper)))
    shared = (T - a - alpha * (1 + b)) / ((n - 1) * b)
    last = T + (a + alpha - T) / b
    return np.concatenate((np.full(n - 1, shared), [last])), alpha


_CASES = (
    (Branch.BG_LT1_CASE1, _case1),
    (Branch.BG_LT1_CASE2, _case2),
    (Branch.BG_LT1_CASE3, _case3),
    (Branch.BG_LT1_CASE4, _case4),
)


def _tail_powers(
    pb: ReducedProblem, tail: FloatArray, count: int, pinned: bool, level: float
) -> tuple[FloatArray, float]:
    """`count` phases at `level`, then the decaying tail; phase one optionally pinned."""
    a, b = pb.source, pb.harvest
    weight = float(tail.sum())
    decay = b ** tail.size
    before_tail = (a if pinned else 0.0) + count * level
    alpha = (pb.budget - weight * a - decay * before_tail) / (1 + weight * b)
    head = a + b * alpha - (1 - b) * before_tail
    lead = [a] if pinned else []
    return np.concatenate((lead, np.full(count, level), head * tail)), alpha


def _tail_families(pb: ReducedProblem) -> Iterator[tuple[str, AffineFamily]]:
    n = pb.n
    for start in range(2, n + 2):
        tail = pb.harvest ** np.arange(n - start + 1, dtype=np.float64)
        if start == 2:
            modes = (("FREE", 1, False),)
        else:
            modes = (("TIGHT", start - 2, True), ("EQUAL", start - 1, False))
        for mode, count, pinned in modes:
            family = AffineFamily.through(partial(_tail_powers, pb, tail, count, pinned))
            yield tail_branch(start, mode), family


def solve_branch_lt1(params: SystemParams, ratios: DerivedRatios) -> SolveReport:
    if ratios.beta_gamma >= 1 - UNIT_TOL:
        raise ValueError(f"Branch requires beta*gamma < 1, got {ratios.beta_gamma}")
    if params.n_phases < 2:
        raise ValueError("Branch requires at least two phases")
    pb = ReducedProblem.build(params, ratios)

    candidates: list[CaseCandidate] = []
    for label, case in _CASES:
        solved = case(pb)
        if solved is None:
            logger.debug("%s: alpha interval empty", label)
            continue
        powers, alpha = solved
        candidates.append(build_candidate(params, ratios, label, powers, alpha))

    for label, family in _tail_families(pb):
        t = family.maximize(pb)
        if t is None:
            continue
        powers, alpha = family.at(t)
        candidates.append(build_candidate(params, ratios, label, powers, alpha))

    best = best_candidate(candidates)
    if best is None:
        return oracle_fallback(params, "no feasible case or tail family")
    return SolveReport.evaluate(
        params,
        best.allocation,
        best.case_id,
        diagnostics={"candidates": len(candidates), "alpha": best.alpha},
    )

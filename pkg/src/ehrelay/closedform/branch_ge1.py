"""Harvest-rich regime (beta * gamma >= 1).

With the first l energy-causality constraints tight, the source spends its
whole budget in phase one and every later tight phase forwards what it
harvested the phase before: p_1 = a, p_j = (a + alpha) * b**(j-1) for
j <= l. The remaining phases split the rest of the relay budget equally.
Each l leaves a concave problem in alpha alone.
"""

import numpy as np

from ..logging import get_logger
from ..model import DerivedRatios, FloatArray, SolveReport, SystemParams, ge1_branch
from .candidates import (
    UNIT_TOL,
    CaseCandidate,
    ReducedProblem,
    best_candidate,
    build_candidate,
    concave_argmax,
)
from .fallback import oracle_fallback
from .thresholds import ThresholdTable, geometric_sum, select_tight_limit

logger = get_logger("ehrelay.closedform.branch_ge1")


def _tight_prefix_powers(problem: ReducedProblem, tight: int, alpha: float) -> FloatArray:
    lead = (problem.source + alpha) * problem.harvest ** np.arange(tight, dtype=np.float64)
    lead[0] = problem.source
    rest = problem.n - tight
    if rest == 0:
        return lead
    level = problem.source + alpha
    equal = (problem.budget - level * geometric_sum(problem.harvest, tight)) / rest
    return np.concatenate((lead, np.full(rest, equal)))


def _supplement_derivative(problem: ReducedProblem, tight: int, alpha: float) -> float:
    g, b = problem.rate, problem.harvest
    growth = b ** np.arange(1, tight, dtype=np.float64)
    level = problem.source + alpha
    gain = float(np.sum(g * growth / (1.0 + g * level * growth)))
    rest = problem.n - tight
    total = geometric_sum(b, tight)
    equal = max((problem.budget - level * total) / rest, 0.0)
    return gain - g * total / (1.0 + g * equal)


def root_solve_foc(
    params: SystemParams,
    ratios: DerivedRatios,
    tight: int,
    bracket: tuple[float, float],
) -> float:
    """Optimal supplement for `tight` leading tight constraints within `bracket`."""
    if ratios.beta_gamma < 1 - UNIT_TOL:
        raise ValueError(f"First-order root applies to beta*gamma >= 1, got {ratios.beta_gamma}")
    problem = ReducedProblem.build(params, ratios)
    lower, upper = bracket
    if tight >= problem.n or upper <= lower:
        return lower

    if abs(problem.harvest - 1.0) <= UNIT_TOL and tight >= 2:
        n, g = problem.n, problem.rate
        level = ((tight - 1) * g * problem.budget - (n - tight)) / (g * tight * (n - 1))
        return float(np.clip(level - problem.source, lower, upper))

    return concave_argmax(lambda a: _supplement_derivative(problem, tight, a), lower, upper)


def solve_branch_ge1(
    params: SystemParams, ratios: DerivedRatios, thresholds: ThresholdTable
) -> SolveReport:
    problem = ReducedProblem.build(params, ratios)
    limit = select_tight_limit(params, thresholds)
    logger.debug("beta*gamma=%.6g: searching l = 1..%d", problem.harvest, limit)

    candidates: list[CaseCandidate] = []
    for tight in range(1, limit + 1):
        total = geometric_sum(problem.harvest, tight)
        if tight == problem.n:
            alpha = max(problem.budget / total - problem.source, 0.0)
        else:
            lower = float(thresholds.alpha_th[tight])
            upper = min(float(thresholds.alpha_th[tight - 1]), problem.budget / total - problem.source)
            upper = max(upper, lower)
            if tight == 1:
                alpha = lower
            else:
                alpha = root_solve_foc(params, ratios, tight, (lower, upper))
        powers = _tight_prefix_powers(problem, tight, alpha)
        candidates.append(build_candidate(params, ratios, ge1_branch(tight), powers, alpha))

    best = best_candidate(candidates)
    if best is None:
        return oracle_fallback(params, f"no feasible candidate among l = 1..{limit}")
    return SolveReport.evaluate(
        params,
        best.allocation,
        best.case_id,
        diagnostics={"k": limit, "candidates": len(candidates), "alpha": best.alpha},
    )

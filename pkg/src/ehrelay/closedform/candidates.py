"""Candidate allocations and the 1-D concave search shared by both branches.

Everything here works in forwarding-power units: `p[j]` is the relay power
spent forwarding in phase j and `alpha` the pure harvesting supplement of
phase one. The source budget becomes `P10 * gamma_star` and the harvesting
gain `beta * gamma_star`.
"""

from collections.abc import Callable, Iterable
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ..logging import get_logger
from ..model import (
    FEASIBILITY_TOL,
    Allocation,
    DerivedRatios,
    FloatArray,
    SystemParams,
    check_feasibility,
    evaluate_throughput,
    is_feasible,
)

logger = get_logger("ehrelay.closedform.candidates")

UNIT_TOL = 1e-12
THRESHOLD_RTOL = 1e-12
BISECTION_XTOL = 1e-12
BISECTION_MAXITER = 200
IMPROVEMENT_TOL = 1e-12


@dataclass(frozen=True)
class ReducedProblem:
    n: int
    source: float
    harvest: float
    rate: float
    budget: float

    @classmethod
    def build(cls, params: SystemParams, ratios: DerivedRatios) -> "ReducedProblem":
        return cls(
            n=int(params.n_phases),
            source=params.p1_initial * ratios.gamma_star,
            harvest=ratios.beta_gamma,
            rate=ratios.rate_coefficient,
            budget=params.p2_initial,
        )

    @property
    def scale(self) -> float:
        return max(1.0, self.source, self.budget)

    def slack(self, p: FloatArray, alpha: float) -> FloatArray:
        """Rows `[EC_1..EC_N, p >= 0, alpha >= 0, budget]`, affine in (p, alpha)."""
        spent = np.cumsum(p)
        harvested = self.harvest * (alpha + np.concatenate(([0.0], spent[:-1])))
        harvested[0] = 0.0
        causality = self.source + harvested - spent
        budget = self.budget - spent[-1] - alpha
        return np.concatenate((causality, p, [alpha, budget]))


def concave_argmax(
    derivative: Callable[[float], float],
    lower: float,
    upper: float,
    *,
    xtol: float = BISECTION_XTOL,
    maxiter: int = BISECTION_MAXITER,
) -> float:
    """Maximizer over [lower, upper] of a concave function with the given derivative."""
    if upper - lower <= xtol:
        return lower
    if derivative(lower) <= 0:
        return lower
    if derivative(upper) >= 0:
        return upper
    return float(optimize.bisect(derivative, lower, upper, xtol=xtol, maxiter=maxiter))


@dataclass(frozen=True)
class AffineFamily:
    """Allocations moving along one scalar: p(t) = origin + t * direction."""

    origin: FloatArray
    direction: FloatArray
    alpha_origin: float
    alpha_direction: float

    @classmethod
    def through(cls, build: Callable[[float], tuple[FloatArray, float]]) -> "AffineFamily":
        p_zero, alpha_zero = build(0.0)
        p_one, alpha_one = build(1.0)
        return cls(p_zero, p_one - p_zero, alpha_zero, alpha_one - alpha_zero)

    def at(self, t: float) -> tuple[FloatArray, float]:
        return self.origin + t * self.direction, self.alpha_origin + t * self.alpha_direction

    def feasible_interval(self, problem: ReducedProblem) -> tuple[float, float] | None:
        base = problem.slack(self.origin, self.alpha_origin)
        step = problem.slack(*self.at(1.0)) - base
        flat = np.abs(step) <= 1e-13 * problem.scale
        if np.any(base[flat] < -FEASIBILITY_TOL):
            return None
        rising = ~flat & (step > 0)
        falling = ~flat & (step < 0)
        lower = float(np.max(-base[rising] / step[rising], initial=-np.inf))
        upper = float(np.min(-base[falling] / step[falling], initial=np.inf))
        if not (np.isfinite(lower) and np.isfinite(upper)):
            return None
        if lower > upper:
            if lower - upper > 1e-12 * max(1.0, abs(lower)):
                return None
            lower = upper = 0.5 * (lower + upper)
        return lower, upper

    def derivative(self, problem: ReducedProblem, t: float) -> float:
        p = np.maximum(self.origin + t * self.direction, 0.0)
        return float(np.sum(problem.rate * self.direction / (1.0 + problem.rate * p)))

    def maximize(self, problem: ReducedProblem) -> float | None:
        interval = self.feasible_interval(problem)
        if interval is None:
            return None
        return concave_argmax(lambda t: self.derivative(problem, t), *interval)


@dataclass(frozen=True)
class CaseCandidate:
    case_id: str
    alpha: float
    allocation: Allocation
    throughput: float
    feasible: bool


def build_candidate(
    params: SystemParams,
    ratios: DerivedRatios,
    case_id: str,
    p_forward: FloatArray,
    alpha: float,
) -> CaseCandidate:
    """Assemble one case's forwarding powers; the budget is spent exactly."""
    p_forward = np.asarray(p_forward, dtype=np.float64)
    finite = bool(np.all(np.isfinite(p_forward))) and np.isfinite(alpha)
    if not finite:
        p_forward = np.zeros_like(p_forward)
    exact_alpha = params.p2_initial - float(p_forward.sum())
    valid = (
        finite
        and p_forward.min(initial=0.0) >= -FEASIBILITY_TOL
        and exact_alpha >= -FEASIBILITY_TOL
        and abs(exact_alpha - alpha) <= FEASIBILITY_TOL * max(1.0, params.p2_initial)
    )
    allocation = Allocation.from_forwarding(p_forward, exact_alpha, ratios)
    feasible = valid and is_feasible(check_feasibility(params, allocation))
    throughput = evaluate_throughput(params, allocation)
    logger.debug(
        "Candidate %s: alpha=%.6g throughput=%.12g feasible=%s", case_id, alpha, throughput, feasible
    )
    return CaseCandidate(case_id, allocation.alpha, allocation, throughput, feasible)


def best_candidate(candidates: Iterable[CaseCandidate]) -> CaseCandidate | None:
    """Highest-throughput feasible candidate; earlier candidates win near-ties."""
    best: CaseCandidate | None = None
    for candidate in candidates:
        if not candidate.feasible:
            continue
        if best is None or candidate.throughput > best.throughput + IMPROVEMENT_TOL:
            best = candidate
    return best

"""Numeric maximizer of the reduced problem in forwarding powers.

The objective sum(log(1 + g * p_j)) is separable and concave, so its Hessian is
diagonal. PROJECTED_GRADIENT takes Newton-scaled steps and projects them in
the Hessian metric; GRID enumerates a lattice for N <= 3.
"""

import itertools
import math
from typing import Any

import numpy as np

from ..closedform.candidates import ReducedProblem
from ..logging import get_logger
from ..model import (
    FEASIBILITY_TOL,
    Allocation,
    Branch,
    FloatArray,
    SolveReport,
    SystemParams,
    derive_ratios,
)
from ..settings import OracleConfig, OracleMethod
from .polytope import ForwardingPolytope

logger = get_logger("ehrelay.oracle.reduced")

ARMIJO_SIGMA = 1e-4
MAX_HALVINGS = 50
GRID_MAX_PHASES = 3


def _objective(problem: ReducedProblem, p: FloatArray) -> float:
    return float(np.sum(np.log1p(problem.rate * p)))


def _armijo_step(
    problem: ReducedProblem,
    x: FloatArray,
    value: float,
    direction: FloatArray,
    slope: float,
    iteration: int,
) -> tuple[float, float] | None:
    """(step, objective) of an accepted step along `direction`, or None."""
    step = 1.0
    for _ in range(MAX_HALVINGS):
        trial = _objective(problem, x + step * direction)
        if trial >= value + ARMIJO_SIGMA * step * slope:
            return step, trial
        step *= 0.5
    # diminishing step; accepted only if it does not lose ground
    step = 1.0 / iteration
    trial = _objective(problem, x + step * direction)
    if trial >= value:
        return step, trial
    return None


def _projected_gradient(
    problem: ReducedProblem, polytope: ForwardingPolytope, config: OracleConfig
) -> tuple[FloatArray, dict[str, Any]]:
    g = problem.rate
    x = np.zeros(problem.n)
    value = 0.0
    trace = [value]
    converged = False
    iteration = 0
    while iteration < config.max_iterations:
        iteration += 1
        curvature = 1.0 + g * x
        gradient = g / curvature
        target = x + curvature / g
        projected = polytope.project(target, gradient**2, maxiter=config.max_iterations)
        direction = projected - x
        slope = float(gradient @ direction)
        if slope <= config.tolerance:
            converged = True
            break
        accepted = _armijo_step(problem, x, value, direction, slope, iteration)
        if accepted is None:
            logger.debug("Line search failed at iteration %d; stopping", iteration)
            converged = True
            break
        step, _ = accepted
        # convex combination of feasible points; shrink only absorbs rounding
        x = polytope.shrink_into(x + step * direction)
        new_value = _objective(problem, x)
        improvement = new_value - value
        value = new_value
        trace.append(value)
        if improvement < config.tolerance:
            converged = True
            break

    if not converged:
        logger.warning(
            "Projected gradient did not converge within %d iterations (objective %.12g)",
            config.max_iterations,
            value,
        )
    return x, {"iterations": iteration, "converged": converged, "trace": trace}


def _grid_search(
    problem: ReducedProblem, polytope: ForwardingPolytope, config: OracleConfig
) -> tuple[FloatArray, dict[str, Any]]:
    n = problem.n
    if n > GRID_MAX_PHASES:
        raise ValueError(f"GRID search supports N <= {GRID_MAX_PHASES}, got N={n}; use PROJECTED_GRADIENT")
    steps = max(math.ceil(problem.budget / config.grid_resolution), 1) + 1
    axis = np.linspace(0.0, problem.budget, steps)

    tail_dims = min(n, 2)
    tail = np.stack(np.meshgrid(*([axis] * tail_dims), indexing="ij"), axis=-1).reshape(-1, tail_dims)
    best_point = np.zeros(n)
    best_value = 0.0
    evaluated = 0
    for head in itertools.product(axis, repeat=n - tail_dims):
        lead = np.broadcast_to(np.asarray(head, dtype=np.float64), (tail.shape[0], n - tail_dims))
        points = np.hstack((lead, tail))
        values = np.log1p(problem.rate * points).sum(axis=1)
        values[~polytope.contains(points, FEASIBILITY_TOL)] = -np.inf
        evaluated += points.shape[0]
        top = int(np.argmax(values))
        if values[top] > best_value:
            best_value = float(values[top])
            best_point = points[top].copy()
    return polytope.shrink_into(best_point), {"grid_points": evaluated, "grid_step": float(axis[1] - axis[0])}


def solve_reduced(params: SystemParams, config: OracleConfig | None = None) -> SolveReport:
    """Numeric optimum of the reduced problem (supplement aggregated into phase one)."""
    config = config or OracleConfig()
    ratios = derive_ratios(params)
    problem = ReducedProblem.build(params, ratios)

    if problem.budget == 0:
        return SolveReport.evaluate(
            params,
            Allocation.zeros(problem.n),
            Branch.ORACLE,
            diagnostics={"method": str(config.method), "iterations": 0, "converged": True},
        )

    polytope = ForwardingPolytope.build(problem)
    if config.method == OracleMethod.GRID:
        p, diagnostics = _grid_search(problem, polytope, config)
    elif config.method == OracleMethod.PROJECTED_GRADIENT:
        p, diagnostics = _projected_gradient(problem, polytope, config)
    else:
        raise ValueError(f"Unsupported oracle method: {config.method}")

    if "trace" in diagnostics:
        to_bits = params.bandwidth / (2.0 * math.log(2.0))
        diagnostics["trace"] = [to_bits * v for v in diagnostics["trace"]]

    alpha = problem.budget - float(p.sum())
    allocation = Allocation.from_forwarding(p, alpha, ratios)
    report = SolveReport.evaluate(
        params,
        allocation,
        Branch.ORACLE,
        diagnostics={"method": str(config.method), **diagnostics},
    )
    logger.debug("Oracle (%s) for %s: throughput=%.12g", config.method, params, report.throughput)
    return report


def oracle_gap(
    params: SystemParams, report: SolveReport, config: OracleConfig | None = None
) -> float:
    """Oracle throughput minus the report's; near zero or negative for OPT."""
    return solve_reduced(params, config).throughput - report.throughput

"""Numeric maximizer in the original per-phase powers.

The min-of-two-rates objective is handled in epigraph form: a rate variable
r_j per phase, bounded by both hops. Every constraint is then linear in
(P1, P2, r), and SLSQP solves the smooth concave problem. The result is
canonicalized with `aggregate_supplements`, so it can be compared with the
reduced solvers allocation by allocation.

With a direct link the source powers are kept as solved. Source power above
the matched level still adds gamma1_direct * P1 at the destination, so when
the source holds surplus energy this optimum can exceed the matched-hop
optimum of the reduced solvers and of `solve_opt`.
"""

import numpy as np
from scipy import optimize

from ..logging import get_logger
from ..model import (
    Allocation,
    Branch,
    FloatArray,
    SolveReport,
    SystemParams,
    aggregate_supplements,
)
from ..settings import OracleConfig

logger = get_logger("ehrelay.oracle.original")

ORIGINAL_MAX_PHASES = 4


def _constraint_system(params: SystemParams) -> tuple[FloatArray, FloatArray]:
    """(G, h) with every constraint written as G @ z + h >= 0, z = [P1, P2, r]."""
    n = params.n_phases
    eye = np.eye(n)
    zero = np.zeros((n, n))
    lower = np.tril(np.ones((n, n)))
    strictly_lower = np.tril(np.ones((n, n)), k=-1)

    relay_hop = np.hstack((params.gamma1 * eye, zero, -eye))
    destination_hop = np.hstack((params.gamma1_direct * eye, params.gamma2 * eye, -eye))
    causality = np.hstack((-lower, params.beta * strictly_lower, zero))
    budget = np.hstack((np.zeros(n), -np.ones(n), np.zeros(n)))[None, :]

    G = np.vstack((relay_hop, destination_hop, causality, budget))
    h = np.concatenate((np.zeros(2 * n), np.full(n, params.p1_initial), [params.p2_initial]))
    return G, h


def _repair(params: SystemParams, p1: FloatArray, p2: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Shrink solver output onto the feasible set (removes rounding-level violations)."""
    p1 = np.maximum(p1, 0.0)
    p2 = np.maximum(p2, 0.0)
    total = float(p2.sum())
    if total > params.p2_initial:
        p2 = p2 * (params.p2_initial / total)
    available = params.p1_initial + params.beta * np.concatenate(([0.0], np.cumsum(p2)[:-1]))
    spent = 0.0
    for j in range(p1.size):
        p1[j] = min(p1[j], max(available[j] - spent, 0.0))
        spent += p1[j]
    return p1, p2


def solve_original(params: SystemParams, config: OracleConfig | None = None) -> SolveReport:
    """Numeric optimum over (P1_j, P2_j) without the matched-hop reduction; N <= 4."""
    config = config or OracleConfig()
    n = params.n_phases
    if n > ORIGINAL_MAX_PHASES:
        raise ValueError(
            f"solve_original supports N <= {ORIGINAL_MAX_PHASES}, got N={n}; use solve_reduced"
        )
    if params.p2_initial == 0:
        return SolveReport.evaluate(
            params, Allocation.zeros(n), Branch.ORACLE, diagnostics={"iterations": 0, "converged": True}
        )

    G, h = _constraint_system(params)
    p1_start = np.full(n, params.p1_initial / (2 * n))
    p2_start = np.full(n, params.p2_initial / (2 * n))
    rate_start = 0.5 * np.minimum(p1_start * params.gamma1, p1_start * params.gamma1_direct + p2_start * params.gamma2)
    start = np.concatenate((p1_start, p2_start, rate_start))

    def neg_objective(z: FloatArray) -> float:
        return -float(np.sum(np.log1p(z[2 * n :])))

    def neg_gradient(z: FloatArray) -> FloatArray:
        grad = np.zeros_like(z)
        grad[2 * n :] = -1.0 / (1.0 + z[2 * n :])
        return grad

    res = optimize.minimize(
        neg_objective,
        start,
        method="SLSQP",
        jac=neg_gradient,
        constraints=[{"type": "ineq", "fun": lambda z: G @ z + h, "jac": lambda z: G}],
        bounds=optimize.Bounds(np.zeros(3 * n), np.full(3 * n, np.inf)),
        options={"ftol": config.tolerance, "maxiter": config.max_iterations},
    )
    if not res.success:
        logger.warning("solve_original did not converge for %s: %s", params, res.message)

    p1, p2 = _repair(params, res.x[:n], res.x[n : 2 * n])
    rates = np.minimum(p1 * params.gamma1, p1 * params.gamma1_direct + p2 * params.gamma2)
    raw_throughput = params.bandwidth / 2.0 * float(np.sum(np.log2(1.0 + rates)))
    allocation, later = aggregate_supplements(
        params, p1, p2, keep_source_power=params.gamma1_direct > 0
    )
    return SolveReport.evaluate(
        params,
        allocation,
        Branch.ORACLE,
        diagnostics={
            "method": "SLSQP_EPIGRAPH",
            "iterations": int(res.nit),
            "converged": bool(res.success),
            "raw_throughput": raw_throughput,
            "later_supplement": later,
        },
    )

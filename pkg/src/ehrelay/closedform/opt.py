from ..logging import get_logger
from ..model import Allocation, Branch, DerivedRatios, SolveReport, SystemParams
from .branch_ge1 import solve_branch_ge1
from .branch_lt1 import solve_branch_lt1
from .candidates import UNIT_TOL
from .thresholds import (
    compute_thresholds,
    direct_link_transform,
    relaxed_is_feasible,
    relaxed_solution,
)

logger = get_logger("ehrelay.closedform.opt")


def _single_phase(params: SystemParams, ratios: DerivedRatios) -> SolveReport:
    # Energy harvested in the only phase arrives too late to be spent
    forward = min(params.p1_initial * ratios.gamma_star, params.p2_initial)
    allocation = Allocation.from_forwarding([forward], 0.0, ratios)
    return SolveReport.evaluate(params, allocation, Branch.N_EQUALS_1)


def solve_opt(params: SystemParams) -> SolveReport:
    """Throughput-optimal allocation from the closed-form case analysis."""
    _, ratios = direct_link_transform(params)

    if params.n_phases == 1:
        report = _single_phase(params, ratios)
    elif relaxed_is_feasible(params, ratios):
        report = SolveReport.evaluate(params, relaxed_solution(params), Branch.RELAXED)
    elif ratios.beta_gamma >= 1 - UNIT_TOL:
        report = solve_branch_ge1(params, ratios, compute_thresholds(params, ratios))
    else:
        report = solve_branch_lt1(params, ratios)

    logger.debug(
        "OPT for %s: branch=%s throughput=%.12g", params, report.branch, report.throughput
    )
    return report

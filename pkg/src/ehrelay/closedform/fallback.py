from dataclasses import replace

from ..logging import get_logger
from ..model import SolveReport, SystemParams
from ..settings import OracleConfig

logger = get_logger("ehrelay.closedform.fallback")


def oracle_fallback(params: SystemParams, reason: str) -> SolveReport:
    """Numeric answer for an instance the closed form could not place; flagged."""
    from ..oracle import solve_reduced

    logger.warning("Closed form failed (%s); falling back to the numeric oracle for %s", reason, params)
    report = solve_reduced(params, OracleConfig())
    diagnostics = {**report.diagnostics, "fallback_reason": reason}
    return replace(report, fallback=True, diagnostics=diagnostics)

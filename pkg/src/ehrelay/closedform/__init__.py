"""Closed-form OPT solver: relaxed fast path, harvest-rich and harvest-poor branches."""

from .branch_ge1 import root_solve_foc, solve_branch_ge1
from .branch_lt1 import solve_branch_lt1
from .candidates import CaseCandidate
from .opt import solve_opt
from .thresholds import (
    ThresholdTable,
    compute_thresholds,
    direct_link_transform,
    relaxed_is_feasible,
    relaxed_solution,
)

__all__ = [
    "CaseCandidate",
    "ThresholdTable",
    "compute_thresholds",
    "direct_link_transform",
    "relaxed_is_feasible",
    "relaxed_solution",
    "root_solve_foc",
    "solve_branch_ge1",
    "solve_branch_lt1",
    "solve_opt",
]

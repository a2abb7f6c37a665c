"""Comparison policies: greedy (GRE), equal (EQ) and source-only (SNo)."""

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .logging import get_logger
from .model import (
    Allocation,
    Branch,
    DerivedRatios,
    SolveReport,
    SystemParams,
    derive_ratios,
)

logger = get_logger("ehrelay.baselines")


class IncompatiblePolicyError(ValueError):
    """The policy is not defined for this instance."""


@dataclass(frozen=True)
class ResidualState:
    """Energy left at the start of `phase` (1-based)."""

    p1_residual: float
    p2_residual: float
    phase: int

    def __post_init__(self) -> None:
        if self.p1_residual < 0 or self.p2_residual < 0:
            raise ValueError(f"Residuals must be nonnegative, got {self}")

    def advance(self, p1: float, p2: float, beta: float) -> "ResidualState":
        # clip rounding noise; a policy never spends more than its residual
        return ResidualState(
            p1_residual=max(self.p1_residual - p1 + beta * p2, 0.0),
            p2_residual=max(self.p2_residual - p2, 0.0),
            phase=self.phase + 1,
        )


class ResidualSplitPolicy(ABC):
    """Phase-by-phase policy that only looks at the current residuals.

    Both hops are matched through gamma_star: the relay forwards
    P2 = P1 * gamma_star, so neither hop wastes power.
    """

    branch: Branch

    def __init__(self) -> None:
        self._logger = get_logger(f"ehrelay.baselines.{self.__class__.__name__}")

    def run(self, params: SystemParams) -> SolveReport:
        ratios = derive_ratios(params)
        n = params.n_phases
        p1 = np.zeros(n)
        p2 = np.zeros(n)
        state = ResidualState(params.p1_initial, params.p2_initial, phase=1)
        for j in range(n):
            p1[j], p2[j] = self._split(state, n, ratios)
            state = state.advance(p1[j], p2[j], params.beta)
        self._logger.debug("Final residuals: source=%.6g relay=%.6g", state.p1_residual, state.p2_residual)
        allocation = Allocation(p1=p1, p2=p2, alpha=0.0, p_forward=p2)
        return SolveReport.evaluate(
            params,
            allocation,
            self.branch,
            diagnostics={
                "p1_residual": state.p1_residual,
                "p2_residual": state.p2_residual,
            },
        )

    @staticmethod
    def _source_limited(state: ResidualState, ratios: DerivedRatios) -> bool:
        return state.p1_residual * ratios.gamma_star < state.p2_residual

    @abstractmethod
    def _split(self, state: ResidualState, n_phases: int, ratios: DerivedRatios) -> tuple[float, float]:
        """(P1_j, P2_j) for the phase described by `state`."""
        raise NotImplementedError


class GreedyPolicy(ResidualSplitPolicy):
    """The limiting node spends its whole residual every phase."""

    branch = Branch.BASELINE_GRE

    def _split(self, state: ResidualState, n_phases: int, ratios: DerivedRatios) -> tuple[float, float]:
        if self._source_limited(state, ratios):
            return state.p1_residual, state.p1_residual * ratios.gamma_star
        return state.p2_residual / ratios.gamma_star, state.p2_residual


class EqualPolicy(ResidualSplitPolicy):
    """The limiting node spreads its residual over the phases left."""

    branch = Branch.BASELINE_EQ

    @staticmethod
    def _source_limited(state: ResidualState, ratios: DerivedRatios) -> bool:
        # ties go to the source-limited split
        return state.p1_residual * ratios.gamma_star <= state.p2_residual

    def _split(self, state: ResidualState, n_phases: int, ratios: DerivedRatios) -> tuple[float, float]:
        remaining = n_phases - state.phase + 1
        if self._source_limited(state, ratios):
            p1 = state.p1_residual / remaining
            return p1, p1 * ratios.gamma_star
        p2 = state.p2_residual / remaining
        return p2 / ratios.gamma_star, p2


def run_gre(params: SystemParams) -> SolveReport:
    return GreedyPolicy().run(params)


def run_eq(params: SystemParams) -> SolveReport:
    return EqualPolicy().run(params)


def run_sno(params: SystemParams) -> SolveReport:
    """Source-only transmission through a relay powered purely by harvesting.

    The source pools both budgets and splits them equally over the phases.
    The relay keeps a beta / (gamma + beta) share of the received signal for
    decoding and harvests the rest, which balances its two hops exactly.
    """
    if params.gamma1_direct > 0:
        raise IncompatiblePolicyError(
            f"SNO is defined only without a direct link, got gamma1_direct={params.gamma1_direct}; "
            "set gamma1_direct=0 or pick OPT/GRE/EQ"
        )
    n = params.n_phases
    gamma = params.gamma1 / params.gamma2
    beta = params.beta
    detect_share = beta / (gamma + beta) if beta > 0 else 0.0

    supply = params.p1_initial + params.p2_initial
    p1 = np.full(n, supply / n)
    p2 = gamma * detect_share * p1
    rates = np.log2(1.0 + p1 * params.gamma1 * detect_share)
    throughput = float(params.bandwidth / 2.0 * rates.sum())

    # SNo's own constraint system: pooled source supply and harvest-limited relay
    source_slack = supply - np.cumsum(p1)
    relay_slack = gamma * detect_share * p1 - p2
    residuals = np.concatenate((source_slack, relay_slack, p1, p2, [0.0]))
    residuals.setflags(write=False)

    allocation = Allocation(p1=p1, p2=p2, alpha=0.0, p_forward=p2)
    return SolveReport(
        allocation=allocation,
        throughput=throughput,
        branch=str(Branch.BASELINE_SNO),
        feasibility_residuals=residuals,
        diagnostics={"detect_share": detect_share, "harvest_share": 1.0 - detect_share},
    )

"""Problem instance, allocation and report types shared by every solver."""

import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .logging import get_logger

FloatArray = NDArray[np.float64]

FEASIBILITY_TOL = 1e-9

logger = get_logger("ehrelay.model")


class InvalidParametersError(ValueError):
    """A problem instance violates its invariants."""


class PolicyKind(StrEnum):
    OPT = "OPT"
    GRE = "GRE"
    EQ = "EQ"
    SNO = "SNO"
    ORACLE = "ORACLE"


class Branch(StrEnum):
    """Fixed branch labels. Parametrised ones come from `ge1_branch`/`tail_branch`."""

    RELAXED = "RELAXED"
    N_EQUALS_1 = "N_EQUALS_1"
    BG_LT1_CASE1 = "BG_LT1_CASE1"
    BG_LT1_CASE2 = "BG_LT1_CASE2"
    BG_LT1_CASE3 = "BG_LT1_CASE3"
    BG_LT1_CASE4 = "BG_LT1_CASE4"
    BASELINE_GRE = "BASELINE_GRE"
    BASELINE_EQ = "BASELINE_EQ"
    BASELINE_SNO = "BASELINE_SNO"
    ORACLE = "ORACLE"


def ge1_branch(tight_count: int) -> str:
    return f"BG_GE1_L{tight_count}"


def tail_branch(start: int, mode: str) -> str:
    return f"BG_LT1_TAIL{start}_{mode}"


@dataclass(frozen=True)
class SystemParams:
    """One problem instance. Powers and SNRs are normalized by the noise power."""

    n_phases: int
    bandwidth: float
    p1_initial: float
    p2_initial: float
    gamma1: float
    gamma2: float
    beta: float
    gamma1_direct: float = 0.0

    def __post_init__(self) -> None:
        if isinstance(self.n_phases, bool) or not isinstance(self.n_phases, (int, np.integer)):
            raise InvalidParametersError(f"n_phases must be an integer, got {self.n_phases!r}")
        if self.n_phases < 1:
            raise InvalidParametersError(f"n_phases must be >= 1, got {self.n_phases}")
        for name in ("bandwidth", "gamma1", "gamma2"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise InvalidParametersError(f"{name} must be positive and finite, got {value}")
        for name in ("p1_initial", "p2_initial", "beta", "gamma1_direct"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise InvalidParametersError(f"{name} must be nonnegative and finite, got {value}")
        if self.gamma1 <= self.gamma1_direct:
            raise InvalidParametersError(
                f"gamma1 ({self.gamma1}) must exceed gamma1_direct ({self.gamma1_direct}): "
                "the relayed path has to out-SNR the direct path"
            )

    def as_dict(self) -> dict[str, float | int]:
        return {
            "n_phases": int(self.n_phases),
            "bandwidth": self.bandwidth,
            "p1_initial": self.p1_initial,
            "p2_initial": self.p2_initial,
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "beta": self.beta,
            "gamma1_direct": self.gamma1_direct,
        }


@dataclass(frozen=True)
class DerivedRatios:
    gamma: float
    gamma_star: float
    beta_gamma: float
    # throughput per unit of forwarding power: gamma1 / gamma_star
    rate_coefficient: float


def derive_ratios(params: SystemParams) -> DerivedRatios:
    if params.gamma1 <= params.gamma1_direct:
        raise InvalidParametersError(
            f"Degenerate direct link: gamma1={params.gamma1} <= gamma1_direct={params.gamma1_direct}"
        )
    gamma = params.gamma1 / params.gamma2
    if params.gamma1_direct == 0:
        gamma_star = gamma
        rate_coefficient = params.gamma2
    else:
        gamma_star = (params.gamma1 - params.gamma1_direct) / params.gamma2
        rate_coefficient = params.gamma1 / gamma_star
    return DerivedRatios(
        gamma=gamma,
        gamma_star=gamma_star,
        beta_gamma=params.beta * gamma_star,
        rate_coefficient=rate_coefficient,
    )


def _frozen_vector(values: ArrayLike) -> FloatArray:
    array = np.array(values, dtype=np.float64).reshape(-1)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Allocation:
    """Per-phase source powers `p1`, relay powers `p2`, and the relay split.

    `p2[0] == p_forward[0] + alpha` and `p2[j] == p_forward[j]` for later
    phases: every pure-harvesting supplement is aggregated into phase one.
    """

    p1: FloatArray
    p2: FloatArray
    alpha: float
    p_forward: FloatArray

    def __post_init__(self) -> None:
        object.__setattr__(self, "p1", _frozen_vector(self.p1))
        object.__setattr__(self, "p2", _frozen_vector(self.p2))
        object.__setattr__(self, "p_forward", _frozen_vector(self.p_forward))
        object.__setattr__(self, "alpha", float(self.alpha))
        if not (self.p1.size == self.p2.size == self.p_forward.size):
            raise ValueError(
                "Allocation vectors must share one length, got "
                f"p1={self.p1.size}, p2={self.p2.size}, p_forward={self.p_forward.size}"
            )

    @property
    def n_phases(self) -> int:
        return int(self.p1.size)

    @classmethod
    def zeros(cls, n_phases: int) -> "Allocation":
        zero = np.zeros(n_phases)
        return cls(p1=zero, p2=zero, alpha=0.0, p_forward=zero)

    @classmethod
    def from_forwarding(
        cls, p_forward: ArrayLike, alpha: float, ratios: DerivedRatios
    ) -> "Allocation":
        """Matched hops: the source sends exactly what the relay forwards."""
        p = np.maximum(np.asarray(p_forward, dtype=np.float64), 0.0)
        alpha = max(float(alpha), 0.0)
        p2 = p.copy()
        p2[0] += alpha
        return cls(p1=p / ratios.gamma_star, p2=p2, alpha=alpha, p_forward=p)


def aggregate_supplements(
    params: SystemParams, p1: ArrayLike, p2: ArrayLike, *, keep_source_power: bool = False
) -> tuple[Allocation, float]:
    """Canonical form of an arbitrary allocation in original variables.

    Each phase keeps only the matched part of both hops; all surplus relay
    power moves to phase one as `alpha`. Harvesting earlier never hurts the
    source, so feasibility and throughput are preserved. Also returns the
    largest surplus found after phase one.

    With `keep_source_power` the source powers are left as given: over a
    direct link, source power beyond the matched level still reaches the
    destination, so trimming it would lower the rate.
    """
    ratios = derive_ratios(params)
    p1 = np.maximum(np.asarray(p1, dtype=np.float64), 0.0)
    p2 = np.maximum(np.asarray(p2, dtype=np.float64), 0.0)
    forward = np.minimum(p2, p1 * ratios.gamma_star)
    surplus = p2 - forward
    later = float(surplus[1:].max()) if surplus.size > 1 else 0.0
    alpha = float(surplus.sum())
    if keep_source_power:
        relay = forward.copy()
        relay[0] += alpha
        return Allocation(p1=p1, p2=relay, alpha=alpha, p_forward=forward), later
    return Allocation.from_forwarding(forward, alpha, ratios), later


def evaluate_throughput(params: SystemParams, alloc: Allocation) -> float:
    if alloc.n_phases != params.n_phases:
        raise ValueError(
            f"Allocation has {alloc.n_phases} phases, instance has {params.n_phases}"
        )
    relay_hop = alloc.p1 * params.gamma1
    destination = alloc.p1 * params.gamma1_direct + alloc.p2 * params.gamma2
    rates = np.log2(1.0 + np.minimum(relay_hop, destination))
    return float(params.bandwidth / 2.0 * rates.sum())


def check_feasibility(
    params: SystemParams, alloc: Allocation, tol: float = FEASIBILITY_TOL
) -> FloatArray:
    """Residuals `[EC_1..EC_N, budget, p1..., p2..., alpha]`; negative means violated."""
    if alloc.n_phases != params.n_phases:
        raise ValueError(
            f"Allocation has {alloc.n_phases} phases, instance has {params.n_phases}"
        )
    harvested_before = params.beta * np.concatenate(([0.0], np.cumsum(alloc.p2)[:-1]))
    causality = params.p1_initial + harvested_before - np.cumsum(alloc.p1)
    budget = params.p2_initial - alloc.p2.sum()
    residuals = np.concatenate((causality, [budget], alloc.p1, alloc.p2, [alloc.alpha]))
    if residuals.min() < -tol:
        logger.debug(
            "Allocation violates constraints: worst residual %.3e at row %d",
            residuals.min(),
            int(residuals.argmin()),
        )
    return residuals


def is_feasible(residuals: FloatArray, tol: float = FEASIBILITY_TOL) -> bool:
    return bool(residuals.size == 0 or residuals.min() >= -tol)


@dataclass(frozen=True)
class EnergyProfile:
    """Source-side energy bookkeeping of an allocation, one entry per phase."""

    available: FloatArray
    harvested: FloatArray
    spent: FloatArray


def energy_profile(params: SystemParams, alloc: Allocation) -> EnergyProfile:
    harvested = params.beta * alloc.p2
    spent = np.cumsum(alloc.p1)
    available = params.p1_initial + np.concatenate(
        ([0.0], np.cumsum(harvested)[:-1] - spent[:-1])
    )
    return EnergyProfile(
        available=_frozen_vector(available),
        harvested=_frozen_vector(harvested),
        spent=_frozen_vector(spent),
    )


@dataclass(frozen=True)
class SolveReport:
    allocation: Allocation
    throughput: float
    branch: str
    feasibility_residuals: FloatArray
    fallback: bool = False
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return is_feasible(self.feasibility_residuals)

    @classmethod
    def evaluate(
        cls,
        params: SystemParams,
        allocation: Allocation,
        branch: str,
        *,
        fallback: bool = False,
        diagnostics: dict[str, Any] | None = None,
    ) -> "SolveReport":
        """Build a report for an allocation of the standard relay system."""
        return cls(
            allocation=allocation,
            throughput=evaluate_throughput(params, allocation),
            branch=str(branch),
            feasibility_residuals=_frozen_vector(check_feasibility(params, allocation)),
            fallback=fallback,
            diagnostics=dict(diagnostics or {}),
        )

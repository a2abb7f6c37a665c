from dataclasses import dataclass, replace

import numpy as np

from ..model import (
    Allocation,
    DerivedRatios,
    FloatArray,
    SystemParams,
    derive_ratios,
)
from .candidates import THRESHOLD_RTOL, UNIT_TOL


@dataclass(frozen=True)
class ThresholdTable:
    # p_th[k], k = 0..N: source budgets at which the relay runs short by phase k + 1
    p_th: FloatArray
    # alpha_th[l], l = 0..N-1: smallest supplement keeping EC_{l+1} slack
    alpha_th: FloatArray


def geometric_sum(ratio: float, count: int) -> float:
    """1 + ratio + ... + ratio**(count - 1), summed term by term (no 0/0 at ratio 1).

    Overflows to inf for large counts when ratio > 1.
    """
    with np.errstate(over="ignore"):
        return float(np.sum(ratio ** np.arange(count, dtype=np.float64)))


def direct_link_transform(params: SystemParams) -> tuple[SystemParams, DerivedRatios]:
    """Equivalent instance without the direct link.

    The returned ratios keep the direct-link rate coefficient gamma1 / gamma_star,
    so throughput computed from them matches the direct-link objective.
    """
    ratios = derive_ratios(params)
    if params.gamma1_direct == 0:
        return params, ratios
    equivalent = replace(
        params, gamma1=params.gamma1 - params.gamma1_direct, gamma1_direct=0.0
    )
    return equivalent, replace(ratios, gamma=ratios.gamma_star)


def relaxed_solution(params: SystemParams) -> Allocation:
    """Equal split of the relay budget, source matched to it, no supplement."""
    ratios = derive_ratios(params)
    share = np.full(params.n_phases, params.p2_initial / params.n_phases)
    return Allocation.from_forwarding(share, 0.0, ratios)


def relaxed_is_feasible(params: SystemParams, ratios: DerivedRatios) -> bool:
    n = params.n_phases
    if ratios.beta_gamma >= 1 - UNIT_TOL:
        required = params.p2_initial / (n * ratios.gamma_star)
    else:
        required = params.p2_initial * (n - (n - 1) * ratios.beta_gamma) / (n * ratios.gamma_star)
    return params.p1_initial >= required * (1 - THRESHOLD_RTOL)


def compute_thresholds(params: SystemParams, ratios: DerivedRatios) -> ThresholdTable:
    b = ratios.beta_gamma
    if b < 1 - UNIT_TOL:
        raise ValueError(f"Thresholds are defined for beta*gamma >= 1, got {b}")
    n = params.n_phases
    budget = params.p2_initial
    source = params.p1_initial * ratios.gamma_star

    k = np.arange(n + 1)
    # b**k may overflow for long horizons; an infinite denominator is a zero threshold
    with np.errstate(over="ignore", invalid="ignore"):
        denominators = (n - k) * b ** k.astype(np.float64) + np.array(
            [geometric_sum(b, int(i)) for i in k]
        )
        p_th = budget / (ratios.gamma_star * denominators)
    p_th[n] = 0.0

    alpha_th = np.maximum(budget / denominators[:n] - source, 0.0)
    alpha_th[0] = budget
    return ThresholdTable(p_th=p_th, alpha_th=alpha_th)


def select_tight_limit(params: SystemParams, table: ThresholdTable) -> int:
    """Smallest k >= 1 with P10 above p_th[k]; ties go to the smaller k."""
    for k in range(1, params.n_phases + 1):
        if params.p1_initial >= table.p_th[k] * (1 - THRESHOLD_RTOL):
            return k
    return params.n_phases

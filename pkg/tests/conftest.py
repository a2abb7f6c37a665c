from collections.abc import Callable

import numpy as np
import pytest

from ehrelay.model import SystemParams


@pytest.fixture
def instance_a() -> SystemParams:
    # harvest-rich: beta * gamma = 1.2, relaxed split infeasible
    return SystemParams(
        n_phases=2, bandwidth=1.0, p1_initial=0.1, p2_initial=1.0, gamma1=2.0, gamma2=1.0, beta=0.6
    )


@pytest.fixture
def instance_b() -> SystemParams:
    # harvest-poor: beta * gamma = 0.5
    return SystemParams(
        n_phases=3, bandwidth=1.0, p1_initial=0.2, p2_initial=1.0, gamma1=1.0, gamma2=1.0, beta=0.5
    )


@pytest.fixture
def relaxed_instance() -> SystemParams:
    return SystemParams(
        n_phases=2, bandwidth=1.0, p1_initial=0.5, p2_initial=1.0, gamma1=1.0, gamma2=1.0, beta=1.0
    )


@pytest.fixture
def tail_instance() -> SystemParams:
    # optimum with the last two energy constraints tight and p1 above p2
    return SystemParams(
        n_phases=3, bandwidth=1.0, p1_initial=1.0, p2_initial=2.0, gamma1=1.0, gamma2=1.0, beta=0.5
    )


@pytest.fixture
def direct_link_surplus_instance() -> SystemParams:
    # source holds far more energy than the relay can match
    return SystemParams(
        n_phases=2,
        bandwidth=1.0,
        p1_initial=1.6697,
        p2_initial=0.8232,
        gamma1=3.7705,
        gamma2=1.0,
        beta=1.5737,
        gamma1_direct=1.3293,
    )


@pytest.fixture
def harvest_poor_five_phases() -> SystemParams:
    # beta * gamma = 0.47 with a strictly decreasing relay tail
    return SystemParams(
        n_phases=5, bandwidth=1.0, p1_initial=1.0746, p2_initial=1.7624, gamma1=0.4015, gamma2=1.0, beta=1.1766
    )


def draw_params(rng: np.random.Generator, n_phases: int, *, direct_link: bool = False) -> SystemParams:
    gamma1 = float(rng.uniform(0.5, 3.0))
    return SystemParams(
        n_phases=n_phases,
        bandwidth=float(rng.uniform(0.5, 2.0)),
        p1_initial=float(rng.uniform(0.0, 1.0)),
        p2_initial=float(rng.uniform(0.1, 2.0)),
        gamma1=gamma1,
        gamma2=float(rng.uniform(0.5, 2.0)),
        beta=float(rng.uniform(0.0, 1.5)),
        gamma1_direct=float(rng.uniform(0.0, 0.9 * gamma1)) if direct_link else 0.0,
    )


@pytest.fixture
def random_instances() -> Callable[..., list[SystemParams]]:
    """`count` seeded instances with N cycling through 1..max_phases; every third has a direct link."""

    def make(count: int, max_phases: int, seed: int = 20240611) -> list[SystemParams]:
        rng = np.random.default_rng(seed)
        return [
            draw_params(rng, 1 + i % max_phases, direct_link=(i % 3 == 2)) for i in range(count)
        ]

    return make


def draw_full_range(rng: np.random.Generator, n_phases: int) -> SystemParams:
    """Unit bandwidth and gamma2; half of the draws carry a direct link."""
    gamma1 = float(rng.uniform(0.2, 4.0))
    direct = float(rng.uniform(0.0, 0.9 * gamma1)) if rng.random() < 0.5 else 0.0
    return SystemParams(
        n_phases=n_phases,
        bandwidth=1.0,
        p1_initial=float(rng.uniform(0.0, 2.0)),
        p2_initial=float(rng.uniform(0.0, 2.0)),
        gamma1=gamma1,
        gamma2=1.0,
        beta=float(rng.uniform(0.0, 2.0)),
        gamma1_direct=direct,
    )


@pytest.fixture
def full_range_instances() -> Callable[..., list[SystemParams]]:
    """`count` seeded instances over the whole supported parameter box, N cycling 1..max_phases."""

    def make(count: int, max_phases: int, seed: int = 7) -> list[SystemParams]:
        rng = np.random.default_rng(seed)
        return [draw_full_range(rng, 1 + i % max_phases) for i in range(count)]

    return make

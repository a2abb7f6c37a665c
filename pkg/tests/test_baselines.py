import math
from collections.abc import Callable
from dataclasses import replace

import numpy as np
import pytest

from ehrelay.baselines import IncompatiblePolicyError, ResidualState, run_eq, run_gre, run_sno
from ehrelay.closedform import solve_opt
from ehrelay.model import Branch, SolveReport, SystemParams


def test_residual_state_advance() -> None:
    state = ResidualState(p1_residual=0.1, p2_residual=1.0, phase=1)
    nxt = state.advance(0.1, 0.2, beta=0.6)
    assert nxt.p1_residual == pytest.approx(0.12)
    assert nxt.p2_residual == pytest.approx(0.8)
    assert nxt.phase == 2


def test_residual_state_rejects_negative() -> None:
    with pytest.raises(ValueError):
        ResidualState(p1_residual=-0.1, p2_residual=1.0, phase=1)


def test_gre_instance_a(instance_a: SystemParams) -> None:
    report = run_gre(instance_a)
    # phase 1 source-limited: P1 = 0.1; phase 2 spends 0.6 * 0.2 harvested
    np.testing.assert_allclose(report.allocation.p1, [0.1, 0.12])
    np.testing.assert_allclose(report.allocation.p2, [0.2, 0.24])
    assert report.branch == Branch.BASELINE_GRE
    assert report.throughput == pytest.approx(0.5 * math.log2(1.2 * 1.24))
    assert report.feasible
    assert report.throughput <= solve_opt(instance_a).throughput


def test_eq_equals_opt_when_equal_split_is_reachable() -> None:
    params = SystemParams(
        n_phases=2, bandwidth=1.0, p1_initial=2.0, p2_initial=1.0, gamma1=1.0, gamma2=1.0, beta=1.0
    )
    report = run_eq(params)
    np.testing.assert_allclose(report.allocation.p2, [0.5, 0.5])
    assert report.throughput == pytest.approx(solve_opt(params).throughput, rel=1e-12)


def test_eq_without_source_energy_sends_nothing() -> None:
    params = SystemParams(
        n_phases=2, bandwidth=1.0, p1_initial=0.0, p2_initial=1.0, gamma1=1.0, gamma2=1.0, beta=0.8
    )
    report = run_eq(params)
    np.testing.assert_array_equal(report.allocation.p2, [0.0, 0.0])
    assert report.throughput == 0.0


@pytest.mark.parametrize("policy", [run_gre, run_eq])
def test_single_phase_matches_opt(instance_a: SystemParams, policy: Callable[[SystemParams], SolveReport]) -> None:
    params = replace(instance_a, n_phases=1)
    assert policy(params).throughput == pytest.approx(solve_opt(params).throughput, rel=1e-12)


@pytest.mark.parametrize("policy", [run_gre, run_eq])
def test_no_relay_budget(instance_a: SystemParams, policy: Callable[[SystemParams], SolveReport]) -> None:
    report = policy(replace(instance_a, p2_initial=0.0))
    assert report.throughput == 0.0


def test_opt_dominates_on_random_instances(random_instances: Callable[..., list[SystemParams]]) -> None:
    for params in random_instances(40, 8, seed=11):
        opt = solve_opt(params).throughput
        for policy in (run_gre, run_eq):
            report = policy(params)
            assert report.feasible, (policy.__name__, params)
            assert report.allocation.p2.sum() <= params.p2_initial + 1e-12
            assert report.throughput <= opt + 1e-9, (policy.__name__, params)


def test_eq_gap_shrinks_with_beta() -> None:
    base = SystemParams(
        n_phases=4, bandwidth=1.0, p1_initial=0.2, p2_initial=1.0, gamma1=2.0, gamma2=1.0, beta=0.1
    )

    def gap(beta: float) -> float:
        params = replace(base, beta=beta)
        return solve_opt(params).throughput - run_eq(params).throughput

    assert gap(1.0) < gap(0.1)


def test_sno_worked_example() -> None:
    params = SystemParams(
        n_phases=1, bandwidth=1.0, p1_initial=1.0, p2_initial=1.0, gamma1=1.0, gamma2=1.0, beta=1.0
    )
    report = run_sno(params)
    assert report.allocation.p1[0] == pytest.approx(2.0)
    assert report.throughput == pytest.approx(0.5)
    assert report.branch == Branch.BASELINE_SNO
    assert report.feasible


@pytest.mark.parametrize("beta", [0.3, 1.0, 2.5])
@pytest.mark.parametrize("gamma1", [0.5, 2.0])
def test_sno_balances_hops(beta: float, gamma1: float) -> None:
    params = SystemParams(
        n_phases=3, bandwidth=1.0, p1_initial=0.4, p2_initial=1.0, gamma1=gamma1, gamma2=1.3, beta=beta
    )
    report = run_sno(params)
    gamma = gamma1 / 1.3
    detect = report.allocation.p1 * gamma1 * beta / (gamma + beta)
    np.testing.assert_allclose(detect, report.allocation.p2 * params.gamma2)


def test_sno_without_harvest_is_silent(instance_a: SystemParams) -> None:
    report = run_sno(replace(instance_a, beta=0.0))
    assert report.throughput == 0.0
    assert report.feasible


def test_sno_rejects_direct_link(instance_a: SystemParams) -> None:
    with pytest.raises(IncompatiblePolicyError, match="direct link"):
        run_sno(replace(instance_a, gamma1_direct=0.5))


def test_sno_beats_opt_with_one_phase_only() -> None:
    params = SystemParams(
        n_phases=1, bandwidth=1.0, p1_initial=0.2, p2_initial=1.0, gamma1=2.0, gamma2=1.0, beta=1.0
    )
    assert run_sno(params).throughput >= solve_opt(params).throughput
    many = replace(params, n_phases=16)
    assert solve_opt(many).throughput > run_sno(many).throughput

import math
import warnings
from collections.abc import Callable
from dataclasses import replace

import numpy as np
import pytest

from ehrelay.closedform import (
    compute_thresholds,
    direct_link_transform,
    relaxed_is_feasible,
    relaxed_solution,
    root_solve_foc,
    solve_branch_ge1,
    solve_branch_lt1,
    solve_opt,
)
from ehrelay.model import Branch, SystemParams, derive_ratios, ge1_branch
from ehrelay.oracle import solve_reduced

INSTANCE_A_THROUGHPUT = 0.5 * math.log2(1.2 * 17.0 / 11.0)


def _family_objective(params: SystemParams, tight: int, alpha: float) -> float:
    """Throughput in nats of the tight-prefix family at supplement alpha."""
    ratios = derive_ratios(params)
    a = params.p1_initial * ratios.gamma_star
    b, g, T, n = ratios.beta_gamma, ratios.rate_coefficient, params.p2_initial, params.n_phases
    growth = b ** np.arange(1, tight)
    total = float(np.sum(b ** np.arange(tight)))
    equal = (T - (a + alpha) * total) / (n - tight)
    return float(
        math.log1p(g * a)
        + np.sum(np.log1p(g * (a + alpha) * growth))
        + (n - tight) * math.log1p(g * equal)
    )


def test_relaxed_fast_path(relaxed_instance: SystemParams) -> None:
    assert relaxed_is_feasible(relaxed_instance, derive_ratios(relaxed_instance))
    report = solve_opt(relaxed_instance)
    assert report.branch == Branch.RELAXED
    np.testing.assert_allclose(report.allocation.p2, [0.5, 0.5])
    np.testing.assert_allclose(report.allocation.p1, [0.5, 0.5])
    assert report.throughput == pytest.approx(math.log2(1.5), rel=1e-12)
    assert report.feasible


def test_relaxed_solution_is_equal_split(instance_b: SystemParams) -> None:
    alloc = relaxed_solution(instance_b)
    np.testing.assert_allclose(alloc.p2, np.full(3, 1.0 / 3.0))
    assert alloc.alpha == 0.0


def test_relaxed_infeasible_for_poor_source(instance_b: SystemParams) -> None:
    # 0.2 < (3 - 2 * 0.5) / 3
    assert not relaxed_is_feasible(instance_b, derive_ratios(instance_b))


def test_instance_a(instance_a: SystemParams) -> None:
    report = solve_opt(instance_a)
    assert report.branch in (ge1_branch(1), ge1_branch(2))
    assert report.throughput == pytest.approx(INSTANCE_A_THROUGHPUT, rel=1e-10)
    np.testing.assert_allclose(report.allocation.p_forward, [0.2, 6.0 / 11.0], rtol=1e-10)
    assert report.allocation.alpha == pytest.approx(1.0 / 2.2 - 0.2, rel=1e-10)
    assert report.diagnostics["k"] == 2
    assert not report.fallback


def test_instance_a_thresholds(instance_a: SystemParams) -> None:
    table = compute_thresholds(instance_a, derive_ratios(instance_a))
    np.testing.assert_allclose(table.p_th, [0.25, 1.0 / 4.4, 0.0])
    np.testing.assert_allclose(table.alpha_th, [1.0, 1.0 / 2.2 - 0.2])


def test_thresholds_decrease(instance_a: SystemParams) -> None:
    params = replace(instance_a, n_phases=6, beta=0.9)
    table = compute_thresholds(params, derive_ratios(params))
    assert np.all(np.diff(table.p_th) <= 0)


def test_thresholds_reject_harvest_poor(instance_b: SystemParams) -> None:
    with pytest.raises(ValueError, match="beta\\*gamma >= 1"):
        compute_thresholds(instance_b, derive_ratios(instance_b))


def test_source_above_first_threshold_needs_no_supplement(instance_a: SystemParams) -> None:
    # P10 between p_th[1] and p_th[0]: only phase one is source-limited
    params = replace(instance_a, p1_initial=0.24)
    report = solve_branch_ge1(params, derive_ratios(params), compute_thresholds(params, derive_ratios(params)))
    assert report.diagnostics["k"] == 1
    assert report.branch == ge1_branch(1)
    assert report.feasible


def test_root_solve_foc_unit_harvest_closed_form() -> None:
    # beta * gamma = 1: optimum level a + alpha = 1/3 for l = 3, N = 4, P20 = 2
    params = SystemParams(
        n_phases=4, bandwidth=1.0, p1_initial=0.05, p2_initial=2.0, gamma1=1.0, gamma2=1.0, beta=1.0
    )
    alpha = root_solve_foc(params, derive_ratios(params), 3, (0.0, 0.6))
    assert alpha == pytest.approx(1.0 / 3.0 - 0.05, rel=1e-12)


def test_root_solve_foc_maximizes_family_objective() -> None:
    params = SystemParams(
        n_phases=4, bandwidth=1.0, p1_initial=0.05, p2_initial=1.0, gamma1=2.0, gamma2=1.0, beta=0.6
    )
    ratios = derive_ratios(params)
    a = params.p1_initial * ratios.gamma_star
    upper = params.p2_initial / (1.0 + 1.2) - a
    alpha = root_solve_foc(params, ratios, 2, (0.0, upper))
    assert 0.0 <= alpha <= upper
    best = _family_objective(params, 2, alpha)
    for sample in np.linspace(0.0, upper, 201):
        assert _family_objective(params, 2, float(sample)) <= best + 1e-12


def test_root_solve_foc_rejects_harvest_poor(instance_b: SystemParams) -> None:
    with pytest.raises(ValueError):
        root_solve_foc(instance_b, derive_ratios(instance_b), 2, (0.0, 1.0))


def test_instance_b_matches_oracle(instance_b: SystemParams) -> None:
    report = solve_branch_lt1(instance_b, derive_ratios(instance_b))
    oracle = solve_reduced(instance_b)
    assert report.branch.startswith("BG_LT1_")
    assert report.feasible
    assert report.throughput >= oracle.throughput - 1e-6
    assert report.throughput == pytest.approx(oracle.throughput, rel=1e-6)


def test_tail_family_covers_missing_case(tail_instance: SystemParams) -> None:
    report = solve_opt(tail_instance)
    oracle = solve_reduced(tail_instance)
    assert not report.fallback
    assert report.throughput == pytest.approx(oracle.throughput, rel=1e-6)
    p2 = report.allocation.p2
    assert np.all(np.diff(p2) <= 1e-9)
    assert report.allocation.p_forward[0] > report.allocation.p_forward[1]


def test_branch_lt1_rejects_harvest_rich(instance_a: SystemParams) -> None:
    with pytest.raises(ValueError):
        solve_branch_lt1(instance_a, derive_ratios(instance_a))


def test_no_harvest_splits_source_budget_equally() -> None:
    params = SystemParams(
        n_phases=3, bandwidth=1.0, p1_initial=0.2, p2_initial=1.0, gamma1=1.0, gamma2=1.0, beta=0.0
    )
    report = solve_opt(params)
    np.testing.assert_allclose(report.allocation.p_forward, np.full(3, 0.2 / 3.0), rtol=1e-9)
    assert report.throughput == pytest.approx(1.5 * math.log2(1.0 + 0.2 / 3.0), rel=1e-9)


@pytest.mark.parametrize("n_phases", [1, 2, 5])
def test_no_relay_budget_gives_zero(instance_a: SystemParams, n_phases: int) -> None:
    report = solve_opt(replace(instance_a, n_phases=n_phases, p2_initial=0.0))
    assert report.throughput == 0.0
    np.testing.assert_allclose(report.allocation.p2, 0.0)
    assert report.feasible


def test_single_phase(instance_a: SystemParams) -> None:
    report = solve_opt(replace(instance_a, n_phases=1))
    assert report.branch == Branch.N_EQUALS_1
    assert report.allocation.alpha == 0.0
    assert report.throughput == pytest.approx(0.5 * math.log2(1.2))


def test_direct_link_transform_identity(instance_a: SystemParams) -> None:
    params, ratios = direct_link_transform(instance_a)
    assert params is instance_a
    assert ratios == derive_ratios(instance_a)


def test_direct_link_transform_reduces_gamma1(instance_a: SystemParams) -> None:
    params, ratios = direct_link_transform(replace(instance_a, gamma1_direct=0.5))
    assert params.gamma1 == pytest.approx(1.5)
    assert params.gamma1_direct == 0.0
    assert ratios.gamma == ratios.gamma_star == pytest.approx(1.5)


def test_direct_link_never_hurts(instance_a: SystemParams, instance_b: SystemParams) -> None:
    for params in (instance_a, instance_b):
        with_link = replace(params, gamma1_direct=0.5 * params.gamma1)
        assert solve_opt(with_link).throughput >= solve_opt(params).throughput - 1e-12


@pytest.mark.parametrize("fixture", ["instance_a", "instance_b", "relaxed_instance"])
def test_direct_link_grid_is_nondecreasing(fixture: str, request: pytest.FixtureRequest) -> None:
    params: SystemParams = request.getfixturevalue(fixture)
    grid = np.linspace(0.0, 0.9 * params.gamma1, 10)
    throughput = np.array([solve_opt(replace(params, gamma1_direct=float(d))).throughput for d in grid])
    assert np.all(np.diff(throughput) >= -1e-9)


@pytest.mark.parametrize(
    "overrides", [{"n_phases": 4}, {"n_phases": 6, "beta": 0.9}, {"n_phases": 5, "beta": 1.5, "p2_initial": 2.0}]
)
def test_continuous_across_thresholds(instance_a: SystemParams, overrides: dict[str, float]) -> None:
    params = replace(instance_a, **overrides)
    table = compute_thresholds(params, derive_ratios(params))
    for threshold in table.p_th[:-1]:
        if threshold <= 1e-6:
            continue
        below = solve_opt(replace(params, p1_initial=float(threshold) - 1e-8))
        above = solve_opt(replace(params, p1_initial=float(threshold) + 1e-8))
        assert abs(above.throughput - below.throughput) <= 1e-6, threshold


def test_harvest_poor_relay_tail_decreases(harvest_poor_five_phases: SystemParams) -> None:
    report = solve_opt(harvest_poor_five_phases)
    oracle = solve_reduced(harvest_poor_five_phases)
    assert not report.fallback
    assert report.throughput == pytest.approx(oracle.throughput, rel=1e-6)
    p2 = report.allocation.p2
    np.testing.assert_allclose(p2, [0.859, 0.320, 0.320, 0.179, 0.084], atol=2e-3)
    assert np.all(np.diff(p2) <= 1e-9)
    # the middle phases do not share one level
    assert p2[2] - p2[3] > 0.1


def test_thresholds_long_horizon_without_overflow_warnings() -> None:
    params = SystemParams(
        n_phases=400, bandwidth=1.0, p1_initial=0.5, p2_initial=1.0, gamma1=10.0, gamma2=1.0, beta=1.0
    )
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        table = compute_thresholds(params, derive_ratios(params))
    assert np.all(np.isfinite(table.p_th))
    assert np.all(np.diff(table.p_th) <= 0)
    assert table.p_th[-2] == 0.0
    assert np.all(np.isfinite(table.alpha_th))


def test_matches_oracle_on_random_instances(full_range_instances: Callable[..., list[SystemParams]]) -> None:
    for params in full_range_instances(500, 6):
        report = solve_opt(params)
        oracle = solve_reduced(params)
        assert report.feasible, params
        assert report.throughput >= oracle.throughput - 1e-4, params
        assert abs(report.throughput - oracle.throughput) <= 1e-4 * (1 + oracle.throughput), params


def test_structure_on_random_instances(random_instances: Callable[..., list[SystemParams]]) -> None:
    for params in random_instances(30, 8, seed=7):
        report = solve_opt(params)
        alloc = report.allocation
        ratios = derive_ratios(params)
        assert report.feasible, params
        # matched hops
        np.testing.assert_allclose(
            alloc.p1 * (params.gamma1 - params.gamma1_direct), alloc.p_forward * params.gamma2, rtol=1e-12, atol=1e-15
        )
        np.testing.assert_allclose(alloc.p2[0] - alloc.alpha, alloc.p_forward[0], rtol=1e-12, atol=1e-15)
        # the relay budget is spent in full
        if params.n_phases >= 2:
            assert alloc.p2.sum() == pytest.approx(params.p2_initial, abs=1e-12 * max(1.0, params.p2_initial))
        # harvest-poor outputs never increase relay power over time
        if ratios.beta_gamma < 1 and report.branch != Branch.RELAXED and not report.fallback:
            assert np.all(np.diff(alloc.p2) <= 1e-6), params

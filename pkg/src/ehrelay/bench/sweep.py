import math
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from ..baselines import run_eq, run_gre, run_sno
from ..closedform import solve_opt
from ..logging import get_logger
from ..model import PolicyKind, SolveReport, SystemParams
from ..oracle import solve_reduced
from ..settings import OracleConfig, SweepAxis

logger = get_logger("ehrelay.bench.sweep")

ERROR_BRANCH = "ERROR"

_AXIS_FIELDS: dict[SweepAxis, str] = {
    SweepAxis.N: "n_phases",
    SweepAxis.BETA: "beta",
    SweepAxis.P1_INITIAL: "p1_initial",
    SweepAxis.P2_INITIAL: "p2_initial",
    SweepAxis.GAMMA1: "gamma1",
    SweepAxis.GAMMA1_DIRECT: "gamma1_direct",
}

_SOLVERS: dict[PolicyKind, Callable[[SystemParams], SolveReport]] = {
    PolicyKind.OPT: solve_opt,
    PolicyKind.GRE: run_gre,
    PolicyKind.EQ: run_eq,
    PolicyKind.SNO: run_sno,
}


@dataclass(frozen=True)
class SweepSpec:
    """One parameter axis, its values, the fixed instance and the policies to compare.

    Policies are kept in PolicyKind declaration order regardless of input order.
    """

    axis: SweepAxis
    values: tuple[float, ...]
    fixed: SystemParams
    policies: tuple[PolicyKind, ...]

    def __post_init__(self) -> None:
        axis = SweepAxis(self.axis)
        values = tuple(float(v) for v in self.values)
        requested = {PolicyKind(p) for p in self.policies}
        if not requested:
            raise ValueError("Sweep needs at least one policy")
        if not values:
            raise ValueError("Sweep needs at least one axis value")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError(f"Sweep values must be strictly increasing, got {list(values)}")
        if axis == SweepAxis.N and not all(v.is_integer() for v in values):
            raise ValueError(f"Axis N takes integer values, got {list(values)}")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "policies", tuple(p for p in PolicyKind if p in requested))
        # every substituted instance must be valid up front
        for value in values:
            self.instance(value)

    def instance(self, value: float) -> SystemParams:
        field_name = _AXIS_FIELDS[self.axis]
        substituted: float | int = int(value) if self.axis == SweepAxis.N else float(value)
        return replace(self.fixed, **{field_name: substituted})


@dataclass(frozen=True)
class SweepRow:
    axis: str
    axis_value: float
    policy: str
    throughput: float
    branch: str
    alpha: float
    feasible: bool


@dataclass(frozen=True)
class SweepResult:
    """One solved (axis value, policy) cell; `report` is None for error rows."""

    axis_value: float
    policy: PolicyKind
    params: SystemParams
    report: SolveReport | None
    error: str | None = None

    def row(self, axis: SweepAxis) -> SweepRow:
        if self.report is None:
            return SweepRow(str(axis), self.axis_value, str(self.policy), math.nan, ERROR_BRANCH, math.nan, False)
        return SweepRow(
            axis=str(axis),
            axis_value=self.axis_value,
            policy=str(self.policy),
            throughput=self.report.throughput,
            branch=self.report.branch,
            alpha=self.report.allocation.alpha,
            feasible=self.report.feasible,
        )


def run_single(
    params: SystemParams,
    policy: PolicyKind | str,
    oracle_config: OracleConfig | None = None,
) -> SolveReport:
    try:
        kind = PolicyKind(policy)
    except ValueError:
        raise ValueError(
            f"Unsupported policy: {policy!r}; choose one of {', '.join(PolicyKind)}"
        ) from None
    if kind == PolicyKind.ORACLE:
        return solve_reduced(params, oracle_config)
    return _SOLVERS[kind](params)


def _solve_cell(
    spec: SweepSpec, value: float, policy: PolicyKind, oracle_config: OracleConfig | None
) -> SweepResult:
    params = spec.instance(value)
    try:
        report = run_single(params, policy, oracle_config)
    except Exception as exc:
        logger.warning("%s=%g, %s failed: %s", spec.axis, value, policy, exc)
        return SweepResult(value, policy, params, None, error=str(exc))
    return SweepResult(value, policy, params, report)


def run_sweep_reports(
    spec: SweepSpec,
    *,
    workers: int = 1,
    oracle_config: OracleConfig | None = None,
) -> list[SweepResult]:
    """Solve every cell; results ordered by axis value, then policy."""
    cells = [(value, policy) for value in spec.values for policy in spec.policies]
    logger.info(
        "Sweeping %s over %d values x %d policies with %d worker(s)",
        spec.axis,
        len(spec.values),
        len(spec.policies),
        workers,
    )

    def solve(cell: tuple[float, PolicyKind]) -> SweepResult:
        return _solve_cell(spec, cell[0], cell[1], oracle_config)

    if workers <= 1:
        return [solve(cell) for cell in cells]
    # map() yields in submission order whatever the completion order
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(solve, cells))


def run_sweep(
    spec: SweepSpec,
    *,
    workers: int = 1,
    oracle_config: OracleConfig | None = None,
) -> list[SweepRow]:
    return rows_of(spec.axis, run_sweep_reports(spec, workers=workers, oracle_config=oracle_config))


def rows_of(axis: SweepAxis, results: Iterable[SweepResult]) -> list[SweepRow]:
    return [result.row(axis) for result in results]

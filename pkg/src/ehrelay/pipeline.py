import sys
from typing import TextIO

from rich.console import Console

from .baselines import IncompatiblePolicyError
from .bench import (
    AllocationRecord,
    SweepResult,
    SweepSpec,
    emit_allocations_csv,
    emit_csv,
    format_csv,
    run_single,
    run_sweep_reports,
)
from .bench.sweep import rows_of
from .logging import get_logger
from .model import InvalidParametersError, PolicyKind, SolveReport, SystemParams
from .observability import MLflowTracker
from .oracle import oracle_gap
from .report import (
    PolicyOutcome,
    build_phase_table,
    build_report_table,
    build_sweep_table,
    table_to_string,
)
from .settings import Settings

EXIT_OK = 0
EXIT_INVALID_CONFIG = 2
EXIT_FALLBACK = 3

# |C_oracle - C| above this (relative to 1 + C_oracle) is worth a warning
ORACLE_GAP_WARN = 1e-4


class BenchPipeline:
    """Runs one CLI invocation: a single solve per policy, or a sweep."""

    def __init__(self, settings: Settings, *, stdout: TextIO | None = None) -> None:
        self.settings = settings
        self.logger = get_logger("ehrelay.pipeline")
        self.stdout = stdout or sys.stdout
        self.mlflow_tracker = MLflowTracker(settings.mlflow)

    def run(self) -> int:
        try:
            params = self.settings.system_params()
            spec = self._sweep_spec(params)
        except (InvalidParametersError, ValueError) as e:
            self.logger.error("Invalid configuration: %s", e)
            return EXIT_INVALID_CONFIG

        run_name = "single" if spec is None else f"sweep-{spec.axis}"
        with self.mlflow_tracker.run_context(run_name):
            self.mlflow_tracker.log_params(self._tracked_params(params))
            if spec is None:
                return self._run_single(params)
            return self._run_sweep(spec)

    def _sweep_spec(self, params: SystemParams) -> SweepSpec | None:
        if self.settings.axis is None:
            if self.settings.values:
                self.logger.warning("--values given without --axis; running a single solve")
            return None
        if not self.settings.values:
            raise ValueError(f"Sweep over {self.settings.axis} needs --values")
        return SweepSpec(
            axis=self.settings.axis,
            values=tuple(self.settings.values),
            fixed=params,
            policies=tuple(self.settings.policy),
        )

    def _tracked_params(self, params: SystemParams) -> dict[str, object]:
        tracked: dict[str, object] = dict(params.as_dict())
        tracked["policies"] = ",".join(self.settings.policy)
        if self.settings.axis is not None:
            tracked["axis"] = str(self.settings.axis)
            tracked["values"] = ",".join(f"{v:g}" for v in self.settings.values or [])
        return tracked

    def _gap(self, params: SystemParams, policy: PolicyKind, report: SolveReport) -> float | None:
        if not self.settings.oracle_check:
            return None
        gap = oracle_gap(params, report, self.settings.oracle)
        if policy == PolicyKind.OPT and abs(gap) > ORACLE_GAP_WARN * (1 + abs(report.throughput + gap)):
            self.logger.warning("OPT differs from the oracle by %.3e on %s", gap, params)
        return gap

    def _run_single(self, params: SystemParams) -> int:
        console = Console(file=self.stdout)
        outcomes: list[PolicyOutcome] = []
        for policy in dict.fromkeys(self.settings.policy):
            try:
                report = run_single(params, policy, self.settings.oracle)
            except IncompatiblePolicyError as e:
                self.logger.error("%s", e)
                return EXIT_INVALID_CONFIG
            outcomes.append(PolicyOutcome(policy, report, self._gap(params, policy, report)))
            self.logger.info("%s: throughput=%.12g branch=%s", policy, report.throughput, report.branch)

        report_table = build_report_table(params, outcomes)
        console.print(report_table)
        self.mlflow_tracker.log_table(table_to_string(report_table), "report.txt")
        for outcome in outcomes:
            console.print(build_phase_table(params, outcome))

        if self.settings.allocations_output:
            emit_allocations_csv(
                [AllocationRecord(str(o.policy), params, o.report) for o in outcomes],
                self.settings.allocations_output,
            )
        return EXIT_FALLBACK if any(o.report.fallback for o in outcomes) else EXIT_OK

    def _run_sweep(self, spec: SweepSpec) -> int:
        results = run_sweep_reports(spec, workers=self.settings.workers, oracle_config=self.settings.oracle)
        rows = rows_of(spec.axis, results)

        self.mlflow_tracker.log_sweep(rows)
        if self.settings.oracle_check:
            self._check_sweep_against_oracle(results)

        if self.settings.output:
            emit_csv(rows, self.settings.output)
            self.logger.info("Wrote sweep CSV to %s", self.settings.output.resolve().as_uri())
        else:
            self.stdout.write(format_csv(rows))
            self.stdout.flush()

        # stdout may carry the CSV, so the summary goes to the log
        summary = table_to_string(build_sweep_table(rows))
        self.logger.info("Sweep summary:\n%s", summary)
        self.mlflow_tracker.log_table(summary, "sweep_summary.txt")

        if self.settings.allocations_output:
            emit_allocations_csv(
                [
                    AllocationRecord(str(r.policy), r.params, r.report, r.axis_value)
                    for r in results
                    if r.report is not None
                ],
                self.settings.allocations_output,
            )

        errors = sum(1 for r in results if r.report is None)
        if errors:
            self.logger.warning("%d of %d sweep rows failed", errors, len(results))
        fallbacks = sum(1 for r in results if r.report is not None and r.report.fallback)
        if fallbacks:
            self.logger.warning("%d closed-form solves fell back to the oracle", fallbacks)
            return EXIT_FALLBACK
        return EXIT_OK

    def _check_sweep_against_oracle(self, results: list[SweepResult]) -> None:
        worst = 0.0
        for result in results:
            if result.report is None or result.policy == PolicyKind.ORACLE:
                continue
            gap = self._gap(result.params, result.policy, result.report)
            if gap is not None and result.policy == PolicyKind.OPT:
                worst = max(worst, abs(gap))
        self.logger.info("Largest |oracle gap| of OPT over the sweep: %.3e", worst)

"""Console tables for single solves and sweep summaries."""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from io import StringIO

from rich.console import Console
from rich.table import Table

from .bench import SweepRow
from .model import PolicyKind, SolveReport, SystemParams, energy_profile


@dataclass(frozen=True)
class PolicyOutcome:
    policy: PolicyKind
    report: SolveReport
    oracle_gap: float | None = None


def _fmt(value: float, digits: int = 6) -> str:
    if math.isnan(value):
        return "-"
    return f"{value:.{digits}f}"


def build_report_table(params: SystemParams, outcomes: Sequence[PolicyOutcome]) -> Table:
    instance = ", ".join(f"{k}={v:g}" for k, v in params.as_dict().items())
    table = Table(
        title=f"[bold cyan]Throughput by policy[/bold cyan]\n[dim]{instance}[/dim]",
        title_justify="center",
        show_header=True,
        header_style="bold magenta",
        border_style="blue",
        show_lines=True,
    )
    table.add_column("Policy", style="cyan", justify="left")
    table.add_column("Branch", style="white", justify="left")
    table.add_column("Throughput", style="bright_green", justify="right")
    table.add_column("Alpha", style="yellow", justify="right")
    table.add_column("Feasible", justify="center")
    table.add_column("Fallback", justify="center")
    show_gap = any(o.oracle_gap is not None for o in outcomes)
    if show_gap:
        table.add_column("Oracle gap", style="magenta", justify="right")

    for outcome in outcomes:
        report = outcome.report
        cells = [
            str(outcome.policy),
            report.branch,
            _fmt(report.throughput),
            _fmt(report.allocation.alpha),
            "yes" if report.feasible else "[red]NO[/red]",
            "[red]yes[/red]" if report.fallback else "no",
        ]
        if show_gap:
            cells.append("-" if outcome.oracle_gap is None else f"{outcome.oracle_gap:.2e}")
        table.add_row(*cells)
    return table


def build_phase_table(params: SystemParams, outcome: PolicyOutcome) -> Table:
    alloc = outcome.report.allocation
    profile = energy_profile(params, alloc)
    table = Table(
        title=f"[bold cyan]{outcome.policy} per-phase powers[/bold cyan]",
        header_style="bold magenta",
        border_style="blue",
    )
    for name in ("Phase", "P1", "P2", "Forwarded", "Harvested", "Source available"):
        table.add_column(name, justify="right")
    for j in range(alloc.n_phases):
        table.add_row(
            str(j + 1),
            _fmt(alloc.p1[j]),
            _fmt(alloc.p2[j]),
            _fmt(alloc.p_forward[j]),
            _fmt(profile.harvested[j]),
            _fmt(profile.available[j]),
        )
    return table


def build_sweep_table(rows: Sequence[SweepRow]) -> Table:
    """Throughput pivot: one line per axis value, one column per policy."""
    policies = list(dict.fromkeys(row.policy for row in rows))
    axis = rows[0].axis if rows else "axis"
    table = Table(
        title=f"[bold cyan]Sweep over {axis}[/bold cyan]",
        header_style="bold magenta",
        border_style="blue",
    )
    table.add_column(axis, style="cyan", justify="right")
    for policy in policies:
        table.add_column(policy, justify="right")

    by_value: dict[float, dict[str, SweepRow]] = {}
    for row in rows:
        by_value.setdefault(row.axis_value, {})[row.policy] = row
    for value, cells in by_value.items():
        rendered = []
        for policy in policies:
            row = cells.get(policy)
            if row is None:
                rendered.append("")
            elif not row.feasible:
                rendered.append(f"[red]{row.branch}[/red]")
            else:
                rendered.append(_fmt(row.throughput))
        table.add_row(f"{value:g}", *rendered)
    return table


def table_to_string(table: Table) -> str:
    buffer = StringIO()
    console = Console(record=True, file=buffer, width=160)
    console.print(table)
    return console.export_text()

import csv
import io
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

from ..logging import get_logger
from ..model import SolveReport, SystemParams, energy_profile
from .sweep import SweepRow

logger = get_logger("ehrelay.bench.csv_io")

SWEEP_COLUMNS = ("axis", "axis_value", "policy", "throughput", "branch", "alpha", "feasible")
ALLOCATION_COLUMNS = ("axis_value", "policy", "phase", "p1", "p2", "p_forward", "harvested")


def _fmt(value: float) -> str:
    return format(value, ".17g")


def _parse_bool(text: str) -> bool:
    if text == "true":
        return True
    if text == "false":
        return False
    raise ValueError(f"expected 'true' or 'false', got {text!r}")


def format_csv(rows: Iterable[SweepRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([
            row.axis,
            _fmt(row.axis_value),
            row.policy,
            _fmt(row.throughput),
            row.branch,
            _fmt(row.alpha),
            "true" if row.feasible else "false",
        ])
    return buffer.getvalue()


def _write_text(text: str, path: Path, what: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as exc:
        raise OSError(f"Failed to write {what} to {path}: {exc}") from exc


def emit_csv(rows: Iterable[SweepRow], destination: Path) -> None:
    rows = list(rows)
    logger.info("Writing %d sweep rows to %s", len(rows), destination)
    _write_text(format_csv(rows), destination, "sweep CSV")


def parse_csv(text: str) -> list[SweepRow]:
    reader = csv.reader(text.splitlines())
    header = next(reader, None)
    if header is None or tuple(header) != SWEEP_COLUMNS:
        raise ValueError(f"Unexpected sweep CSV header {header!r}; expected {','.join(SWEEP_COLUMNS)}")
    rows: list[SweepRow] = []
    for idx, record in enumerate(reader, start=2):
        if len(record) != len(SWEEP_COLUMNS):
            logger.warning(
                "Skipping malformed CSV line %d: expected %d columns, got %d",
                idx,
                len(SWEEP_COLUMNS),
                len(record),
            )
            continue
        axis, axis_value, policy, throughput, branch, alpha, feasible = record
        try:
            rows.append(
                SweepRow(
                    axis=axis,
                    axis_value=float(axis_value),
                    policy=policy,
                    throughput=float(throughput),
                    branch=branch,
                    alpha=float(alpha),
                    feasible=_parse_bool(feasible),
                )
            )
        except ValueError as exc:
            logger.warning("Skipping malformed CSV line %d: %s", idx, exc)
    return rows


def read_csv(source: Path) -> list[SweepRow]:
    logger.info("Reading sweep CSV from %s", source)
    try:
        text = source.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"Failed to read sweep CSV {source}: {exc}") from exc
    return parse_csv(text)


@dataclass(frozen=True)
class AllocationRecord:
    """A solved instance for the per-phase CSV; `axis_value` is None outside sweeps."""

    policy: str
    params: SystemParams
    report: SolveReport
    axis_value: float | None = None


def emit_allocations_csv(records: Iterable[AllocationRecord], destination: Path) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(ALLOCATION_COLUMNS)
    count = 0
    for record in records:
        alloc = record.report.allocation
        harvested = energy_profile(record.params, alloc).harvested
        axis_value = "" if record.axis_value is None else _fmt(record.axis_value)
        for j in range(alloc.n_phases):
            writer.writerow([
                axis_value,
                record.policy,
                j + 1,
                _fmt(alloc.p1[j]),
                _fmt(alloc.p2[j]),
                _fmt(alloc.p_forward[j]),
                _fmt(harvested[j]),
            ])
        count += 1
    logger.info("Writing per-phase allocations of %d instances to %s", count, destination)
    _write_text(buffer.getvalue(), destination, "allocations CSV")

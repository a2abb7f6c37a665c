from .csv_io import (
    AllocationRecord,
    emit_allocations_csv,
    emit_csv,
    format_csv,
    parse_csv,
    read_csv,
)
from .sweep import (
    SweepResult,
    SweepRow,
    SweepSpec,
    run_single,
    run_sweep,
    run_sweep_reports,
)

__all__ = [
    "AllocationRecord",
    "SweepResult",
    "SweepRow",
    "SweepSpec",
    "emit_allocations_csv",
    "emit_csv",
    "format_csv",
    "parse_csv",
    "read_csv",
    "run_single",
    "run_sweep",
    "run_sweep_reports",
]

"""Optional MLflow tracking of solves and sweeps.

Every method is a no-op unless a tracking URI is configured and mlflow is
installed; a failing tracking server never fails a solve.
"""

import contextlib
import math
from collections.abc import Iterable, Iterator, Mapping
from typing import Any

from .bench import SweepRow
from .logging import get_logger
from .settings import MLflowConfig

logger = get_logger("ehrelay.observability")

try:
    import mlflow
    MLFLOW_AVAILABLE = True
except ImportError:
    logger.debug("MLflow not available, tracking disabled")
    MLFLOW_AVAILABLE = False


def throughput_metrics(rows: Iterable[SweepRow]) -> dict[str, float]:
    """`throughput_<policy>` per row; error rows are counted instead of logged as NaN."""
    metrics: dict[str, float] = {}
    errors = 0
    for row in rows:
        if math.isnan(row.throughput):
            errors += 1
        else:
            metrics[f"throughput_{row.policy}"] = row.throughput
    if errors:
        metrics["error_rows"] = float(errors)
    return metrics


def sweep_steps(rows: Iterable[SweepRow]) -> list[tuple[float, list[SweepRow]]]:
    """Rows grouped by axis value, in first-seen order; one MLflow step each."""
    grouped: dict[float, list[SweepRow]] = {}
    for row in rows:
        grouped.setdefault(row.axis_value, []).append(row)
    return list(grouped.items())


class MLflowTracker:
    def __init__(self, config: MLflowConfig) -> None:
        self.config = config
        self.enabled = False

        if not config.tracking_uri:
            return

        if not MLFLOW_AVAILABLE:
            logger.warning(
                "MLflow tracking URI provided (%s), but 'mlflow' package is not installed. "
                "Sweeps will not be tracked.",
                config.tracking_uri,
            )
            return

        try:
            mlflow.set_tracking_uri(config.tracking_uri)
            mlflow.set_experiment(config.experiment_name)
            self.enabled = True
            logger.info(
                "Tracking solves at %s (experiment: %s)",
                config.tracking_uri,
                config.experiment_name,
            )
        except Exception as e:
            logger.warning("Failed to initialize MLflow: %s", e)
            self.enabled = False

    @property
    def active(self) -> bool:
        return self.enabled and mlflow.active_run() is not None

    @contextlib.contextmanager
    def run_context(self, run_name: str | None = None) -> Iterator[None]:
        """One MLflow run per CLI invocation; joins a run the caller already opened."""
        if not self.enabled or mlflow.active_run():
            yield
            return
        with mlflow.start_run(run_name=run_name):
            yield

    def log_params(self, params: Mapping[str, Any]) -> None:
        if not self.active:
            return
        try:
            mlflow.log_params(dict(params))
        except Exception as e:
            logger.warning("Failed to log params to MLflow: %s", e)

    def log_rows(self, rows: Iterable[SweepRow], step: int | None = None) -> None:
        if not self.active:
            return
        metrics = throughput_metrics(rows)
        if not metrics:
            return
        try:
            mlflow.log_metrics(metrics, step=step)
        except Exception as e:
            logger.warning("Failed to log metrics to MLflow: %s", e)

    def log_sweep(self, rows: Iterable[SweepRow]) -> None:
        """Throughput per policy, stepped by the position of the axis value."""
        for step, (_, cells) in enumerate(sweep_steps(rows)):
            self.log_rows(cells, step=step)

    def log_table(self, text: str, artifact_file: str) -> None:
        """Store a rendered summary table next to the run."""
        if not self.active:
            return
        try:
            mlflow.log_text(text, artifact_file)
        except Exception as e:
            logger.warning("Failed to log %s to MLflow: %s", artifact_file, e)

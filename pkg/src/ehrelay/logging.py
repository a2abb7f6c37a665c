import logging
import sys
from typing import TextIO

APP_PREFIX = __name__.split(".")[0]  # "ehrelay"


def get_logger(name: str) -> logging.Logger:
    """Return a logger with the given name."""
    return logging.getLogger(name)


class _AppOrThirdPartyWarnings(logging.Filter):
    """Pass every ehrelay record, but only WARNING+ from scipy, mlflow and friends."""

    def filter(self, record: logging.LogRecord) -> bool:
        name = getattr(record, "name", "") or ""
        if name.startswith(APP_PREFIX):
            return True
        return record.levelno >= logging.WARNING


def setup_logging(
    level: int | str = "INFO",
    *,
    include_time: bool = True,
    quiet_third_party: bool = True,
    stream: TextIO | None = None,
) -> None:
    """Configure root logging.

    Records go to stderr by default: stdout carries sweep CSV when no
    output file is given.

    Parameters
    ----------
    level:
        Log level as int or name (e.g., "DEBUG"). Defaults to "INFO".
    include_time:
        Whether to include timestamps in log records.
    quiet_third_party:
        If true, only warnings and errors of non-ehrelay loggers are shown.
    stream:
        Override for the output stream (tests pass a StringIO).
    """
    root = logging.getLogger()
    root.setLevel(level)

    # Re-configuring must not duplicate records
    for handler in list(root.handlers):
        root.removeHandler(handler)

    handler = logging.StreamHandler(stream=stream or sys.stderr)

    parts = ["%(asctime)s"] if include_time else []
    parts.extend(["%(levelname)s", "%(name)s", "-", "%(message)s"])
    handler.setFormatter(logging.Formatter(fmt=" ".join(parts), datefmt="%Y-%m-%d %H:%M:%S"))
    root.addHandler(handler)

    # scipy reports SLSQP and bisection trouble through the warnings module
    logging.captureWarnings(True)

    if quiet_third_party:
        handler.addFilter(_AppOrThirdPartyWarnings())

import sys

import yaml
from pydantic_settings import CliApp

from .logging import get_logger, setup_logging
from .pipeline import EXIT_INVALID_CONFIG, BenchPipeline
from .settings import Settings


def main(argv: list[str] | None = None) -> int:
    """Parse settings, run the bench pipeline and return the exit code.

    Uses pydantic-settings CLI source
    to parse and merge arguments from CLI, env, dotenv, and the TOML/YAML config.
    """
    try:
        settings = CliApp.run(Settings, cli_args=argv)
    except ValueError as e:
        # pydantic's ValidationError is a ValueError too
        setup_logging("INFO")
        get_logger("ehrelay.cli").error("Invalid configuration: %s", e)
        return EXIT_INVALID_CONFIG

    setup_logging(settings.log_level)
    logger = get_logger("ehrelay.cli")

    logger.info(
        "Settings loaded:\n%s", yaml.safe_dump(
            settings.model_dump(mode="json"),
            sort_keys=False, default_flow_style=False, allow_unicode=True
        )
    )

    return BenchPipeline(settings).run()


def app() -> None:
    """CLI entrypoint."""
    sys.exit(main())


if __name__ == "__main__":
    app()

import logging
import tomllib
from enum import StrEnum
from pathlib import Path
from typing import Any

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    PositiveInt,
    field_validator,
)
from pydantic.fields import FieldInfo
from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic_settings.sources import PydanticBaseSettingsSource

from .model import PolicyKind, SystemParams


class StrictModel(BaseModel):
    """Base for nested config models; forbids unknown fields to catch config-file typos."""
    model_config = ConfigDict(extra="forbid")


class OracleMethod(StrEnum):
    PROJECTED_GRADIENT = "PROJECTED_GRADIENT"
    GRID = "GRID"


class SweepAxis(StrEnum):
    N = "N"
    BETA = "BETA"
    P1_INITIAL = "P1_INITIAL"
    P2_INITIAL = "P2_INITIAL"
    GAMMA1 = "GAMMA1"
    GAMMA1_DIRECT = "GAMMA1_DIRECT"


class OracleConfig(StrictModel):
    """Numeric oracle controls."""

    method: OracleMethod = Field(
        default=OracleMethod.PROJECTED_GRADIENT,
        description="PROJECTED_GRADIENT for any N, GRID for exhaustive search with N <= 3.",
    )
    tolerance: PositiveFloat = Field(
        default=1e-12,
        description="Stop once one iteration improves the objective by less than this.",
    )
    max_iterations: PositiveInt = Field(
        default=500,
        description="Iteration cap of the projected-gradient ascent and the SLSQP solves.",
    )
    grid_resolution: PositiveFloat = Field(
        default=1e-2,
        description="Step of the GRID search over forwarding powers.",
    )


class MLflowConfig(StrictModel):
    """Configuration for MLflow tracking of sweeps (optional)."""
    tracking_uri: str | None = Field(
        default=None,
        description="MLflow tracking URI. If None, tracking is disabled.",
    )
    experiment_name: str = Field(
        default="ehrelay_sweeps",
        description="MLflow experiment name.",
    )


# Long names used by SystemParams and config files -> flat CLI names
_SYSTEM_KEY_ALIASES = {
    "n_phases": "n",
    "p1_initial": "p10",
    "p2_initial": "p20",
}
# Keys of the [sweep] table -> top-level settings
_SWEEP_KEY_ALIASES = {
    "axis": "axis",
    "values": "values",
    "policies": "policy",
}


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="EHRELAY__",
        env_nested_delimiter="__",
        env_file=".env",
        env_file_encoding="utf-8",
        nested_model_default_partial_update=True,
        cli_prog_name="ehrelay",
        cli_kebab_case=True,
        cli_implicit_flags=True,
        cli_hide_none_type=True,
        cli_avoid_json=True,
        cli_enforce_required=False,
    )

    n: PositiveInt = Field(default=4, description="Number of two-slot phases N.")
    bandwidth: PositiveFloat = Field(default=1.0, description="Bandwidth B.")
    p10: NonNegativeFloat = Field(default=0.1, description="Source initial energy P_{1,0}.")
    p20: NonNegativeFloat = Field(default=1.0, description="Relay energy budget P_{2,0}.")
    gamma1: PositiveFloat = Field(default=2.0, description="Normalized SNR of the source-relay link.")
    gamma2: PositiveFloat = Field(default=1.0, description="Normalized SNR of the relay-destination link.")
    gamma1_direct: NonNegativeFloat = Field(
        default=0.0,
        description="Normalized SNR of the source-destination direct link; 0 means absent.",
    )
    beta: NonNegativeFloat = Field(
        default=0.6,
        description="Harvesting gain: fraction of relay power recovered by the source.",
    )

    policy: list[PolicyKind] = Field(
        default_factory=lambda: [PolicyKind.OPT],
        description="Policies to run (OPT, GRE, EQ, SNO, ORACLE). Repeat the flag or comma-separate.",
    )
    axis: SweepAxis | None = Field(
        default=None,
        description="Sweep axis. If omitted, a single solve is run per policy.",
    )
    values: list[float] | None = Field(
        default=None,
        description="Strictly increasing sweep values (integers for axis N).",
    )
    workers: PositiveInt = Field(
        default=1,
        description="Threads used to evaluate sweep rows.",
    )
    output: Path | None = Field(
        default=None,
        description="Sweep CSV destination. If omitted, the CSV is written to stdout.",
    )
    allocations_output: Path | None = Field(
        default=None,
        description="Optional CSV with per-phase powers of every solved instance.",
    )
    oracle_check: bool = Field(
        default=False,
        description="Also run the numeric oracle and report its throughput gap to each policy.",
    )

    config: Path | None = Field(
        default=None,
        description=(
            "TOML or YAML config file. Its values merge at lower priority than CLI/env. "
            "Must not contain a nested 'config' key."
        ),
    )

    log_level: str = Field(
        default="INFO",
        description="Logging level (e.g., DEBUG, INFO, WARNING, ERROR).",
    )

    oracle: OracleConfig = Field(
        default_factory=OracleConfig,
        description="Numeric oracle configuration.",
    )

    mlflow: MLflowConfig = Field(
        default_factory=MLflowConfig,
        description="MLflow configuration.",
    )

    @field_validator("log_level")
    @classmethod
    def _known_log_level(cls, value: str) -> str:
        level = value.upper()
        if level not in logging.getLevelNamesMapping():
            raise ValueError(f"Unknown log level {value!r}")
        return level

    def system_params(self) -> SystemParams:
        return SystemParams(
            n_phases=self.n,
            bandwidth=self.bandwidth,
            p1_initial=self.p10,
            p2_initial=self.p20,
            gamma1=self.gamma1,
            gamma2=self.gamma2,
            beta=self.beta,
            gamma1_direct=self.gamma1_direct,
        )

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        # Priority (high → low): CLI → init kwargs → env → dotenv → config file → secrets → defaults
        return (
            init_settings,
            env_settings,
            dotenv_settings,
            ConfigFileSettingsSource(settings_cls),
            file_secret_settings,
        )


def _load_config_file(path: Path) -> dict[str, Any]:
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".toml":
        return tomllib.loads(text)
    if path.suffix.lower() in (".yaml", ".yml"):
        # Lazy import: yaml comes with the cli extra
        import yaml

        return yaml.safe_load(text) or {}
    raise ValueError(f"Unsupported config format {path.suffix!r} for {path}: use .toml, .yaml or .yml")


class ConfigFileSettingsSource(PydanticBaseSettingsSource):
    """
    Load settings from a TOML or YAML file.

    System parameters may use either their SystemParams names (`n_phases`,
    `p1_initial`, `p2_initial`) or the flat CLI names. A `[sweep]` table is
    flattened into `axis`, `values` and `policy`.
    """

    def __call__(self) -> dict[str, Any]:
        # Access aggregated values set by previous sources (e.g., CLI/env/dotenv)
        config_path_value = self.current_state.get("config")
        if config_path_value is None:
            return {}

        config_path = Path(str(config_path_value)).expanduser().resolve()
        if not config_path.is_file():
            raise ValueError(f"Config file not found: {config_path}")

        data = _load_config_file(config_path)
        if not isinstance(data, dict):
            raise ValueError(f"Config file {config_path} must hold a table of settings")

        if "config" in data:
            raise ValueError(
                "Config file cannot contain a nested 'config' key. "
                "This option is reserved for the config file itself, "
                "it's only used from the command line via '--config' option."
            )

        flat: dict[str, Any] = {}
        for key, value in data.items():
            if key == "sweep":
                if not isinstance(value, dict):
                    raise ValueError("The 'sweep' entry must be a table with axis, values, policies")
                for sweep_key, sweep_value in value.items():
                    if sweep_key not in _SWEEP_KEY_ALIASES:
                        raise ValueError(f"Unknown key in [sweep] table: {sweep_key!r}")
                    flat[_SWEEP_KEY_ALIASES[sweep_key]] = sweep_value
            else:
                flat[_SYSTEM_KEY_ALIASES.get(key, key)] = value
        return flat

    def get_field_value(self, field: FieldInfo, field_name: str) -> tuple[Any, str, bool]:
        # Not used because this source overrides __call__ to return the full mapping.
        # Implemented just to satisfy the abstract interface.
        return None, field_name, False

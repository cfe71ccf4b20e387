"""
Experiment configuration.

Loaded with Pydantic Settings. Precedence, lowest first: field defaults,
.env file, DYNACQ_* environment variables, a TOML document, explicit
overrides (the CLI flags).
"""

from functools import lru_cache
from pathlib import Path
from typing import Any, Literal, Optional, Tuple, Type, Union

from pydantic import ValidationError, field_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    TomlConfigSettingsSource,
)

from .condmodel.engine import EngineChoice, parse_engine
from .core.errors import ConfigError, DynAcqError, MissingFile


class ExperimentConfig(BaseSettings):
    """
    Every knob of a run, with the reference hyperparameters as defaults.
    """

    # ========================================
    # Data
    # ========================================
    data: Optional[Path] = None  # CSV file; generated data carries a .meta.json sidecar
    label_column: Optional[str] = None
    target_column: Optional[str] = None
    task: Optional[Literal["classification", "regression"]] = None
    normalize: bool = True
    header: bool = True  # false: columns become x0..x{d-1} and y
    split_ratios: Tuple[float, float, float] = (0.8, 0.1, 0.1)
    split_seed: int = 0

    # ========================================
    # Density engine
    # ========================================
    engine: str = "gaussian"  # gaussian | class_conditional(m) | mixture(m)
    model: Optional[Path] = None

    # ========================================
    # Acquisition
    # ========================================
    policy: Literal["dfa", "sfa", "both"] = "dfa"
    budget: Optional[int] = None
    confidence: Optional[float] = None
    prune_bn: Optional[str] = None  # edge-list file or "learn"
    n_samples: int = 10
    static_on_test: bool = False

    # ========================================
    # Structure learning
    # ========================================
    oracle: Literal["exact", "mc"] = "exact"
    epsilon: Optional[float] = None  # 0 for exact oracles, 0.015 nats for MC
    ci_null: Literal["fixed", "permutation"] = "fixed"

    # ========================================
    # Time series
    # ========================================
    time_steps: Optional[int] = None
    step_width: int = 1
    alpha: float = 10.0
    ts_mode: Literal["dirichlet", "uniform", "consecutive"] = "dirichlet"
    tau: float = 0.9
    calibration_bins: int = 10
    posterior_draws: Optional[int] = None  # default 5 x remaining steps

    # ========================================
    # Data generation
    # ========================================
    generator: Literal["hierarchical", "bn", "chain"] = "hierarchical"
    fixture: str = "asia"
    n: Optional[int] = None

    # ========================================
    # Run
    # ========================================
    seed: int = 0
    workers: int = 1
    out: Path = Path("out")
    log_level: str = "INFO"
    log_file: Optional[str] = None

    model_config = SettingsConfigDict(
        env_prefix="DYNACQ_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        return (
            init_settings,
            TomlConfigSettingsSource(settings_cls),
            env_settings,
            dotenv_settings,
        )

    @field_validator("engine")
    @classmethod
    def _engine_parses(cls, v: str) -> str:
        try:
            parse_engine(v)
        except ConfigError as e:
            raise ValueError(e.detail)
        return v

    @field_validator("budget", "n", "posterior_draws")
    @classmethod
    def _non_negative(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 0:
            raise ValueError("must be non-negative")
        return v

    @field_validator("confidence", "tau")
    @classmethod
    def _probability(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not 0.0 <= v <= 1.0:
            raise ValueError("must lie in [0, 1]")
        return v

    @field_validator("n_samples", "workers", "step_width")
    @classmethod
    def _positive_int(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @field_validator("alpha")
    @classmethod
    def _positive_alpha(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @field_validator("calibration_bins")
    @classmethod
    def _bins(cls, v: int) -> int:
        if v < 2:
            raise ValueError("need at least 2 bins")
        return v

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, v: str) -> str:
        if v.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level {v!r}")
        return v.upper()

    @property
    def engine_choice(self) -> EngineChoice:
        return parse_engine(self.engine)


def load_config(config_file: Optional[Union[str, Path]] = None, **overrides: Any) -> ExperimentConfig:
    """
    Build a config from all sources.

    Args:
        config_file: Optional TOML document
        overrides: Explicit values (None entries are ignored)

    Raises:
        MissingFile: If ``config_file`` does not exist
        ConfigError: On any validation failure
    """
    settings_cls: Type[ExperimentConfig] = ExperimentConfig
    if config_file is not None:
        path = Path(config_file)
        if not path.exists():
            raise MissingFile(str(path))
        settings_cls = type(
            "FileExperimentConfig",
            (ExperimentConfig,),
            {"model_config": SettingsConfigDict(**{**ExperimentConfig.model_config, "toml_file": path})},
        )
    values = {k: v for k, v in overrides.items() if v is not None}
    try:
        return settings_cls(**values)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise ConfigError(f"invalid configuration: {problems}")
    except DynAcqError:
        raise
    except ValueError as e:
        # malformed TOML surfaces here
        raise ConfigError(f"cannot read configuration: {e}")


@lru_cache()
def get_settings() -> ExperimentConfig:
    """
    Get cached defaults (environment and .env applied).

    Returns:
        ExperimentConfig: Settings without a TOML document or CLI overrides
    """
    return load_config()

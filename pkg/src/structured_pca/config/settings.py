"""
Runtime settings read from the environment and an optional ``.env`` file.

Only process-wide knobs live here (estimator defaults, worker count, output
and logging). Experiment files are validated by the models in
``structured_pca.experiments.harness``.
"""

from pathlib import Path
from typing import Literal

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class _EnvSection(BaseSettings):
    """Shared source rules: unprefixed variables, ``.env`` in the working directory."""

    model_config = SettingsConfigDict(
        env_prefix="",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


class IdentifyConfig(_EnvSection):
    """Estimator defaults; CLI flags and sweep ``options`` override them."""

    rank_tol_rel: float = Field(default=0.1, gt=0.0, lt=1.0, alias="RANK_TOL_REL")
    center_data: bool = Field(default=False, alias="CENTER_DATA")


class HarnessConfig(_EnvSection):
    workers: int = Field(default=1, ge=1, alias="MC_WORKERS")
    results_dir: Path = Field(default=Path("results"), alias="RESULTS_DIR")


class LoggingConfig(_EnvSection):
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field(
        default="INFO", alias="LOG_LEVEL"
    )
    log_json: bool = Field(default=False, alias="LOG_JSON")
    log_file: Path | None = Field(default=None, alias="LOG_FILE")
    log_max_bytes: int = Field(default=10 * 1024 * 1024, gt=0, alias="LOG_MAX_BYTES")
    log_backup_count: int = Field(default=5, ge=0, alias="LOG_BACKUP_COUNT")

    @field_validator("log_level", mode="before")
    @classmethod
    def upper_case_level(cls, v: object) -> object:
        return v.upper() if isinstance(v, str) else v


class Settings:
    """The three settings sections, loaded together and checked against each other."""

    def __init__(self) -> None:
        self.identify = IdentifyConfig()
        self.harness = HarnessConfig()
        self.logging = LoggingConfig()
        self._check_paths()

    def _check_paths(self) -> None:
        results_dir = self.harness.results_dir
        if results_dir.exists() and not results_dir.is_dir():
            raise ValueError(f"RESULTS_DIR is not a directory: {results_dir}")
        log_file = self.logging.log_file
        if log_file is not None and log_file.is_dir():
            raise ValueError(f"LOG_FILE is a directory: {log_file}")


def load_settings() -> Settings:
    """
    Read settings from the environment.

    Raises:
        pydantic.ValidationError: A variable fails its field constraints
        ValueError: RESULTS_DIR or LOG_FILE points at the wrong kind of path
    """
    return Settings()

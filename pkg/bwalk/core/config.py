"""
Core Configuration Module for the bwalk sampler

This module provides configuration management with:
- Sampler tolerances and safety caps
- Preconditioning (Newton centering) settings
- Diagnostics acceptance bands
- Logging configuration
- Multi-chain worker fan-out

Design Principles:
- Type-safe configuration with Pydantic
- Environment-specific overrides (BW_* prefixes, optional .env file)
- Validation of critical settings at load time
"""

from functools import lru_cache
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class SamplerSettings(BaseSettings):
    """Billiard Walk / Hit-and-Run sampler settings"""

    DEFAULT_SEED: int = Field(
        default=20140101, description="Seed used when none is supplied")
    DEFAULT_REFLECTIONS_PER_DIM: int = Field(
        default=10, description="Reflection cap R = factor * n")
    RESTART_CAP: int = Field(
        default=10_000, description="Restarts per sample before giving up")
    BO_SAFETY_CAP: int = Field(
        default=1_000_000, description="Oracle calls allowed for one uncapped trajectory")
    EPS_FWD_REL: float = Field(
        default=1e-12, description="Forward ray epsilon relative to body diameter")
    EPS_VERTEX: float = Field(
        default=1e-9, description="Tolerance for nonsmooth boundary detection")
    DRIFT_TOLERANCE: float = Field(
        default=1e-9, description="Membership slack repaired by a normal nudge")
    GRAZING_TOLERANCE: float = Field(
        default=1e-12, description="(d, s) below this is a grazing hit")
    LENGTH_REDRAW_AFTER: int = Field(
        default=3, ge=0,
        description="Consecutive reflection-cap restarts before the length is redrawn (0 keeps it)")

    @field_validator("DEFAULT_REFLECTIONS_PER_DIM", "RESTART_CAP", "BO_SAFETY_CAP")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be a positive integer")
        return v

    model_config = SettingsConfigDict(
        env_prefix="BW_SAMPLER_", case_sensitive=True, extra="ignore")


class PreconditionSettings(BaseSettings):
    """Dikin preconditioning settings"""

    NEWTON_TOL: float = Field(
        default=1e-8, description="Newton decrement stopping tolerance")
    NEWTON_MAX_ITER: int = Field(
        default=200, description="Maximum damped Newton iterations")
    EIGEN_FLOOR_REL: float = Field(
        default=1e-14, description="Eigenvalue floor relative to the largest eigenvalue")

    model_config = SettingsConfigDict(
        env_prefix="BW_PRECONDITION_", case_sensitive=True, extra="ignore")


class DiagnosticsSettings(BaseSettings):
    """Uniformity diagnostics settings"""

    CHI2_LOWER_9DOF: float = Field(
        default=3.3, description="Lower 10% two-tailed chi-square bound, 9 dof")
    CHI2_UPPER_9DOF: float = Field(
        default=16.9, description="Upper 10% two-tailed chi-square bound, 9 dof")
    CHI2_TWO_TAILED_LEVEL: float = Field(
        default=0.10, description="Two-tailed significance level")
    ESCAPE_TRIAL_CAP: int = Field(
        default=1_000_000, description="Reflections/iterations before a trial is censored")

    @field_validator("CHI2_TWO_TAILED_LEVEL")
    @classmethod
    def validate_level(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("significance level must lie in (0, 1)")
        return v

    model_config = SettingsConfigDict(
        env_prefix="BW_DIAGNOSTICS_", case_sensitive=True, extra="ignore")


class ApplicationSettings(BaseSettings):
    """Main application configuration"""

    APP_NAME: str = Field(default="bwalk", description="Application name")
    APP_VERSION: str = Field(default="1.0.0", description="Application version")

    ENVIRONMENT: str = Field(default="development",
                             description="Environment name")

    # Multi-chain fan-out
    WORKERS: int = Field(default=1, description="Worker threads for independent chains")

    # Logging
    LOG_LEVEL: str = Field(default="INFO", description="Logging level")
    LOG_FORMAT: str = Field(
        default="text", description="Log format (json/text)")
    LOG_FILE: Optional[str] = Field(default=None, description="Log file path")

    @field_validator("ENVIRONMENT")
    @classmethod
    def validate_environment(cls, v: str) -> str:
        allowed = ["development", "testing", "production"]
        if v not in allowed:
            raise ValueError(f"Environment must be one of {allowed}")
        return v

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        allowed = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in allowed:
            raise ValueError(f"Log level must be one of {allowed}")
        return v.upper()

    @field_validator("LOG_FORMAT")
    @classmethod
    def validate_log_format(cls, v: str) -> str:
        if v.lower() not in ("json", "text"):
            raise ValueError("Log format must be 'json' or 'text'")
        return v.lower()

    @field_validator("WORKERS")
    @classmethod
    def validate_workers(cls, v: int) -> int:
        if v < 1:
            raise ValueError("WORKERS must be at least 1")
        return v

    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", case_sensitive=True, extra="ignore")


class Settings(BaseSettings):
    """Combined application settings"""

    sampler: SamplerSettings = Field(default_factory=SamplerSettings)
    precondition: PreconditionSettings = Field(default_factory=PreconditionSettings)
    diagnostics: DiagnosticsSettings = Field(default_factory=DiagnosticsSettings)
    app: ApplicationSettings = Field(default_factory=ApplicationSettings)

    @property
    def is_testing(self) -> bool:
        return self.app.ENVIRONMENT == "testing"

    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", case_sensitive=True, extra="ignore")


@lru_cache()
def get_settings() -> Settings:
    """Get cached application settings"""
    return Settings()

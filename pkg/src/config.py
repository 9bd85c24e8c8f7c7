"""Configuration settings for separability scoring."""

import os
from dataclasses import dataclass, field
from typing import Optional


def _get_bool_env(var_name: str, default: bool = False) -> bool:
    """Read boolean flag from environment."""
    value = os.getenv(var_name)
    if value is None:
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


def _get_optional_int_env(var_name: str) -> Optional[int]:
    """Read optional integer from environment."""
    value = os.getenv(var_name)
    if value is None:
        return None
    value = value.strip()
    if not value:
        return None
    try:
        return int(value)
    except ValueError:
        return None


def _get_optional_float_env(var_name: str) -> Optional[float]:
    """Read optional float from environment."""
    value = os.getenv(var_name)
    if value is None:
        return None
    value = value.strip()
    if not value:
        return None
    try:
        return float(value)
    except ValueError:
        return None


def _env_str(var_name: str, default: str) -> str:
    return (os.getenv(var_name) or default).strip()


def _int_env(var_name: str, default: int) -> int:
    """Integer from environment; unset or malformed gives the default, 0 is kept."""
    value = _get_optional_int_env(var_name)
    return default if value is None else value


def _float_env(var_name: str, default: float) -> float:
    value = _get_optional_float_env(var_name)
    return default if value is None else value


@dataclass
class ProjectionConfig:
    """Projection separability settings."""
    # 'mean', 'median' or 'mode'
    centroid: str = field(default_factory=lambda: _env_str("SEPSCORE_CENTROID", "median").lower())


@dataclass
class NullModelConfig:
    """Permutation null model settings."""
    # 0 disables the null model
    replicates: int = field(default_factory=lambda: _int_env("SEPSCORE_REPLICATES", 1000))
    alpha: float = field(default_factory=lambda: _float_env("SEPSCORE_ALPHA", 0.01))
    # Master seed; None means "not configured", callers fall back to 0
    seed: Optional[int] = field(default_factory=lambda: _get_optional_int_env("SEPSCORE_SEED"))
    workers: int = field(default_factory=lambda: _int_env("SEPSCORE_WORKERS", 1))
    show_progress: bool = field(default_factory=lambda: _get_bool_env("SEPSCORE_SHOW_PROGRESS", False))


@dataclass
class HarnessConfig:
    """Evaluation harness settings."""
    # 0 means exact ties only
    tie_tolerance: float = field(default_factory=lambda: _float_env("SEPSCORE_TIE_TOLERANCE", 1e-9))


@dataclass
class SwissRollConfig:
    """Defaults for the tripartite swiss-roll generator."""
    n_points: int = 723
    n_arcs: int = 3
    gap_fraction: float = 0.2
    noise_sd: float = 0.0


@dataclass
class SepScoreConfig:
    """Top-level configuration."""
    log_level: str = field(default_factory=lambda: _env_str("SEPSCORE_LOG_LEVEL", "INFO").upper())

    projection: ProjectionConfig = None
    null_model: NullModelConfig = None
    harness: HarnessConfig = None
    swiss_roll: SwissRollConfig = None

    def __post_init__(self):
        if self.projection is None:
            self.projection = ProjectionConfig()
        if self.null_model is None:
            self.null_model = NullModelConfig()
        if self.harness is None:
            self.harness = HarnessConfig()
        if self.swiss_roll is None:
            self.swiss_roll = SwissRollConfig()

        if self.null_model.replicates < 0:
            self.null_model.replicates = 1000
        if self.null_model.workers < 1:
            self.null_model.workers = 1
        if not 0.0 < self.null_model.alpha < 1.0:
            self.null_model.alpha = 0.01
        if not self.harness.tie_tolerance >= 0.0:
            self.harness.tie_tolerance = 1e-9
        if self.projection.centroid not in ("mean", "median", "mode"):
            self.projection.centroid = "median"

    @property
    def seed(self) -> int:
        """Effective master seed."""
        return self.null_model.seed if self.null_model.seed is not None else 0

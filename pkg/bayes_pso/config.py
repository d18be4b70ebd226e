"""Experiment configuration management."""

import logging
from pathlib import Path
from typing import Any, Optional

from dotenv import dotenv_values
from pydantic import Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from bayes_pso.core.swarm import ConfigurationError
from bayes_pso.schemas import AlgorithmOverrides, RunConfig

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """
    Experiment settings.

    Values come from (lowest to highest precedence) the defaults below,
    ``PSO_*`` environment variables or ``.env``, a ``key = value`` config
    file, and command-line flags.
    """

    model_config = SettingsConfigDict(
        env_prefix="PSO_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    log_level: str = Field(default="INFO", description="Logging level")
    log_file: Optional[str] = Field(default=None, description="Log file path")

    # Run protocol
    dim: int = Field(default=10, ge=1, description="Problem dimension")
    particles: int = Field(default=100, ge=2, description="Swarm size")
    max_iterations: int = Field(default=100000, ge=1, description="Evaluation rounds per run")
    stop_threshold: float = Field(default=0.001, ge=0.0, description="Swarm collapse threshold")
    runs: int = Field(default=100, ge=2, description="Runs per (algorithm, function) cell")
    seed: int = Field(default=0, ge=0, description="Base seed")
    workers: int = Field(default=1, ge=1, description="Worker processes for suites")
    noise_sigma: float = Field(default=0.0, ge=0.0, description="Evaluation noise standard deviation")

    # Standard / constricted PSO (None: 0.7298 / 1.49618 standard, 1 / 2.05 constricted)
    w: Optional[float] = Field(default=None, description="Inertia weight")
    phi: Optional[float] = Field(default=None, description="Personal-best attraction")
    eta: Optional[float] = Field(default=None, description="Global-best attraction")
    chi_replaces_w: bool = Field(default=False, description="Constricted PSO: use chi as inertia weight")

    # Bare bones PSO
    cov_mode: Optional[str] = Field(default=None, description="per_dimension or scalar; the algorithm id decides when unset")
    bb_scale: float = Field(default=0.2, gt=0.0, description="Covariance scale")

    # Gaussian and kernel PSO
    gamma: float = Field(default=0.8, gt=0.0, le=1.0, description="Learning constant")
    beta: Optional[float] = Field(default=None, description="Component precision (0.4 dependence, 0.1 independence)")
    tau: Optional[float] = Field(default=None, description="Discount (0.5) or kernel-standard momentum (0)")
    prior: str = Field(default="uniform", description="uniform or gaussian_unit")
    window: int = Field(default=100, ge=1, description="Retained iteration groups")
    discounted: bool = Field(default=False, description="Discount the full Gaussian posterior")
    kernel: Optional[str] = Field(default=None, description="Kernel id (trig when unset)")
    kernel_mu: float = Field(default=1.0, gt=0.0, description="Kernel parameter")
    kernel_beta_g: float = Field(default=2.0, description="Kernel-standard global-best coefficient")
    kernel_beta_b: float = Field(default=2.0, description="Kernel-standard personal-best coefficient")

    # Fitness weighting
    direction: str = Field(default="minimize", description="minimize or maximize")
    epsilon: float = Field(default=1e-12, gt=0.0, description="Floor before weighting")
    transform: str = Field(default="identity", description="identity, sqrt or log1p")

    # Kalman PSO
    kalman_process_noise: float = Field(default=0.1, ge=0.0)
    kalman_observation_noise: float = Field(default=0.1, ge=0.0)
    kalman_initial_cov: float = Field(default=1.0, gt=0.0)
    kalman_balance: float = Field(default=0.5, ge=0.0, le=1.0)
    kalman_update_rule: str = Field(default="filter", description="filter or product")
    kalman_lambda_total: float = Field(default=0.5, gt=0.0, le=1.0)

    # Output
    out_dir: Path = Field(default=Path("results"), description="Output directory")
    report_format: str = Field(default="markdown", description="csv, json or markdown")
    save_traces: bool = Field(default=False, description="Write global-best traces")

    def to_overrides(self) -> AlgorithmOverrides:
        """Algorithm parameters carried by these settings."""
        fields = AlgorithmOverrides.model_fields
        return AlgorithmOverrides(**{name: getattr(self, name) for name in fields if hasattr(self, name)})

    def run_config(self, algorithm: str, objective: str, seed: Optional[int] = None) -> RunConfig:
        """
        Build a run configuration from these settings.

        Raises:
            ConfigurationError: If the combination is invalid
        """
        try:
            return RunConfig(
                algorithm=algorithm,
                objective=objective,
                dim=self.dim,
                particles=self.particles,
                max_iterations=self.max_iterations,
                stop_threshold=self.stop_threshold,
                seed=self.seed if seed is None else seed,
                noise_sigma=self.noise_sigma,
                overrides=self.to_overrides(),
                record_trace=self.save_traces,
            )
        except ValidationError as e:
            raise ConfigurationError(f"Invalid run configuration: {e.errors()[0]['msg']}")


def read_config_file(config_file: Path) -> dict[str, str]:
    """
    Parse a plain-text ``key = value`` experiment file.

    Keys are Settings field names, case-insensitive; ``#`` starts a comment.

    Raises:
        ConfigurationError: On unknown keys or keys without a value
    """
    config_file = Path(config_file)
    if not config_file.exists():
        raise ConfigurationError(f"Config file not found: {config_file}")

    values = {}
    for key, value in dotenv_values(config_file).items():
        name = key.strip().lower().replace("-", "_")
        if name not in Settings.model_fields:
            raise ConfigurationError(f"Unknown config key in {config_file}: {key}")
        if value is None:
            raise ConfigurationError(f"Config key without value in {config_file}: {key}")
        values[name] = value

    logger.debug(f"Loaded {len(values)} settings from {config_file}")
    return values


def load_settings(config_file: Optional[Path] = None, overrides: Optional[dict[str, Any]] = None) -> Settings:
    """
    Build settings with file values over the environment and flags over both.

    Args:
        config_file: Optional experiment file
        overrides: Flag values; None entries are ignored

    Raises:
        ConfigurationError: If any value is invalid
    """
    values: dict[str, Any] = read_config_file(config_file) if config_file else {}
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})

    try:
        return Settings(**values)
    except ValidationError as e:
        error = e.errors()[0]
        location = ".".join(str(part) for part in error["loc"])
        raise ConfigurationError(f"Invalid setting {location}: {error['msg']}")


# Global settings instance
settings = Settings()

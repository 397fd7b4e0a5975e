"""Configuration management for the SoftAbs HMC sampler."""

import math
import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from dotenv import dotenv_values, find_dotenv, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

# Half-periods of the longest funnel oscillations; L defaults to T/2 / epsilon.
EUCLIDEAN_HALF_PERIOD = 8.0
RIEMANNIAN_HALF_PERIOD = 25.0
DEFAULT_INITIAL_STEP_SIZE = 0.1


@dataclass
class Config:
    """Environment-level configuration."""

    output_dir: Path = Path("runs")
    log_level: str = "WARNING"
    workers: int = 1

    @classmethod
    def from_env(cls) -> "Config":
        """Load configuration from environment variables."""
        load_dotenv(find_dotenv(usecwd=True))

        return cls(
            output_dir=Path(os.getenv("SOFTABS_OUTPUT_DIR", "runs")),
            log_level=os.getenv("SOFTABS_LOG_LEVEL", "WARNING").upper(),
            workers=int(os.getenv("SOFTABS_WORKERS", "1")),
        )

    def validate(self) -> None:
        """Validate configuration values."""
        if self.log_level not in LOG_LEVELS:
            raise ValueError(f"Log level must be one of {', '.join(LOG_LEVELS)}")

        if self.workers <= 0:
            raise ValueError("Workers must be positive")

        if not str(self.output_dir):
            raise ValueError("Output directory cannot be empty")


class MetricFamilyName(str, Enum):
    """Names of the supported metric families."""

    EUCLIDEAN = "euclidean"
    SOFTABS = "softabs"
    DIAG_SOFTABS = "diag_softabs"
    OUTER_SOFTABS = "outer_softabs"
    DIAG_OUTER_SOFTABS = "diag_outer_softabs"


class TargetConfig(BaseModel):
    """Target distribution selection."""

    name: str = "funnel"
    n: int = Field(10, ge=1, description="funnel x count, or Gaussian dimension")


class MetricConfig(BaseModel):
    """Metric family and its parameters."""

    family: MetricFamilyName = MetricFamilyName.SOFTABS
    alpha: float = Field(1e6, gt=0, description="SoftAbs regularization; unused for euclidean")
    mass_diag: Optional[List[float]] = Field(None, description="diagonal of M, euclidean only")

    @field_validator("mass_diag")
    @classmethod
    def _positive_mass(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None and any(not (m > 0 and math.isfinite(m)) for m in value):
            raise ValueError("mass_diag entries must be positive and finite")
        return value

    @field_validator("alpha")
    @classmethod
    def _finite_alpha(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("alpha must be finite")
        return value


class IntegratorConfig(BaseModel):
    """Step size, trajectory length and fixed-point controls."""

    epsilon: float = Field(DEFAULT_INITIAL_STEP_SIZE, gt=0)
    n_steps: int = Field(10, ge=0)
    fp_threshold: float = Field(1e-12, gt=0)
    fp_max_iters: int = Field(100, ge=1)
    method: Literal["auto", "leapfrog", "generalized"] = "auto"
    integration_time: Optional[float] = Field(None, gt=0)
    max_steps: int = Field(1000, ge=1)

    def steps_for(self, epsilon: float) -> int:
        """L at a given step size; with an integration time L * epsilon stays fixed."""
        if self.integration_time is None:
            return self.n_steps
        return min(self.max_steps, max(1, math.ceil(self.integration_time / epsilon - 1e-9)))

    @model_validator(mode="after")
    def _threshold_below_step(self) -> "IntegratorConfig":
        if self.fp_threshold >= self.epsilon:
            raise ValueError("fp_threshold must be smaller than epsilon")
        return self


class AdaptationConfig(BaseModel):
    """Dual-averaging hyperparameters."""

    gamma: float = Field(0.05, gt=0)
    t0: float = Field(10.0, ge=0)
    kappa: float = Field(0.75, gt=0.5, le=1.0)


class ChainConfig(BaseModel):
    """Everything a single chain needs."""

    target: TargetConfig = Field(default_factory=TargetConfig)
    metric: MetricConfig = Field(default_factory=MetricConfig)
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)
    adaptation: AdaptationConfig = Field(default_factory=AdaptationConfig)
    n_warmup: int = Field(1000, ge=0)
    n_samples: int = Field(1000, ge=0)
    adapt: bool = False
    target_accept: float = Field(0.8, gt=0, lt=1)
    seed: int = Field(0, ge=0, lt=2**64)
    init_range: Tuple[float, float] = (-1.0, 1.0)

    @field_validator("init_range")
    @classmethod
    def _ordered_range(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        if not value[0] < value[1]:
            raise ValueError("init_range must be (low, high) with low < high")
        return value


def _split_floats(value: Any) -> Any:
    """Accept comma-separated strings for vector fields."""
    if isinstance(value, str):
        parts = [part.strip() for part in value.split(",") if part.strip()]
        return [float(part) for part in parts]
    return value


class RunOptions(BaseModel):
    """One experiment run, as given on the command line or in a config file."""

    model_config = ConfigDict(extra="forbid")

    command: Literal["sample", "trajectory", "benchmark"] = "sample"
    label: Optional[str] = None
    target: str = "funnel"
    n: int = Field(10, ge=1)
    metric: MetricFamilyName = MetricFamilyName.SOFTABS
    alpha: float = Field(1e6, gt=0)
    epsilon: Optional[float] = Field(None, gt=0)
    adapt: bool = False
    target_accept: float = Field(0.8, gt=0, lt=1)
    steps: Optional[int] = Field(None, ge=0)
    warmup: int = Field(1000, ge=0)
    samples: int = Field(1000, ge=0)
    seed: int = Field(0, ge=0, lt=2**64)
    fp_threshold: float = Field(1e-12, gt=0)
    fp_max_iters: int = Field(100, ge=1)
    method: Literal["auto", "leapfrog", "generalized"] = "auto"
    mass: Optional[List[float]] = None
    init: Optional[List[float]] = None
    momentum: Optional[List[float]] = None
    out_dir: Optional[Path] = None
    prefix: Optional[str] = None

    @field_validator("mass", "init", "momentum", mode="before")
    @classmethod
    def _split_vectors(cls, value: Any) -> Any:
        return _split_floats(value)

    @model_validator(mode="after")
    def _step_size_mode(self) -> "RunOptions":
        if self.adapt and self.epsilon is not None:
            raise ValueError("--epsilon and --adapt are mutually exclusive")
        if self.command != "benchmark" and not self.adapt and self.epsilon is None:
            raise ValueError("a fixed step size needs --epsilon (or use --adapt)")
        if self.adapt and self.command == "trajectory":
            raise ValueError("trajectory dumps use a fixed --epsilon")
        return self

    @property
    def step_size(self) -> float:
        """Fixed step size, or the adaptation starting value."""
        return self.epsilon if self.epsilon is not None else DEFAULT_INITIAL_STEP_SIZE

    @property
    def half_period(self) -> float:
        """Integration time of half the longest funnel oscillation."""
        if self.metric is MetricFamilyName.EUCLIDEAN:
            return EUCLIDEAN_HALF_PERIOD
        return RIEMANNIAN_HALF_PERIOD

    def resolved_steps(self) -> int:
        """Number of leapfrog steps, defaulting to half the oscillation period."""
        if self.steps is not None:
            return self.steps
        return max(1, math.ceil(self.half_period / self.step_size - 1e-9))

    def integration_time(self) -> Optional[float]:
        """Time L re-derives from when adaptation moves epsilon and --steps is unset."""
        if self.adapt and self.steps is None:
            return self.half_period
        return None

    def display_name(self) -> str:
        """Row label for tables."""
        if self.label:
            return self.label
        mode = f"adapt r={self.target_accept:g}" if self.adapt else f"eps={self.step_size:g}"
        return f"{self.metric.value} ({mode})"

    def default_prefix(self) -> str:
        """File prefix used when none is given."""
        return self.prefix or f"{self.target}_{self.metric.value}_seed{self.seed}"

    def to_chain_config(self) -> ChainConfig:
        """Translate the flat run description into a chain configuration."""
        fp_threshold = min(self.fp_threshold, 0.5 * self.step_size)
        return ChainConfig(
            target=TargetConfig(name=self.target, n=self.n),
            metric=MetricConfig(family=self.metric, alpha=self.alpha, mass_diag=self.mass),
            integrator=IntegratorConfig(
                epsilon=self.step_size,
                n_steps=self.resolved_steps(),
                fp_threshold=fp_threshold,
                fp_max_iters=self.fp_max_iters,
                method=self.method,
                integration_time=self.integration_time(),
            ),
            n_warmup=self.warmup,
            n_samples=self.samples,
            adapt=self.adapt,
            target_accept=self.target_accept,
            seed=self.seed,
        )


def load_flat_config(path: Path) -> Dict[str, str]:
    """Read a flat key=value file; dashes in keys become underscores."""
    if not Path(path).is_file():
        raise ValueError(f"config file not found: {path}")

    values = dotenv_values(path)
    return {
        key.strip().lower().replace("-", "_"): value
        for key, value in values.items()
        if value is not None
    }

"""Base classes for targets and metric families, plus their registries."""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, ClassVar, Dict, Generic, List, Optional, Tuple, Type, TypeVar

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .config import MetricConfig, TargetConfig
from .errors import DivergenceError


DEFAULT_FD_STEP = 1e-5


class TargetModel(ABC):
    """Abstract base class for target distributions.

    A target exposes the potential V(q) = -log pi(q) + const together with its
    gradient, Hessian and third-order partials. Targets without analytic third
    derivatives can rely on the finite-difference fallback.
    """

    name: ClassVar[str]

    @property
    @abstractmethod
    def dim(self) -> int:
        """Number of position coordinates N."""
        pass

    @classmethod
    @abstractmethod
    def from_config(cls, config: TargetConfig) -> "TargetModel":
        """Build the target from its configuration."""
        pass

    @abstractmethod
    def potential(self, q: NDArray) -> float:
        """V(q) with additive constants dropped."""
        pass

    @abstractmethod
    def gradient(self, q: NDArray) -> NDArray:
        """dV/dq."""
        pass

    @abstractmethod
    def hessian(self, q: NDArray) -> NDArray:
        """d2V/dq_i dq_j."""
        pass

    def hessian_partials(self, q: NDArray) -> NDArray:
        """Stack of dH/dq_n, shape (N, N, N), first axis is n."""
        return fd_hessian_partials(self, q, DEFAULT_FD_STEP)

    def hessian_diag(self, q: NDArray) -> NDArray:
        """Diagonal of the Hessian."""
        return np.diag(self.hessian(q)).copy()

    def hessian_diag_partials(self, q: NDArray) -> NDArray:
        """d H_ii / dq_n as an (N, N) array indexed [n, i]."""
        return np.einsum("nii->ni", self.hessian_partials(q)).copy()

    @property
    def coordinate_names(self) -> List[str]:
        return [f"q_{i}" for i in range(self.dim)]

    @property
    def reference_marginals(self) -> Dict[int, Tuple[float, float]]:
        """Known (mean, variance) of single coordinates, used as bias checks."""
        return {}

    @property
    def diagnostic_index(self) -> int:
        """Coordinate whose ESS is reported in benchmark tables."""
        return self.dim - 1

    def check_position(self, q: ArrayLike) -> NDArray:
        """Validate shape and finiteness of a position vector."""
        q = np.asarray(q, dtype=float)
        if q.shape != (self.dim,):
            raise ValueError(f"{self.name}: expected position of length {self.dim}, got {q.shape}")
        if not np.all(np.isfinite(q)):
            raise DivergenceError(f"{self.name}: non-finite position")
        return q


def fd_hessian_partials(model: TargetModel, q: ArrayLike, h: float) -> NDArray:
    """Central differences of the Hessian, one slice per coordinate, symmetrized."""
    if not (np.isfinite(h) and h > 0):
        raise ValueError(f"finite-difference step must be positive, got {h}")

    q = model.check_position(q)
    partials = np.empty((model.dim, model.dim, model.dim))
    for n in range(model.dim):
        step = np.zeros(model.dim)
        step[n] = h
        upper = model.hessian(model.check_position(q + step))
        lower = model.hessian(model.check_position(q - step))
        slice_n = (upper - lower) / (2.0 * h)
        partials[n] = 0.5 * (slice_n + slice_n.T)

    if not np.all(np.isfinite(partials)):
        raise DivergenceError(f"{model.name}: non-finite finite-difference Hessian partials")
    return partials


@dataclass(frozen=True)
class MetricState:
    """Position plus cached potential and gradient; families extend the cache."""

    q: NDArray
    potential: float
    gradient: NDArray


class MetricFamily(ABC):
    """Abstract base class for metric families.

    Each family supplies the kinetic term tau = 1/2 p^T Sigma(q)^-1 p, the
    position term phi = 1/2 log|Sigma(q)| + V(q), momentum draws from
    N(0, Sigma(q)) and the three gradients the integrators consume.
    """

    name: ClassVar[str]
    separable: ClassVar[bool] = False

    def __init__(self, config: MetricConfig):
        self.config = config

    @classmethod
    def from_config(cls, config: MetricConfig) -> "MetricFamily":
        return cls(config)

    @property
    def alpha(self) -> float:
        return self.config.alpha

    @abstractmethod
    def refresh(self, model: TargetModel, q: ArrayLike) -> MetricState:
        """Build the position-dependent cache at q."""
        pass

    @abstractmethod
    def tau(self, state: MetricState, p: NDArray) -> float:
        pass

    @abstractmethod
    def phi(self, state: MetricState) -> float:
        pass

    @abstractmethod
    def dtau_dp(self, state: MetricState, p: NDArray) -> NDArray:
        pass

    def dtau_dp_at(self, model: TargetModel, q: ArrayLike, p: NDArray) -> NDArray:
        """dtau/dp at a trial position without building the full cache.

        The implicit position update evaluates this once per iteration; families
        override it to skip the potential, gradient and derivative pieces.
        """
        return self.dtau_dp(self.refresh(model, q), p)

    @abstractmethod
    def dtau_dq(self, state: MetricState, p: NDArray) -> NDArray:
        pass

    @abstractmethod
    def dphi_dq(self, state: MetricState) -> NDArray:
        pass

    @abstractmethod
    def sample_momentum(self, state: MetricState, rng: np.random.Generator) -> NDArray:
        pass

    def hamiltonian(self, state: MetricState, p: NDArray) -> float:
        """H = tau + phi."""
        return self.tau(state, p) + self.phi(state)


T = TypeVar("T")


class Registry(Generic[T]):
    """Registry mapping names to pluggable classes."""

    def __init__(self, kind: str):
        self.kind = kind
        self._classes: Dict[str, Type[T]] = {}

    def register(self, cls: Type[T]) -> Type[T]:
        """Register a class under its ``name`` attribute."""
        self._classes[cls.name] = cls
        return cls

    def get(self, name: str) -> Optional[Type[T]]:
        """Get a class by name."""
        return self._classes.get(name)

    def list_names(self) -> List[str]:
        """List all registered names."""
        return list(self._classes.keys())

    def create(self, name: str, config: Any) -> T:
        """Instantiate a registered class from its configuration."""
        cls = self.get(name)
        if cls is None:
            raise ValueError(
                f"unknown {self.kind} '{name}', expected one of {', '.join(self.list_names())}"
            )
        return cls.from_config(config)


# Global registry instances
target_registry: Registry[TargetModel] = Registry("target")
metric_registry: Registry[MetricFamily] = Registry("metric")

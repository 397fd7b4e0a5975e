"""Shared fixtures and finite-difference helpers."""

from typing import Callable

import numpy as np
import pytest
from numpy.typing import NDArray

from softabs_hmc.core.base import TargetModel, target_registry
from softabs_hmc.core.config import MetricConfig, MetricFamilyName, TargetConfig
from softabs_hmc.core.errors import DivergenceError
from softabs_hmc.core.integrate import HamiltonianSystem
from softabs_hmc.metrics import build_metric
from softabs_hmc.targets import FunnelModel


FD_STEP = 1e-5

# alpha per family at which finite-difference checks on the funnel are well conditioned
FD_ALPHA = {
    MetricFamilyName.EUCLIDEAN: 1.0,
    MetricFamilyName.SOFTABS: 1e6,
    MetricFamilyName.DIAG_SOFTABS: 1e6,
    MetricFamilyName.OUTER_SOFTABS: 0.01,
    MetricFamilyName.DIAG_OUTER_SOFTABS: 1.0,
}


class QuadraticTarget(TargetModel):
    """V(q) = 1/2 q^T A q for any symmetric A, definite or not."""

    name = "quadratic"

    def __init__(self, matrix):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))

    @classmethod
    def from_config(cls, config: TargetConfig) -> "QuadraticTarget":
        return cls(np.eye(config.n))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def potential(self, q: NDArray) -> float:
        q = self.check_position(q)
        return 0.5 * float(q @ self.matrix @ q)

    def gradient(self, q: NDArray) -> NDArray:
        return self.matrix @ self.check_position(q)

    def hessian(self, q: NDArray) -> NDArray:
        self.check_position(q)
        return self.matrix.copy()

    def hessian_partials(self, q: NDArray) -> NDArray:
        self.check_position(q)
        return np.zeros((self.dim, self.dim, self.dim))


class CliffTarget(QuadraticTarget):
    """Flat potential that diverges as soon as any coordinate leaves [-limit, limit]."""

    name = "cliff"

    def __init__(self, dim: int = 1, limit: float = 1e-9):
        super().__init__(np.zeros((dim, dim)))
        self.limit = limit

    @classmethod
    def from_config(cls, config: TargetConfig) -> "CliffTarget":
        return cls(dim=config.n)

    def check_position(self, q):
        q = super().check_position(q)
        if np.any(np.abs(q) > self.limit):
            raise DivergenceError("fell off the cliff")
        return q


def central_gradient(func: Callable[[NDArray], float], x: NDArray, h: float = FD_STEP) -> NDArray:
    """Central finite differences of a scalar function."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        grad[i] = (func(x + step) - func(x - step)) / (2.0 * h)
    return grad


def assert_gradient_close(analytic: NDArray, numeric: NDArray, rtol: float = 1e-5) -> None:
    """Relative agreement, scaled by the largest component so near-zero entries do not dominate."""
    scale = max(1.0, float(np.max(np.abs(numeric))))
    np.testing.assert_allclose(analytic, numeric, rtol=rtol, atol=rtol * scale)


def make_system(model: TargetModel, family: MetricFamilyName, alpha: float = 1e6, mass=None) -> HamiltonianSystem:
    metric = build_metric(MetricConfig(family=family, alpha=alpha, mass_diag=mass))
    return HamiltonianSystem(model, metric)


def well_conditioned_point(model: FunnelModel, rng: np.random.Generator, gap: float = 1e-2) -> NDArray:
    """Draw q in [-1, 1]^N away from Hessian eigenvalues near zero."""
    while True:
        q = rng.uniform(-1.0, 1.0, size=model.dim)
        if np.min(np.abs(np.linalg.eigvalsh(model.hessian(q)))) > gap:
            return q


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def funnel1() -> FunnelModel:
    return FunnelModel(n=1)


@pytest.fixture
def cliff_target(monkeypatch) -> type:
    """Register the cliff target by name for the duration of a test."""
    monkeypatch.setitem(target_registry._classes, CliffTarget.name, CliffTarget)
    return CliffTarget

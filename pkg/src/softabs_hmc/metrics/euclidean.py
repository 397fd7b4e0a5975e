"""Constant diagonal mass matrix (Euclidean HMC)."""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..core.base import MetricFamily, MetricState, TargetModel


@dataclass(frozen=True)
class EuclideanState(MetricState):
    mass_diag: NDArray


class EuclideanMetric(MetricFamily):
    """Sigma = M = Diag(mass_diag); the 1/2 log|M| constant is left out of phi."""

    name = "euclidean"
    separable = True

    def _mass(self, dim: int) -> NDArray:
        if self.config.mass_diag is None:
            return np.ones(dim)
        mass = np.asarray(self.config.mass_diag, dtype=float)
        if mass.shape != (dim,):
            raise ValueError(f"mass_diag has {mass.size} entries, target has {dim} coordinates")
        return mass

    def refresh(self, model: TargetModel, q: ArrayLike) -> EuclideanState:
        q = model.check_position(q)
        return EuclideanState(
            q=q,
            potential=model.potential(q),
            gradient=model.gradient(q),
            mass_diag=self._mass(model.dim),
        )

    def tau(self, state: EuclideanState, p: NDArray) -> float:
        return 0.5 * float(np.sum(p * p / state.mass_diag))

    def phi(self, state: EuclideanState) -> float:
        return state.potential

    def dtau_dp(self, state: EuclideanState, p: NDArray) -> NDArray:
        return p / state.mass_diag

    def dtau_dp_at(self, model: TargetModel, q: ArrayLike, p: NDArray) -> NDArray:
        model.check_position(q)
        return p / self._mass(model.dim)

    def dtau_dq(self, state: EuclideanState, p: NDArray) -> NDArray:
        return np.zeros_like(state.q)

    def dphi_dq(self, state: EuclideanState) -> NDArray:
        return state.gradient

    def sample_momentum(self, state: EuclideanState, rng: np.random.Generator) -> NDArray:
        return np.sqrt(state.mass_diag) * rng.standard_normal(state.q.shape[0])

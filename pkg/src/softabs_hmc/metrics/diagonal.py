"""Diagonal SoftAbs metric: the SoftAbs map applied to the Hessian diagonal only."""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..core.base import MetricFamily, MetricState, TargetModel
from ..core.spectral import Scalar, softabs_scalar, softabs_scalar_deriv


def diag_softabs_transform(h_diag: ArrayLike, alpha: float) -> Scalar:
    """Element-wise H_ii coth(alpha H_ii)."""
    return softabs_scalar(h_diag, alpha)


@dataclass(frozen=True)
class DiagonalState(MetricState):
    """Cache shared by the diagonal families.

    ``lambda_soft`` is the diagonal of Sigma and ``slope`` the derivative of the
    scalar SoftAbs map at its argument.
    """

    lambda_soft: NDArray
    slope: NDArray


class DiagonalFamily(MetricFamily):
    """Kinetic, log-det and sampling pieces common to every diagonal metric."""

    def tau(self, state: DiagonalState, p: NDArray) -> float:
        return 0.5 * float(np.sum(p * p / state.lambda_soft))

    def phi(self, state: DiagonalState) -> float:
        return 0.5 * float(np.sum(np.log(state.lambda_soft))) + state.potential

    def dtau_dp(self, state: DiagonalState, p: NDArray) -> NDArray:
        return p / state.lambda_soft

    def sample_momentum(self, state: DiagonalState, rng: np.random.Generator) -> NDArray:
        return np.sqrt(state.lambda_soft) * rng.standard_normal(state.q.shape[0])


@dataclass(frozen=True)
class DiagSoftAbsState(DiagonalState):
    diag_partials: NDArray


class DiagSoftAbsMetric(DiagonalFamily):
    """Sigma = Diag(H_ii coth(alpha H_ii)); only d H_ii / dq_n is ever needed."""

    name = "diag_softabs"

    def refresh(self, model: TargetModel, q: ArrayLike) -> DiagSoftAbsState:
        q = model.check_position(q)
        h_diag = model.hessian_diag(q)
        return DiagSoftAbsState(
            q=q,
            potential=model.potential(q),
            gradient=model.gradient(q),
            lambda_soft=np.atleast_1d(diag_softabs_transform(h_diag, self.alpha)),
            slope=np.atleast_1d(softabs_scalar_deriv(h_diag, self.alpha)),
            diag_partials=model.hessian_diag_partials(q),
        )

    def dtau_dp_at(self, model: TargetModel, q: ArrayLike, p: NDArray) -> NDArray:
        h_diag = model.hessian_diag(model.check_position(q))
        return p / np.atleast_1d(diag_softabs_transform(h_diag, self.alpha))

    def dtau_dq(self, state: DiagSoftAbsState, p: NDArray) -> NDArray:
        weights = -0.5 * p * p * state.slope / state.lambda_soft**2
        return state.diag_partials @ weights

    def dphi_dq(self, state: DiagSoftAbsState) -> NDArray:
        weights = 0.5 * state.slope / state.lambda_soft
        return state.diag_partials @ weights + state.gradient

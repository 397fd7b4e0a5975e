"""Full SoftAbs metric built from the eigendecomposition of the Hessian.

With H = Q diag(lam) Q^T the metric is Sigma = Q diag(lam coth(alpha lam)) Q^T.
Its derivative along q_n is Q (J o Q^T dH_n Q) Q^T, J the divided-difference
matrix, so both gradients collapse to a single N x N kernel contracted with
each slice of the Hessian partials.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..core.base import MetricFamily, MetricState, TargetModel
from ..core.spectral import SoftAbsPieces, build_pieces, softabs_scalar, sym_eigen


@dataclass(frozen=True)
class SoftAbsState(MetricState):
    pieces: SoftAbsPieces
    partials: NDArray


def _trace_against(kernel: NDArray, partials: NDArray) -> NDArray:
    # Tr[K dH_n] for every n; both factors are symmetric
    return np.einsum("ij,nij->n", kernel, partials)


def quadratic_form_gradient(pieces: SoftAbsPieces, p: ArrayLike, partials: NDArray) -> NDArray:
    """Gradient of p^T Sigma^-1 p: -Tr[Q (m m^T o J) Q^T dH_n] with m = Q^T p / lam_soft."""
    q_mat = pieces.eig.eigenvectors
    m = (q_mat.T @ np.asarray(p, dtype=float)) / pieces.lambda_soft
    kernel = q_mat @ (np.outer(m, m) * pieces.jmat) @ q_mat.T
    return -_trace_against(kernel, partials)


def log_det_gradient(pieces: SoftAbsPieces, partials: NDArray) -> NDArray:
    """Gradient of log|Sigma|: Tr[Q Diag(J_ii / lam_soft_i) Q^T dH_n]."""
    q_mat = pieces.eig.eigenvectors
    weights = np.diag(pieces.jmat) / pieces.lambda_soft
    kernel = (q_mat * weights) @ q_mat.T
    return _trace_against(kernel, partials)


class SoftAbsMetric(MetricFamily):
    """Dense SoftAbs metric; needs analytic or finite-difference Hessian partials."""

    name = "softabs"

    def refresh(self, model: TargetModel, q: ArrayLike) -> SoftAbsState:
        q = model.check_position(q)
        return SoftAbsState(
            q=q,
            potential=model.potential(q),
            gradient=model.gradient(q),
            pieces=build_pieces(model.hessian(q), self.alpha),
            partials=model.hessian_partials(q),
        )

    def tau(self, state: SoftAbsState, p: NDArray) -> float:
        rotated = state.pieces.eig.eigenvectors.T @ p
        return 0.5 * float(np.sum(rotated**2 / state.pieces.lambda_soft))

    def phi(self, state: SoftAbsState) -> float:
        return 0.5 * state.pieces.log_det() + state.potential

    def dtau_dp(self, state: SoftAbsState, p: NDArray) -> NDArray:
        return state.pieces.inverse_apply(p)

    def dtau_dp_at(self, model: TargetModel, q: ArrayLike, p: NDArray) -> NDArray:
        # eigenpairs and lam_soft only; J and the Hessian partials wait for the full refresh
        eig = sym_eigen(model.hessian(model.check_position(q)))
        lambda_soft = np.atleast_1d(softabs_scalar(eig.eigenvalues, self.alpha))
        q_mat = eig.eigenvectors
        return q_mat @ ((q_mat.T @ p) / lambda_soft)

    def dtau_dq(self, state: SoftAbsState, p: NDArray) -> NDArray:
        return 0.5 * quadratic_form_gradient(state.pieces, p, state.partials)

    def dphi_dq(self, state: SoftAbsState) -> NDArray:
        return 0.5 * log_det_gradient(state.pieces, state.partials) + state.gradient

    def sample_momentum(self, state: SoftAbsState, rng: np.random.Generator) -> NDArray:
        z = rng.standard_normal(state.pieces.eig.dim)
        return state.pieces.eig.eigenvectors @ (np.sqrt(state.pieces.lambda_soft) * z)

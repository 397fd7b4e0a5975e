"""Symmetric eigendecomposition and the SoftAbs matrix-function machinery.

The SoftAbs map sends each eigenvalue ``lam`` of a symmetric matrix to
``lam * coth(alpha * lam)``, a smooth absolute value floored at ``1 / alpha``.
Everything downstream works from the cached decomposition ``H = Q diag(lam) Q^T``;
no ordering of the eigenvalues is assumed anywhere.
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DivergenceError


# Below this |alpha * lam| the even Taylor series is used.
SMALL_ARGUMENT = 1e-4
# Above this coth has saturated: coth(18) - 1 < 1e-15.
SATURATION_ARGUMENT = 18.0
# Relative eigenvalue gap below which the divided difference becomes a derivative.
TIE_TOLERANCE = 1e-10

Scalar = Union[float, NDArray]


@dataclass(frozen=True)
class SymEig:
    """Eigendecomposition of a symmetric matrix, columns of Q are eigenvectors."""

    eigenvalues: NDArray
    eigenvectors: NDArray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self, values: Optional[ArrayLike] = None) -> NDArray:
        """Return Q diag(values) Q^T, with the original eigenvalues by default."""
        values = self.eigenvalues if values is None else np.asarray(values, dtype=float)
        q_mat = self.eigenvectors
        return (q_mat * values) @ q_mat.T


@dataclass(frozen=True)
class SoftAbsPieces:
    """Cached pieces of the SoftAbs metric at one position."""

    alpha: float
    eig: SymEig
    lambda_soft: NDArray
    jmat: NDArray

    def metric(self) -> NDArray:
        """Dense SoftAbs metric Q diag(lambda_soft) Q^T."""
        return self.eig.reconstruct(self.lambda_soft)

    def inverse_apply(self, vector: ArrayLike) -> NDArray:
        """Apply the inverse metric without forming it."""
        q_mat = self.eig.eigenvectors
        return q_mat @ ((q_mat.T @ np.asarray(vector, dtype=float)) / self.lambda_soft)

    def log_det(self) -> float:
        return float(np.sum(np.log(self.lambda_soft)))


def _check_alpha(alpha: float) -> None:
    if not (np.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be positive and finite, got {alpha}")


def _as_float_array(lam: ArrayLike) -> NDArray:
    values = np.atleast_1d(np.asarray(lam, dtype=float))
    if not np.all(np.isfinite(values)):
        raise DivergenceError("non-finite eigenvalue passed to the SoftAbs map")
    return values


def _restore_shape(values: NDArray, like: ArrayLike) -> Scalar:
    if np.ndim(like) == 0:
        return float(values[0])
    return values.reshape(np.shape(like))


def softabs_scalar(lam: ArrayLike, alpha: float) -> Scalar:
    """Evaluate lam * coth(alpha * lam) element-wise without overflow."""
    _check_alpha(alpha)
    values = _as_float_array(lam)
    x = alpha * values
    ax = np.abs(x)

    out = np.abs(values)
    small = ax <= SMALL_ARGUMENT
    middle = (ax > SMALL_ARGUMENT) & (ax < SATURATION_ARGUMENT)

    # x coth x = 1 + x^2/3 - x^4/45 + 2 x^6/945 - ...
    x2 = x[small] ** 2
    out[small] = (1.0 + x2 * (1.0 / 3.0 - x2 * (1.0 / 45.0 - x2 * (2.0 / 945.0)))) / alpha
    out[middle] = values[middle] / np.tanh(x[middle])

    return _restore_shape(out, lam)


def softabs_scalar_deriv(lam: ArrayLike, alpha: float) -> Scalar:
    """Derivative of lam * coth(alpha * lam): coth(x) - x / sinh(x)^2 with x = alpha * lam."""
    _check_alpha(alpha)
    values = _as_float_array(lam)
    x = alpha * values
    ax = np.abs(x)

    out = np.sign(values)
    small = ax <= SMALL_ARGUMENT
    middle = (ax > SMALL_ARGUMENT) & (ax < SATURATION_ARGUMENT)

    xs = x[small]
    x2 = xs**2
    out[small] = xs * (2.0 / 3.0 - x2 * (4.0 / 45.0 - x2 * (12.0 / 945.0)))
    xm = x[middle]
    out[middle] = 1.0 / np.tanh(xm) - xm / np.sinh(xm) ** 2

    return _restore_shape(out, lam)


def sym_eigen(h: ArrayLike) -> SymEig:
    """Eigendecompose a symmetric matrix after symmetrizing it."""
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise DivergenceError("non-finite entry in Hessian")

    sym = 0.5 * (h + h.T)
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as e:
        raise DivergenceError(f"eigendecomposition failed: {e}") from e

    return SymEig(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def divided_differences(lam: ArrayLike, alpha: float) -> NDArray:
    """J matrix of divided differences of the SoftAbs eigenvalue map.

    Near-equal pairs (including the diagonal) use the derivative at the midpoint;
    clusters of three or more equal eigenvalues follow the same pairwise rule.
    """
    lam = np.asarray(lam, dtype=float)
    soft = np.atleast_1d(softabs_scalar(lam, alpha))

    lam_i = lam[:, None]
    lam_j = lam[None, :]
    diff = lam_i - lam_j
    tie = np.abs(diff) <= TIE_TOLERANCE * (1.0 + np.abs(lam_i) + np.abs(lam_j))

    slope = softabs_scalar_deriv(0.5 * (lam_i + lam_j), alpha)
    secant = (soft[:, None] - soft[None, :]) / np.where(tie, 1.0, diff)
    return np.where(tie, slope, secant)


def build_pieces(h: ArrayLike, alpha: float) -> SoftAbsPieces:
    """Decompose H and cache everything the SoftAbs metric needs."""
    _check_alpha(alpha)
    eig = sym_eigen(h)
    lambda_soft = np.atleast_1d(softabs_scalar(eig.eigenvalues, alpha))
    jmat = divided_differences(eig.eigenvalues, alpha)
    return SoftAbsPieces(alpha=float(alpha), eig=eig, lambda_soft=lambda_soft, jmat=jmat)

"""Zero-mean multivariate Gaussian target."""

from typing import Dict, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ..core.base import TargetModel
from ..core.config import TargetConfig
from ..core.errors import DivergenceError


class GaussianModel(TargetModel):
    """N(0, S) with V(q) = 1/2 q^T S^-1 q.

    The Hessian is the constant precision S^-1, so every third derivative vanishes.
    """

    name = "gaussian"

    def __init__(self, dim: int, covariance: Optional[ArrayLike] = None):
        if dim < 1:
            raise ValueError("gaussian dimension must be at least 1")
        cov = np.eye(dim) if covariance is None else np.asarray(covariance, dtype=float)
        if cov.shape != (dim, dim):
            raise ValueError(f"covariance must be {dim}x{dim}, got {cov.shape}")
        if not np.allclose(cov, cov.T):
            raise ValueError("covariance must be symmetric")

        try:
            self._factor = cho_factor(cov, lower=True)
        except LinAlgError as e:
            raise ValueError(f"covariance is not positive definite: {e}") from e

        self._dim = dim
        self.covariance = cov
        self.precision = cho_solve(self._factor, np.eye(dim))
        self.precision = 0.5 * (self.precision + self.precision.T)

    @classmethod
    def from_config(cls, config: TargetConfig) -> "GaussianModel":
        return cls(dim=config.n)

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def reference_marginals(self) -> Dict[int, Tuple[float, float]]:
        return {i: (0.0, float(self.covariance[i, i])) for i in range(self._dim)}

    def potential(self, q: NDArray) -> float:
        q = self.check_position(q)
        value = 0.5 * float(q @ cho_solve(self._factor, q))
        if not np.isfinite(value):
            raise DivergenceError("gaussian: non-finite potential")
        return value

    def gradient(self, q: NDArray) -> NDArray:
        q = self.check_position(q)
        return cho_solve(self._factor, q)

    def hessian(self, q: NDArray) -> NDArray:
        self.check_position(q)
        return self.precision.copy()

    def hessian_partials(self, q: NDArray) -> NDArray:
        self.check_position(q)
        return np.zeros((self._dim, self._dim, self._dim))

    def hessian_diag_partials(self, q: NDArray) -> NDArray:
        self.check_position(q)
        return np.zeros((self._dim, self._dim))

"""Neal's funnel."""

from typing import Dict, List, Tuple

import numpy as np
from numpy.typing import NDArray

from ..core.base import TargetModel
from ..core.config import TargetConfig
from ..core.errors import DivergenceError


# exp(v) overflows double precision just above 709.
MAX_LOG_SCALE = 700.0


class FunnelModel(TargetModel):
    """Funnel prod_i N(x_i | 0, e^-v) N(v | 0, 9).

    Coordinates are laid out as q = (x_1, ..., x_n, v) with v last, and
    V(x, v) = (e^v / 2) sum x_i^2 - n v / 2 + v^2 / 18.
    """

    name = "funnel"

    def __init__(self, n: int = 10):
        if n < 1:
            raise ValueError("funnel needs at least one x coordinate")
        self.n = n

    @classmethod
    def from_config(cls, config: TargetConfig) -> "FunnelModel":
        return cls(n=config.n)

    @property
    def dim(self) -> int:
        return self.n + 1

    @property
    def coordinate_names(self) -> List[str]:
        return [f"x_{i}" for i in range(1, self.n + 1)] + ["v"]

    @property
    def reference_marginals(self) -> Dict[int, Tuple[float, float]]:
        return {self.n: (0.0, 9.0)}

    def _split(self, q: NDArray) -> Tuple[NDArray, float, float]:
        q = self.check_position(q)
        x, v = q[:-1], float(q[-1])
        if v > MAX_LOG_SCALE:
            raise DivergenceError(f"funnel: e^v overflows at v = {v:.4g}")
        return x, v, float(np.exp(v))

    def potential(self, q: NDArray) -> float:
        x, v, ev = self._split(q)
        value = 0.5 * ev * float(x @ x) - 0.5 * self.n * v + v * v / 18.0
        if not np.isfinite(value):
            raise DivergenceError("funnel: non-finite potential")
        return value

    def gradient(self, q: NDArray) -> NDArray:
        x, v, ev = self._split(q)
        grad = np.empty(self.dim)
        grad[:-1] = ev * x
        grad[-1] = 0.5 * ev * float(x @ x) - 0.5 * self.n + v / 9.0
        return grad

    def hessian(self, q: NDArray) -> NDArray:
        x, _, ev = self._split(q)
        n = self.n
        hess = np.zeros((self.dim, self.dim))
        idx = np.arange(n)
        hess[idx, idx] = ev
        hess[:n, n] = ev * x
        hess[n, :n] = ev * x
        hess[n, n] = 0.5 * ev * float(x @ x) + 1.0 / 9.0
        return hess

    def hessian_partials(self, q: NDArray) -> NDArray:
        x, _, ev = self._split(q)
        n = self.n
        idx = np.arange(n)
        partials = np.zeros((self.dim, self.dim, self.dim))

        # d/dx_k: only the (x_k, v) pair and the (v, v) entry move
        partials[idx, idx, n] = ev
        partials[idx, n, idx] = ev
        partials[idx, n, n] = ev * x

        # d/dv: every e^v term differentiates to itself, the 1/9 drops out
        partials[n, idx, idx] = ev
        partials[n, :n, n] = ev * x
        partials[n, n, :n] = ev * x
        partials[n, n, n] = 0.5 * ev * float(x @ x)
        return partials

    def hessian_diag(self, q: NDArray) -> NDArray:
        x, _, ev = self._split(q)
        diag = np.full(self.dim, ev)
        diag[-1] = 0.5 * ev * float(x @ x) + 1.0 / 9.0
        return diag

    def hessian_diag_partials(self, q: NDArray) -> NDArray:
        x, _, ev = self._split(q)
        n = self.n
        table = np.zeros((self.dim, self.dim))
        table[:n, n] = ev * x
        table[n, :n] = ev
        table[n, n] = 0.5 * ev * float(x @ x)
        return table

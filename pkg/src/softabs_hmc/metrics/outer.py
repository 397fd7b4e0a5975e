"""Outer-product metrics built from the gradient instead of the Hessian.

The full variant applies the SoftAbs map to the rank-one matrix g g^T:

    Sigma = a I + b g g^T,  a = s / sinh(alpha s),  b = tanh(alpha s / 2),  s = g.g

so the direction along g carries s coth(alpha s) and every orthogonal direction
carries a. Sigma is inverted in closed form (Sherman-Morrison on the rank-one
update) and never formed densely. The cosh/sinh coefficients blow up once
alpha s is large, which is why this family only behaves for alpha << 1.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..core.base import MetricFamily, MetricState, TargetModel
from ..core.errors import DivergenceError
from ..core.spectral import (
    SMALL_ARGUMENT,
    Scalar,
    softabs_scalar,
    softabs_scalar_deriv,
)
from .diagonal import DiagonalFamily, DiagonalState


# sinh and cosh overflow just above 710.
MAX_OUTER_ARGUMENT = 700.0


@dataclass(frozen=True)
class OuterFactors:
    """Coefficients of Sigma = a I + b g g^T and their derivatives in s = g.g."""

    alpha: float
    g: NDArray
    s: float
    a: float
    b: float
    lambda_par: float
    a_prime: float
    b_prime: float
    lambda_par_prime: float
    log_a_prime: float

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    def metric(self) -> NDArray:
        return self.a * np.eye(self.dim) + self.b * np.outer(self.g, self.g)

    def inverse_apply(self, p: NDArray) -> NDArray:
        """Sigma^-1 p: 1/a off the g direction, 1/lambda_par along it."""
        if self.s == 0.0:
            return p / self.a
        along = float(self.g @ p) / self.s
        return p / self.a + along * (1.0 / self.lambda_par - 1.0 / self.a) * self.g

    def log_det(self) -> float:
        return (self.dim - 1) * math.log(self.a) + math.log(self.lambda_par)

    def sqrt_apply(self, z: NDArray) -> NDArray:
        """Sigma^1/2 z, the symmetric square root."""
        scale = self.b / (math.sqrt(self.lambda_par) + math.sqrt(self.a))
        return math.sqrt(self.a) * z + scale * float(self.g @ z) * self.g


def outer_softabs_metric(g: ArrayLike, alpha: float) -> OuterFactors:
    """SoftAbs of g g^T in factored form."""
    if not (np.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be positive and finite, got {alpha}")
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise DivergenceError("non-finite gradient passed to the outer-product metric")

    s = float(g @ g)
    x = alpha * s
    if x > MAX_OUTER_ARGUMENT:
        raise DivergenceError(
            f"outer-product metric overflows: alpha * g.g = {x:.4g} > {MAX_OUTER_ARGUMENT:g}"
        )

    # h(x) = x / sinh(x) so that a = h(x) / alpha
    if x <= SMALL_ARGUMENT:
        x2 = x * x
        h = 1.0 - x2 / 6.0 + 7.0 * x2 * x2 / 360.0
        h_prime = -x / 3.0 + 7.0 * x * x2 / 90.0
        log_a_prime = alpha * h_prime / h
    else:
        coth = 1.0 / math.tanh(x)
        h = x / math.sinh(x)
        h_prime = (1.0 - x * coth) / math.sinh(x)
        log_a_prime = alpha * (1.0 - x * coth) / x

    if not h / alpha > 0.0:
        raise DivergenceError(f"outer-product metric underflows at alpha * g.g = {x:.4g}")

    half_tanh = math.tanh(0.5 * x)
    return OuterFactors(
        alpha=float(alpha),
        g=g,
        s=s,
        a=h / alpha,
        b=half_tanh,
        lambda_par=float(softabs_scalar(s, alpha)),
        a_prime=h_prime,
        b_prime=0.5 * alpha * (1.0 - half_tanh * half_tanh),
        lambda_par_prime=float(softabs_scalar_deriv(s, alpha)),
        log_a_prime=log_a_prime,
    )


@dataclass(frozen=True)
class OuterSoftAbsState(MetricState):
    factors: OuterFactors
    hessian: NDArray


class OuterSoftAbsMetric(MetricFamily):
    """Rank-one SoftAbs metric on g g^T; gradients chain through dg/dq = H."""

    name = "outer_softabs"

    def refresh(self, model: TargetModel, q: ArrayLike) -> OuterSoftAbsState:
        q = model.check_position(q)
        g = model.gradient(q)
        return OuterSoftAbsState(
            q=q,
            potential=model.potential(q),
            gradient=g,
            factors=outer_softabs_metric(g, self.alpha),
            hessian=model.hessian(q),
        )

    def tau(self, state: OuterSoftAbsState, p: NDArray) -> float:
        return 0.5 * float(p @ state.factors.inverse_apply(p))

    def phi(self, state: OuterSoftAbsState) -> float:
        return 0.5 * state.factors.log_det() + state.potential

    def dtau_dp(self, state: OuterSoftAbsState, p: NDArray) -> NDArray:
        return state.factors.inverse_apply(p)

    def dtau_dp_at(self, model: TargetModel, q: ArrayLike, p: NDArray) -> NDArray:
        g = model.gradient(model.check_position(q))
        return outer_softabs_metric(g, self.alpha).inverse_apply(p)

    def dtau_dq(self, state: OuterSoftAbsState, p: NDArray) -> NDArray:
        f = state.factors
        w = f.inverse_apply(p)
        gw = float(f.g @ w)
        # d tau / d g = -1/2 w^T (d Sigma / d g) w
        grad_g = -((f.a_prime * float(w @ w) + f.b_prime * gw * gw) * f.g + f.b * gw * w)
        return state.hessian @ grad_g

    def dphi_dq(self, state: OuterSoftAbsState) -> NDArray:
        f = state.factors
        coef = (f.dim - 1) * f.log_a_prime + f.lambda_par_prime / f.lambda_par
        return state.hessian @ (coef * f.g) + state.gradient

    def sample_momentum(self, state: OuterSoftAbsState, rng: np.random.Generator) -> NDArray:
        return state.factors.sqrt_apply(rng.standard_normal(state.factors.dim))


def diag_outer_softabs(g: ArrayLike, alpha: float) -> Scalar:
    """Element-wise g_i^2 coth(alpha g_i^2)."""
    g = np.asarray(g, dtype=float)
    return softabs_scalar(g * g, alpha)


@dataclass(frozen=True)
class DiagOuterSoftAbsState(DiagonalState):
    hessian: NDArray


class DiagOuterSoftAbsMetric(DiagonalFamily):
    """Sigma = Diag(g_i^2 coth(alpha g_i^2)); derivatives chain through dg_i/dq_n = H_in."""

    name = "diag_outer_softabs"

    def refresh(self, model: TargetModel, q: ArrayLike) -> DiagOuterSoftAbsState:
        q = model.check_position(q)
        g = model.gradient(q)
        return DiagOuterSoftAbsState(
            q=q,
            potential=model.potential(q),
            gradient=g,
            lambda_soft=np.atleast_1d(diag_outer_softabs(g, self.alpha)),
            slope=np.atleast_1d(softabs_scalar_deriv(g * g, self.alpha)),
            hessian=model.hessian(q),
        )

    def dtau_dp_at(self, model: TargetModel, q: ArrayLike, p: NDArray) -> NDArray:
        g = model.gradient(model.check_position(q))
        return p / np.atleast_1d(diag_outer_softabs(g, self.alpha))

    def dtau_dq(self, state: DiagOuterSoftAbsState, p: NDArray) -> NDArray:
        weights = -p * p * state.slope * state.gradient / state.lambda_soft**2
        return state.hessian @ weights

    def dphi_dq(self, state: DiagOuterSoftAbsState) -> NDArray:
        weights = state.slope * state.gradient / state.lambda_soft
        return state.hessian @ weights + state.gradient

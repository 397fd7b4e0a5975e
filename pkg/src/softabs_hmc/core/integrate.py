"""Symplectic integrators: explicit leapfrog and the implicit generalized leapfrog."""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from .base import MetricFamily, MetricState, TargetModel
from .config import IntegratorConfig
from .errors import ConvergenceError, DivergenceError


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhaseState:
    """Point (q, p) in phase space with the metric cache at q and H = tau + phi."""

    q: NDArray
    p: NDArray
    metric: MetricState
    energy: float

    def flip(self) -> "PhaseState":
        """Negate the momentum; H is even in p so the energy carries over."""
        return replace(self, p=-self.p)


class HamiltonianSystem:
    """A target paired with a metric family."""

    def __init__(self, model: TargetModel, metric: MetricFamily):
        self.model = model
        self.metric = metric

    @property
    def dim(self) -> int:
        return self.model.dim

    def refresh(self, q: NDArray) -> MetricState:
        return self.metric.refresh(self.model, q)

    def hamiltonian(self, state: MetricState, p: NDArray) -> float:
        energy = self.metric.hamiltonian(state, p)
        if not np.isfinite(energy):
            raise DivergenceError(f"non-finite Hamiltonian ({energy})")
        return energy

    def state(self, q: NDArray, p: NDArray, metric_state: Optional[MetricState] = None) -> PhaseState:
        """Build a phase state, refreshing the metric unless a cache at q is supplied."""
        metric_state = metric_state if metric_state is not None else self.refresh(q)
        p = np.asarray(p, dtype=float)
        if p.shape != metric_state.q.shape:
            raise ValueError(f"momentum has shape {p.shape}, expected {metric_state.q.shape}")
        return PhaseState(
            q=metric_state.q,
            p=p,
            metric=metric_state,
            energy=self.hamiltonian(metric_state, p),
        )

    def uses_leapfrog(self, config: IntegratorConfig) -> bool:
        """Whether the explicit scheme applies for this configuration."""
        if config.method == "leapfrog":
            if not self.metric.separable:
                raise ValueError(f"explicit leapfrog needs a constant metric, not '{self.metric.name}'")
            return True
        if config.method == "generalized":
            return False
        return self.metric.separable


@dataclass(frozen=True)
class ConvergenceReport:
    """Fixed-point update counts and final increments of one generalized step."""

    p_iterations: int
    q_iterations: int
    p_delta: float
    q_delta: float


@dataclass(frozen=True)
class TrajectoryPoint:
    step: int
    q: NDArray
    p: NDArray
    energy: float


@dataclass
class TrajectoryResult:
    """Outcome of integrating L steps; ``final`` is None once a step diverged."""

    final: Optional[PhaseState]
    log: List[TrajectoryPoint] = field(default_factory=list)
    reports: List[ConvergenceReport] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def diverged(self) -> bool:
        return self.error is not None


def _check_finite(values: NDArray, what: str) -> NDArray:
    if not np.all(np.isfinite(values)):
        raise DivergenceError(f"non-finite {what}")
    return values


def _solve_fixed_point(
    func: Callable[[NDArray], NDArray],
    x0: NDArray,
    threshold: float,
    max_iters: int,
) -> Tuple[NDArray, int, float]:
    """Iterate x <- func(x) until max |x_new - x| <= threshold.

    Returns the iterate, the number of updates and the last increment. The pass
    that only confirms convergence is not an update, but at least one is counted.
    """
    x = x0
    delta = float("inf")
    for iteration in range(1, max_iters + 1):
        x_new = _check_finite(func(x), "fixed-point iterate")
        delta = float(np.max(np.abs(x_new - x))) if x.size else 0.0
        x = x_new
        if delta <= threshold:
            return x, max(iteration - 1, 1), delta
    raise ConvergenceError(
        f"fixed point did not converge in {max_iters} iterations (last increment {delta:.3g})",
        iterations=max_iters,
        delta=delta,
    )


def leapfrog_step(system: HamiltonianSystem, state: PhaseState, epsilon: float) -> PhaseState:
    """Kick, drift, kick under a constant metric."""
    metric = system.metric
    if not metric.separable:
        raise ValueError(f"explicit leapfrog needs a constant metric, not '{metric.name}'")

    half = 0.5 * epsilon
    p_half = state.p - half * metric.dphi_dq(state.metric)
    q_new = _check_finite(state.q + epsilon * metric.dtau_dp(state.metric, p_half), "position")
    cache = system.refresh(q_new)
    p_new = _check_finite(p_half - half * metric.dphi_dq(cache), "momentum")
    return system.state(q_new, p_new, cache)


def gen_leapfrog_step(
    system: HamiltonianSystem,
    state: PhaseState,
    config: IntegratorConfig,
    epsilon: Optional[float] = None,
) -> Tuple[PhaseState, ConvergenceReport]:
    """One generalized leapfrog step.

    The momentum half step and the position full step are solved by fixed-point
    iteration from their pre-update values. The position iterations only need
    dtau/dp at each trial point; the full metric cache is rebuilt once the
    position has converged, before the closing explicit kicks.
    """
    metric = system.metric
    eps = config.epsilon if epsilon is None else epsilon
    half = 0.5 * eps
    threshold, max_iters = config.fp_threshold, config.fp_max_iters
    cache = state.metric

    rho = _check_finite(state.p - half * metric.dphi_dq(cache), "momentum")
    p_half, p_iters, p_delta = _solve_fixed_point(
        lambda p: rho - half * metric.dtau_dq(cache, p), rho, threshold, max_iters
    )

    sigma = state.q
    velocity = metric.dtau_dp(cache, p_half)

    def position_update(q: NDArray) -> NDArray:
        if np.array_equal(q, sigma):
            return sigma + eps * velocity
        return sigma + half * (velocity + metric.dtau_dp_at(system.model, q, p_half))

    q_new, q_iters, q_delta = _solve_fixed_point(position_update, sigma, threshold, max_iters)

    new_cache = system.refresh(q_new)
    p_new = p_half - half * metric.dtau_dq(new_cache, p_half)
    p_new = _check_finite(p_new - half * metric.dphi_dq(new_cache), "momentum")

    report = ConvergenceReport(
        p_iterations=p_iters, q_iterations=q_iters, p_delta=p_delta, q_delta=q_delta
    )
    return system.state(q_new, p_new, new_cache), report


def integrate_trajectory(
    system: HamiltonianSystem,
    state: PhaseState,
    config: IntegratorConfig,
    epsilon: Optional[float] = None,
    n_steps: Optional[int] = None,
    record: bool = False,
) -> TrajectoryResult:
    """Compose L steps; the first divergent step ends the trajectory."""
    eps = config.epsilon if epsilon is None else epsilon
    steps = config.n_steps if n_steps is None else n_steps
    explicit = system.uses_leapfrog(config)

    result = TrajectoryResult(final=state)
    if record:
        result.log.append(TrajectoryPoint(0, state.q, state.p, state.energy))

    current = state
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for step in range(1, steps + 1):
            try:
                if explicit:
                    current = leapfrog_step(system, current, eps)
                else:
                    current, report = gen_leapfrog_step(system, current, config, eps)
                    result.reports.append(report)
            except DivergenceError as e:
                logger.debug(f"Trajectory diverged at step {step}: {e}")
                result.final = None
                result.error = f"step {step}: {e}"
                return result

            if record:
                result.log.append(TrajectoryPoint(step, current.q, current.p, current.energy))

    result.final = current
    return result

"""The HMC Markov chain: transitions, dual-averaging warm-up and sample collection."""

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
from numpy.typing import NDArray

from ..metrics import build_metric
from ..targets import build_target
from .config import AdaptationConfig, ChainConfig, IntegratorConfig
from .errors import ChainFailure, DivergenceError
from .integrate import HamiltonianSystem, PhaseState, integrate_trajectory


logger = logging.getLogger(__name__)

# Warm-up counts as failed once this share of its transitions diverged.
FAILURE_DIVERGENCE_SHARE = 0.99


@dataclass(frozen=True)
class DualAveragingState:
    """Iterates of the dual-averaging step-size scheme, on the log scale."""

    log_epsilon: float
    log_epsilon_bar: float
    h_bar: float
    iteration: int
    mu: float
    target: float
    gamma: float
    t0: float
    kappa: float

    @classmethod
    def start(
        cls, epsilon_init: float, target: float, config: Optional[AdaptationConfig] = None
    ) -> "DualAveragingState":
        config = config or AdaptationConfig()
        return cls(
            log_epsilon=math.log(epsilon_init),
            log_epsilon_bar=0.0,
            h_bar=0.0,
            iteration=0,
            mu=math.log(10.0 * epsilon_init),
            target=target,
            gamma=config.gamma,
            t0=config.t0,
            kappa=config.kappa,
        )

    @property
    def epsilon(self) -> float:
        """Step size to use for the next warm-up transition."""
        return math.exp(self.log_epsilon)

    @property
    def averaged_epsilon(self) -> float:
        """Step size frozen in once warm-up ends."""
        return math.exp(self.log_epsilon_bar)


def dual_avg_update(state: DualAveragingState, accept_prob: float) -> DualAveragingState:
    """Advance the scheme by one observed acceptance statistic."""
    t = state.iteration + 1
    weight = 1.0 / (t + state.t0)
    h_bar = (1.0 - weight) * state.h_bar + weight * (state.target - accept_prob)
    log_epsilon = state.mu - math.sqrt(t) / state.gamma * h_bar
    eta = t ** (-state.kappa)
    log_epsilon_bar = eta * log_epsilon + (1.0 - eta) * state.log_epsilon_bar
    return replace(
        state,
        log_epsilon=log_epsilon,
        log_epsilon_bar=log_epsilon_bar,
        h_bar=h_bar,
        iteration=t,
    )


def accept_probability(delta_h: float) -> float:
    """min(1, exp(-delta_h)); NaN counts as a certain rejection."""
    if math.isnan(delta_h):
        return 0.0
    if delta_h <= 0.0:
        return 1.0
    return math.exp(-delta_h)


@dataclass(frozen=True)
class Transition:
    state: PhaseState
    accepted: bool
    delta_h: float
    accept_prob: float
    diverged: bool = False
    error: Optional[str] = None


def hmc_transition(
    state: PhaseState,
    system: HamiltonianSystem,
    config: IntegratorConfig,
    rng: np.random.Generator,
    epsilon: Optional[float] = None,
    n_steps: Optional[int] = None,
) -> Transition:
    """Resample momentum, integrate L steps and apply the Metropolis correction.

    ``state.metric`` must already be refreshed at ``state.q``. On rejection or
    divergence the returned state keeps the current position object unchanged.
    """
    momentum = system.metric.sample_momentum(state.metric, rng)
    try:
        current = system.state(state.q, momentum, state.metric)
    except DivergenceError as e:
        logger.debug(f"Diverged before integrating: {e}")
        return Transition(state, False, math.inf, 0.0, diverged=True, error=str(e))

    result = integrate_trajectory(system, current, config, epsilon=epsilon, n_steps=n_steps)
    if result.diverged:
        logger.debug(f"Divergent transition at q={state.q}: {result.error}")
        return Transition(current, False, math.inf, 0.0, diverged=True, error=result.error)

    delta_h = result.final.energy - current.energy
    prob = accept_probability(delta_h)
    accepted = bool(rng.uniform() < prob)
    return Transition(result.final if accepted else current, accepted, delta_h, prob)


@dataclass
class ChainOutput:
    """Samples and bookkeeping of one chain."""

    samples: NDArray
    accept_rate: float
    accepted_fraction: float
    epsilon: float
    n_steps: int
    epsilon_trace: NDArray
    n_divergent: int
    n_warmup_divergent: int
    accepted: NDArray
    delta_h: NDArray
    accept_probs: NDArray
    elapsed: float
    coordinate_names: List[str] = field(default_factory=list)
    failure: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.failure is None

    def raise_for_status(self) -> None:
        if self.failure is not None:
            raise ChainFailure(
                self.failure,
                diagnostics={
                    "n_warmup_divergent": self.n_warmup_divergent,
                    "epsilon": self.epsilon,
                },
            )


def _initial_state(
    system: HamiltonianSystem, config: ChainConfig, rng: np.random.Generator
) -> PhaseState:
    low, high = config.init_range
    q0 = rng.uniform(low, high, size=system.dim)
    cache = system.refresh(q0)
    return PhaseState(q=cache.q, p=np.zeros(system.dim), metric=cache, energy=cache.potential)


def run_chain(config: ChainConfig) -> ChainOutput:
    """Run warm-up and sampling for one seeded chain.

    Warm-up adapts the step size when ``config.adapt`` is set; sampling always
    runs at a frozen step size so the recorded chain is time-homogeneous. With an
    integration time on the integrator, L follows the step size in use.
    """
    started = time.perf_counter()
    rng = np.random.Generator(np.random.PCG64(config.seed))
    model = build_target(config.target)
    system = HamiltonianSystem(model, build_metric(config.metric))
    integrator = config.integrator
    dim = model.dim

    logger.info(
        f"Starting chain: target={model.name} dim={dim} metric={system.metric.name} "
        f"seed={config.seed} L={integrator.steps_for(integrator.epsilon)}"
    )

    def failed(message: str, epsilon: float, trace: List[float], warmup_divergent: int) -> ChainOutput:
        logger.warning(message)
        return ChainOutput(
            samples=np.empty((0, dim)),
            accept_rate=0.0,
            accepted_fraction=0.0,
            epsilon=epsilon,
            n_steps=integrator.steps_for(epsilon),
            epsilon_trace=np.asarray(trace, dtype=float),
            n_divergent=0,
            n_warmup_divergent=warmup_divergent,
            accepted=np.zeros(0, dtype=bool),
            delta_h=np.zeros(0),
            accept_probs=np.zeros(0),
            elapsed=time.perf_counter() - started,
            coordinate_names=model.coordinate_names,
            failure=message,
        )

    try:
        state = _initial_state(system, config, rng)
    except DivergenceError as e:
        return failed(f"initial position is unusable: {e}", integrator.epsilon, [], 0)

    adaptation = DualAveragingState.start(integrator.epsilon, config.target_accept, config.adaptation)
    epsilon = integrator.epsilon
    trace: List[float] = []
    warmup_divergent = 0

    for _ in range(config.n_warmup):
        step_size = adaptation.epsilon if config.adapt else epsilon
        transition = hmc_transition(
            state, system, integrator, rng, epsilon=step_size, n_steps=integrator.steps_for(step_size)
        )
        trace.append(step_size)
        warmup_divergent += transition.diverged
        state = transition.state
        if config.adapt:
            adaptation = dual_avg_update(adaptation, transition.accept_prob)

    if config.adapt and config.n_warmup > 0:
        epsilon = adaptation.averaged_epsilon
    n_steps = integrator.steps_for(epsilon)

    logger.info(
        f"Warm-up finished: epsilon={epsilon:.4g} L={n_steps} "
        f"divergences={warmup_divergent}/{config.n_warmup}"
    )

    if config.n_warmup > 0 and warmup_divergent >= FAILURE_DIVERGENCE_SHARE * config.n_warmup:
        return failed(
            f"warm-up diverged in {warmup_divergent} of {config.n_warmup} transitions",
            epsilon,
            trace,
            warmup_divergent,
        )

    samples = np.empty((config.n_samples, dim))
    accepted = np.zeros(config.n_samples, dtype=bool)
    delta_h = np.zeros(config.n_samples)
    accept_probs = np.zeros(config.n_samples)
    divergent = 0

    for i in range(config.n_samples):
        transition = hmc_transition(state, system, integrator, rng, epsilon=epsilon, n_steps=n_steps)
        state = transition.state
        samples[i] = state.q
        accepted[i] = transition.accepted
        delta_h[i] = transition.delta_h
        accept_probs[i] = transition.accept_prob
        divergent += transition.diverged

    elapsed = time.perf_counter() - started
    accept_rate = float(accept_probs.mean()) if config.n_samples else 0.0
    logger.info(
        f"Chain finished in {elapsed:.2f}s: accept_rate={accept_rate:.3f} divergences={divergent}"
    )

    return ChainOutput(
        samples=samples,
        accept_rate=accept_rate,
        accepted_fraction=float(accepted.mean()) if config.n_samples else 0.0,
        epsilon=epsilon,
        n_steps=n_steps,
        epsilon_trace=np.asarray(trace, dtype=float),
        n_divergent=divergent,
        n_warmup_divergent=warmup_divergent,
        accepted=accepted,
        delta_h=delta_h,
        accept_probs=accept_probs,
        elapsed=elapsed,
        coordinate_names=model.coordinate_names,
    )

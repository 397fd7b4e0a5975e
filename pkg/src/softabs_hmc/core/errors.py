"""Exceptions raised by the sampler."""

from typing import Optional


class SamplerError(Exception):
    """Base class for sampler errors."""


class DivergenceError(SamplerError):
    """A trajectory point is numerically unusable.

    Raised for non-finite potentials or Hessians, overflow guards and failed
    eigendecompositions. Callers treat it as an automatic Metropolis rejection.
    """


class ConvergenceError(DivergenceError):
    """A fixed-point iteration hit its iteration cap before converging."""

    def __init__(self, message: str, iterations: int, delta: float):
        super().__init__(message)
        self.iterations = iterations
        self.delta = delta


class ChainFailure(SamplerError):
    """A chain could not produce usable samples."""

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}

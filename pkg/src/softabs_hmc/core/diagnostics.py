"""Chain statistics: autocorrelation, effective sample size and moment summaries."""

from typing import List, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel
from scipy import stats


MIN_SERIES_LENGTH = 4


class EssReport(BaseModel):
    """Effective sample size of one series with the pieces that produced it."""

    ess: float
    truncation_lag: int
    autocorrelations: List[float]
    mean: float
    variance: float
    n: int


class MomentSummary(BaseModel):
    """Mean and variance of one coordinate, with a z-score against a reference normal."""

    coordinate: int
    name: Optional[str] = None
    n: int
    mean: float
    variance: float
    ess: float
    reference_mean: Optional[float] = None
    reference_variance: Optional[float] = None
    z: Optional[float] = None
    p_value: Optional[float] = None


def _as_series(series: ArrayLike) -> NDArray:
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a one-dimensional series, got shape {x.shape}")
    if x.size < MIN_SERIES_LENGTH:
        raise ValueError(f"series needs at least {MIN_SERIES_LENGTH} draws, got {x.size}")
    if np.ptp(x) == 0.0:
        raise ValueError("series has zero variance (degenerate chain)")
    return x


def autocorrelation(series: ArrayLike, max_lag: Optional[int] = None) -> NDArray:
    """Normalized autocorrelations rho_0..rho_max_lag from the biased autocovariance."""
    x = _as_series(series)
    n = x.size
    max_lag = n // 2 if max_lag is None else min(max(int(max_lag), 0), n - 1)

    centered = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(centered, size)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), size)[: max_lag + 1] / n
    return acov / acov[0]


def imse_truncate(rho: ArrayLike) -> int:
    """Last lag kept by the initial monotone sequence estimator.

    Lags are paired as Gamma_m = rho_2m + rho_2m+1 and the sum stops before the
    first non-positive pair; the first pair is always kept.
    """
    rho = np.asarray(rho, dtype=float)
    n_pairs = rho.size // 2
    if n_pairs == 0:
        return 0

    gamma = rho[0 : 2 * n_pairs : 2] + rho[1 : 2 * n_pairs : 2]
    non_positive = np.flatnonzero(gamma <= 0.0)
    kept = int(non_positive[0]) if non_positive.size else n_pairs
    kept = max(kept, 1)
    return 2 * kept - 1


def ess_from_autocorrelation(rho: ArrayLike, n: int) -> Tuple[float, int]:
    """ESS = n / tau with tau = -1 + 2 sum of the monotone-smoothed pair sums."""
    rho = np.asarray(rho, dtype=float)
    lag = imse_truncate(rho)
    if lag == 0:
        return float(n), 0

    kept = (lag + 1) // 2
    gamma = rho[0 : 2 * kept : 2] + rho[1 : 2 * kept : 2]
    gamma = np.minimum.accumulate(gamma)
    tau = -1.0 + 2.0 * float(np.sum(gamma))

    if tau <= 0.0:
        return float(n), lag
    return min(n / tau, float(n)), lag


def ess(series: ArrayLike) -> EssReport:
    """Effective sample size with the autocorrelation sum cut at the IMSE lag."""
    x = _as_series(series)
    rho = autocorrelation(x)
    value, lag = ess_from_autocorrelation(rho, x.size)
    return EssReport(
        ess=value,
        truncation_lag=lag,
        autocorrelations=rho[1 : lag + 1].tolist(),
        mean=float(x.mean()),
        variance=float(x.var(ddof=1)),
        n=int(x.size),
    )


def summarize(
    samples: ArrayLike,
    index: int,
    reference: Optional[Tuple[float, float]] = None,
    name: Optional[str] = None,
) -> MomentSummary:
    """Moments of one column and z = (mean - ref_mean) / sqrt(ref_var / ESS).

    A stuck (constant) column reports variance 0 and an ESS of 1.
    """
    samples = np.asarray(samples, dtype=float)
    column = samples[:, index]
    n = int(column.size)
    if n == 0:
        raise ValueError("cannot summarize an empty chain")

    mean = float(column.mean())
    variance = float(column.var(ddof=1)) if n > 1 else 0.0
    if n >= MIN_SERIES_LENGTH and np.ptp(column) > 0.0:
        effective = ess(column).ess
    else:
        effective = 1.0

    summary = MomentSummary(coordinate=index, name=name, n=n, mean=mean, variance=variance, ess=effective)
    if reference is not None:
        ref_mean, ref_var = reference
        z = (mean - ref_mean) / np.sqrt(ref_var / effective)
        summary.reference_mean = ref_mean
        summary.reference_variance = ref_var
        summary.z = float(z)
        summary.p_value = float(2.0 * stats.norm.sf(abs(z)))
    return summary

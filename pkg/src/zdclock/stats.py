"""Error analysis for correlated Monte Carlo time series."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_BLOCKS = 50


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class ErrorEstimate:
    mean: float
    error: float
    n_blocks: int

    def within(self, value: float, n_sigma: float = 3.0) -> bool:
        return abs(self.mean - value) <= n_sigma * self.error

    def __iter__(self):
        yield self.mean
        yield self.error


def _blocks(x: np.ndarray, n_blocks: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n_blocks < 2 or n < n_blocks:
        raise InsufficientDataError(f"need at least {n_blocks} samples for {n_blocks} blocks, got {n}")
    size = n // n_blocks
    return x[: size * n_blocks].reshape((n_blocks, size) + x.shape[1:])


def block_mean(x, n_blocks: int = DEFAULT_BLOCKS) -> ErrorEstimate:
    """Mean with the standard error of the block means."""
    b = _blocks(x, n_blocks).mean(axis=1)
    return ErrorEstimate(float(np.mean(np.asarray(x, dtype=float))),
                         float(b.std(ddof=1) / np.sqrt(n_blocks)), n_blocks)


def jackknife(x, estimator, n_blocks: int = DEFAULT_BLOCKS) -> ErrorEstimate:
    """Delete-one-block jackknife of ``estimator(samples)``.

    ``estimator`` receives an array of samples (first axis = time) and returns
    a scalar.  The returned mean is the bias-corrected jackknife value.
    """
    blocks = _blocks(x, n_blocks)
    full = blocks.reshape((-1,) + blocks.shape[2:])
    theta = float(estimator(full))
    loo = np.empty(n_blocks)
    for i in range(n_blocks):
        rest = np.concatenate([blocks[:i], blocks[i + 1:]]).reshape((-1,) + full.shape[1:])
        loo[i] = estimator(rest)
    mean_loo = loo.mean()
    err = np.sqrt((n_blocks - 1) / n_blocks * np.sum((loo - mean_loo) ** 2))
    return ErrorEstimate(float(n_blocks * theta - (n_blocks - 1) * mean_loo), float(err), n_blocks)


def autocorrelation(x) -> np.ndarray:
    """Normalized autocorrelation function via FFT."""
    x = np.asarray(x, dtype=float)
    n = x.size
    x = x - x.mean()
    f = np.fft.rfft(x, n=2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n]
    if acf[0] == 0:
        return np.zeros(n)
    return acf / acf[0]


def integrated_autocorr_time(x, c: float = 6.0) -> float:
    """Integrated autocorrelation time with Sokal's automatic window.

    Returned in units of the sampling interval; 0.5 means uncorrelated.
    """
    x = np.asarray(x, dtype=float)
    if x.size < 4 or np.ptp(x) == 0:
        return 0.5
    rho = autocorrelation(x)
    tau = 0.5 + np.cumsum(rho[1:])
    for w in range(1, tau.size):
        if w >= c * tau[w - 1]:
            return float(max(tau[w - 1], 0.5))
    return float(max(tau[-1], 0.5))

"""Seeded single-spin Metropolis sampler for the d-state clock model.

Random numbers come from numpy's counter-based Philox bit generator and are
drawn in fixed-size blocks of sweeps, so a run is a pure function of
``(seed, config, RNG_ID)``.  The update kernel is compiled with numba.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numba
import numpy as np

from . import __version__
from .clock_exact import beta_from_temperature
from .lattice import build_lattice
from .stats import (DEFAULT_BLOCKS, ErrorEstimate, InsufficientDataError, block_mean,
                    integrated_autocorr_time, jackknife)

RNG_ID = "numpy-philox4x64-v1"
PROPOSALS = ("uniform", "step")
STARTS = ("cold", "hot")
DRIFT_CHECK_EVERY = 1000
DRIFT_TOL = 1e-8


class ReweightingError(RuntimeError):
    """Effective sample size of a reweighted average collapsed."""

    def __init__(self, message: str, ess: float, n: int):
        super().__init__(f"{message} (effective sample size {ess:.1f} of {n})")
        self.ess = ess
        self.n = n


@dataclass(frozen=True)
class McConfig:
    d: int
    L: int
    T: float
    sweeps: int = 10_000
    therm: int = 1_000
    measure_every: int = 1
    seed: int = 0
    proposal: str = "uniform"
    start: str = "cold"
    rng: str = RNG_ID
    measure_corr: bool = True

    def __post_init__(self):
        if self.d < 2 or self.L < 2:
            raise ValueError("need d >= 2 and L >= 2")
        if not self.T > 0:
            raise ValueError("temperature must be positive")
        if self.sweeps < 0 or self.therm < 0:
            raise ValueError("sweeps and therm must be non-negative")
        if self.measure_every < 1:
            raise ValueError("measure_every must be >= 1")
        if self.proposal not in PROPOSALS:
            raise ValueError(f"proposal must be one of {PROPOSALS}")
        if self.start not in STARTS:
            raise ValueError(f"start must be one of {STARTS}")
        if self.rng != RNG_ID:
            raise ValueError(f"unsupported rng {self.rng!r}; this build provides {RNG_ID!r}")

    @property
    def beta(self) -> float:
        return beta_from_temperature(self.T)


@dataclass
class ObservableSeries:
    """Measured time series of one chain.

    ``bond_sum[i] = sum_bonds cos(theta_i - theta_j)``; the energy is its
    negative.  ``corr[i, r-1]`` is the translation- and axis-averaged
    ``cos(theta_x - theta_{x+r})`` in sample ``i`` for ``r = 1 .. L//2``.
    """

    d: int
    L: int
    T: float
    bond_sum: np.ndarray
    corr: np.ndarray | None = None
    acceptance: float = float("nan")

    @property
    def energy(self) -> np.ndarray:
        return -self.bond_sum

    @property
    def n_samples(self) -> int:
        return int(self.bond_sum.size)

    @property
    def n_sites(self) -> int:
        return self.L * self.L

    @property
    def beta(self) -> float:
        return beta_from_temperature(self.T)


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    rng: str
    code_version: str
    start: str
    autocorr_estimate: float
    started: float = field(default_factory=time.time)
    finished: float | None = None
    output_hash: str | None = None

    def as_dict(self) -> dict:
        return asdict(self)


# -- numba kernels -------------------------------------------------------------

@numba.njit(cache=True)
def _sweep_block(spins, nbr, cos_tab, inv_T, d, proposal, draws, uniforms, bond_sum):
    """Run ``draws.shape[0]`` sequential sweeps in place.

    Returns (accepted count, updated bond sum).
    """
    n_sweeps, V = draws.shape
    deg = nbr.shape[1]
    accepted = 0
    for s in range(n_sweeps):
        for i in range(V):
            old = spins[i]
            r = draws[s, i]
            if proposal == 0:
                new = r if r < old else r + 1          # uniform over the other d-1 values
            else:
                new = (old + 1) % d if r == 0 else (old - 1 + d) % d
            dc = 0.0
            for k in range(deg):
                j = spins[nbr[i, k]]
                dc += cos_tab[(new - j) % d] - cos_tab[(old - j) % d]
            # dE = -dc
            if dc >= 0.0 or uniforms[s, i] < np.exp(dc * inv_T):
                spins[i] = new
                bond_sum += dc
                accepted += 1
    return accepted, bond_sum


@numba.njit(cache=True)
def _bond_sum(spins, tail, head, cos_tab, d):
    c = 0.0
    for b in range(tail.size):
        c += cos_tab[(spins[tail[b]] - spins[head[b]]) % d]
    return c


@numba.njit(cache=True)
def _corr_profile(spins, L, cos_tab, d, out):
    """Average ``cos(theta(x,y) - theta(x+r,y))`` and the y analogue into ``out[r-1]``."""
    R = out.size
    for r in range(1, R + 1):
        acc = 0.0
        for y in range(L):
            for x in range(L):
                s = spins[x + L * y]
                acc += cos_tab[(s - spins[(x + r) % L + L * y]) % d]
                acc += cos_tab[(s - spins[x + L * ((y + r) % L)]) % d]
        out[r - 1] = acc / (2.0 * L * L)


@numba.njit(cache=True)
def _chain_block(spins, nbr, cos_tab, inv_T, d, proposal, draws, uniforms, bond_sum,
                 offset, measure_every, out_bond, out_corr, L):
    """Sweeps of one block; when ``measure_every > 0`` record samples.

    ``offset`` is the number of sweeps of the current phase already done, so
    sample ``k`` is taken after sweep ``(k + 1) * measure_every``.
    """
    accepted = 0
    for s in range(draws.shape[0]):
        acc, bond_sum = _sweep_block(spins, nbr, cos_tab, inv_T, d, proposal,
                                     draws[s:s + 1], uniforms[s:s + 1], bond_sum)
        accepted += acc
        done = offset + s + 1
        if measure_every > 0 and done % measure_every == 0:
            k = done // measure_every - 1
            out_bond[k] = bond_sum
            if out_corr.shape[1] > 0:
                _corr_profile(spins, L, cos_tab, d, out_corr[k])
    return accepted, bond_sum


def neighbour_table(L: int) -> np.ndarray:
    """Neighbours of each vertex via the lattice edges (multiplicity kept at L = 2)."""
    lat = build_lattice(L)
    nbr = np.empty((lat.V, 4), dtype=np.int64)
    nbr[:, 0] = lat.head[lat.star_edges[:, 0]]   # east
    nbr[:, 1] = lat.head[lat.star_edges[:, 1]]   # north
    nbr[:, 2] = lat.tail[lat.star_edges[:, 2]]   # west
    nbr[:, 3] = lat.tail[lat.star_edges[:, 3]]   # south
    return nbr


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def _draws(rng, n_sweeps: int, V: int, d: int, proposal: str):
    high = d - 1 if proposal == "uniform" else 2
    draws = rng.integers(0, high, size=(n_sweeps, V), dtype=np.int64)
    uniforms = rng.random(size=(n_sweeps, V))
    return draws, uniforms


def metropolis_sweep(spins: np.ndarray, nbr: np.ndarray, d: int, T: float, rng,
                     proposal: str = "uniform") -> int:
    """One in-place sweep of V single-spin proposals on an arbitrary neighbour graph.

    Returns the number of accepted moves.
    """
    cos_tab = np.cos(2 * np.pi * np.arange(d) / d)
    draws, uniforms = _draws(rng, 1, spins.size, d, proposal)
    acc, _ = _sweep_block(spins, nbr, cos_tab, 1.0 / T, d, PROPOSALS.index(proposal),
                          draws, uniforms, 0.0)
    return int(acc)


def run_chain(cfg: McConfig) -> tuple[ObservableSeries, RunManifest]:
    """Thermalize, then record ``sweeps // measure_every`` samples."""
    d, L = cfg.d, cfg.L
    lat = build_lattice(L)
    V = lat.V
    nbr = neighbour_table(L)
    tail, head = lat.tail.copy(), lat.head.copy()
    cos_tab = np.cos(2 * np.pi * np.arange(d) / d)
    inv_T = 1.0 / cfg.T
    prop = PROPOSALS.index(cfg.proposal)
    rng = make_rng(cfg.seed)
    manifest = RunManifest("mc", asdict(cfg), cfg.seed, cfg.rng, __version__, cfg.start, 0.5)

    if cfg.start == "hot":
        spins = rng.integers(0, d, size=V, dtype=np.int64)
    else:
        spins = np.zeros(V, dtype=np.int64)
    bond = _bond_sum(spins, tail, head, cos_tab, d)

    n_samples = cfg.sweeps // cfg.measure_every
    bond_series = np.empty(n_samples)
    corr = np.empty((n_samples, L // 2) if cfg.measure_corr else (n_samples, 0))
    block = max(1, min(DRIFT_CHECK_EVERY, (1 << 20) // V))
    accepted = 0
    for phase_sweeps, measuring in ((cfg.therm, False), (n_samples * cfg.measure_every, True)):
        done = 0
        while done < phase_sweeps:
            n = min(block, phase_sweeps - done)
            draws, uniforms = _draws(rng, n, V, d, cfg.proposal)
            acc, bond = _chain_block(spins, nbr, cos_tab, inv_T, d, prop, draws, uniforms, bond,
                                     done, cfg.measure_every if measuring else 0,
                                     bond_series, corr, L)
            done += n
            if measuring:
                accepted += acc
            exact = _bond_sum(spins, tail, head, cos_tab, d)
            if abs(exact - bond) > DRIFT_TOL:
                raise AssertionError(f"bond-sum drift {abs(exact - bond)} exceeds {DRIFT_TOL}")
            bond = exact

    measured = n_samples * cfg.measure_every * V
    series = ObservableSeries(d, L, cfg.T, bond_series, corr if cfg.measure_corr else None,
                              accepted / measured if measured else float("nan"))
    manifest.autocorr_estimate = integrated_autocorr_time(bond_series) if n_samples else 0.5
    manifest.finished = time.time()
    return series, manifest


# -- estimators -------------------------------------------------------------------

def estimate_energy(series: ObservableSeries, n_blocks: int = DEFAULT_BLOCKS) -> ErrorEstimate:
    return block_mean(series.energy, n_blocks)


def estimate_heat_capacity(series: ObservableSeries, T: float | None = None,
                           n_blocks: int = DEFAULT_BLOCKS, per_site: bool = False) -> ErrorEstimate:
    """Jackknife-over-blocks ``C_v = Var(E) / T**2`` (total, or per site)."""
    if series.n_samples < 100:
        raise InsufficientDataError(f"heat capacity needs >= 100 samples, got {series.n_samples}")
    T = series.T if T is None else T
    scale = 1.0 / (T * T * (series.n_sites if per_site else 1))
    est = jackknife(series.energy, lambda e: np.var(e) * scale, n_blocks)
    return est


def estimate_bond_variance(series: ObservableSeries, n_blocks: int = DEFAULT_BLOCKS) -> ErrorEstimate:
    """``Var(C)``; equals ``C_v / (4 beta**2)`` under ``beta = 1/(2T)``."""
    return jackknife(series.bond_sum, np.var, n_blocks)


def estimate_correlation(series: ObservableSeries, n_blocks: int = DEFAULT_BLOCKS) -> np.ndarray:
    """Rows ``(r, C(r), sigma)`` for ``r = 1 .. L//2``."""
    if series.corr is None:
        raise ValueError("chain was run without correlation measurements")
    rows = []
    for r in range(1, series.corr.shape[1] + 1):
        est = block_mean(series.corr[:, r - 1], n_blocks)
        rows.append((r, est.mean, est.error))
    return np.array(rows, dtype=float).reshape(-1, 3)


def _log_mean_exp(a: np.ndarray) -> float:
    m = a.max()
    return float(m + np.log(np.mean(np.exp(a - m))))


def effective_sample_size(log_w: np.ndarray) -> float:
    w = np.exp(log_w - log_w.max())
    return float(w.sum() ** 2 / np.sum(w * w))


def log_reweighted_fidelity(bond_sum: np.ndarray, dbeta: float) -> float:
    """``log F`` with ``F = r(dbeta/2) / sqrt(r(dbeta))``, ``r(x) = <exp(2 x C)>``."""
    c = bond_sum - bond_sum.mean()
    return _log_mean_exp(dbeta * c) - 0.5 * _log_mean_exp(2.0 * dbeta * c)


def reweight_fidelity(series: ObservableSeries, dbeta: float, min_ess_fraction: float = 0.1) -> float:
    """Ground-state fidelity ``F(beta, dbeta)`` from a chain at ``T = 1/(2 beta)``.

    ``Z(beta') / Z(beta) = <exp{2 (beta' - beta) C}>_beta`` with C the bond
    sum, evaluated in the log domain.
    """
    if dbeta == 0:
        return 1.0
    c = series.bond_sum
    ess = effective_sample_size(2.0 * dbeta * c)
    if ess < min_ess_fraction * c.size:
        raise ReweightingError(f"reweighting by dbeta={dbeta} at T={series.T}", ess, c.size)
    return float(np.exp(log_reweighted_fidelity(c, dbeta)))


def log_centred_fidelity(bond_sum: np.ndarray, dbeta: float) -> float:
    """``log F(beta - dbeta/2, dbeta)`` from a chain at ``beta``.

    ``F = Z(beta) / sqrt(Z(beta - dbeta/2) Z(beta + dbeta/2))`` and
    ``Z(beta +- dbeta/2) / Z(beta) = <exp(+-dbeta C)>``; odd cumulants cancel.
    """
    c = bond_sum - bond_sum.mean()
    return -0.5 * (_log_mean_exp(dbeta * c) + _log_mean_exp(-dbeta * c))


def fidelity_susceptibility(series: ObservableSeries, dbeta: float, n_blocks: int = DEFAULT_BLOCKS,
                            min_ess_fraction: float = 0.1, centred: bool = True) -> ErrorEstimate:
    """``chi_F = 2 (1 - F) / dbeta**2`` with a jackknife error.

    With ``centred`` (default) the fidelity pair straddles the chain's own
    beta, ``F(beta - dbeta/2, dbeta)``, so ``chi_F = Var(C) + O(dbeta**2)``;
    otherwise ``F(beta, dbeta)``, whose deviation from ``Var(C)`` is
    ``O(dbeta)``.
    """
    c = series.bond_sum
    if dbeta <= 0:
        raise ValueError("dbeta must be positive")
    for x in ((dbeta, -dbeta) if centred else (2 * dbeta,)):
        ess = effective_sample_size(x * c)
        if ess < min_ess_fraction * c.size:
            raise ReweightingError(f"reweighting by dbeta={dbeta} at T={series.T}", ess, c.size)
    log_f = log_centred_fidelity if centred else log_reweighted_fidelity

    def chi(x):
        return -2.0 * np.expm1(log_f(x, dbeta)) / dbeta ** 2

    return jackknife(c, chi, n_blocks)

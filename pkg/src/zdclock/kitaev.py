"""Z_d Kitaev (toric-code) states on the torus and their diagonal deformation.

The deformation ``D(beta) = prod_e exp{(beta/2)(Z_e + Z_e^-1)}`` is diagonal in
the Z basis, so every quantity below reduces to sums over the support of the
undeformed state weighted by ``exp{2 beta sum_e cos(2 pi n_e / d)}``.  Those
sums are taken in the log domain.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np
from scipy.sparse.linalg import LinearOperator
from scipy.special import logsumexp

from .lattice import Lattice, OrientedPath
from .qudit import (DEFAULT_MEMORY_CAP, DenseState, DomainError, apply_deformation,
                    apply_x, check_size, index_digits, inner)

VERTEX_FORM = "vertex"
PLAQUETTE_FORM = "plaquette"
DENSE_SOLVE_CAP = 4096


class ScopeError(ValueError):
    """Request outside the sizes the exact dense engine handles."""


@dataclass(frozen=True)
class KitaevState:
    """Normalized Kitaev state with its Z-basis support cached.

    Attributes
    ----------
    lattice : Lattice
    d : int
    form : str
        ``"vertex"`` (product of star projectors on ``|0...0>``) or
        ``"plaquette"`` (product of plaquette projectors on ``|+...+>``).
    state : DenseState
    """

    lattice: Lattice
    d: int
    form: str
    state: DenseState = field(repr=False)

    @cached_property
    def support(self) -> np.ndarray:
        return np.flatnonzero(np.abs(self.state.amplitudes) > 1e-14)

    @cached_property
    def support_digits(self) -> np.ndarray:
        idx = self.support.copy()
        out = np.empty((idx.size, self.lattice.N), dtype=np.int64)
        for q in range(self.lattice.N):
            out[:, q] = idx % self.d
            idx //= self.d
        return out

    @cached_property
    def support_logprob(self) -> np.ndarray:
        return 2.0 * np.log(np.abs(self.state.amplitudes[self.support]))

    @cached_property
    def support_bond_sum(self) -> np.ndarray:
        """``sum_e cos(2 pi n_e / d)`` for every support configuration."""
        return np.cos(2 * np.pi * self.support_digits / self.d).sum(axis=1)


def _edge_index(n: np.ndarray, d: int) -> np.ndarray:
    weights = d ** np.arange(n.shape[-1], dtype=np.int64)
    return (np.asarray(n, dtype=np.int64) % d) @ weights


def build_kitaev_vertex_form(lat: Lattice, d: int, cap: int = DEFAULT_MEMORY_CAP) -> KitaevState:
    """Kitaev state ``prod_v (1 + A_v + ... + A_v^{d-1}) |0...0>``, normalized.

    Expanding the product gives one term per vertex labelling ``m``, the
    basis state with edge digits ``m[tail] - m[head]``; each distinct gradient
    configuration appears exactly ``d`` times (global shifts of ``m``).
    """
    check_size(d, lat.N, cap)
    psi = np.zeros(d ** lat.N, dtype=np.complex128)
    labels = np.array(list(product(range(d), repeat=lat.V)), dtype=np.int64)
    np.add.at(psi, _edge_index(lat.gradient(labels, d), d), 1.0)
    psi /= np.linalg.norm(psi)
    return KitaevState(lat, d, VERTEX_FORM, DenseState(d, lat.N, psi))


def build_kitaev_plaquette_form(lat: Lattice, d: int, cap: int = DEFAULT_MEMORY_CAP) -> KitaevState:
    """Kitaev state ``prod_p (1 + B_p + ... + B_p^{d-1}) |+...+>``, normalized.

    The plaquette projectors keep exactly the zero-flux configurations, all
    holonomy sectors of the torus with equal weight.
    """
    check_size(d, lat.N, cap)
    psi = np.zeros(d ** lat.N, dtype=np.complex128)
    chunk = max(1, 2 ** 22 // lat.N)
    total = d ** lat.N
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        digits = np.empty((idx.size, lat.N), dtype=np.int64)
        rem = idx.copy()
        for q in range(lat.N):
            digits[:, q] = rem % d
            rem //= d
        ok = np.all(lat.plaquette_flux(digits, d) == 0, axis=1)
        psi[idx[ok]] = 1.0
    psi /= np.linalg.norm(psi)
    return KitaevState(lat, d, PLAQUETTE_FORM, DenseState(d, lat.N, psi))


def build_kitaev_state(lat: Lattice, d: int, form: str = VERTEX_FORM,
                       cap: int = DEFAULT_MEMORY_CAP) -> KitaevState:
    if form == VERTEX_FORM:
        return build_kitaev_vertex_form(lat, d, cap)
    if form == PLAQUETTE_FORM:
        return build_kitaev_plaquette_form(lat, d, cap)
    raise ValueError(f"unknown construction {form!r}")


# -- stabilizers ---------------------------------------------------------------

def apply_plaquette(lat: Lattice, state: DenseState, p: int, power: int = 1) -> DenseState:
    """``B_p**power`` where ``B_p = prod_e Z_e**sigma_e``."""
    d = state.d
    digits = index_digits(d, state.n)
    flux = (digits[:, lat.plaquette_edges[p]].astype(np.int64) @ lat.plaquette_sigma[p]) % d
    phase = np.exp(2j * np.pi * ((flux * power) % d) / d)
    return DenseState(d, state.n, state.amplitudes * phase)


def apply_star(lat: Lattice, state: DenseState, v: int, power: int = 1) -> DenseState:
    """``A_v**power`` where ``A_v = prod_e X_e**gamma_e``."""
    out = state
    for e, g in zip(lat.star_edges[v], lat.star_gamma[v]):
        out = apply_x(out, int(e), int(g) * power)
    return out


def stabilizer_residuals(K: KitaevState) -> dict:
    """Max per-amplitude deviation of ``B_p|K> - |K>`` and ``A_v|K> - |K>``."""
    lat, psi = K.lattice, K.state
    d = K.d
    digits = index_digits(d, psi.n)
    fluxes = (digits[:, lat.plaquette_edges].astype(np.int64) * lat.plaquette_sigma).sum(axis=2) % d
    plaq = 0.0
    for p in range(lat.P):
        phase = np.exp(2j * np.pi * fluxes[:, p] / d)
        plaq = max(plaq, float(np.max(np.abs(psi.amplitudes * phase - psi.amplitudes))))
    star = 0.0
    for v in range(lat.V):
        moved = apply_star(lat, psi, v).amplitudes
        star = max(star, float(np.max(np.abs(moved - psi.amplitudes))))
    return {"plaquette": plaq, "vertex": star}


# -- deformation, norm function, fidelity -----------------------------------------

def deformed_state(K: KitaevState, beta: float) -> DenseState:
    """Normalized ``D(beta)|K>``."""
    if not np.isfinite(beta):
        raise DomainError(f"beta must be finite, got {beta}")
    if abs(beta) <= 5:
        return apply_deformation(K.state, beta).normalized()
    # large beta: weight only the support, shifted so the largest factor is 1
    logw = beta * K.support_bond_sum
    amps = np.zeros_like(K.state.amplitudes)
    amps[K.support] = K.state.amplitudes[K.support] * np.exp(logw - logw.max())
    return DenseState(K.d, K.lattice.N, amps).normalized()


def log_norm_function(K: KitaevState, beta) -> np.ndarray | float:
    """``log <K| exp{beta sum_e (Z_e + Z_e^-1)} |K>``; vectorized over ``beta``."""
    b = np.asarray(beta, dtype=float)
    if not np.all(np.isfinite(b)):
        raise DomainError("beta must be finite")
    x = K.support_logprob[None, :] + 2.0 * b.reshape(-1, 1) * K.support_bond_sum[None, :]
    out = logsumexp(x, axis=1)
    return float(out[0]) if b.ndim == 0 else out.reshape(b.shape)


def norm_function(K: KitaevState, beta) -> np.ndarray | float:
    """``Z(beta) = <K| exp{beta sum_e (Z_e + Z_e^-1)} |K>``."""
    return np.exp(log_norm_function(K, beta))


def _log_mean_exp_centered(p: np.ndarray, y: np.ndarray) -> float:
    """``log <exp(y)>_p`` for centered ``y`` (``<y>_p = 0``), accurate for small ``y``."""
    small = np.abs(y) < 1e-2
    # expm1(y) - y, by series where cancellation would bite
    rest = np.where(small, y * y / 2 * (1 + y / 3 * (1 + y / 4 * (1 + y / 5 * (1 + y / 6)))),
                    np.expm1(y) - y)
    return float(np.log1p(p @ rest))


def log_fidelity_exact(K: KitaevState, beta: float, dbeta: float) -> float:
    """``log F`` computed as ``log <e^{dbeta S}> - log<e^{2 dbeta S}>/2`` at ``beta``.

    ``S`` is the support bond sum, centered under the ``beta``-weighted
    distribution, which keeps ``1 - F`` accurate to relative rounding even
    when it is ~1e-9.
    """
    logp = K.support_logprob + 2.0 * beta * K.support_bond_sum
    p = np.exp(logp - logp.max())
    p /= p.sum()
    s = K.support_bond_sum - p @ K.support_bond_sum
    return _log_mean_exp_centered(p, dbeta * s) - 0.5 * _log_mean_exp_centered(p, 2.0 * dbeta * s)


def fidelity_exact(K: KitaevState, beta: float, dbeta: float) -> float:
    """``Z(beta + dbeta/2) / sqrt(Z(beta) Z(beta + dbeta))``."""
    if dbeta < 0:
        raise DomainError("dbeta must be non-negative")
    if dbeta == 0:
        return 1.0
    return float(np.exp(log_fidelity_exact(K, beta, dbeta)))


def fidelity_direct(K: KitaevState, beta: float, dbeta: float) -> float:
    """``<K(beta)|K(beta + dbeta)>`` from the two normalized deformed vectors."""
    return inner(deformed_state(K, beta), deformed_state(K, beta + dbeta)).real


def string_phase_exponent(K: KitaevState, path: OrientedPath) -> np.ndarray:
    """``sum_{e in S} tau_e n_e mod d`` for every support configuration."""
    n = K.support_digits[:, path.edges]
    return (n @ path.signs) % K.d


def string_expectation(K: KitaevState, beta: float, path: OrientedPath) -> float:
    """``<K(beta)| (prod Z_e^tau_e + prod Z_e^-tau_e) / 2 |K(beta)>``."""
    logp = K.support_logprob + 2.0 * beta * K.support_bond_sum
    w = np.exp(logp - logp.max())
    phase = np.cos(2 * np.pi * string_phase_exponent(K, path) / K.d)
    return float(np.dot(w, phase) / w.sum())


# -- Hamiltonians -----------------------------------------------------------------

def _h0_parts(lat: Lattice, d: int):
    digits = index_digits(d, lat.N).astype(np.int64)
    flux = (digits[:, lat.plaquette_edges] * lat.plaquette_sigma).sum(axis=2) % d
    diag = -2.0 * np.cos(2 * np.pi * flux / d).sum(axis=1)
    weights = d ** np.arange(lat.N, dtype=np.int64)
    perms = []
    for v in range(lat.V):
        shifted = digits.copy()
        shifted[:, lat.star_edges[v]] += lat.star_gamma[v]
        # (A_v psi)[perm[i]] = psi[i]
        perms.append((shifted % d) @ weights)
    return diag, perms


def build_h0(lat: Lattice, d: int, cap: int = DEFAULT_MEMORY_CAP) -> LinearOperator:
    """Matrix-free ``H_0 = -sum_p (B_p + B_p^-1) - sum_v (A_v + A_v^-1)``."""
    size = check_size(d, lat.N, cap)
    diag, perms = _h0_parts(lat, d)

    def matvec(x):
        x = np.asarray(x).reshape(-1)
        y = diag * x
        for perm in perms:
            fwd = np.empty_like(x)
            fwd[perm] = x
            y = y - fwd - x[perm]
        return y

    return LinearOperator((size, size), matvec=matvec, rmatvec=matvec, dtype=np.complex128)


def h0_dense(lat: Lattice, d: int) -> np.ndarray:
    size = d ** lat.N
    if size > DENSE_SOLVE_CAP:
        raise ScopeError(f"dense solve limited to {DENSE_SOLVE_CAP} states, got d**N = {size}")
    diag, perms = _h0_parts(lat, d)
    H = np.diag(diag).astype(np.complex128)
    cols = np.arange(size)
    for perm in perms:
        H[perm, cols] -= 1.0   # A_v
        H[cols, perm] -= 1.0   # A_v^-1
    return H


@dataclass
class SimilarityReport:
    beta: float
    ground_energy: float
    degeneracy: int
    max_eigvec_residual: float
    max_spectrum_deviation: float
    max_spectrum_imag: float
    kitaev_ground_residual: float
    passed: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def verify_hbeta_similarity(lat: Lattice, d: int, beta: float, tol: float = 1e-8,
                            spectrum_tol: float = 1e-6) -> SimilarityReport:
    """Check that ``H_beta = D H_0 D^-1`` maps eigenvectors and spectrum of ``H_0``.

    Residuals are measured on unit-normalized ``D psi``.
    """
    H0 = h0_dense(lat, d)
    evals, evecs = np.linalg.eigh(H0)
    e0 = evals[0]
    degeneracy = int(np.sum(np.abs(evals - e0) < 1e-8))
    logD = beta * np.cos(2 * np.pi * index_digits(d, lat.N) / d).sum(axis=1)
    Dv = np.exp(logD)
    Hb = (Dv[:, None] * H0) / Dv[None, :]

    phi = Dv[:, None] * evecs
    phi /= np.linalg.norm(phi, axis=0)
    resid = np.linalg.norm(Hb @ phi - phi * evals[None, :], axis=0)

    evals_b = np.linalg.eigvals(Hb)
    spec_dev = float(np.max(np.abs(np.sort(evals_b.real) - evals)))

    K = build_kitaev_vertex_form(lat, d)
    kb = deformed_state(K, beta).amplitudes
    k_res = float(np.linalg.norm(Hb @ kb - e0 * kb))

    ok = bool(resid.max() <= tol and spec_dev <= spectrum_tol and k_res <= tol)
    return SimilarityReport(beta, float(e0), degeneracy, float(resid.max()), spec_dev,
                            float(np.max(np.abs(evals_b.imag))), k_res, ok)

"""Cross-checks between the quantum Kitaev engine and the classical clock oracle.

Each check returns :class:`IdentityReport` objects comparing a quantum-side
number with its classical counterpart at ``beta = 1/(2T)``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .clock_exact import (ClockParams, beta_from_temperature, bond_sum_moments,
                          exact_correlation, log_partition, temperature_from_beta)
from .kitaev import (KitaevState, PLAQUETTE_FORM, VERTEX_FORM, build_kitaev_state,
                     fidelity_exact, log_fidelity_exact, log_norm_function, string_expectation)
from .lattice import Lattice, OrientedPath, _shortest, axis_path, build_lattice

PARTITION = "partition"
FIDELITY = "fidelity"
CURVATURE = "curvature"
STRING = "string-correlation"

TOL_PARTITION = 1e-9
TOL_FIDELITY = 1e-10
TOL_CURVATURE = 1e-6
TOL_STRING = 1e-10


@dataclass
class IdentityReport:
    identity: str
    params: dict
    left: float
    right: float
    abs_dev: float
    rel_dev: float
    tolerance: float
    passed: bool
    constant: float | None = None
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def _report(identity, params, left, right, tol, relative=True, **kw) -> IdentityReport:
    abs_dev = abs(left - right)
    rel_dev = abs_dev / max(abs(right), 1e-300)
    dev = rel_dev if relative else abs_dev
    return IdentityReport(identity, params, float(left), float(right), float(abs_dev),
                          float(rel_dev), tol, bool(dev <= tol), **kw)


@lru_cache(maxsize=16)
def kitaev(d: int, L: int, form: str = VERTEX_FORM) -> KitaevState:
    return build_kitaev_state(build_lattice(L), d, form)


def verify_partition_identity(d: int, L: int, temperatures, form: str = VERTEX_FORM,
                              tol: float = TOL_PARTITION) -> list[IdentityReport]:
    """``Z_clock(T)`` against ``d**(N/2) Z_quantum(1/(2T))``.

    Besides the per-T comparison, every report carries the measured constant
    ``Z_clock / Z_quantum`` and the spread of that constant over the T list.
    """
    K = kitaev(d, L, form)
    temps = np.asarray(temperatures, dtype=float)
    lz_c = log_partition(d, L, temps)
    lz_q = log_norm_function(K, beta_from_temperature(temps))
    n_half = K.lattice.N / 2
    log_const = lz_c - lz_q
    spread = float(np.max(np.abs(np.expm1(log_const - log_const[0]))))
    out = []
    for T, a, b, c in zip(temps, lz_c, lz_q, log_const):
        # compare in log space, report the relative deviation of Z
        rel = abs(np.expm1(a - (n_half * np.log(d) + b)))
        out.append(IdentityReport(PARTITION, {"d": d, "L": L, "T": float(T), "form": form},
                                  float(np.exp(a)), float(np.exp(n_half * np.log(d) + b)),
                                  float(rel * np.exp(a)), float(rel), tol, bool(rel <= tol),
                                  constant=float(np.exp(c)),
                                  extra={"ratio_spread": spread, "expected_constant": d ** n_half}))
    return out


def verify_fidelity_identity(d: int, L: int, beta: float, dbeta: float,
                             tol: float = TOL_FIDELITY) -> IdentityReport:
    """Quantum fidelity against the clock partition ratio."""
    K = kitaev(d, L)
    fq = fidelity_exact(K, beta, dbeta)
    T = temperature_from_beta(np.array([beta, beta + dbeta / 2, beta + dbeta]))
    lz = log_partition(d, L, T)
    fc = float(np.exp(lz[1] - 0.5 * lz[0] - 0.5 * lz[2]))
    return _report(FIDELITY, {"d": d, "L": L, "beta": beta, "dbeta": dbeta}, fq, fc, tol,
                   relative=False)


def curvature_sequence(K: KitaevState, beta: float, dbetas) -> np.ndarray:
    """``(1 - F) / dbeta**2`` for each step size."""
    return np.array([-np.expm1(log_fidelity_exact(K, beta, h)) / h ** 2 for h in dbetas])


def richardson(values: np.ndarray, order: int = 1, ratio: float = 2.0) -> np.ndarray:
    """One Richardson step eliminating an ``h**order`` error term (steps shrink by ``ratio``)."""
    f = ratio ** order
    return (f * values[1:] - values[:-1]) / (f - 1)


def verify_curvature_identity(d: int, L: int, beta: float,
                              dbetas=(1e-2, 5e-3, 2.5e-3), tol: float = TOL_CURVATURE) -> IdentityReport:
    """``(1 - F)/dbeta**2 -> Var(C)/2`` as ``dbeta -> 0``.

    Two sub-checks must both hold:

    * the residual ``(1 - F) - (Var(C)/2) dbeta**2`` is third order in
      ``dbeta`` and must shrink >= 4x per halving;
    * two Richardson steps (removing the O(dbeta) and O(dbeta**2) terms of
      the ratio) give a limit within ``tol`` (relative) of ``Var(C)/2``.

    ``extra`` also carries the single-step Richardson residuals and a centred
    difference ``(2 - F(+h) - F(-h)) / (2 h**2)`` as diagnostics.
    """
    K = kitaev(d, L)
    h = np.asarray(dbetas, dtype=float)
    g = curvature_sequence(K, beta, h)
    T = temperature_from_beta(beta)
    _, var_c = bond_sum_moments(d, L, T)
    target = var_c / 2
    third = np.abs(g * h ** 2 - target * h ** 2)
    shrink = (third[:-1] / third[1:]).tolist()
    r1 = richardson(g, 1)
    r1_res = np.abs(r1 - target)
    limit = float(richardson(r1, 2)[-1]) if r1.size > 1 else float(r1[-1])
    rep = _report(CURVATURE, {"d": d, "L": L, "beta": beta, "dbetas": h.tolist()}, limit, target, tol)
    limit_ok = rep.passed
    # C_v / (8 beta^2) with C_v = Var(E)/T^2 is the same number by algebra
    cv_route = var_c / T ** 2 / (8 * beta ** 2)
    centred = [-(np.expm1(log_fidelity_exact(K, beta - x, x)) + np.expm1(log_fidelity_exact(K, beta, x)))
               / (2 * x ** 2) for x in h]
    rep.passed = bool(limit_ok and all(s >= 4.0 for s in shrink))
    rep.extra = {"raw": g.tolist(), "third_order_residual": third.tolist(), "shrink_factors": shrink,
                 "shrink_ok": all(s >= 4.0 for s in shrink), "limit_ok": limit_ok,
                 "richardson1": r1.tolist(), "richardson1_residual": r1_res.tolist(),
                 "richardson1_shrink": (r1_res[:-1] / r1_res[1:]).tolist(),
                 "centred": centred, "cv_route": cv_route}
    return rep


def alternate_path(lat: Lattice, k: int, l: int) -> OrientedPath:
    """Path from k to l winding the other way around the torus than ``axis_path``.

    Its difference with the default path is a non-contractible cycle.
    """
    (kx, ky), (lx, ly) = lat.coords(k), lat.coords(l)
    dx, dy = (lx - kx) % lat.L, (ly - ky) % lat.L
    if dx:
        short = _shortest(dx, lat.L)
        return axis_path(lat, k, l, x_steps=short - lat.L if short > 0 else short + lat.L)
    short = _shortest(dy, lat.L)
    return axis_path(lat, k, l, y_steps=short - lat.L if short > 0 else short + lat.L)


def verify_string_correlation(d: int, L: int, beta: float, pairs=None, paths=None,
                              tol: float = TOL_STRING) -> list[IdentityReport]:
    """String parameter against the exact clock correlation at ``T = 1/(2 beta)``.

    ``pairs`` defaults to every pair ``(0, l)``; ``paths`` maps a pair to a list
    of paths and defaults to the shortest staircase plus a path winding the
    other way around the torus.
    """
    K = kitaev(d, L)
    lat = K.lattice
    if pairs is None:
        pairs = [(0, l) for l in range(1, lat.V)]
    out = []
    for k, l in pairs:
        plist = (paths or {}).get((k, l)) or [axis_path(lat, k, l), alternate_path(lat, k, l)]
        if beta == 0:
            right = 0.0
        else:
            right = exact_correlation(ClockParams(d, L, temperature_from_beta(beta)), k, l)
        for idx, path in enumerate(plist):
            left = string_expectation(K, beta, path)
            out.append(_report(STRING, {"d": d, "L": L, "beta": beta, "k": k, "l": l, "path": idx,
                                        "steps": [list(s) for s in path.steps]},
                               left, right, tol, relative=False))
    return out


def run_suite(d: int, L: int, temperatures=(0.5, 1.0, 2.0), beta: float = 0.7,
              dbeta: float = 0.01) -> list[IdentityReport]:
    """Every mandatory identity at one ``(d, L)``."""
    reports = verify_partition_identity(d, L, temperatures)
    reports.append(verify_fidelity_identity(d, L, beta, dbeta))
    reports.append(verify_curvature_identity(d, L, beta))
    reports.extend(verify_string_correlation(d, L, beta))
    return reports

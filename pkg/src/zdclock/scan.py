"""Phase-structure scans at Monte Carlo scale.

* :func:`scan_fidelity`: fidelity susceptibility (reweighting) and the
  heat-capacity route over a grid of deformation parameters.
* :func:`fit_decay`: classify a correlation profile as long-range,
  power-law or exponential.
* :func:`classify_phases`: per-temperature decay labels across several
  lattice sizes, regime boundaries and the mapped quantum transition points.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .clock_exact import beta_from_temperature, temperature_from_beta
from .clock_mc import (McConfig, ReweightingError, estimate_bond_variance, estimate_correlation,
                       fidelity_susceptibility, run_chain)
from .stats import integrated_autocorr_time

logger = logging.getLogger(__name__)

LONG_RANGE = "long-range"
POWER_LAW = "power-law"
EXPONENTIAL = "exponential"
AMBIGUOUS = "ambiguous"
DRIFTING = "drifting"

QUANTUM_PHASE = {
    LONG_RANGE: "trivial",
    POWER_LAW: "KT-like",
    EXPONENTIAL: "Z_d topological",
}

WORKERS_ENV = "ZDCLOCK_WORKERS"


class ScanError(RuntimeError):
    pass


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _map(fn, tasks):
    """Ordered map, optionally over a process pool (results keep task order)."""
    n = _workers()
    if n == 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, tasks))


def point_seed(seed: int, *key) -> int:
    """Deterministic per-point seed derived from a base seed and a key."""
    ints = [int(seed)] + [int(round(k * 1e6)) if isinstance(k, float) else int(k) for k in key]
    return int(np.random.SeedSequence(ints).generate_state(1, np.uint64)[0])


# -- fidelity curves -----------------------------------------------------------------

@dataclass
class FidelityPoint:
    beta: float
    T: float
    chi_F: float
    chi_F_err: float
    cv_route: float
    cv_err: float
    autocorr: float
    n_eff: float
    valid: bool
    note: str = ""

    def agrees(self, n_sigma: float = 3.0) -> bool:
        """``chi_F / 2`` against ``C_v / (8 beta**2)`` (both estimate ``Var(C)/2``)."""
        err = np.hypot(self.chi_F_err / 2, self.cv_err)
        return abs(self.chi_F / 2 - self.cv_route) <= n_sigma * err


@dataclass
class FidelityCurve:
    d: int
    L: int
    dbeta: float
    points: list[FidelityPoint] = field(default_factory=list)

    @property
    def betas(self) -> np.ndarray:
        return np.array([p.beta for p in self.points])

    def valid_points(self) -> list[FidelityPoint]:
        return [p for p in self.points if p.valid]

    def peak(self, key: str = "chi_F") -> tuple[float, float]:
        """Peak ``(beta, T)`` refined by a parabola through the top three points.

        ``key`` is ``"chi_F"``, ``"cv_route"`` or ``"heat_capacity"``.
        """
        pts = self.valid_points()
        if len(pts) < 3:
            raise ScanError("need at least three valid points to locate a peak")
        b = np.array([p.beta for p in pts])
        if key == "heat_capacity":
            # C_v = 8 beta^2 * cv_route
            y = np.array([8 * p.beta ** 2 * p.cv_route for p in pts])
        else:
            y = np.array([getattr(p, key) for p in pts])
        i = int(np.argmax(y))
        if 0 < i < len(pts) - 1:
            c = np.polyfit(b[i - 1:i + 2], y[i - 1:i + 2], 2)
            bp = -c[1] / (2 * c[0]) if c[0] < 0 else b[i]
            lo, hi = sorted((b[i - 1], b[i + 1]))
            bp = float(np.clip(bp, lo, hi))
        else:
            bp = float(b[i])
        return bp, float(temperature_from_beta(bp))

    def rows(self) -> list[dict]:
        return [{"beta": p.beta, "chi_F": p.chi_F, "chi_F_err": p.chi_F_err,
                 "cv_route": p.cv_route, "cv_err": p.cv_err, "valid": int(p.valid)}
                for p in self.points]


def _fidelity_point(task) -> FidelityPoint:
    cfg, dbeta, min_n_eff = task
    series, manifest = run_chain(cfg)
    beta = cfg.beta
    var = estimate_bond_variance(series)
    tau = integrated_autocorr_time(series.bond_sum)
    n_eff = series.n_samples / (2 * tau)
    try:
        chi = fidelity_susceptibility(series, dbeta)
    except ReweightingError as exc:
        logger.warning("beta=%g: %s", beta, exc)
        return FidelityPoint(beta, cfg.T, float("nan"), float("nan"), var.mean / 2, var.error / 2,
                             tau, n_eff, False, str(exc))
    valid = n_eff >= min_n_eff
    return FidelityPoint(beta, cfg.T, chi.mean, chi.error, var.mean / 2, var.error / 2, tau, n_eff,
                         valid, "" if valid else f"effective samples {n_eff:.0f} < {min_n_eff}")


def scan_fidelity(d: int, L: int, betas, dbeta: float, sweeps: int = 50_000, therm: int = 5_000,
                  measure_every: int = 1, seed: int = 0, proposal: str = "uniform",
                  min_n_eff: float = 50.0) -> FidelityCurve:
    """Fidelity susceptibility ``chi_F = 2(1 - F)/dbeta**2`` over a beta grid.

    Each point runs an independent chain at ``T = 1/(2 beta)``.  ``chi_F``
    comes from reweighting the chain's bond sum to ``beta -+ dbeta/2`` (the
    fidelity pair is centred on the grid point), ``cv_route = C_v/(8 beta**2)``
    from its variance.  Both estimate ``Var(C)/2`` for ``chi_F/2``.  Points
    whose reweighting collapses are kept but marked invalid.
    """
    betas = np.asarray(betas, dtype=float)
    tasks = [(McConfig(d, L, float(temperature_from_beta(b)), sweeps, therm, measure_every,
                       point_seed(seed, d, L, i), proposal, measure_corr=False), dbeta, min_n_eff)
             for i, b in enumerate(betas)]
    return FidelityCurve(d, L, dbeta, _map(_fidelity_point, tasks))


# -- decay fits --------------------------------------------------------------------------

@dataclass
class DecayFit:
    r_range: tuple[int, int]
    model: str
    eta: float
    xi: float
    plateau: float
    residuals: dict
    margin: float
    periodic_L: int | None = None
    diagnostics: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def _shape(kind: str, param: float, r: np.ndarray, L: int | None) -> np.ndarray:
    """Log of the model shape; ``param`` is eta (power) or 1/xi (exponential)."""
    if kind == POWER_LAW:
        f = r ** -param if L is None else r ** -param + (L - r) ** -param
    else:
        f = np.exp(-param * r) if L is None else np.exp(-param * r) + np.exp(-param * (L - r))
    return np.log(f)


def _profile_fit(kind, r, y, w, L, bounds):
    """Weighted least squares of ``y = log A + shape(param)`` with ``log A`` profiled out."""

    def chi2(param):
        s = _shape(kind, param, r, L)
        a = np.sum(w * (y - s)) / w.sum()
        return float(np.sum(w * (y - a - s) ** 2))

    if L is None:
        # plain straight-line fit in log-log or log-linear coordinates
        x = np.log(r) if kind == POWER_LAW else r
        slope = np.polyfit(x, y, 1, w=np.sqrt(w))[0]
        return max(-slope, 0.0) if kind == EXPONENTIAL else -slope, chi2(-slope)
    res = minimize_scalar(chi2, bounds=bounds, method="bounded", options={"xatol": 1e-7})
    return float(res.x), float(res.fun)


def fit_decay(table, r_range=None, L: int | None = None, margin: float = 1.5,
              eta_flat: float = 0.05, plateau_min: float = 0.2, min_points: int = 4) -> DecayFit:
    """Classify a correlation profile.

    Parameters
    ----------
    table : array_like, shape (n, 3)
        Rows ``(r, C(r), sigma)``.  A zero sigma column means unweighted fits.
    r_range : (int, int), optional
        Inclusive range of separations used; default ``[2, r_max/2]``.
    L : int, optional
        Periodic system size.  When given, each model includes its mirror
        image at ``L - r``; otherwise the fits are straight lines of
        ``log C`` against ``log r`` (power) and ``r`` (exponential).
    margin : float
        Ratio by which the winning normalized residual must beat the other.
    eta_flat, plateau_min : float
        Long-range test: top-quartile mean above ``plateau_min`` and fitted
        power exponent below ``eta_flat``.
    """
    t = np.asarray(table, dtype=float).reshape(-1, 3)
    if r_range is None:
        r_range = (2, int(t[:, 0].max() // 2))
    lo, hi = r_range
    sel = (t[:, 0] >= lo) & (t[:, 0] <= hi)
    r, c, s = t[sel, 0], t[sel, 1], t[sel, 2]
    if r.size < min_points:
        raise ValueError(f"need >= {min_points} separations in r-range {r_range}, got {r.size}")
    top = c[np.argsort(r)][-max(1, r.size // 4):]
    plateau = float(np.mean(top))
    if np.any(c <= 0):
        return DecayFit((lo, hi), EXPONENTIAL, float("nan"), float("nan"), plateau, {}, margin, L,
                        f"non-positive C(r) at r={r[c <= 0].astype(int).tolist()}")

    y = np.log(c)
    if np.all(s > 0):
        w = (c / s) ** 2
    else:
        w = np.ones_like(c)
    dof = max(r.size - 2, 1)
    eta, chi_p = _profile_fit(POWER_LAW, r, y, w, L, (0.0, 10.0))
    kappa, chi_e = _profile_fit(EXPONENTIAL, r, y, w, L, (0.0, 20.0))
    a0 = np.sum(w * y) / w.sum()
    chi_c = float(np.sum(w * (y - a0) ** 2))
    res = {LONG_RANGE: float(np.sqrt(chi_c / (r.size - 1))),
           POWER_LAW: float(np.sqrt(chi_p / dof)),
           EXPONENTIAL: float(np.sqrt(chi_e / dof))}
    xi = 1.0 / kappa if kappa > 0 else float("inf")

    if plateau > plateau_min and abs(eta) < eta_flat:
        model = LONG_RANGE
    elif res[POWER_LAW] * margin < res[EXPONENTIAL]:
        model = POWER_LAW
    elif res[EXPONENTIAL] * margin < res[POWER_LAW]:
        model = EXPONENTIAL
    else:
        model = AMBIGUOUS
    return DecayFit((lo, hi), model, float(eta), float(xi), plateau, res, margin, L)


# -- phase classification ---------------------------------------------------------------

@dataclass
class TransitionReport:
    d: int
    L_list: list[int]
    temperatures: list[float]
    labels: dict            # T -> label (stable across L, else "drifting")
    per_L: dict             # T -> {L: DecayFit.as_dict()}
    boundaries: list[dict]  # {"T": mid, "err": half gap, "from": label, "to": label}
    beta_c: dict = field(default_factory=dict)
    quantum_labels: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict, repr=False)   # (T, L) -> (r, C, sigma) rows

    def regimes(self) -> list[str]:
        """Consecutive distinct labels in order of increasing T."""
        out: list[str] = []
        for T in sorted(self.labels):
            lab = self.labels[T]
            if not out or out[-1] != lab:
                out.append(lab)
        return out

    def as_dict(self) -> dict:
        d = asdict(replace(self, tables={}))
        del d["tables"]
        d["labels"] = {str(k): v for k, v in self.labels.items()}
        d["quantum_labels"] = {str(k): v for k, v in self.quantum_labels.items()}
        d["per_L"] = {str(k): {str(l): f for l, f in v.items()} for k, v in self.per_L.items()}
        return d


def classification_range(L: int, min_points: int = 4) -> tuple[int, int]:
    """Separations used when classifying: ``[2, L/2]``, or ``[1, L/2]`` if that is too short."""
    hi = L // 2
    return (2, hi) if hi - 1 >= min_points else (1, hi)


def _decay_point(task):
    cfg, kwargs = task
    series, _ = run_chain(cfg)
    table = estimate_correlation(series)
    fit = fit_decay(table, r_range=classification_range(cfg.L), L=cfg.L, **kwargs)
    return table, fit


def correlation_tables(d: int, L_list, temperatures, sweeps: int = 50_000, therm: int = 5_000,
                       measure_every: int = 2, seed: int = 0, proposal: str = "uniform",
                       fit_kwargs: dict | None = None):
    tasks = [(McConfig(d, L, float(T), sweeps, therm, measure_every, point_seed(seed, d, L, i),
                       proposal), fit_kwargs or {})
             for i, T in enumerate(temperatures) for L in L_list]
    out = _map(_decay_point, tasks)
    keys = [(float(T), int(L)) for T in temperatures for L in L_list]
    return dict(zip(keys, out))


def classify_phases(d: int, L_list, temperatures, sweeps: int = 50_000, therm: int = 5_000,
                    measure_every: int = 2, seed: int = 0, proposal: str = "uniform",
                    fit_kwargs: dict | None = None) -> TransitionReport:
    """Label each temperature by its correlation decay, consistently over ``L_list``.

    Boundaries sit midway between adjacent temperatures with different labels
    and carry half the gap as uncertainty.  For two boundaries the mapped
    quantum transition points are ``beta_c1 = 1/(2 T_upper)`` and
    ``beta_c2 = 1/(2 T_lower)``.
    """
    temps = sorted(float(T) for T in temperatures)
    L_list = [int(L) for L in L_list]
    results = correlation_tables(d, L_list, temps, sweeps, therm, measure_every, seed, proposal,
                                 fit_kwargs)
    labels, per_L = {}, {}
    for T in temps:
        fits = {L: results[(T, L)][1] for L in L_list}
        per_L[T] = {L: f.as_dict() for L, f in fits.items()}
        names = {f.model for f in fits.values()}
        labels[T] = names.pop() if len(names) == 1 else DRIFTING
    if all(v in (AMBIGUOUS, DRIFTING) for v in labels.values()):
        raise ScanError(f"no temperature could be classified: {labels}")

    boundaries = []
    for a, b in zip(temps, temps[1:]):
        if labels[a] != labels[b]:
            boundaries.append({"T": (a + b) / 2, "err": (b - a) / 2,
                               "from": labels[a], "to": labels[b]})
    beta_c = {}
    if len(boundaries) == 1:
        T_c = boundaries[0]["T"]
        beta_c = {"beta_c": beta_from_temperature(T_c),
                  "beta_c_err": boundaries[0]["err"] / (2 * T_c ** 2)}
    elif len(boundaries) == 2:
        t1, t2 = boundaries[0], boundaries[1]
        beta_c = {"T_c1": t1["T"], "T_c2": t2["T"],
                  "beta_c1": beta_from_temperature(t2["T"]),
                  "beta_c1_err": t2["err"] / (2 * t2["T"] ** 2),
                  "beta_c2": beta_from_temperature(t1["T"]),
                  "beta_c2_err": t1["err"] / (2 * t1["T"] ** 2)}
    quantum = {T: QUANTUM_PHASE.get(lab, lab) for T, lab in labels.items()}
    tables = {key: table for key, (table, _) in results.items()}
    return TransitionReport(d, L_list, temps, labels, per_L, boundaries, beta_c, quantum, tables)

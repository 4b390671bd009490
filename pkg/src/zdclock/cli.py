"""Command-line front end.

Usage::

    zdclock <verb> [--config FILE] [--out DIR] [--d D] [--L L] ...
    zdclock replay DIR/verb.manifest.json

Configuration resolves as defaults < INI file < flags.  The INI file holds
plain keys in ``[run]`` and the grid and cap keys in ``[grid]`` and
``[caps]``::

    [run]
    d = 6
    L = 16, 32
    sweeps = 50000
    [grid]
    start = 0.4
    stop = 1.3
    step = 0.1

or ``values = 0.4, 0.78, 1.3`` in place of start/stop/step.

Exit codes: 0 success, 1 identity or classification failure, 2 usage
error, 3 resource cap hit.
"""
from __future__ import annotations

import argparse
import configparser
import datetime as _dt
import json
import logging
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import (json_bytes, manifest_path, payload_hash, read_manifest, write_csv,
                        write_json)
from .bridge import (kitaev, verify_curvature_identity, verify_fidelity_identity,
                     verify_partition_identity, verify_string_correlation)
from .clock_exact import (DEFAULT_ENUM_CAP, ClockParams, EnumerationCapError, check_enumeration,
                          enumerate_thermo, temperature_from_beta)
from .clock_mc import (PROPOSALS, RNG_ID, McConfig, estimate_correlation, estimate_energy,
                       estimate_heat_capacity, run_chain)
from .kitaev import PLAQUETTE_FORM, ScopeError, string_expectation
from .lattice import axis_path
from .qudit import DEFAULT_MEMORY_CAP, MemoryCapError, check_size
from .scan import ScanError, classify_phases, scan_fidelity

logger = logging.getLogger("zdclock")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3

VERBS = ("verify", "exact", "mc", "fidelity-scan", "string-scan", "classify", "replay")


class UsageError(ValueError):
    pass


def _int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    if isinstance(text, (int, np.integer)):
        return [int(text)]
    return [int(v) for v in str(text).replace(" ", "").split(",") if v]


def _float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    vals = [float(v) for v in str(text).replace(" ", "").split(",") if v]
    if not vals:
        raise ValueError("empty list")
    return vals


def _choice(options):
    def conv(text):
        if text not in options:
            raise ValueError(f"expected one of {options}")
        return str(text)
    return conv


def _int(text):
    if isinstance(text, float) and not text.is_integer():
        raise ValueError("not an integer")
    return int(text)


# key -> (converter, default)
KEYS = {
    "d": (_int, None),
    "L": (_int_list, None),
    "T": (float, None),
    "beta": (float, None),
    "delta_beta": (float, 0.01),
    "sweeps": (_int, 10_000),
    "therm": (_int, 1_000),
    "measure_every": (_int, 1),
    "seed": (_int, 0),
    "rng": (_choice((RNG_ID,)), RNG_ID),
    "proposal": (_choice(PROPOSALS), "uniform"),
    "grid.start": (float, None),
    "grid.stop": (float, None),
    "grid.step": (float, None),
    "grid.values": (_float_list, None),
    "caps.memory": (_int, DEFAULT_MEMORY_CAP),
    "caps.enum": (_int, DEFAULT_ENUM_CAP),
}
SECTIONS = {"run": "", "grid": "grid.", "caps": "caps."}
REQUIRED = ("d", "L")


def _convert(key: str, value):
    conv = KEYS[key][0]
    try:
        return conv(value)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"config key {key!r}: cannot parse {value!r} ({exc})") from None


def read_config_file(path) -> dict:
    """Raw key/value pairs from an INI file, keys in dotted form."""
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file {str(path)!r} does not exist")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str      # keys are case sensitive (L, T)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise UsageError(f"config file {str(path)!r}: {exc}") from None
    out = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise UsageError(f"unknown config section [{section}]")
        for name, value in parser.items(section):
            key = SECTIONS[section] + name
            if key not in KEYS:
                raise UsageError(f"unknown config key {key!r}")
            out[key] = value
    return out


def parse_config(path=None, flags: dict | None = None, required=REQUIRED) -> dict:
    """Resolve configuration: defaults < file < flags.

    ``flags`` maps dotted key names to raw values; ``None`` means unset.
    Unknown keys, unparsable values and missing required keys raise
    :class:`UsageError` naming the key.
    """
    cfg = {k: v for k, (_, v) in KEYS.items()}
    layers = [read_config_file(path) if path else {}, {k: v for k, v in (flags or {}).items()
                                                       if v is not None}]
    for layer in layers:
        for key, value in layer.items():
            if key not in KEYS:
                raise UsageError(f"unknown config key {key!r}")
            cfg[key] = _convert(key, value)
    for key in required:
        if cfg[key] is None:
            raise UsageError(f"missing required config key {key!r}")
    return cfg


def grid_values(cfg: dict) -> list[float] | None:
    """Grid points: ``grid.values`` as given, else ``start .. stop`` by ``step``."""
    keys = ("grid.start", "grid.stop", "grid.step")
    vals = [cfg[k] for k in keys]
    if cfg.get("grid.values") is not None:
        if any(v is not None for v in vals):
            raise UsageError("config key 'grid.values': give either values or start/stop/step")
        return sorted(cfg["grid.values"])
    if all(v is None for v in vals):
        return None
    for k, v in zip(keys, vals):
        if v is None:
            raise UsageError(f"missing required config key {k!r} (grid needs start, stop and step)")
    start, stop, step = vals
    if step <= 0 or stop < start:
        raise UsageError("config key 'grid.step': grid needs step > 0 and stop >= start")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def _single_L(cfg) -> int:
    if len(cfg["L"]) != 1:
        raise UsageError(f"config key 'L': this command takes a single size, got {cfg['L']}")
    return cfg["L"][0]


def _temperature(cfg) -> float | None:
    if cfg["T"] is not None:
        return cfg["T"]
    if cfg["beta"] is not None:
        return float(temperature_from_beta(cfg["beta"]))
    return None


def _check_quantum(d, L, cfg):
    check_size(d, 2 * L * L, cfg["caps.memory"])


# -- verbs ---------------------------------------------------------------------------

def cmd_verify(cfg, out: Path):
    d, L = cfg["d"], _single_L(cfg)
    _check_quantum(d, L, cfg)
    check_enumeration(d, L, cfg["caps.enum"])
    temps = grid_values(cfg) or ([cfg["T"]] if cfg["T"] is not None else [0.5, 1.0, 2.0])
    beta = cfg["beta"] if cfg["beta"] is not None else 0.7
    h = cfg["delta_beta"]
    reports = verify_partition_identity(d, L, temps)
    reports.append(verify_fidelity_identity(d, L, beta, h))
    reports.append(verify_curvature_identity(d, L, beta, dbetas=(h, h / 2, h / 4)))
    reports.extend(verify_string_correlation(d, L, beta))
    rows = [dict(r.as_dict(), mandatory=True) for r in reports]
    control = verify_partition_identity(d, L, temps, form=PLAQUETTE_FORM)
    rows.extend(dict(r.as_dict(), mandatory=False, identity="partition-plaquette-control")
                for r in control)
    paths = [write_json(out / "verify.json", rows)]
    failed = [r for r in rows if r["mandatory"] and not r["passed"]]
    for r in failed:
        logger.error("identity %s failed: %s", r["identity"], r["params"])
    return paths, EXIT_FAIL if failed else EXIT_OK, {"passed": not failed, "n_reports": len(rows)}


def cmd_exact(cfg, out: Path):
    d, L = cfg["d"], _single_L(cfg)
    check_enumeration(d, L, cfg["caps.enum"])
    temps = grid_values(cfg) or ([_temperature(cfg)] if _temperature(cfg) is not None else None)
    if not temps:
        raise UsageError("missing required config key 'T' (or a grid) for exact")
    rows = [enumerate_thermo(ClockParams(d, L, T), cfg["caps.enum"]).as_row() for T in temps]
    return [write_csv(out / "exact_thermo.csv", "exact_thermo", rows)], EXIT_OK, {}


def _mc_config(cfg, T, L=None, measure_corr=False) -> McConfig:
    try:
        return McConfig(cfg["d"], L or _single_L(cfg), T, cfg["sweeps"], cfg["therm"],
                        cfg["measure_every"], cfg["seed"], cfg["proposal"], rng=cfg["rng"],
                        measure_corr=measure_corr)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _check_series(cfg, L):
    n = cfg["sweeps"] // cfg["measure_every"]
    if n * (1 + L // 2) > cfg["caps.memory"]:
        raise MemoryCapError(n * (1 + L // 2), cfg["caps.memory"])


def cmd_mc(cfg, out: Path):
    T = _temperature(cfg)
    if T is None:
        raise UsageError("missing required config key 'T' (or 'beta') for mc")
    mcfg = _mc_config(cfg, T)
    _check_series(cfg, mcfg.L)
    series, manifest = run_chain(mcfg)
    rows = [(i, -c, c) for i, c in enumerate(series.bond_sum.tolist())]
    summary = {"d": mcfg.d, "L": mcfg.L, "T": T, "beta": mcfg.beta, "n_samples": series.n_samples,
               "acceptance": series.acceptance, "autocorr_estimate": manifest.autocorr_estimate}
    if series.n_samples >= 100:
        e, cv = estimate_energy(series), estimate_heat_capacity(series)
        summary.update(E=e.mean, E_err=e.error, C_v=cv.mean, C_v_err=cv.error)
    paths = [write_csv(out / "mc_series.csv", "mc_series", rows), write_json(out / "mc.json", summary)]
    run = {k: getattr(mcfg, k) for k in ("d", "L", "T", "beta", "sweeps", "therm", "measure_every",
                                         "seed", "rng", "proposal", "start")}
    run.update(code_version=__version__, autocorr_estimate=manifest.autocorr_estimate)
    return paths, EXIT_OK, {"run": run}


def cmd_fidelity_scan(cfg, out: Path):
    L = _single_L(cfg)
    betas = grid_values(cfg)
    if not betas:
        raise UsageError("missing required config key 'grid.start' (fidelity-scan needs a beta grid)")
    _check_series(cfg, 0)
    curve = scan_fidelity(cfg["d"], L, betas, cfg["delta_beta"], cfg["sweeps"], cfg["therm"],
                          cfg["measure_every"], cfg["seed"], cfg["proposal"])
    summary = {"d": cfg["d"], "L": L, "delta_beta": cfg["delta_beta"],
               "points": [vars(p) for p in curve.points]}
    for key in ("chi_F", "heat_capacity"):
        try:
            b, T = curve.peak(key)
            summary[f"peak_{key}"] = {"beta": b, "T": T}
        except ScanError as exc:
            summary[f"peak_{key}"] = None
            logger.warning("%s", exc)
    paths = [write_csv(out / "fidelity_curve.csv", "fidelity_curve", curve.rows()),
             write_json(out / "fidelity_scan.json", summary)]
    return paths, EXIT_OK, {}


def _string_rows_quantum(d, L, betas):
    K = kitaev(d, L)
    lat = K.lattice
    rows = []
    for b in betas:
        for r in range(1, L // 2 + 1):
            path = axis_path(lat, 0, lat.vertex(r, 0))
            rows.append((float(temperature_from_beta(b)), r, string_expectation(K, b, path), 0.0))
    return rows


def cmd_string_scan(cfg, out: Path):
    d, L = cfg["d"], _single_L(cfg)
    betas = grid_values(cfg)
    if betas is None:
        if cfg["beta"] is not None:
            betas = [cfg["beta"]]
        elif cfg["T"] is not None:
            betas = [0.5 / cfg["T"]]
        else:
            raise UsageError("missing required config key 'beta' (or 'T' or a grid) for string-scan")
    try:
        _check_quantum(d, L, cfg)
        method = "string-expectation"
        rows = _string_rows_quantum(d, L, betas)
    except MemoryCapError:
        method = "monte-carlo"
        _check_series(cfg, L)
        rows = []
        for b in betas:
            T = float(temperature_from_beta(b))
            series, _ = run_chain(_mc_config(cfg, T, measure_corr=True))
            rows.extend((T, int(r), c, s) for r, c, s in estimate_correlation(series))
    paths = [write_csv(out / "correlation.csv", "correlation", rows),
             write_json(out / "string_scan.json", {"d": d, "L": L, "method": method, "betas": betas})]
    return paths, EXIT_OK, {"method": method}


def cmd_classify(cfg, out: Path):
    temps = grid_values(cfg)
    if not temps:
        raise UsageError("missing required config key 'grid.start' (classify needs a T grid)")
    for L in cfg["L"]:
        _check_series(cfg, L)
    try:
        rep = classify_phases(cfg["d"], cfg["L"], temps, cfg["sweeps"], cfg["therm"],
                              cfg["measure_every"], cfg["seed"], cfg["proposal"])
    except ScanError as exc:
        logger.error("%s", exc)
        path = write_json(out / "classify.json", {"error": str(exc)})
        return [path], EXIT_FAIL, {}
    paths = [write_json(out / "classify.json", rep.as_dict())]
    for L in cfg["L"]:
        rows = [(T, int(r), c, s) for T in rep.temperatures for r, c, s in rep.tables[(T, L)]]
        paths.append(write_csv(out / f"correlation_L{L}.csv", "correlation", rows))
    return paths, EXIT_OK, {"regimes": rep.regimes()}


COMMANDS = {
    "verify": cmd_verify,
    "exact": cmd_exact,
    "mc": cmd_mc,
    "fidelity-scan": cmd_fidelity_scan,
    "string-scan": cmd_string_scan,
    "classify": cmd_classify,
}


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def run_command(verb: str, cfg: dict, out) -> tuple[int, dict]:
    """Run ``verb`` with a resolved config, write artifacts and the manifest."""
    if verb not in COMMANDS:
        raise UsageError(f"unknown command {verb!r}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    paths, status, extra = COMMANDS[verb](cfg, out)
    manifest = {
        "command": verb,
        "config": cfg,
        "seed": cfg["seed"],
        "rng": cfg["rng"],
        "code_version": __version__,
        "started": started,
        "finished": _now(),
        "outputs": sorted(p.name for p in paths),
        "output_hash": payload_hash(paths),
        "status": status,
    }
    manifest.update(extra)
    write_json(manifest_path(out, verb), manifest)
    return status, manifest


def replay(manifest_file, out=None) -> tuple[int, dict]:
    """Re-run a manifest's command and compare output hashes."""
    man = read_manifest(manifest_file)
    cfg = parse_config(flags=man["config"], required=())
    if man.get("code_version") != __version__:
        logger.warning("manifest written by version %s, replaying with %s",
                       man.get("code_version"), __version__)
    with tempfile.TemporaryDirectory() as tmp:
        target = Path(out) if out else Path(tmp)
        _, new = run_command(man["command"], cfg, target)
    result = {"manifest": str(manifest_file), "expected": man["output_hash"],
              "actual": new["output_hash"], "match": new["output_hash"] == man["output_hash"]}
    return (EXIT_OK if result["match"] else EXIT_FAIL), result


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zdclock", description="Z_d Kitaev state / clock model toolkit")
    p.add_argument("verb", choices=VERBS)
    p.add_argument("manifest", nargs="?", help="manifest file (replay only)")
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("-v", "--verbose", action="store_true")
    for key in KEYS:
        flag = "--" + key.replace(".", "-").replace("_", "-")
        p.add_argument(flag, dest=key, default=None, metavar=key.split(".")[-1].upper())
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.verb == "replay":
            if not args.manifest:
                raise UsageError("replay needs a manifest path")
            status, result = replay(args.manifest, None if args.out == "." else args.out)
            sys.stdout.write(json_bytes(result).decode())
            return status
        flags = {k: getattr(args, k) for k in KEYS}
        cfg = parse_config(args.config, flags)
        status, manifest = run_command(args.verb, cfg, args.out)
        sys.stdout.write(json.dumps({"command": args.verb, "status": status,
                                     "outputs": manifest["outputs"],
                                     "output_hash": manifest["output_hash"]}, sort_keys=True) + "\n")
        return status
    except UsageError as exc:
        sys.stderr.write(f"zdclock: usage error: {exc}\n")
        return EXIT_USAGE
    except (EnumerationCapError, MemoryCapError, ScopeError) as exc:
        sys.stderr.write(f"zdclock: resource cap: {exc}\n")
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())

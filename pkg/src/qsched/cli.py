"""Command-line front end.

Settings come from three layers: built-in defaults, an optional flat JSON
file (``--config``) and command-line flags, with flags winning. The fully
resolved settings are written into the header of every output file, so
identical settings give byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .analysis import bounds, build_counterexample, interior_seed_condition, optimal_window
from .battery import battery_passed, run_battery, summarize
from .core import EpidemicParams, EpidemicState, Schedule, level_curve
from .errors import QSchedError
from .integrator import IntegratorConfig, integrate, integrate_to_extinction
from .optimizer import scan_contiguous, sweep_heatmap
from .output import dumps, write_csv, write_json

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG = 0, 1, 2

COMMON_DEFAULTS: dict[str, Any] = {
    "gamma": 1 / 14,
    "r0n": 2.1,
    "r0q": 0.8,
    "i0": 1e-4,
    "T": 30.0,
    "step": 0.01,
    "extinction_threshold": 1e-10,
    "horizon_cap": 10_000.0,
    "threads": None,
    "seed": 0,
}

COMMAND_DEFAULTS: dict[str, dict[str, Any]] = {
    "simulate": {"horizon": None, "start": None, "stride": 1},
    "optimize": {},
    "scan": {"t0_min": 0.0, "t0_max": 300.0, "t0_step": 1.0},
    "sweep": {
        "r0n_values": None,
        "r0n_min": 1.1,
        "r0n_max": 4.0,
        "r0n_count": 30,
        "ratio_values": None,
        "ratio_min": 0.1,
        "ratio_max": 0.9,
        "ratio_count": 9,
    },
    "verify": {"delta": 0.1, "bf_grid": 2.5, "oracle_samples": 20, "tail_ell": 10.0},
    "phase": {"c_values": None, "n_curves": 12, "points": 200},
    "counterexample": {"r0n": 10.0, "r0q": 2.0, "delta_factor": 1e-3},
}

RATE_KEYS = ("beta_n", "beta_q")
R0_KEYS = ("r0n", "r0q")
INT_KEYS = {"threads", "seed", "stride", "r0n_count", "ratio_count", "oracle_samples", "n_curves", "points"}
LIST_KEYS = {"r0n_values", "ratio_values", "c_values"}
KNOWN_KEYS = set(COMMON_DEFAULTS) | set(RATE_KEYS) | {k for d in COMMAND_DEFAULTS.values() for k in d}


class ConfigError(Exception):
    pass


# --------------------------------------------------------------------------
# Configuration


def _key_line(text: str, key: str) -> int | None:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _where(path: str, text: str, key: str) -> str:
    line = _key_line(text, key)
    return f"{path}:{line}" if line else path


def _coerce(key: str, value: Any, origin: str) -> Any:
    if value is None:
        if key in {"threads", "horizon", "start"} | LIST_KEYS:
            return None
        raise ConfigError(f"{origin}: {key} may not be null")
    if key in LIST_KEYS:
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{origin}: {key} must be a non-empty list of numbers")
        return [_coerce("_float", v, origin) for v in value]
    if isinstance(value, bool):
        raise ConfigError(f"{origin}: {key} must be a number, got {json.dumps(value)}")
    if key in INT_KEYS:
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ConfigError(f"{origin}: {key} must be an integer, got {value!r}")
        return value
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{origin}: {key} must be a finite number, got {value!r}")
    return float(value)


def load_config_file(path: str) -> dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc

    def no_duplicates(pairs):
        seen = {}
        for k, v in pairs:
            if k in seen:
                raise ConfigError(f"{_where(path, text, k)}: duplicate key {k!r}")
            seen[k] = v
        return seen

    try:
        raw = json.loads(text, object_pairs_hook=no_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}:1: config must be a JSON object")
    out = {}
    for key, value in raw.items():
        if isinstance(value, dict):
            raise ConfigError(f"{_where(path, text, key)}: config must be flat, {key!r} is an object")
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{_where(path, text, key)}: unknown key {key!r}")
        out[key] = _coerce(key, value, _where(path, text, key))
    if any(k in out for k in RATE_KEYS) and any(k in out for k in R0_KEYS):
        key = next(k for k in R0_KEYS if k in out)
        raise ConfigError(f"{_where(path, text, key)}: give either beta_n/beta_q or r0n/r0q, not both")
    return out


def resolve(command: str, flags: dict[str, Any], file_cfg: dict[str, Any]) -> dict[str, Any]:
    """Merge defaults, file and flags into a validated flat dict."""
    defaults = {**COMMON_DEFAULTS, **COMMAND_DEFAULTS[command]}
    relevant = set(defaults) | set(RATE_KEYS)
    cfg = {k: v for k, v in defaults.items()}
    cfg.update({k: v for k, v in file_cfg.items() if k in relevant})
    cfg.update(flags)

    if any(k in flags for k in RATE_KEYS):
        mode = "rates"
    elif any(k in flags for k in R0_KEYS):
        mode = "r0"
    elif any(k in file_cfg for k in RATE_KEYS):
        mode = "rates"
    else:
        mode = "r0"
    if mode == "rates":
        rates = {**{k: file_cfg[k] for k in RATE_KEYS if k in file_cfg}, **{k: flags[k] for k in RATE_KEYS if k in flags}}
        missing = [k for k in RATE_KEYS if k not in rates]
        if missing:
            raise ConfigError(f"missing {', '.join(missing)}: raw rates need both beta_n and beta_q")
        beta_n, beta_q = rates["beta_n"], rates["beta_q"]
    else:
        beta_n, beta_q = cfg["r0n"] * cfg["gamma"], cfg["r0q"] * cfg["gamma"]
    try:
        params = EpidemicParams(beta_n=beta_n, beta_q=beta_q, gamma=cfg["gamma"])
        IntegratorConfig(cfg["step"], cfg["extinction_threshold"], cfg["horizon_cap"])
        EpidemicState.initial(cfg["i0"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not cfg["T"] > 0:
        raise ConfigError(f"T must be positive, got {cfg['T']}")
    if cfg["threads"] is not None and cfg["threads"] < 1:
        raise ConfigError(f"threads must be at least 1, got {cfg['threads']}")
    cfg.pop("beta_n", None)
    cfg.pop("beta_q", None)
    cfg.update(
        command=command,
        beta_n=params.beta_n,
        beta_q=params.beta_q,
        r0n=params.r0_n,
        r0q=params.r0_q,
        rho_n=params.rho_n,
        rho_q=params.rho_q,
        rate_mode=mode,
    )
    return cfg


def params_of(cfg: dict) -> EpidemicParams:
    return EpidemicParams(cfg["beta_n"], cfg["beta_q"], cfg["gamma"])


def integrator_of(cfg: dict) -> IntegratorConfig:
    return IntegratorConfig(cfg["step"], cfg["extinction_threshold"], cfg["horizon_cap"])


def set_threads(threads: int | None) -> None:
    import numba

    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(limit if threads is None else max(1, min(threads, limit)))


# --------------------------------------------------------------------------
# Commands


def _meta(cfg: dict, **extra) -> dict:
    return {"tool": "qsched", "version": __version__, "config": cfg, **extra}


def _linspace(lo: float, hi: float, count: int) -> list[float]:
    if count < 1:
        raise ConfigError(f"grid count must be at least 1, got {count}")
    return [float(x) for x in np.linspace(lo, hi, count)]


def _trajectory_rows(traj, stride: int):
    n = len(traj)
    idx = list(range(0, n, stride))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    for k in idx:
        yield traj.t[k], traj.s[k], traj.i[k], traj.r[k], traj.beta[k]


def cmd_simulate(cfg: dict, out: Path) -> int:
    params, icfg = params_of(cfg), integrator_of(cfg)
    initial = EpidemicState.initial(cfg["i0"])
    if cfg["stride"] < 1:
        raise ConfigError(f"stride must be at least 1, got {cfg['stride']}")
    start = cfg["start"]
    if start is None:
        start = optimal_window(params, cfg["i0"], cfg["T"], icfg).start
    runs = {"no_quarantine": Schedule.empty(), "quarantine": Schedule.contiguous(start, cfg["T"])}
    summary = {}
    for name, schedule in runs.items():
        if cfg["horizon"] is None:
            traj, fs = integrate_to_extinction(params, schedule, initial, icfg)
            r_final = fs.r_inf
        else:
            if cfg["horizon"] < 0:
                raise ConfigError(f"horizon must be nonnegative, got {cfg['horizon']}")
            traj = integrate(params, schedule, initial, cfg["horizon"], icfg)
            r_final = float(traj.r[-1])
        meta = _meta(cfg, run=name, intervals=[list(iv) for iv in schedule.intervals])
        path = write_csv(out / f"simulate_{name}.csv", meta, ["t", "s", "i", "r", "beta"], _trajectory_rows(traj, cfg["stride"]))
        summary[name] = {"file": path.name, "rows": len(traj), "r_final": r_final, "r_last_row": float(traj.r[-1])}
    summary["window_start"] = start
    write_json(out / "simulate.json", _meta(cfg), summary)
    print(dumps(summary))
    return EXIT_OK


def cmd_optimize(cfg: dict, out: Path) -> int:
    params, icfg = params_of(cfg), integrator_of(cfg)
    w = optimal_window(params, cfg["i0"], cfg["T"], icfg)
    b = bounds(params, cfg["i0"], cfg["T"])
    report = {
        **w.to_dict(),
        "end": w.end,
        "epsilon0": b.epsilon0,
        "t_star": b.t_star,
        "interior_seed_condition": interior_seed_condition(params, cfg["i0"], cfg["T"]),
    }
    write_json(out / "optimize.json", _meta(cfg), report)
    print(dumps({k: report[k] for k in ("case", "start", "r_inf", "q_residual", "peak_time", "epsilon0", "t_star")}))
    return EXIT_OK


def cmd_scan(cfg: dict, out: Path) -> int:
    params, icfg = params_of(cfg), integrator_of(cfg)
    lo, hi, step = cfg["t0_min"], cfg["t0_max"], cfg["t0_step"]
    if lo < 0 or hi < lo or not step > 0:
        raise ConfigError(f"scan grid needs 0 <= t0_min <= t0_max and t0_step > 0, got {lo}, {hi}, {step}")
    grid = [lo + k * step for k in range(int(math.floor((hi - lo) / step + 1e-9)) + 1)]
    res = scan_contiguous(params, cfg["i0"], cfg["T"], grid, icfg)
    meta = _meta(cfg)
    write_csv(out / "scan.csv", meta, ["t0", "r_inf"], ((a[0], r) for a, r in zip(res.axis, res.r_inf)))
    report = {
        "points": len(res),
        "argmin_t0": res.argmin[0],
        "min_r_inf": res.min_r_inf,
        "no_quarantine_r_inf": res.baseline,
        "first_r_inf": res.r_inf[0],
        "last_r_inf": res.r_inf[-1],
    }
    write_json(out / "scan.json", meta, report)
    print(dumps(report))
    return EXIT_OK


def cmd_sweep(cfg: dict, out: Path) -> int:
    icfg = integrator_of(cfg)
    r0n = cfg["r0n_values"] or _linspace(cfg["r0n_min"], cfg["r0n_max"], cfg["r0n_count"])
    ratio = cfg["ratio_values"] or _linspace(cfg["ratio_min"], cfg["ratio_max"], cfg["ratio_count"])
    if any(not 0 < q < 1 for q in ratio):
        raise ConfigError("every ratio must lie strictly between 0 and 1")
    if any(not r > 0 for r in r0n):
        raise ConfigError("every R0_n must be positive")
    res = sweep_heatmap(cfg["gamma"], cfg["T"], cfg["i0"], r0n, ratio, icfg)
    meta = _meta(cfg, r0n_grid=r0n, ratio_grid=ratio)
    d = res.detail
    rows = (
        (a[0], a[1], r, base, base - r, st, case)
        for a, r, base, st, case in zip(res.axis, res.r_inf, d["no_quarantine_r_inf"], d["start"], d["case"])
    )
    write_csv(out / "sweep.csv", meta, ["r0n", "ratio", "r_inf", "no_quarantine_r_inf", "reduction", "start", "case"], rows)
    report = {"cells": len(res), "argmin": list(res.argmin), "min_r_inf": res.min_r_inf, **res.notes}
    write_json(out / "sweep.json", meta, report)
    print(dumps(report))
    return EXIT_OK


def cmd_verify(cfg: dict, out: Path) -> int:
    params, icfg = params_of(cfg), integrator_of(cfg)
    checks = run_battery(
        params,
        cfg["i0"],
        cfg["T"],
        icfg,
        delta=cfg["delta"],
        bf_grid=cfg["bf_grid"],
        oracle_samples=cfg["oracle_samples"],
        tail_ell=cfg["tail_ell"],
        seed=cfg["seed"],
    )
    passed = battery_passed(checks)
    write_json(out / "verify.json", _meta(cfg), {"passed": passed, "checks": checks})
    for line in summarize(checks):
        print(line)
    print("all checks passed" if passed else "some checks FAILED")
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def default_c_values(rho: float, n: int) -> list[float]:
    c_min = rho - rho * math.log(rho)
    c_max = 1.0 - rho * math.log(rho) if rho < 1 else c_min + 1.0
    return [float(c) for c in np.linspace(c_min, c_max, n + 1)[1:]]


def cmd_phase(cfg: dict, out: Path) -> int:
    rho = params_of(cfg).rho_n
    if cfg["points"] < 2:
        raise ConfigError(f"points must be at least 2, got {cfg['points']}")
    c_values = cfg["c_values"] or default_c_values(rho, cfg["n_curves"])
    rows, curves = [], []
    worst = 0.0
    for k, c in enumerate(c_values):
        s, i, note = level_curve(c, rho, cfg["points"])
        for a, b in zip(s, i):
            worst = max(worst, abs(a + b - rho * math.log(a) - c))
            rows.append((k, c, a, b))
        curves.append({"curve": k, "c": c, "points": len(s), "note": note})
    meta = _meta(cfg, c_values=c_values)
    write_csv(out / "phase.csv", meta, ["curve", "c", "s", "i"], rows)
    report = {"rho": rho, "curves": curves, "max_residual": worst}
    write_json(out / "phase.json", meta, report)
    print(dumps({"curves": len(curves), "rows": len(rows), "max_residual": worst}))
    return EXIT_OK


def cmd_counterexample(cfg: dict, out: Path) -> int:
    rep = build_counterexample(params_of(cfg), integrator_of(cfg), delta_factor=cfg["delta_factor"])
    report = rep.to_dict()
    write_json(out / "counterexample.json", _meta(cfg), {"passed": rep.passed, **report})
    print(dumps({k: report[k] for k in ("found", "i0", "T", "s_at_T", "criterion", "r_inf", "r_inf_delta", "message")}))
    return EXIT_OK if rep.passed else EXIT_CHECK_FAILED


COMMANDS = {
    "simulate": (cmd_simulate, "trajectories with and without the optimal window"),
    "optimize": (cmd_optimize, "optimal start of a single window"),
    "scan": (cmd_scan, "final size against window start"),
    "sweep": (cmd_sweep, "optimal final size over an (R0_n, R0_q/R0_n) grid"),
    "verify": (cmd_verify, "run the verification battery"),
    "phase": (cmd_phase, "level curves of s + i - rho_n log s"),
    "counterexample": (cmd_counterexample, "configuration where lowering the seed raises the final size"),
}


# --------------------------------------------------------------------------
# Argument parsing


def _float_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _add(p: argparse.ArgumentParser, flag: str, type_, help_: str, dest: str | None = None) -> None:
    p.add_argument(flag, type=type_, default=argparse.SUPPRESS, help=help_, dest=dest)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="flat JSON settings file")
    common.add_argument("--out", default=None, help="output directory (QSCHED_OUT overrides)")
    _add(common, "--beta-n", float, "normal transmission rate", "beta_n")
    _add(common, "--beta-q", float, "transmission rate under quarantine", "beta_q")
    _add(common, "--gamma", float, "recovery rate")
    _add(common, "--r0n", float, "normal reproduction number")
    _add(common, "--r0q", float, "reproduction number under quarantine")
    _add(common, "--i0", float, "initial infected fraction")
    _add(common, "--T", float, "total quarantine length (days)", "T")
    _add(common, "--step", float, "RK4 step (days)")
    _add(common, "--extinction-threshold", float, "i below which the outbreak is over", "extinction_threshold")
    _add(common, "--horizon-cap", float, "longest integration (days)", "horizon_cap")
    _add(common, "--threads", int, "worker threads for batch kernels")
    _add(common, "--seed", int, "seed for randomized checks")

    parser = argparse.ArgumentParser(prog="qsched", description="Optimal timing of a fixed-length quarantine.")
    parser.add_argument("--version", action="version", version=f"qsched {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {name: sub.add_parser(name, parents=[common], help=help_) for name, (_, help_) in COMMANDS.items()}

    _add(subs["simulate"], "--horizon", float, "stop at this time instead of at extinction")
    _add(subs["simulate"], "--start", float, "window start (default: optimal)")
    _add(subs["simulate"], "--stride", int, "write every n-th step")
    for flag in ("--t0-min", "--t0-max", "--t0-step"):
        _add(subs["scan"], flag, float, "window start grid", flag[2:].replace("-", "_"))
    for axis in ("r0n", "ratio"):
        _add(subs["sweep"], f"--{axis}-values", _float_list, f"explicit {axis} grid, comma-separated", f"{axis}_values")
        _add(subs["sweep"], f"--{axis}-min", float, f"{axis} grid start", f"{axis}_min")
        _add(subs["sweep"], f"--{axis}-max", float, f"{axis} grid end", f"{axis}_max")
        _add(subs["sweep"], f"--{axis}-count", int, f"{axis} grid points", f"{axis}_count")
    _add(subs["verify"], "--delta", float, "shift used by the shift check (days)")
    _add(subs["verify"], "--bf-grid", float, "grid step of the split-schedule search", "bf_grid")
    _add(subs["verify"], "--oracle-samples", int, "random inputs for the final-size oracle", "oracle_samples")
    _add(subs["verify"], "--tail-ell", float, "length of the appended late window", "tail_ell")
    _add(subs["phase"], "--c-values", _float_list, "comma-separated levels", "c_values")
    _add(subs["phase"], "--n-curves", int, "number of default levels", "n_curves")
    _add(subs["phase"], "--points", int, "points per curve")
    _add(subs["counterexample"], "--delta-factor", float, "seed reduction relative to the seed", "delta_factor")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config")
    out_flag = args.pop("out")
    try:
        if any(k in args for k in RATE_KEYS) and any(k in args for k in R0_KEYS):
            raise ConfigError("--beta-n/--beta-q and --r0n/--r0q are mutually exclusive")
        file_cfg = load_config_file(config_path) if config_path else {}
        flags = {k: _coerce(k, v, f"--{k.replace('_', '-')}") for k, v in args.items()}
        cfg = resolve(command, flags, file_cfg)
        out = Path(os.environ.get("QSCHED_OUT") or out_flag or ".")
        set_threads(cfg["threads"])
        return COMMANDS[command][0](cfg, out)
    except ConfigError as exc:
        print(f"qsched: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"qsched: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QSchedError, RuntimeError, OSError) as exc:
        print(f"qsched: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())

"""Command-line experiment driver.

Every subcommand reads an optional JSON config, writes one or more CSV data
files and a ``summary.json`` into ``--out``.  Data files depend only on the
config, the seed and the package version.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import subprocess
import sys
import time
import warnings
from itertools import product
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .bounds import dense_bracket, extended_bracket, mc_bounds, trial_generators, draw_snr
from .design import (principle3_curves, principle3_feasible_range,
                     principle3_lambda_threshold, principle3_rho_star_curve,
                     principle4_curves, principle4_threshold)
from .errors import ConfigError, OfdmaError
from .fading import FadingModel, Rayleigh
from .geometry import LayoutKind, build_dense_layout, build_hex_layout
from .miso import solve_op_miso
from .op_solver import OpInstance, solve_op
from .scheduler import schedule_users, scheduled_sinr
from .snr_model import ChannelParams, concentration_band, scaling_point

EXPERIMENTS = ("bounds", "scaling-sweep", "op-solve", "schedule-sim", "design", "miso")

_pos = {"type": "number", "exclusiveMinimum": 0}
_posint = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["seed"],
    "additionalProperties": False,
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "seed": {"type": "integer", "minimum": 0},
        "trials": _posint,
        "bits": {"type": "boolean"},
        "users": {"enum": ["disc", "per_cell"]},
        "layout": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["dense", "hex_extended"]},
                "p": _pos, "R": _pos, "r0": _pos,
                "layout_seed": {"type": "integer", "minimum": 0},
            },
        },
        "channel": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "alpha": {"type": "number", "exclusiveMinimum": 1},
                "beta": _pos, "Pcon": _pos,
                "fading": {"type": "object", "required": ["family"],
                           "properties": {"family": {"enum": ["rayleigh", "nakagami",
                                                              "weibull", "lognormal"]}}},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {ax: {"type": "array", "minItems": 1, "items": _posint}
                           for ax in ("K", "B", "N", "M")},
        },
        "op": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"c": _pos, "hK": _pos, "B": _posint, "N": _posint,
                           "p_radius": _pos, "M": _posint, "n_random": {"type": "integer",
                                                                         "minimum": 0}},
        },
        "powers": {"enum": ["equal", "op"]},
        "design": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "c_over_sbar": _pos,
                "lambdas": {"type": "array", "minItems": 1,
                            "items": {"anyOf": [_pos, {"const": "inf"}]}},
                "sbar_over_c": {"type": "array", "minItems": 1, "items": _pos},
                "rho_start": _pos, "rho_stop": _pos, "rho_step": _pos,
            },
        },
    },
}

SUMMARY_SCHEMA = {
    "type": "object",
    "required": ["experiment", "version", "runtime_s", "units", "config", "files", "results"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "version": {"type": "string"},
        "runtime_s": {"type": "number", "minimum": 0},
        "units": {"enum": ["nats", "bits"]},
        "config": CONFIG_SCHEMA,
        "files": {"type": "array", "items": {"type": "string"}},
        "results": {},
    },
}

DEFAULTS = {
    "trials": 200,
    "bits": False,
    "users": "disc",
    "layout": {"kind": "dense", "p": 1.0, "R": 0.3, "r0": 0.1, "layout_seed": 0},
    "channel": {"alpha": 1.5, "beta": 1.0, "Pcon": 1.0, "fading": {"family": "rayleigh"}},
    "sweep": {"K": [100, 1000, 10000], "B": [2], "N": [2], "M": [1, 2]},
    "op": {"c": 0.1, "hK": 1000.0, "B": 2, "N": 2, "p_radius": 1.0, "n_random": 4},
    "powers": "equal",
    "design": {"c_over_sbar": 10.0, "lambdas": [0.1, 1.0, "inf"],
               "sbar_over_c": [0.1, 0.2, 0.26], "rho_start": 1.0, "rho_stop": 20.0,
               "rho_step": 0.01},
}


def version_string() -> str:
    """``git describe`` of the source tree when available, else the package version."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "describe", "--tags", "--always", "--dirty"], cwd=here,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path: str | None, experiment: str, seed: int | None = None,
                bits: bool = False) -> dict:
    """Read, merge with defaults and validate an experiment config."""
    raw = {}
    if path:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
    if seed is not None:
        raw["seed"] = seed
    if bits:
        raw["bits"] = True
    raw.setdefault("experiment", experiment)
    if raw["experiment"] != experiment:
        raise ConfigError(f"config is for {raw['experiment']!r}, not {experiment!r}")
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        raise ConfigError(f"invalid config: {e.message}") from e
    cfg = _merge(DEFAULTS, raw)
    jsonschema.validate(cfg, CONFIG_SCHEMA)
    return cfg


def _channel(cfg) -> ChannelParams:
    ch = cfg["channel"]
    return ChannelParams(alpha=ch["alpha"], beta=ch["beta"], r0=cfg["layout"]["r0"],
                         Pcon=ch["Pcon"], fading=FadingModel.from_dict(ch["fading"]))


def _layout(cfg, B: int):
    lay = cfg["layout"]
    if lay["kind"] == LayoutKind.HEX_EXTENDED.value:
        return build_hex_layout(B, lay["R"], lay["r0"])
    return build_dense_layout(B, lay["p"], lay["R"], lay["r0"], seed=lay["layout_seed"])


def _write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _write_json(path: Path, obj):
    path.write_text(json.dumps(_jsonable(obj), indent=2) + "\n", encoding="utf-8")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def _op_instance(cfg) -> OpInstance:
    op = cfg["op"]
    return OpInstance(c=op["c"], hK=op["hK"], B=op["B"], N=op["N"], params=_channel(cfg),
                      p_radius=op["p_radius"])


def run_bounds(cfg, out: Path, threads: int, unit: float):
    params = _channel(cfg)
    rows, res = [], []
    sw = cfg["sweep"]
    for K, B, N in product(sw["K"], sw["B"], sw["N"]):
        layout = _layout(cfg, B)
        r = mc_bounds(layout, params, K, N, cfg["trials"], cfg["seed"], cfg["users"], threads)
        bracket = None
        if isinstance(params.fading, Rayleigh):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                try:
                    if layout.kind is LayoutKind.DENSE:
                        bracket = dense_bracket(params, K, B, N, layout.p)
                    else:
                        bracket = extended_bracket(params, K, B, N, layout.R)
                except OfdmaError:
                    bracket = None
        rows.append((K, B, N, params.fading.family, r.lower * unit, r.upper * unit,
                     r.upper_jensen * unit, r.std_error_lower * unit,
                     r.std_error_upper * unit,
                     math.nan if bracket is None else bracket.lo * unit,
                     math.nan if bracket is None else bracket.hi * unit))
        res.append({"K": K, "B": B, "N": N, **{k: v * unit if isinstance(v, float) else v
                                              for k, v in r.to_dict().items()}})
    _write_csv(out / "bounds.csv", ["K", "B", "N", "family", "lo", "hi", "upper_jensen",
                                    "se_lo", "se_hi", "asym_lo", "asym_hi"], rows)
    return ["bounds.csv"], res


def run_scaling_sweep(cfg, out: Path, threads: int, unit: float):
    params = _channel(cfg)
    sw = cfg["sweep"]
    rows, res = [], []
    for B, N in product(sw["B"], sw["N"]):
        layout = _layout(cfg, B)
        for K in sw["K"]:
            dense = layout.kind is LayoutKind.DENSE
            p_eff = layout.p if dense else layout.R * math.sqrt(B)
            users = K if dense else K / B
            try:
                lK = scaling_point(params.fading, users, p_eff, params.r0, params.alpha,
                                   params.beta)
                lo, hi = concentration_band(params.fading, users, p_eff, params.r0,
                                            params.alpha, params.beta)
            except OfdmaError:
                lK = lo = hi = math.nan
            r = mc_bounds(layout, params, K, N, cfg["trials"], cfg["seed"], cfg["users"],
                          threads)
            law = B * N * math.log(math.log(users))
            rows.append((K, B, N, params.fading.family, lK, lo, hi, r.upper * unit,
                         r.upper / law))
            res.append({"K": K, "B": B, "N": N, "l_K": lK, "upper": r.upper * unit,
                        "upper_over_law": r.upper / law})
    _write_csv(out / "scaling.csv", ["K", "B", "N", "family", "l_K", "band_lo", "band_hi",
                                     "upper", "upper_over_BN_lnln"], rows)
    return ["scaling.csv"], res


def run_op_solve(cfg, out: Path, threads: int, unit: float):
    inst = _op_instance(cfg)
    sol = solve_op(inst, n_random=cfg["op"]["n_random"], seed=cfg["seed"])
    rows = [(i, n, sol.powers.p[i, n], sol.x[i, n]) for i in range(inst.B)
            for n in range(inst.N)]
    _write_csv(out / "op_solution.csv", ["i", "n", "power", "x"], rows)
    d = sol.to_dict()
    d["objective"] *= unit
    _write_json(out / "op_solution.json", d)
    return ["op_solution.csv", "op_solution.json"], d


def run_miso(cfg, out: Path, threads: int, unit: float):
    inst = _op_instance(cfg)
    M = cfg["op"].get("M") or cfg["sweep"]["M"][0]
    sol = solve_op_miso(inst, M, n_random=cfg["op"]["n_random"], seed=cfg["seed"])
    rows = [(i, n, m, sol.powers.p[i, n, m], sol.x[i, n, m]) for i in range(inst.B)
            for n in range(inst.N) for m in range(M)]
    _write_csv(out / "miso_solution.csv", ["i", "n", "m", "power", "x"], rows)
    d = sol.to_dict()
    d["objective"] *= unit
    d["M"] = M
    _write_json(out / "miso_solution.json", d)
    return ["miso_solution.csv", "miso_solution.json"], d


def run_schedule_sim(cfg, out: Path, threads: int, unit: float):
    params = _channel(cfg)
    sw = cfg["sweep"]
    K, B, N = sw["K"][0], sw["B"][0], sw["N"][0]
    layout = _layout(cfg, B)
    if cfg["powers"] == "op":
        p_eff = layout.p if layout.kind is LayoutKind.DENSE else layout.R * math.sqrt(B)
        inst = OpInstance(c=params.r0, hK=K, B=B, N=N, params=params, p_radius=p_eff)
        P = solve_op(inst, seed=cfg["seed"]).powers.p
    else:
        P = np.full((B, N), params.Pcon / N)
    rows, totals = [], []
    for t, rng in enumerate(trial_generators(cfg["seed"], cfg["trials"])):
        g = draw_snr(layout, params, K, N, rng, cfg["users"])
        a = schedule_users(P, g)
        s = scheduled_sinr(P, g, a)
        rate = np.log1p(s)
        totals.append(rate.sum())
        rows.extend((t, i, n, int(a.user_of[i, n]), s[i, n], rate[i, n] * unit)
                    for i in range(B) for n in range(N))
    _write_csv(out / "schedule.csv", ["trial", "i", "n", "scheduled_user", "sinr", "rate"],
               rows)
    totals = np.asarray(totals) * unit
    se = float(totals.std(ddof=1) / math.sqrt(totals.size)) if totals.size > 1 else 0.0
    return ["schedule.csv"], {"K": K, "B": B, "N": N, "powers": P.tolist(),
                              "mean_sum_rate": float(totals.mean()), "std_error": se}


def run_design(cfg, out: Path, threads: int, unit: float):
    d = cfg["design"]
    a = d["c_over_sbar"]
    n = int(round((d["rho_stop"] - d["rho_start"]) / d["rho_step"])) + 1
    rho = d["rho_start"] + d["rho_step"] * np.arange(n)
    lams = [math.inf if v == "inf" else float(v) for v in d["lambdas"]]
    _write_csv(out / "tradeoff_p3.csv", ["lambda", "rho", "lhs", "rhs", "constraint"],
               principle3_curves(a, lams, rho))
    lam_grid = np.round(np.geomspace(0.05, 100.0, 200), 10)
    _write_csv(out / "tradeoff_p3_rho_star.csv", ["lambda", "rho_star"],
               principle3_rho_star_curve(lam_grid, a))
    _write_csv(out / "tradeoff_p4.csv", ["sbar_over_c", "rho", "lhs", "rhs"],
               principle4_curves(d["sbar_over_c"], rho))
    rmin, rmax = principle3_feasible_range(a)
    fmax, rpk = principle4_threshold()
    return (["tradeoff_p3.csv", "tradeoff_p3_rho_star.csv", "tradeoff_p4.csv"],
            {"feasible_range": [rmin, rmax], "lambda_threshold": principle3_lambda_threshold(a),
             "p4_threshold": fmax, "p4_argmax": rpk})


RUNNERS = {"bounds": run_bounds, "scaling-sweep": run_scaling_sweep, "op-solve": run_op_solve,
           "schedule-sim": run_schedule_sim, "design": run_design, "miso": run_miso}


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def run(cfg: dict, out: str | os.PathLike, threads: int = 1) -> dict:
    """Run one experiment and write its artifacts; returns the summary dict."""
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    unit = 1.0 / math.log(2) if cfg["bits"] else 1.0
    files, results = RUNNERS[cfg["experiment"]](cfg, outdir, threads, unit)
    summary = _jsonable({
        "experiment": cfg["experiment"],
        "version": version_string(),
        "runtime_s": time.perf_counter() - t0,
        "units": "bits" if cfg["bits"] else "nats",
        "config": cfg,
        "files": files,
        "results": results,
    })
    jsonschema.validate(summary, SUMMARY_SCHEMA)
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return summary


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ofdmascale",
                                 description="OFDMA sum-rate scaling experiments")
    sub = ap.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--threads", type=int, default=1, help="worker threads, 0 = auto")
        sp.add_argument("--bits", action="store_true", help="report rates in bits")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.experiment, args.seed, args.bits)
        summary = run(cfg, args.out, args.threads)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 3
    except OfdmaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(json.dumps({"experiment": summary["experiment"], "files": summary["files"],
                      "runtime_s": round(summary["runtime_s"], 3)}))
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Batch front end.

Configs are JSON documents carrying ``schema_version``. Physical quantities
carry their unit in the key name (``_dbm``, ``_dbm_per_hz``, ``_mhz``,
``_m``, ``_mbps``); any other unit spelling is rejected. A config file must
be complete: ``--print-default-config`` emits one to start from. Without
``--config`` the built-in defaults are used.

CSV outputs are in SI units (meters, bit/s) with floats at 12 significant
digits. ``--print-schema`` lists the columns of every table.

Exit codes: 0 success, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .dep import NonConvergenceError, dep_report
from .link_rate import modality_rates
from .montecarlo import (
    ROW_FIELDS,
    DetectorKind,
    McConfig,
    StrategySpec,
    estimate_dep,
    run_sweep,
)
from .scenario import (
    SELECTION_STREAM,
    FadingKind,
    FadingModel,
    ModalitySpec,
    PathLossModel,
    Scenario,
    dbm_to_watts,
    realize_channels,
    stream,
)
from .selection import METRIC_NAMES, CsiLevel, Knowledge, run_strategy, subset_dep
from .special_fn import DomainError, QuadratureError

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------
def default_config() -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": {
            "modalities": [
                {"id": i, "center_freq_mhz": 300.0 * i, "bandwidth_mhz": 10.0,
                 "tx_power_dbm": 10.0}
                for i in range(1, 11)
            ],
            "L": 100,
            "N0_dbm_per_hz": -120.0,
            "tau": 0.15,
            "d_B_m": 30.0,
            "d_W_m": 30.0,
            "fading_W": {"kind": "rayleigh", "kappa": 1.0},
            "fading_B": {"kind": "rayleigh", "kappa": 1.0},
            "path_loss_exponent": 2.0,
        },
        "sweep": {"variable": "d_W_m", "grid": [10.0 * k for k in range(1, 11)]},
        "mc": {"trials": 10000, "realizations": 100, "seed": 0, "threads": 1},
        "strategies": ["proposed", "exhaustive", "maxdep_greedy", "random"],
        "willie_knowledge": "aware",
        "csi_level": "full",
        "subset": [4, 5, 6],
        "U_target_mbps": 10.0,
        "output": None,
    }


_SCENARIO_KEYS = set(default_config()["scenario"])
_MODALITY_KEYS = {"id", "center_freq_mhz", "bandwidth_mhz", "tx_power_dbm"}
_TOP_KEYS = set(default_config())
SWEEP_BOUNDARY = {"d_W_m": ("d_W", 1.0), "U_target_mbps": ("U_target", 1e6)}


def _keys(block: dict, expected: set, where: str):
    if not isinstance(block, dict):
        raise ConfigError(f"{where}: expected an object")
    missing = expected - set(block)
    extra = set(block) - expected
    if missing:
        raise ConfigError(f"{where}: missing field(s) {sorted(missing)}")
    if extra:
        raise ConfigError(f"{where}: unknown field(s) {sorted(extra)} "
                          "(units are fixed by the key suffix)")


def _num(value, where, *, lo=-math.inf, hi=math.inf, lo_open=False, allow_neg_inf=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    v = float(value)
    if allow_neg_inf and v == -math.inf:
        return v
    if not math.isfinite(v) or v < lo or v > hi or (lo_open and v == lo):
        raise ConfigError(f"{where}: {value!r} out of range")
    return v


def _int(value, where, lo=1):
    if isinstance(value, bool) or not isinstance(value, int) or value < lo:
        raise ConfigError(f"{where}: expected an integer >= {lo}, got {value!r}")
    return value


def _fading(block, where) -> FadingModel:
    _keys(block, {"kind", "kappa"}, where)
    try:
        kind = FadingKind(block["kind"])
    except ValueError:
        raise ConfigError(f"{where}.kind: one of {[k.value for k in FadingKind]}") from None
    kappa = _num(block["kappa"], f"{where}.kappa", lo=0.5)
    return FadingModel(kind, kappa)


def scenario_from_config(block: dict) -> Scenario:
    _keys(block, _SCENARIO_KEYS, "scenario")
    mods = block["modalities"]
    if not isinstance(mods, list) or not mods:
        raise ConfigError("scenario.modalities: expected a nonempty list")
    specs = []
    for k, m in enumerate(mods):
        where = f"scenario.modalities[{k}]"
        _keys(m, _MODALITY_KEYS, where)
        specs.append(ModalitySpec(
            id=_int(m["id"], f"{where}.id"),
            center_freq=_num(m["center_freq_mhz"], f"{where}.center_freq_mhz", lo=0, lo_open=True) * 1e6,
            bandwidth=_num(m["bandwidth_mhz"], f"{where}.bandwidth_mhz", lo=0, lo_open=True) * 1e6,
            tx_power=dbm_to_watts(_num(m["tx_power_dbm"], f"{where}.tx_power_dbm",
                                       hi=100.0, allow_neg_inf=True)),
        ))
    try:
        return Scenario(
            modalities=tuple(specs),
            L=_int(block["L"], "scenario.L"),
            N0=dbm_to_watts(_num(block["N0_dbm_per_hz"], "scenario.N0_dbm_per_hz", hi=0.0)),
            tau=_num(block["tau"], "scenario.tau", lo=0, hi=1, lo_open=True),
            d_B=_num(block["d_B_m"], "scenario.d_B_m", lo=0, lo_open=True),
            d_W=_num(block["d_W_m"], "scenario.d_W_m", lo=0, lo_open=True),
            fading_W=_fading(block["fading_W"], "scenario.fading_W"),
            fading_B=_fading(block["fading_B"], "scenario.fading_B"),
            path_loss=PathLossModel(_num(block["path_loss_exponent"],
                                         "scenario.path_loss_exponent", lo=0, lo_open=True)),
        )
    except DomainError as exc:
        raise ConfigError(f"scenario: {exc}") from None


def validate_config(cfg: dict) -> dict:
    """Check every block and return the parsed pieces; raises ConfigError."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    _keys(cfg, _TOP_KEYS, "config")
    if cfg["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}")
    scenario = scenario_from_config(cfg["scenario"])

    sweep = cfg["sweep"]
    _keys(sweep, {"variable", "grid"}, "sweep")
    if sweep["variable"] not in SWEEP_BOUNDARY:
        raise ConfigError(f"sweep.variable: one of {sorted(SWEEP_BOUNDARY)}")
    if not isinstance(sweep["grid"], list) or not sweep["grid"]:
        raise ConfigError("sweep.grid: expected a nonempty list")
    var, scale = SWEEP_BOUNDARY[sweep["variable"]]
    grid = [_num(g, "sweep.grid", lo=0, lo_open=True) * scale for g in sweep["grid"]]

    mc = cfg["mc"]
    _keys(mc, {"trials", "realizations", "seed", "threads"}, "mc")
    mc_cfg = McConfig(trials=_int(mc["trials"], "mc.trials", lo=0),
                      realizations=_int(mc["realizations"], "mc.realizations"),
                      seed=_int(mc["seed"], "mc.seed", lo=0),
                      threads=_int(mc["threads"], "mc.threads"))
    try:
        knowledge = Knowledge(cfg["willie_knowledge"])
        csi = CsiLevel(cfg["csi_level"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not isinstance(cfg["strategies"], list) or not cfg["strategies"]:
        raise ConfigError("strategies: expected a nonempty list")
    try:
        strategies = [StrategySpec.parse(s if "@" in s else f"{s}@{csi.value}")
                      for s in cfg["strategies"]]
    except (ValueError, AttributeError, TypeError) as exc:
        raise ConfigError(f"strategies: {exc}") from None
    subset = cfg["subset"]
    if not isinstance(subset, list) or not subset:
        raise ConfigError("subset: expected a nonempty list of modality ids")
    unknown = set(subset) - set(scenario.ids)
    if unknown or len(set(subset)) != len(subset):
        raise ConfigError(f"subset: ids must be distinct members of {scenario.ids}")
    return {
        "scenario": scenario, "variable": var, "grid": grid, "mc": mc_cfg,
        "knowledge": knowledge, "csi_level": csi, "strategies": strategies,
        "subset": tuple(sorted(subset)),
        "U_target": _num(cfg["U_target_mbps"], "U_target_mbps", lo=0, lo_open=True) * 1e6,
        "output": cfg["output"],
    }


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------
DEP_COLUMNS = ("method", "dep", "ci_halfwidth_95", "trials", "d_W", "subset")
SWEEP_COLUMNS = ROW_FIELDS
SELECT_COLUMNS = ("realization", "strategy", "csi_level", "metric", "knowledge", "U_target",
                  "subset", "feasible", "sum_rate", "total_cost", "dep")
SCHEMAS = {
    "dep": DEP_COLUMNS,
    "sweep": SWEEP_COLUMNS,
    "select": SELECT_COLUMNS,
    "reproduce": ("figure", "series") + SWEEP_COLUMNS,
}
UNITS_NOTE = ("d_W and distance sweep values in m; U_target, sum_rate and rate sweep values "
              "in bit/s; DEP columns are probabilities; dep_lower_bound is clamped at 0")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    if isinstance(value, (tuple, list)):
        return " ".join(str(v) for v in value)
    return str(value)


def to_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def _clamp_lb(rows):
    for row in rows:
        lb = row.get("dep_lower_bound")
        if lb is not None and not math.isnan(lb):
            row["dep_lower_bound"] = max(lb, 0.0)
    return rows


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------
def cmd_dep(p: dict) -> list[dict]:
    scen, mc, subset = p["scenario"], p["mc"], p["subset"]
    real = realize_channels(scen, mc.seed, 0)
    rep = dep_report(real, scen, subset)
    rows = [{"method": name, "dep": value} for name, value in (
        ("exact", rep.exact), ("approx_gamma", rep.approx_gamma),
        ("lower_bound", max(rep.lower_bound, 0.0)), ("iterative", rep.iterative),
        ("unknown_low_snr", rep.unknown_low_snr), ("unknown_gamma", rep.unknown_gamma),
    )]
    if mc.trials > 0:
        for kind in DetectorKind:
            est = estimate_dep(real, scen, subset, kind, mc, 0)
            rows.append({"method": f"mc_{kind.value}", "dep": est.dep_hat,
                         "ci_halfwidth_95": est.ci_halfwidth_95, "trials": est.trials})
    for row in rows:
        row["d_W"], row["subset"] = scen.d_W, subset
    return rows


def cmd_sweep(p: dict) -> list[dict]:
    rows = run_sweep(p["scenario"], p["variable"], p["grid"], p["strategies"], p["knowledge"],
                     p["mc"], U_target=p["U_target"], fixed_subset=p["subset"])
    return _clamp_lb(rows)


def cmd_select(p: dict) -> list[dict]:
    scen, mc, knowledge, target = p["scenario"], p["mc"], p["knowledge"], p["U_target"]
    rows, agg = [], {s.label: [] for s in p["strategies"]}
    for r in range(mc.realizations):
        real = realize_channels(scen, mc.seed, r)
        for spec in p["strategies"]:
            if spec.name == "fixed":
                raise ConfigError("select does not take the fixed strategy")
            out = run_strategy(spec.name, real, scen, target, knowledge=knowledge,
                               csi_level=spec.csi_level, rng=stream(mc.seed, SELECTION_STREAM, r))
            d = (subset_dep(real, scen, scen.positions(out.subset), knowledge)
                 if out.feasible else None)
            row = {"realization": r, "strategy": spec.label, "csi_level": spec.csi_level.value,
                   "metric": spec.metric, "knowledge": knowledge.value, "U_target": target,
                   "subset": out.subset, "feasible": out.feasible, "sum_rate": out.sum_rate,
                   "total_cost": out.total_cost, "dep": d}
            rows.append(row)
            agg[spec.label].append(row)
    for spec in p["strategies"]:
        got = agg[spec.label]
        ok = [g for g in got if g["feasible"]]
        rows.append({
            "realization": "mean", "strategy": spec.label, "csi_level": spec.csi_level.value,
            "metric": spec.metric, "knowledge": knowledge.value, "U_target": target,
            "subset": "", "feasible": len(ok) / len(got),
            "sum_rate": float(np.mean([g["sum_rate"] for g in ok])) if ok else math.nan,
            "total_cost": float(np.mean([g["total_cost"] for g in ok])) if ok else math.nan,
            "dep": float(np.mean([g["dep"] for g in ok])) if ok else math.nan,
        })
    return rows


# Figure presets: (series name, config overrides, sweep function kwargs)
def _preset(fig: str, base: dict) -> list[tuple[str, dict]]:
    def over(**kw):
        cfg = copy.deepcopy(base)
        for key, value in kw.items():
            if key in cfg["scenario"]:
                cfg["scenario"][key] = value
            else:
                cfg[key] = value
        return cfg

    d_grid = {"variable": "d_W_m", "grid": [10.0 * k for k in range(1, 11)]}
    u_grid = {"variable": "U_target_mbps", "grid": [5.0, 10.0, 15.0, 20.0, 25.0]}
    every = ["proposed", "exhaustive", "maxdep_greedy", "random"]
    nak = {"kind": "nakagami", "kappa": 2.0}
    if fig == "fig3":
        return [("s=1,2,3", over(sweep=d_grid, strategies=["fixed"], subset=[1, 2, 3]))]
    if fig == "fig4":
        subsets = [[1], [4], [5, 6], [4, 5], [4, 5, 6], [1, 2, 3]]
        return [("s=" + ",".join(map(str, s)),
                 over(sweep=d_grid, strategies=["fixed"], subset=s)) for s in subsets]
    if fig == "fig6":
        return [(k, over(sweep=d_grid, strategies=["fixed"], subset=[4, 5, 6],
                         willie_knowledge=k)) for k in ("aware", "unaware")]
    if fig == "fig7":
        return [(f"d_W={d:g}", over(sweep=u_grid, strategies=every, d_W_m=d))
                for d in (30.0, 50.0)]
    if fig == "fig8":
        return [("nakagami2", over(sweep=u_grid, d_W_m=40.0, fading_W=nak, fading_B=nak,
                                   strategies=["proposed@full", "proposed@statistical",
                                               "proposed@none", "maxdep_greedy", "random"]))]
    if fig == "fig9":
        return [(k, over(sweep=u_grid, strategies=every, d_W_m=30.0, willie_knowledge=k))
                for k in ("aware", "unaware")]
    raise ConfigError(f"unknown figure {fig!r}")


FIGURES = ("fig3", "fig4", "fig6", "fig7", "fig8", "fig9")
MC_FIGURES = ("fig3", "fig6")


def cmd_reproduce(fig: str, base: dict) -> list[dict]:
    rows = []
    for series, cfg in _preset(fig, base):
        if fig not in MC_FIGURES:
            cfg["mc"]["trials"] = 0
        for row in cmd_sweep(validate_config(cfg)):
            rows.append({"figure": fig, "series": series, **row})
    return rows


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mmcovert", description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, help="complete JSON config (schema_version 1)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", type=Path, help="CSV destination (default: stdout)")
    ap.add_argument("--json", type=Path, help="also write the rows as JSON")
    ap.add_argument("--trials", type=int, help="MC trials per hypothesis (0 disables MC)")
    ap.add_argument("--realizations", type=int)
    ap.add_argument("--threads", type=int)
    ap.add_argument("--print-schema", action="store_true", help="list CSV columns and exit")
    ap.add_argument("--print-default-config", action="store_true",
                    help="emit a complete default config and exit")
    sub = ap.add_subparsers(dest="command")
    sub.add_parser("dep", help="all DEP methods for one realization and the config subset")
    sub.add_parser("sweep", help="averaged DEPs over the config sweep grid")
    sub.add_parser("select", help="per-realization selection outcomes plus means")
    rp = sub.add_parser("reproduce", help="preset figure sweeps")
    rp.add_argument("figure", choices=FIGURES)
    return ap


def load_config(args) -> dict:
    if args.config is None:
        cfg = default_config()
    else:
        try:
            cfg = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from None
    if isinstance(cfg, dict) and isinstance(cfg.get("mc"), dict):
        for flag in ("seed", "trials", "realizations", "threads"):
            value = getattr(args, flag)
            if value is not None:
                cfg["mc"][flag] = value
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.print_schema:
        for name, cols in SCHEMAS.items():
            print(f"{name}: {','.join(cols)}")
        print(f"units: {UNITS_NOTE}")
        print(f"metrics: {', '.join(f'{k.value}={v}' for k, v in METRIC_NAMES.items())}")
        return EXIT_OK
    if args.print_default_config:
        print(json.dumps(default_config(), indent=2))
        return EXIT_OK
    if args.command is None:
        print("error: a subcommand is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args)
        params = validate_config(cfg)
        if args.command == "dep":
            rows, cols = cmd_dep(params), DEP_COLUMNS
        elif args.command == "sweep":
            rows, cols = cmd_sweep(params), SWEEP_COLUMNS
        elif args.command == "select":
            rows, cols = cmd_select(params), SELECT_COLUMNS
        else:
            rows, cols = cmd_reproduce(args.figure, cfg), SCHEMAS["reproduce"]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, QuadratureError, NonConvergenceError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    text = to_csv(rows, cols)
    out = args.out or (Path(params["output"]) if params["output"] else None)
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")
    if args.json is not None:
        args.json.write_text(json.dumps([{c: fmt(r.get(c)) for c in cols} for r in rows],
                                        indent=1), encoding="utf-8")
    return EXIT_OK

"""Command-line front end: key-rate sweeps, coefficient tables, optimization, MC checks.

Every command writes a CSV (UTF-8, header row) or, with ``--format json``,
a JSON list of row objects to ``--out`` or stdout.
Exit codes: 0 success, 2 configuration error, 3 estimation infeasible.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .channel import PAIRS, ChannelParams, ProtocolParams, closed_form_decoy_gain, code_mode_stats, mc_gains
from .config import PRESETS, ScenarioConfig, load_config
from .errors import ConfigError, EstimationInfeasible
from .fluctuation import FluctuationSpec, role_intervals
from .keyrate import plob_bound
from .optimizer import PARAM_NAMES, evaluate_detailed, evaluate_scenario, pso_optimize

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

SWEEP_COLUMNS = (
    ["distance_km", "N", "R_coh", "R_col", "plob"]
    + list(PARAM_NAMES)
    + ["log10_eps_coh", "log10_eps_col", "log10_eps_pe", "iae", "status"]
)
FLUCT_COLUMNS = ["delta_minus", "delta_plus"]
BOUNDS_COLUMNS = ["delta_minus", "delta_plus", "n", "refined_lower", "refined_upper",
                  "naive_lower", "naive_upper"]
MC_COLUMNS = ["scenario", "distance_km", "quantity", "x", "y", "expected", "observed",
              "count", "stderr", "z", "within_3sigma"]


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return x


def _plob(ch: ChannelParams) -> float:
    if ch.channel_transmittance >= 1.0:
        return float("inf")
    return plob_bound(ch.channel_transmittance)


def _sweep_point(cfg: ScenarioConfig, distance: float, N: int, seed: int):
    ch = cfg.channel.at_distance(distance)
    if cfg.optimize:
        pso = dataclasses.replace(cfg.pso, seed=seed)
        objective = lambda v: evaluate_scenario(v, ch, N, cfg.eps_coh, cfg.fluct, cfg.plugin)  # noqa: E731
        vector, _, _ = pso_optimize(objective, pso)
    else:
        vector = cfg.vector
    res = evaluate_detailed(vector, ch, N, cfg.eps_coh, cfg.fluct, cfg.plugin)
    row = {
        "distance_km": float(distance),
        "N": int(N),
        "R_coh": float(max(res.rate_coh, 0.0)),
        "R_col": float(res.rate_col),
        "plob": _plob(ch),
    }
    row.update({name: float(getattr(vector, name)) for name in PARAM_NAMES})
    b = res.budget
    row["log10_eps_coh"] = b.log10("eps_coh") if b else float("nan")
    row["log10_eps_col"] = b.log10("eps_col") if b else float("nan")
    row["log10_eps_pe"] = b.log10("eps_pe") if b else float("nan")
    row["iae"] = float(res.iae)
    row["status"] = res.status.split(":")[0]
    if cfg.fluct is not None:
        row["delta_minus"] = cfg.fluct.delta_minus
        row["delta_plus"] = cfg.fluct.delta_plus
    return row


def run_sweep(cfg: ScenarioConfig, axis: str = "distance", seed: int | None = None):
    """Key-rate curve over distance (at ``cfg.N``) or over N (at the configured distance).

    Returns ``(columns, rows)`` with rows in sweep order.
    """
    seed = cfg.pso.seed if seed is None else seed
    if axis == "distance":
        points = [(d, cfg.N) for d in cfg.distances_km]
    elif axis == "n":
        points = [(cfg.channel.distance_km, n) for n in cfg.N_values]
    else:
        raise ValueError(f"unknown sweep axis {axis!r}")
    jobs = [(d, n, seed + i) for i, (d, n) in enumerate(points)]
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(lambda j: _sweep_point(cfg, *j), jobs))
    else:
        rows = [_sweep_point(cfg, *j) for j in jobs]
    columns = SWEEP_COLUMNS + (FLUCT_COLUMNS if cfg.fluct is not None else [])
    return columns, rows


def run_bounds_table(mu_bar: float, delta_list, n_max: int):
    """Refined and naive coefficient intervals at a known mean intensity.

    One row per (delta, n) with the symmetric range [-delta, +delta].
    """
    rows = []
    for delta in delta_list:
        fluct = FluctuationSpec.symmetric(delta)
        refined = role_intervals((mu_bar, mu_bar), fluct, n_max, "refined")
        naive = role_intervals((mu_bar, mu_bar), fluct, n_max, "naive")
        for n in range(n_max + 1):
            rows.append({
                "delta_minus": fluct.delta_minus,
                "delta_plus": fluct.delta_plus,
                "n": n,
                "refined_lower": refined[n].lo,
                "refined_upper": refined[n].hi,
                "naive_lower": naive[n].lo,
                "naive_upper": naive[n].hi,
            })
    return list(BOUNDS_COLUMNS), rows


def run_mc_validate(cfg: ScenarioConfig, seed: int = 0):
    """Compare Monte-Carlo gains against the closed forms on random scenarios."""
    rows = []
    for s in range(cfg.mc_scenarios):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(s,)))
        distance = float(rng.uniform(0.0, 100.0))
        ch = dataclasses.replace(cfg.channel, distance_km=distance,
                                 dark_count_rate=float(10 ** rng.uniform(-8, -4)))
        mu = float(rng.uniform(0.1, 1.0))
        nu = mu * float(rng.uniform(0.1, 0.9))
        omega = nu * float(rng.uniform(0.1, 0.9))
        params = ProtocolParams(mu, nu, omega, 0.2, 0.2, 0.2, 0.2, N=cfg.mc_trials)
        gs = mc_gains(params, ch, cfg.mc_trials, seed=int(rng.integers(2**31)))
        checks = [("Q_c", mu, mu, code_mode_stats(mu, ch).q_code, gs.q_code, gs.code_count)]
        for pair in PAIRS:
            x, y = params.intensity(pair[0]), params.intensity(pair[1])
            checks.append((f"Q_{pair}", x, y, closed_form_decoy_gain(x, y, ch),
                           gs.decoy_gains[pair], gs.pair_counts[pair]))
        for name, x, y, expected, observed, count in checks:
            se = math.sqrt(expected * (1.0 - expected) / count) if count else float("inf")
            z = (observed - expected) / se if se > 0 else (0.0 if observed == expected else float("inf"))
            rows.append({
                "scenario": s, "distance_km": distance, "quantity": name, "x": x, "y": y,
                "expected": expected, "observed": observed, "count": count,
                "stderr": se, "z": z, "within_3sigma": int(abs(z) <= 3.0),
            })
    return list(MC_COLUMNS), rows


def _json_value(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)  # JSON has no inf/nan literals
    return x


def format_json(columns, rows) -> str:
    records = [{c: _json_value(row.get(c)) for c in columns} for row in rows]
    return json.dumps(records, indent=1) + "\n"


def format_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(v) for k, v in row.items()})
    return buf.getvalue()


def write_table(columns, rows, out=None, fmt="csv"):
    """Write rows as CSV or JSON to ``out`` (a path, ``-`` or None for stdout)."""
    text = format_json(columns, rows) if fmt == "json" else format_csv(columns, rows)
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tfqkd",
        description="Finite-key twin-field QKD key rates with decoy and intensity-fluctuation bounds.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML scenario file")
    common.add_argument("--preset", choices=sorted(PRESETS), default="paper",
                        help="parameter preset the config is applied on top of (default: paper)")
    common.add_argument("--seed", type=int, default=None, help="random seed (overrides [optimizer] seed)")
    common.add_argument("--out", metavar="PATH", default=None, help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="output format (default: csv)")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep-distance", parents=[common], help="key rate versus distance")
    sub.add_parser("sweep-n", parents=[common], help="key rate versus total pulse count N")
    sub.add_parser("bounds-table", parents=[common], help="refined vs naive coefficient intervals")
    sub.add_parser("optimize", parents=[common], help="optimize the parameter vector at one point")
    sub.add_parser("mc-validate", parents=[common], help="Monte-Carlo check of the gain model")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, preset=args.preset)
        seed = cfg.pso.seed if args.seed is None else args.seed
        if args.command == "sweep-distance":
            columns, rows = run_sweep(cfg, "distance", seed)
        elif args.command == "sweep-n":
            columns, rows = run_sweep(cfg, "n", seed)
        elif args.command == "optimize":
            cfg = dataclasses.replace(cfg, distances_km=[cfg.channel.distance_km], optimize=True)
            columns, rows = run_sweep(cfg, "distance", seed)
        elif args.command == "bounds-table":
            columns, rows = run_bounds_table(cfg.bounds_mu_bar, cfg.bounds_deltas, cfg.bounds_n_max)
        else:
            columns, rows = run_mc_validate(cfg, seed)
            ok = sum(r["within_3sigma"] for r in rows)
            print(f"mc-validate: {ok}/{len(rows)} gains within 3 sigma", file=sys.stderr)
        write_table(columns, rows, args.out, args.format)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EstimationInfeasible as exc:
        print(f"estimation infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if any(r.get("status") == "infeasible" for r in rows):
        print("estimation infeasible at one or more sweep points", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: simulate, predict, solve, sweep, bench.

Trajectory data lives in the --out directory (traj_a.csv, traj_b.csv plus
noise-free references); predict/solve/sweep load it from there and fall
back to simulating it from the current configuration when the files are
missing. A JSON config file can supply any flag value; explicit flags win.
Failures exit nonzero after printing one machine-readable JSON error line
to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import bench as bench_mod
from .bench import RunConfig, summarize, sweep, write_bench_csv, write_summary_csv, write_sweep_csv
from .trajectory import (
    AlignmentPair,
    load_trajectory,
    predict_alignment_cost,
    save_trajectory,
    simulate_pair,
    solve_alignment,
)

TRAJ_FILES = ("traj_a.csv", "traj_b.csv", "traj_a_clean.csv", "traj_b_clean.csv")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="costpredict",
        description="Predict alignment costs of simulated trajectories and "
        "validate them against a full solver.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("simulate", "write two simulated trajectories (plus noise-free references)"),
        ("predict", "closed-form cost of one pose pair"),
        ("solve", "fully optimized cost of one pose pair"),
        ("sweep", "evaluate all pose pairs; write an error grid and summary"),
        ("bench", "full sweeps over several trajectory lengths; write timing table"),
    ]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--poses", help="number of poses (bench: comma-separated list)")
        p.add_argument("--trans-noise", type=float, help="translation noise std (m)")
        p.add_argument("--rot-noise", type=float, help="rotation noise std (rad)")
        p.add_argument("--seed", type=int, help="simulation seed")
        p.add_argument("--mode", choices=bench_mod.MODES, help="sweep mode")
        p.add_argument("--pair", help="pose pair 'l,r' (predict/solve)")
        p.add_argument("--out", help="output directory (default: out)")
        p.add_argument("--jobs", type=int, help="parallel workers (default: all cores)")
        p.add_argument("--config", help="JSON file with defaults for any flag")
    return parser


_DEFAULTS = {
    "poses": "20",
    "trans_noise": 0.1,
    "rot_noise": 0.01,
    "seed": 0,
    "mode": "both",
    "pair": None,
    "out": "out",
    "jobs": None,
}


def _merge_config(args: argparse.Namespace) -> dict:
    """Defaults < config file < explicit flags."""
    merged = dict(_DEFAULTS)
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(_DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        merged.update(loaded)
    for key in _DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    if merged["jobs"] is None:
        merged["jobs"] = os.cpu_count() or 1
    return merged


def _parse_pair(text) -> AlignmentPair:
    if text is None:
        raise ValueError("--pair l,r is required for this command")
    parts = str(text).split(",")
    if len(parts) != 2:
        raise ValueError("--pair expects two comma-separated indices, e.g. 10,10")
    return AlignmentPair(int(parts[0]), int(parts[1]))


def _config_from(merged: dict, n_poses: int) -> RunConfig:
    return RunConfig(
        n_poses=n_poses,
        trans_noise=float(merged["trans_noise"]),
        rot_noise=float(merged["rot_noise"]),
        seed=int(merged["seed"]),
        mode=merged["mode"],
        out=Path(merged["out"]),
        jobs=int(merged["jobs"]),
    )


def _simulate_to(cfg: RunConfig):
    tA, tB, (cleanA, cleanB) = simulate_pair(
        cfg.n_poses,
        trans_step=cfg.trans_step,
        rot_noise_std=cfg.rot_noise,
        trans_noise_std=cfg.trans_noise,
        seed=cfg.seed,
    )
    cfg.out.mkdir(parents=True, exist_ok=True)
    for name, traj in zip(TRAJ_FILES, (tA, tB, cleanA, cleanB)):
        save_trajectory(cfg.out / name, traj)
    return tA, tB


def _load_or_simulate(cfg: RunConfig):
    path_a = cfg.out / TRAJ_FILES[0]
    path_b = cfg.out / TRAJ_FILES[1]
    if path_a.exists() and path_b.exists():
        return load_trajectory(path_a), load_trajectory(path_b)
    return _simulate_to(cfg)


def cmd_simulate(cfg: RunConfig) -> int:
    _simulate_to(cfg)
    print(json.dumps({"written": [str(cfg.out / name) for name in TRAJ_FILES]}))
    return 0


def cmd_predict(cfg: RunConfig, pair: AlignmentPair) -> int:
    tA, tB = _load_or_simulate(cfg)
    start = time.perf_counter()
    delta_f = predict_alignment_cost(tA, tB, pair)
    elapsed = time.perf_counter() - start
    print(json.dumps({"l": pair.l, "r": pair.r, "delta_f": delta_f, "t_predict": elapsed}))
    return 0


def cmd_solve(cfg: RunConfig, pair: AlignmentPair) -> int:
    tA, tB = _load_or_simulate(cfg)
    start = time.perf_counter()
    f_real, _ = solve_alignment(tA, tB, pair)
    elapsed = time.perf_counter() - start
    print(json.dumps({"l": pair.l, "r": pair.r, "f_real": f_real, "t_solve": elapsed}))
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    tA, tB = _load_or_simulate(cfg)
    rows = sweep(tA, tB, mode=cfg.mode, jobs=cfg.jobs)
    cfg.out.mkdir(parents=True, exist_ok=True)
    grid_path = cfg.out / "sweep.csv"
    write_sweep_csv(grid_path, rows, mode=cfg.mode)
    stats = summarize(rows)
    write_summary_csv(cfg.out / "sweep_summary.csv", stats)
    print(json.dumps({"grid": str(grid_path), **stats}))
    return 0


def cmd_bench(cfg: RunConfig, lengths) -> int:
    if not lengths:
        raise ValueError("bench needs --poses as a comma-separated list, e.g. 20,50")
    rows = bench_mod.bench(lengths, cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / "bench.csv"
    write_bench_csv(path, rows)
    print(json.dumps({
        "table": str(path),
        "rows": [
            {"n_poses": row.n_poses,
             "t_predict_avg": row.t_predict_avg,
             "t_solve_avg": row.t_solve_avg,
             "rel_error_median": row.rel_error_median}
            for row in rows
        ],
    }))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        merged = _merge_config(args)
        lengths = [int(p) for p in str(merged["poses"]).split(",") if p.strip()]
        if not lengths:
            raise ValueError("--poses must name at least one length")
        cfg = _config_from(merged, lengths[0])
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "predict":
            return cmd_predict(cfg, _parse_pair(merged["pair"]))
        if args.command == "solve":
            return cmd_solve(cfg, _parse_pair(merged["pair"]))
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "bench":
            return cmd_bench(cfg, lengths)
        raise ValueError(f"unknown command {args.command}")
    except Exception as exc:
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

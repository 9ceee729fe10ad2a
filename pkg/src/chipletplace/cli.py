"""Command-line entry point.

Subcommands:
  train              two-agent PPO run on a benchmark
  baseline           sa | random | single-rl comparison runs
  pareto             pool run directories into per-method Pareto fronts
  render             layout + thermal-map SVGs for a saved layout
  calibrate-thermal  fit preset conductances to a target hotspot band

Exit codes: 0 success, 2 configuration error, 3 runtime error,
4 placement deadlock (aborted episodes or unconstructible layouts).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__, analysis, baselines, render, runio, thermal
from .agents import PlacementDeadlockError, TrainConfig, Trainer
from .baselines import LayoutConstructionError, SAConfig
from .grid import state_from_layout
from .model import ConfigError, benchmark_to_dict, load_benchmark

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_DEADLOCK = 4

OUT_ROOT_ENV = "CHIPLETPLACE_OUT_ROOT"


def _default_out(method: str, bench_name: str, seed: int) -> Path:
    root = Path(os.environ.get(OUT_ROOT_ENV, "runs"))
    return root / f"{method}-{bench_name}-seed{seed}"


def _load_config(args):
    config = load_benchmark(args.benchmark)
    if getattr(args, "grid_n", None):
        # vertical conductance is per cell, so resampling the grid must
        # rescale it with cell area to keep the physical sink unchanged;
        # lateral conduction between equal-width slabs is size-independent
        scale = (config.grid_n / args.grid_n) ** 2
        thermal_params = replace(
            config.thermal,
            vertical_conductance=config.thermal.vertical_conductance * scale)
        config = replace(config, grid_n=args.grid_n, thermal=thermal_params)
    return config


def _train_config(args) -> TrainConfig:
    data = {}
    if getattr(args, "train_config", None):
        p = Path(args.train_config)
        if not p.exists():
            raise ConfigError(f"train config file not found: {p}")
        data = yaml.safe_load(p.read_text()) or {}
        if not isinstance(data, dict):
            raise ConfigError("train config must be a mapping", str(p))
    for key, flag in (("total_updates", "updates"), ("seed", "seed"),
                      ("episodes_per_batch", "episodes_per_batch"),
                      ("checkpoint_interval", "checkpoint_interval"),
                      ("eval_episodes_per_checkpoint", "eval_episodes")):
        value = getattr(args, flag, None)
        if value is not None:
            data[key] = value
    try:
        return TrainConfig.from_dict(data)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad train config: {e}") from None


def _persist_train_run(out_dir: Path, result, tc: TrainConfig, config, method: str):
    runio.write_dict_rows_csv(out_dir / "training_log.csv", result.log_rows)
    runio.write_dict_rows_csv(out_dir / "episodes.csv", result.episode_rows)
    (out_dir / "train_config.json").write_text(json.dumps(tc.to_dict(), indent=2) + "\n")
    points = []
    for rec in result.eval_records:
        tag = f"u{rec.update_index:06d}_e{rec.episode}"
        points.append((method, tc.seed, tag, rec.wl, rec.temp))
        runio.write_layout_json(out_dir / "eval" / "layouts" / f"layout_{tag}.json",
                                rec.layout, config.name)
        runio.write_trace_csv(out_dir / "eval" / "traces" / f"trace_{tag}.csv", rec.trace)
    runio.write_points_csv(out_dir / "eval" / "points.csv", points)


def cmd_train(args) -> int:
    config = _load_config(args)
    tc = _train_config(args)
    out_dir = Path(args.out) if args.out else _default_out("train", config.name, tc.seed)
    manifest = runio.start_run(out_dir, "marl", config,
                               params={"command": "train", "train_config": tc.to_dict(),
                                       "grid_n": config.grid_n,
                                       "argv": getattr(args, "argv", [])},
                               seeds=[tc.seed])
    try:
        result = Trainer(config, tc, mode="routed", out_dir=out_dir).train()
    except Exception:
        runio.finish_run(out_dir, manifest, status="failed")
        raise
    _persist_train_run(out_dir, result, tc, config, "marl")
    status = "complete" if result.aborted_episodes == 0 else "complete-with-deadlocks"
    manifest.artifacts.update({"training_log": "training_log.csv",
                               "episodes": "episodes.csv",
                               "points": "eval/points.csv",
                               "checkpoints": [str(p.relative_to(out_dir)) for p in result.checkpoint_paths]})
    runio.finish_run(out_dir, manifest, status=status)
    print(f"run directory: {out_dir}")
    return EXIT_OK if result.aborted_episodes == 0 else EXIT_DEADLOCK


def _parse_sweep(text: str) -> list[float]:
    """Either a single float or an inclusive a:b:step sweep."""
    if ":" not in text:
        return [float(text)]
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"sweep must be start:stop:step, got {text!r}")
    a, b, s = (float(p) for p in parts)
    if s <= 0 or b < a:
        raise ConfigError(f"bad sweep range {text!r}")
    count = int(round((b - a) / s)) + 1
    return [round(a + i * s, 10) for i in range(count) if a + i * s <= b + s * 1e-9]


def cmd_baseline_sa(args) -> int:
    config = _load_config(args)
    w_wls = _parse_sweep(args.w_wl)
    w_temps = _parse_sweep(args.w_temp)
    if len(w_wls) > 1 and len(w_temps) > 1:
        raise ConfigError("only one of --w-wl/--w-temp may sweep")
    combos = [(w, t) for w in w_wls for t in w_temps]
    out_dir = Path(args.out) if args.out else _default_out("sa", config.name, args.seed)
    manifest = runio.start_run(out_dir, "sa", config,
                               params={"command": "baseline sa", "w_wl": args.w_wl,
                                       "w_temp": args.w_temp, "seed": args.seed,
                                       "cooling": args.cooling,
                                       "moves_per_temp": args.moves_per_temp,
                                       "grid_n": config.grid_n,
                                       "argv": getattr(args, "argv", [])},
                               seeds=[args.seed])
    points = []
    for w_wl, w_temp in combos:
        sa = SAConfig(w_wl=w_wl, w_temp=w_temp, cooling=args.cooling,
                      moves_per_temp=args.moves_per_temp, seed=args.seed)
        result = baselines.sa_search(config, sa)
        tag = f"w{w_wl:g}-{w_temp:g}"
        sub = out_dir / f"sweep_{tag}" if len(combos) > 1 else out_dir
        runio.write_csv(sub / "sa_trace.csv",
                        ("iteration", "temperature", "move", "accepted", "cost", "wl",
                         "temp", "best_cost"),
                        [(r.iteration, r.temperature, r.move, r.accepted, r.cost, r.wl,
                          r.temp, r.best_cost) for r in result.trace])
        runio.write_layout_json(sub / "best_layout.json", result.best_layout, config.name)
        points.append(("sa", args.seed, tag, result.best_wl, result.best_temp))
    runio.write_points_csv(out_dir / "points.csv", points)
    manifest.artifacts.update({"points": "points.csv"})
    runio.finish_run(out_dir, manifest)
    print(f"run directory: {out_dir}")
    return EXIT_OK


def cmd_baseline_random(args) -> int:
    config = _load_config(args)
    out_dir = Path(args.out) if args.out else _default_out("random", config.name, args.seed)
    manifest = runio.start_run(out_dir, "random", config,
                               params={"command": "baseline random", "budget": args.budget,
                                       "seed": args.seed, "grid_n": config.grid_n,
                                       "argv": getattr(args, "argv", [])},
                               seeds=[args.seed])
    result = baselines.random_search(config, args.budget, seed=args.seed)
    points = [("random", args.seed, f"i{i}", wl, temp)
              for i, (wl, temp) in enumerate(result.points)]
    runio.write_points_csv(out_dir / "points.csv", points)
    runio.write_layout_json(out_dir / "best_wl_layout.json",
                            result.layouts[result.best_wl_index], config.name)
    runio.write_layout_json(out_dir / "best_temp_layout.json",
                            result.layouts[result.best_temp_index], config.name)
    manifest.artifacts.update({"points": "points.csv"})
    runio.finish_run(out_dir, manifest)
    print(f"run directory: {out_dir}")
    return EXIT_OK


def cmd_baseline_single_rl(args) -> int:
    config = _load_config(args)
    tc = _train_config(args)
    weights = (args.w_wire, args.w_thermal)
    out_dir = Path(args.out) if args.out else _default_out("single-rl", config.name, tc.seed)
    manifest = runio.start_run(out_dir, "single-rl", config,
                               params={"command": "baseline single-rl",
                                       "train_config": tc.to_dict(), "weights": list(weights),
                                       "grid_n": config.grid_n,
                                       "argv": getattr(args, "argv", [])},
                               seeds=[tc.seed])
    try:
        result = baselines.single_agent_rl(config, tc, out_dir=out_dir, weights=weights)
    except Exception:
        runio.finish_run(out_dir, manifest, status="failed")
        raise
    _persist_train_run(out_dir, result, tc, config, "single-rl")
    status = "complete" if result.aborted_episodes == 0 else "complete-with-deadlocks"
    runio.finish_run(out_dir, manifest, status=status)
    print(f"run directory: {out_dir}")
    return EXIT_OK if result.aborted_episodes == 0 else EXIT_DEADLOCK


def cmd_pareto(args) -> int:
    methods = analysis.assemble_front(args.run_dirs)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ref = analysis.reference_point([mp.cloud for mp in methods.values()])
    hv_rows = []
    for name, mp in sorted(methods.items()):
        front_set = {(p.wl, p.temp) for p in mp.front}
        runio.write_csv(out_dir / f"front_{name}.csv",
                        ("method", "seed", "tag", "wl_mm", "temp_c", "dominated"),
                        [(p.method, p.seed, p.tag, p.wl, p.temp,
                          0 if (p.wl, p.temp) in front_set else 1) for p in mp.cloud])
        hv_rows.append((name, len(mp.cloud), analysis.hypervolume_2d(mp.front, ref),
                        ref[0], ref[1]))
    runio.write_csv(out_dir / "hypervolume.csv",
                    ("method", "n_points", "hypervolume", "ref_wl", "ref_temp"), hv_rows)
    render.pareto_svg(methods, out_dir / "pareto.svg", ref_point=ref)
    for name, n, hv, _, _ in hv_rows:
        print(f"{name}: {n} points, hypervolume {hv:.4f}")
    return EXIT_OK


def cmd_render(args) -> int:
    config = _load_config(args)
    layout = runio.read_layout_json(args.layout)
    state = state_from_layout(config, layout, partial=True)
    out_dir = Path(args.out)
    render.layout_svg(config, layout, out_dir / "layout.svg")
    field = thermal.solve_steady_state(thermal.power_map(state, config), config.thermal)
    render.thermal_svg(field.temps, config, out_dir / "thermal.svg")
    (out_dir / "thermal_field.txt").write_text(render.field_to_text(field.temps))
    print(f"hotspot {field.hotspot:.1f} C at {field.hotspot_cell}")
    return EXIT_OK


def cmd_calibrate_thermal(args) -> int:
    config = _load_config(args)
    target_rise = args.target_hotspot - config.thermal.ambient_temp
    if target_rise <= 0:
        raise ConfigError("--target-hotspot must exceed the ambient temperature")
    probe_params = replace(config.thermal, vertical_conductance=1.0,
                           lateral_conductance=args.ratio)
    probe = replace(config, thermal=probe_params)
    rng = np.random.default_rng(args.seed)
    solver = thermal.SteadyStateSolver(probe.thermal, probe.grid_n)
    rises = []
    for _ in range(args.samples):
        layout = baselines.random_layout(probe, rng)
        _, temp = baselines.layout_metrics(probe, layout, solver)
        rises.append(temp - probe.thermal.ambient_temp)
    mean_rise = float(np.mean(rises))
    # the rise field scales as 1/c when both conductances scale by c
    scale = mean_rise / target_rise
    g_vert = scale
    g_lat = args.ratio * scale
    calibrated = replace(config, thermal=replace(config.thermal,
                                                 vertical_conductance=g_vert,
                                                 lateral_conductance=g_lat))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(yaml.safe_dump(benchmark_to_dict(calibrated), sort_keys=False))
    print(f"mean hotspot rise at unit conductance: {mean_rise:.3f} C over "
          f"{args.samples} layouts")
    print(f"vertical_conductance: {g_vert:.6g}")
    print(f"lateral_conductance: {g_lat:.6g}")
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chipletplace",
                                     description="2.5D chiplet placement experiments")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("benchmark", help="benchmark YAML path or preset name")
        p.add_argument("--grid-n", type=int, default=None, help="override grid resolution")
        p.add_argument("--out", default=None, help="run directory "
                       f"(default under ${OUT_ROOT_ENV} or ./runs)")

    def add_train_flags(p):
        p.add_argument("--train-config", default=None, help="YAML/JSON TrainConfig file")
        p.add_argument("--updates", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--episodes-per-batch", type=int, default=None)
        p.add_argument("--checkpoint-interval", type=int, default=None)
        p.add_argument("--eval-episodes", type=int, default=None,
                       help="evaluation episodes per checkpoint (first is greedy)")

    p = sub.add_parser("train", help="train the two-agent placer")
    add_common(p)
    add_train_flags(p)
    p.set_defaults(func=cmd_train)

    pb = sub.add_parser("baseline", help="run a comparison method")
    bsub = pb.add_subparsers(dest="method", required=True)

    p = bsub.add_parser("sa", help="simulated annealing")
    add_common(p)
    p.add_argument("--w-wl", default="0.5", help="wirelength weight, or start:stop:step sweep")
    p.add_argument("--w-temp", default="0.5", help="temperature weight, or sweep")
    p.add_argument("--cooling", type=float, default=0.95)
    p.add_argument("--moves-per-temp", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_baseline_sa)

    p = bsub.add_parser("random", help="independent random legal layouts")
    add_common(p)
    p.add_argument("--budget", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_baseline_random)

    p = bsub.add_parser("single-rl", help="single-agent weighted-sum PPO")
    add_common(p)
    add_train_flags(p)
    p.add_argument("--w-wire", type=float, default=0.7)
    p.add_argument("--w-thermal", type=float, default=0.3)
    p.set_defaults(func=cmd_baseline_single_rl)

    p = sub.add_parser("pareto", help="pool runs into Pareto fronts")
    p.add_argument("run_dirs", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("render", help="layout and thermal-map SVGs")
    p.add_argument("layout", help="layout JSON file")
    p.add_argument("--benchmark", required=True)
    p.add_argument("--grid-n", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("calibrate-thermal",
                       help="fit conductances to a target hotspot and write a preset copy")
    p.add_argument("benchmark")
    p.add_argument("--grid-n", type=int, default=None)
    p.add_argument("--target-hotspot", type=float, default=90.7)
    p.add_argument("--ratio", type=float, default=25.0,
                   help="lateral/vertical conductance ratio to preserve")
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output benchmark YAML path")
    p.set_defaults(func=cmd_calibrate_thermal)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(argv)
    args.argv = list(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (PlacementDeadlockError, LayoutConstructionError) as e:
        print(f"placement deadlock: {e}", file=sys.stderr)
        return EXIT_DEADLOCK
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

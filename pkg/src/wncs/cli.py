"""Command-line surface: train, evaluate, and sweep experiments.

Subcommands:
  train-low   train a single low-mobility run (static channels)
  train-high  train a single high-mobility run (fading channels, scheduler)
  eval        re-run the final evaluation of a saved checkpoint
  sweep       train a scenario x seed grid and write a summary table

Option precedence is defaults < preset < config file < command-line
flags.  Each run writes metrics.csv and a checkpoint under its output
directory.  The WNCS_LOG environment variable sets the log level.
"""

from __future__ import annotations

import argparse
import fcntl
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from wncs.config import (ConfigError, ExperimentConfig, PRESETS,
                         REPLAY_MODES, SCHEDULER_MODES, apply_preset,
                         load_config, parse_config, serialize_config,
                         validate_config)
from wncs.trainer import (CodesignRunner, METRICS_COLUMNS,
                          format_metrics_row)

log = logging.getLogger("wncs")


def _setup_logging():
    level_name = os.environ.get("WNCS_LOG", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        log.warning("unrecognized WNCS_LOG=%r, using WARNING", level_name)
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _apply_variant(cfg: ExperimentConfig, variant: str) -> None:
    """Map a variant name onto the config field it selects."""
    name = variant.removeprefix("sched-")
    if variant in REPLAY_MODES:
        cfg.replay_mode = variant
    elif name in SCHEDULER_MODES:
        cfg.scheduler_mode = name
    else:
        choices = sorted(REPLAY_MODES) + [f"sched-{s}" for s
                                          in sorted(SCHEDULER_MODES)]
        raise ConfigError(f"unknown variant {variant!r}; expected one of "
                          f"{choices}")


def _build_config(args, mode: str | None,
                  preset: str | None = None) -> ExperimentConfig:
    cfg = ExperimentConfig()
    preset = preset or getattr(args, "preset", None)
    if preset:
        cfg = apply_preset(cfg, preset)
    if getattr(args, "config", None):
        cfg = load_config(args.config, base=cfg)
    if mode is not None:
        cfg.mode = mode
    if getattr(args, "steps", None):
        cfg.total_steps = args.steps
    if getattr(args, "variant", None):
        _apply_variant(cfg, args.variant)
    validate_config(cfg)
    return cfg


def _run_dir(out: str, cfg: ExperimentConfig, seed: int) -> str:
    variant = cfg.replay_mode if cfg.mode == "low" \
        else f"sched-{cfg.scheduler_mode}"
    return os.path.join(out, cfg.scenario, variant, f"seed-{seed}")


def _log_row(row: dict) -> None:
    log.info("step %d: mean_return=%.4f mean_aoi=%.3f tx_rate=%.3f",
             row["step"], row["mean_return"], row["mean_aoi"],
             row["tx_rate"])


def _cmd_train(args, mode: str) -> int:
    cfg = _build_config(args, mode)
    out_dir = _run_dir(args.out, cfg, args.seed)
    log.info("training %s/%s seed=%d for %d slots -> %s", cfg.scenario,
             cfg.replay_mode if mode == "low" else cfg.scheduler_mode,
             args.seed, cfg.total_steps, out_dir)
    runner = CodesignRunner(cfg, seed=args.seed, out_dir=out_dir)
    rows = runner.run(on_row=_log_row)
    print(",".join(METRICS_COLUMNS))
    print(format_metrics_row(rows[-1]))
    print(f"wrote {os.path.join(out_dir, 'metrics.csv')}")
    return 0


def _cmd_eval(args) -> int:
    meta_path = os.path.join(args.checkpoint, "meta.json")
    if not os.path.exists(meta_path):
        raise ConfigError(f"no checkpoint found at {args.checkpoint!r}")
    with open(meta_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    cfg = parse_config(meta["config"])
    runner = CodesignRunner(cfg, seed=int(meta["seed"]))
    runner.load_checkpoint(args.checkpoint)
    res = runner.evaluate(at_step=int(meta["step"]),
                          episodes=args.episodes)
    print(f"checkpoint step {meta['step']} "
          f"({meta['scenario']}/{meta['variant']}, seed {meta['seed']})")
    print(f"mean_return={res.mean_return!r} std_return={res.std_return!r} "
          f"mean_aoi={res.mean_aoi!r} tx_rate={res.tx_rate!r}")
    logged = (meta.get("final_metrics") or {}).get("mean_return")
    if args.episodes is None and logged is not None:
        if res.mean_return != logged:
            print(f"MISMATCH: logged mean_return was {logged!r}",
                  file=sys.stderr)
            return 2
        print("matches the logged final evaluation")
    return 0


def _sweep_task(payload: tuple) -> tuple[str, str]:
    """Run one grid cell in a worker process; returns its final CSV row."""
    config_text, seed, out_dir, summary_path = payload
    cfg = parse_config(config_text)
    runner = CodesignRunner(cfg, seed=seed, out_dir=out_dir)
    rows = runner.run()
    line = format_metrics_row(rows[-1])
    with open(summary_path, "a", encoding="utf-8") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        fh.write(line + "\n")
        fcntl.flock(fh, fcntl.LOCK_UN)
    return out_dir, line


def _cmd_sweep(args) -> int:
    presets = [p.strip() for p in args.preset.split(",")] if args.preset \
        else [None]
    variants = [v.strip() for v in args.variant.split(",")] if args.variant \
        else [None]
    seeds = [args.seed + k for k in range(args.seeds)]
    tasks = []
    os.makedirs(args.out, exist_ok=True)
    summary_path = os.path.join(args.out, "summary.csv")
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(METRICS_COLUMNS) + "\n")
    for preset in presets:
        for variant in variants:
            base = argparse.Namespace(**vars(args))
            base.variant = variant
            cfg = _build_config(base, mode=None, preset=preset)
            text = serialize_config(cfg)
            for seed in seeds:
                out_dir = _run_dir(args.out, cfg, seed)
                tasks.append((text, seed, out_dir, summary_path))
    log.info("sweep: %d runs with %d workers", len(tasks), args.workers)
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_task, tasks))
    else:
        results = [_sweep_task(t) for t in tasks]
    for out_dir, line in results:
        log.info("finished %s: %s", out_dir, line)
    # rewrite the summary in a deterministic order once all runs landed
    with open(summary_path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()[1:]
    order = {c: i for i, c in enumerate(METRICS_COLUMNS)}
    lines.sort(key=lambda ln: (ln.split(",")[order["scenario"]],
                               ln.split(",")[order["variant"]],
                               int(ln.split(",")[order["seed"]])))
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(METRICS_COLUMNS) + "\n")
        fh.write("".join(ln + "\n" for ln in lines))
    print(f"{len(lines)} runs -> {summary_path}")
    return 0


def _add_common(sub, with_seed=True):
    sub.add_argument("--config", help="TOML config file")
    sub.add_argument("--preset", help="scenario preset name, one of "
                     + ", ".join(sorted(PRESETS)))
    if with_seed:
        sub.add_argument("--seed", type=int, default=0,
                         help="master seed (default 0)")
    sub.add_argument("--steps", type=int,
                     help="override the number of training slots")
    sub.add_argument("--variant", help="algorithm variant: replay mode "
                     "(low mobility) or sched-* scheduler mode (high)")
    sub.add_argument("--out", default="runs",
                     help="output root directory (default ./runs)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wncs",
        description="Train and evaluate joint estimation-control-scheduling "
                    "experiments over lossy links.")
    subs = parser.add_subparsers(dest="command", required=True)

    low = subs.add_parser("train-low",
                          help="single run with static channels")
    _add_common(low)
    high = subs.add_parser("train-high",
                           help="single run with fading channels")
    _add_common(high)

    ev = subs.add_parser("eval", help="re-run a checkpoint's evaluation")
    ev.add_argument("--checkpoint", required=True,
                    help="checkpoint directory written by a training run")
    ev.add_argument("--episodes", type=int,
                    help="override the number of evaluation episodes")

    sweep = subs.add_parser("sweep",
                            help="scenario x seed grid of training runs")
    _add_common(sweep)
    sweep.add_argument("--seeds", type=int, default=1,
                       help="number of consecutive seeds from --seed")
    sweep.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                       help="parallel worker processes")
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "train-low":
            return _cmd_train(args, "low")
        if args.command == "train-high":
            return _cmd_train(args, "high")
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        parser.error(f"unknown command {args.command!r}")
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

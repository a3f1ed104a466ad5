"""Command line front-end: ``train``, ``eval``, ``sweep-compare`` and ``gen-deployments``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .dqn import DQNError, save_weights, train
from .env import StateEncoder
from .experiment import SWEEP_AXES, TrainingEpisodes, episode_rngs, geometry_for, sweep, write_metrics_csv
from .policy import METHODS, PolicyError, make_policy
from .scenario import ScenarioError, generate_deployment, save_deployments

log = logging.getLogger("ebcs_rate")


def _values(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--seed", type=_seed)
    common.add_argument("--out", help="output file")
    common.add_argument("-v", "--verbose", action="store_true")

    sweep_opts = argparse.ArgumentParser(add_help=False)
    sweep_opts.add_argument("--sweep", choices=SWEEP_AXES)
    sweep_opts.add_argument("--values", type=_values, help="comma-separated sweep values in meters")
    sweep_opts.add_argument("--fixed", type=float, help="value of the axis not being swept")
    sweep_opts.add_argument("--episodes", type=int)
    sweep_opts.add_argument("--steps", type=int)
    sweep_opts.add_argument("--workers", type=int)

    parser = argparse.ArgumentParser(prog="ebcs-rate", description="ACK-less broadcast rate adaptation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="learning phase: train the DQN rate selector")
    p.add_argument("--episodes", type=int)
    p.add_argument("--curve", help="learning-curve CSV path")

    p = sub.add_parser("eval", parents=[common, sweep_opts], help="application phase: evaluate one method")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--weights")

    p = sub.add_parser("sweep-compare", parents=[common, sweep_opts], help="evaluate all methods on shared seeds")
    p.add_argument("--weights")

    p = sub.add_parser("gen-deployments", parents=[common], help="write sample deployments per sweep point")
    p.add_argument("--sweep", choices=SWEEP_AXES)
    p.add_argument("--values", type=_values)
    p.add_argument("--fixed", type=float)
    p.add_argument("--count", type=int, default=10, help="deployments per sweep value")
    return parser


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed, train=replace(cfg.train, seed=args.seed),
                      scenario=replace(cfg.scenario, seed=args.seed))
    ev = {}
    for flag, name in (("sweep", "axis"), ("values", "values"), ("fixed", "fixed"),
                       ("steps", "steps"), ("workers", "workers")):
        if getattr(args, flag, None) is not None:
            ev[name] = getattr(args, flag)
    if args.command != "train" and getattr(args, "episodes", None) is not None:
        ev["episodes"] = args.episodes
    if ev:
        if "axis" in ev and "values" not in ev:
            ev["values"] = None
        if "axis" in ev and "fixed" not in ev:
            ev["fixed"] = None
        cfg = replace(cfg, eval=replace(cfg.eval, **ev))
    if args.command == "train" and args.episodes is not None:
        cfg = replace(cfg, train=replace(cfg.train, episodes=args.episodes))
    if getattr(args, "method", None):
        cfg = replace(cfg, method=args.method)
    return cfg


def cmd_train(cfg: RunConfig, out: str, curve: str) -> int:
    encoder = StateEncoder(cfg.scenario.num_bss, cfg.scenario.frames_per_step)
    episodes = TrainingEpisodes(cfg.radio, cfg.rates, cfg.scenario, cfg.train)
    result = train(episodes, cfg.train, encoder, cfg.rates)
    save_weights(out, result.network, encoder, cfg.rates)
    with Path(curve).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("episode", "mean_reward"))
        writer.writerows((i, repr(r)) for i, r in enumerate(result.episode_rewards))
    tail = result.episode_rewards[-1000:]
    if tail:
        print(f"mean reward over final {len(tail)} episodes: {np.mean(tail):.4f}")
    print(f"weights written to {out}; learning curve to {curve}")
    return 0


def run_eval(cfg: RunConfig, method: str, weights=None):
    policy = make_policy(method, cfg.radio, cfg.rates, weights)
    ev = cfg.eval
    return sweep(policy, cfg.scenario, cfg.radio, cfg.rates, ev.axis, ev.sweep_values, ev.fixed_value,
                 ev.episodes, ev.steps, cfg.seed, ev.workers)


def _print_points(points) -> None:
    for p in points:
        print(f"{p.method:>9} {p.axis}={p.value:g}: throughput {p.mean_throughput:9.1f} Mbit/s, "
              f"success ratio {p.mean_success_ratio:.4f}, mean rate {p.mean_rate:.1f}")


def cmd_eval(cfg: RunConfig, out: str, weights=None) -> int:
    points = run_eval(cfg, cfg.method, weights)
    write_metrics_csv(out, points)
    _print_points(points)
    return 0


def cmd_sweep_compare(cfg: RunConfig, out: str, weights=None) -> int:
    points = [p for method in METHODS for p in run_eval(cfg, method, weights)]
    write_metrics_csv(out, points)
    _print_points(points)
    return 0


def cmd_gen_deployments(cfg: RunConfig, out: str, count: int) -> int:
    ev = cfg.eval
    deployments, meta = [], []
    for v in ev.sweep_values:
        b, sigma = geometry_for(ev.axis, v, ev.fixed_value)
        scenario = cfg.scenario.with_geometry(b, sigma)
        for e in range(count):
            # same stream as evaluation episode e of this sweep point
            deploy_rng, _ = episode_rngs(cfg.seed, v, e)
            deployments.append(generate_deployment(scenario, deploy_rng))
            meta.append({"sweep_axis": ev.axis, "sweep_value": v, "episode": e})
    save_deployments(out, deployments, {"seed": cfg.seed, "episodes": meta})
    print(f"{len(deployments)} deployments written to {out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        if args.command == "train":
            return cmd_train(cfg, args.out or cfg.output.weights, args.curve or cfg.output.learning_curve)
        if args.command == "eval":
            return cmd_eval(cfg, args.out or cfg.output.metrics, args.weights)
        if args.command == "sweep-compare":
            return cmd_sweep_compare(cfg, args.out or cfg.output.metrics, args.weights)
        if args.command == "gen-deployments":
            if args.count < 1:
                raise ConfigError("--count must be positive")
            return cmd_gen_deployments(cfg, args.out or cfg.output.deployments, args.count)
    except (ConfigError, PolicyError, ScenarioError, DQNError, ValueError, OSError) as exc:
        print(f"ebcs-rate: error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())

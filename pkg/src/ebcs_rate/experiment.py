"""Application-phase evaluation sweeps and the learning-phase episode source.

Episode ``e`` of sweep point ``v`` always draws its deployment and uplink
sampling from the same seed, whatever the policy, so compared methods see
identical worlds.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .channel import RadioParams, RateTable
from .dqn import TrainConfig
from .env import ApplicationEnv, BroadcastEnv, EpisodeMetrics
from .scenario import ScenarioConfig, generate_deployment

METRICS_HEADER = (
    "sweep_axis", "sweep_value", "method", "mean_throughput_mbps", "std_throughput_mbps",
    "mean_success_ratio", "std_success_ratio", "episodes",
)
SWEEP_AXES = ("distance", "radius")


@dataclass(frozen=True)
class SweepPoint:
    axis: str
    value: float
    method: str
    mean_throughput: float
    std_throughput: float
    mean_success_ratio: float
    std_success_ratio: float
    mean_rate: float
    rate_counts: tuple[int, ...]
    episodes: int

    def rate_histogram(self) -> tuple[float, ...]:
        total = sum(self.rate_counts)
        return tuple(c / total for c in self.rate_counts) if total else ()

    def csv_row(self) -> list:
        return [self.axis, self.value, self.method, self.mean_throughput, self.std_throughput,
                self.mean_success_ratio, self.std_success_ratio, self.episodes]


def episode_rngs(seed: int, value: float, episode: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Deployment and uplink-sampling generators for one evaluation episode."""
    key = int(round(value * 1000))
    deploy_ss, sample_ss = np.random.SeedSequence([seed, key, episode]).spawn(2)
    return np.random.default_rng(deploy_ss), np.random.default_rng(sample_ss)


def run_episode(policy, env: ApplicationEnv, deployment, rng: np.random.Generator, steps: int) -> EpisodeMetrics:
    obs = env.reset(deployment, rng)
    for _ in range(steps):
        obs = env.step(policy.select(obs))
    return env.episode_metrics()


def _run_episodes(policy, scenario: ScenarioConfig, radio: RadioParams, rates: RateTable,
                  value: float, episodes: Sequence[int], steps: int, seed: int) -> list[EpisodeMetrics]:
    env = ApplicationEnv(radio, rates, scenario.frames_per_step)
    out = []
    for e in episodes:
        deploy_rng, sample_rng = episode_rngs(seed, value, e)
        deployment = generate_deployment(scenario, deploy_rng)
        out.append(run_episode(policy, env, deployment, sample_rng, steps))
    return out


def geometry_for(axis: str, value: float, fixed: float) -> tuple[float, float]:
    """(distance_b, bss_radius) for a sweep point."""
    if axis == "distance":
        return value, fixed
    if axis == "radius":
        return fixed, value
    raise ValueError(f"unknown sweep axis {axis!r}; choose distance or radius")


def evaluate_point(policy, scenario: ScenarioConfig, radio: RadioParams, rates: RateTable, axis: str,
                   value: float, fixed: float, episodes: int, steps: int, seed: int,
                   workers: int = 1) -> SweepPoint:
    b, sigma = geometry_for(axis, value, fixed)
    cfg = scenario.with_geometry(b, sigma)
    if workers > 1 and episodes > 1:
        chunks = [list(c) for c in np.array_split(np.arange(episodes), workers) if len(c)]
        with ProcessPoolExecutor(workers) as pool:
            futures = [pool.submit(_run_episodes, policy, cfg, radio, rates, value, c, steps, seed) for c in chunks]
            # chunks are contiguous, so concatenation restores episode order
            metrics = [m for f in futures for m in f.result()]
    else:
        metrics = _run_episodes(policy, cfg, radio, rates, value, range(episodes), steps, seed)

    thr = np.array([m.mean_aggregated_throughput for m in metrics])
    sr = np.array([m.mean_success_ratio for m in metrics])
    counts = np.sum([m.rate_counts for m in metrics], axis=0) if metrics else np.zeros(len(rates), int)
    return SweepPoint(
        axis=axis, value=float(value), method=policy.name,
        mean_throughput=float(thr.mean()) if episodes else 0.0,
        std_throughput=float(thr.std()) if episodes else 0.0,
        mean_success_ratio=float(sr.mean()) if episodes else 0.0,
        std_success_ratio=float(sr.std()) if episodes else 0.0,
        mean_rate=float(np.mean([m.mean_rate for m in metrics])) if episodes else 0.0,
        rate_counts=tuple(int(c) for c in counts),
        episodes=episodes,
    )


def sweep(policy, scenario: ScenarioConfig, radio: RadioParams, rates: RateTable, axis: str,
          values: Sequence[float], fixed: float, episodes: int, steps: int, seed: int,
          workers: int = 1) -> list[SweepPoint]:
    return [evaluate_point(policy, scenario, radio, rates, axis, v, fixed, episodes, steps, seed, workers)
            for v in values]


def write_metrics_csv(path, points: Sequence[SweepPoint]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER)
        for p in points:
            writer.writerow(p.csv_row())


def read_metrics_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


class TrainingEpisodes:
    """Learning-phase env factory: each episode draws B and sigma uniformly, then a deployment."""

    def __init__(self, radio: RadioParams, rates: RateTable, scenario: ScenarioConfig, train: TrainConfig):
        self.radio = radio
        self.rates = rates
        self.scenario = scenario
        self.distance_range = train.distance_range
        self.radius_range = train.radius_range
        self.env = BroadcastEnv(radio, rates, scenario.frames_per_step)

    def __call__(self, episode: int, rng: np.random.Generator):
        b = rng.uniform(*self.distance_range)
        sigma = rng.uniform(*self.radius_range)
        deployment = generate_deployment(self.scenario.with_geometry(b, sigma), rng)
        return self.env, self.env.reset(deployment, rng)


class FixedDeploymentEpisodes:
    """Env factory that replays one deployment every episode (fresh uplink sampling)."""

    def __init__(self, radio: RadioParams, rates: RateTable, frames_per_step: int, deployment):
        self.env = BroadcastEnv(radio, rates, frames_per_step)
        self.deployment = deployment

    def __call__(self, episode: int, rng: np.random.Generator):
        return self.env, self.env.reset(self.deployment, rng)

"""Step engine for broadcast rate selection.

``BroadcastEnv`` is the learning-phase simulator: every step reports how
many of the N recipients decoded the broadcast and the resulting reward.
``ApplicationEnv`` wraps it for the application phase and hands the caller
observations only.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .channel import MIN_DISTANCE_M, RadioParams, RateTable, broadcast_snr_db, rss_at_observer
from .scenario import Deployment, sample_uplink_stas

RSS_NORM_LOW_DBM = -100.0
RSS_NORM_HIGH_DBM = -30.0

TRACE_HEADER = ("step", "action_rate_mbps", "success_count", "reward", "aggregated_throughput_mbps")


class EnvError(RuntimeError):
    pass


@dataclass(frozen=True)
class Observation:
    """RSS (dBm) and 1-based BSS id of each overheard uplink frame, aligned by position."""

    rss: np.ndarray
    bssid: np.ndarray

    def __post_init__(self):
        rss = np.asarray(self.rss, dtype=float).reshape(-1)
        bssid = np.asarray(self.bssid, dtype=int).reshape(-1)
        if len(rss) != len(bssid):
            raise EnvError(f"rss has {len(rss)} entries but bssid has {len(bssid)}")
        object.__setattr__(self, "rss", rss)
        object.__setattr__(self, "bssid", bssid)

    def __len__(self) -> int:
        return len(self.rss)


@dataclass(frozen=True)
class StepRecord:
    action_rate: float
    success_count: int
    reward: float
    aggregated_throughput: float
    per_sampled_sta_success: tuple[bool, ...]


@dataclass(frozen=True)
class EpisodeMetrics:
    mean_aggregated_throughput: float
    mean_success_ratio: float
    mean_rate: float
    steps: int
    rate_counts: tuple[int, ...] = ()


def reward(action_rate: float, success_count: int, total: int, max_rate: float) -> float:
    """Full delivery earns ``a/a_max``; any miss costs ``(a/a_max)`` times the missed fraction."""
    if not 0 <= success_count <= total:
        raise EnvError(f"success_count={success_count} outside [0, {total}]")
    if total <= 0 or action_rate <= 0 or max_rate <= 0:
        raise EnvError("rates and total must be positive")
    scale = action_rate / max_rate
    if success_count == total:
        return scale
    return -scale * (1.0 - success_count / total)


@dataclass(frozen=True)
class StateEncoder:
    """Maps an observation to the network input: per frame, a scaled RSS then a BSS one-hot."""

    num_bss: int
    frames_per_step: int
    rss_low: float = RSS_NORM_LOW_DBM
    rss_high: float = RSS_NORM_HIGH_DBM

    @property
    def size(self) -> int:
        return self.frames_per_step * (1 + self.num_bss)

    def __call__(self, obs: Observation) -> np.ndarray:
        return encode_state(obs, self.num_bss, self.rss_low, self.rss_high)


def encode_state(obs: Observation, num_bss: int, rss_low: float = RSS_NORM_LOW_DBM,
                 rss_high: float = RSS_NORM_HIGH_DBM) -> np.ndarray:
    if np.any((obs.bssid < 1) | (obs.bssid > num_bss)):
        raise EnvError(f"bssid outside [1, {num_bss}]: {obs.bssid.tolist()}")
    m = len(obs)
    out = np.zeros((m, 1 + num_bss))
    scaled = 2.0 * (obs.rss - rss_low) / (rss_high - rss_low) - 1.0
    out[:, 0] = np.clip(scaled, -1.0, 1.0)
    out[np.arange(m), obs.bssid] = 1.0
    return out.reshape(-1)


class BroadcastEnv:
    """Learning-phase environment: one deployment per episode, fresh uplink sample per step."""

    def __init__(self, radio: RadioParams, rates: RateTable, frames_per_step: int):
        self.radio = radio
        self.rates = rates
        self.frames_per_step = frames_per_step
        self.deployment: Deployment | None = None
        self._rng: np.random.Generator | None = None
        self._sampled: np.ndarray | None = None

    def reset(self, deployment: Deployment, rng: np.random.Generator) -> Observation:
        self.deployment = deployment
        self._rng = rng
        # a STA co-located with the eBCS AP is treated as sitting at the clamp distance
        dist = np.maximum(deployment.sta_distances(), MIN_DISTANCE_M)
        self._rss = rss_at_observer(dist, self.radio)
        snr = broadcast_snr_db(dist, self.radio)
        # decodable[k, j]: STA j receives rate k
        self._decodable = snr[None, :] >= np.asarray(self.rates.required_snr_db)[:, None]
        self._success_counts = self._decodable.sum(axis=1)
        return self._observe()

    def _observe(self) -> Observation:
        self._sampled = sample_uplink_stas(self.deployment, self.frames_per_step, self._rng)
        return Observation(self._rss[self._sampled], self.deployment.sta_bss[self._sampled])

    def success_count(self, action_rate: float) -> int:
        self._require_reset()
        return int(self._success_counts[self.rates.index(action_rate)])

    def step(self, action_rate: float) -> tuple[Observation, StepRecord]:
        self._require_reset()
        k = self.rates.index(action_rate)
        rate = self.rates.rates[k]
        n = int(self._success_counts[k])
        total = self.deployment.num_stas
        record = StepRecord(
            action_rate=rate,
            success_count=n,
            reward=reward(rate, n, total, self.rates.max_rate),
            aggregated_throughput=rate * n,
            per_sampled_sta_success=tuple(bool(v) for v in self._decodable[k, self._sampled]),
        )
        return self._observe(), record

    def _require_reset(self):
        if self.deployment is None:
            raise EnvError("step() called before reset()")


class ApplicationEnv:
    """Application-phase view: stepping yields the next observation and nothing else.

    Delivery outcomes are logged privately for the evaluation harness and
    surface only as episode-level metrics.
    """

    def __init__(self, radio: RadioParams, rates: RateTable, frames_per_step: int):
        self._env = BroadcastEnv(radio, rates, frames_per_step)
        self._log: list[StepRecord] = []

    def reset(self, deployment: Deployment, rng: np.random.Generator) -> Observation:
        self._log = []
        return self._env.reset(deployment, rng)

    def step(self, action_rate: float) -> Observation:
        obs, record = self._env.step(action_rate)
        self._log.append(record)
        return obs

    def episode_metrics(self) -> EpisodeMetrics:
        return summarize(self._log, self._env.deployment.num_stas, self._env.rates)


def summarize(records: list[StepRecord], total: int, rates: RateTable) -> EpisodeMetrics:
    if not records:
        return EpisodeMetrics(0.0, 0.0, 0.0, 0, tuple(0 for _ in rates.rates))
    counts = [0] * len(rates)
    for r in records:
        counts[rates.index(r.action_rate)] += 1
    return EpisodeMetrics(
        mean_aggregated_throughput=float(np.mean([r.aggregated_throughput for r in records])),
        mean_success_ratio=float(np.mean([r.success_count / total for r in records])),
        mean_rate=float(np.mean([r.action_rate for r in records])),
        steps=len(records),
        rate_counts=tuple(counts),
    )


def write_trace_csv(path, records: Iterable[StepRecord]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for t, r in enumerate(records):
            writer.writerow([t, r.action_rate, r.success_count, repr(r.reward), r.aggregated_throughput])

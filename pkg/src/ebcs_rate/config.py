"""YAML run configuration. Missing fields fall back to the reference settings."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .channel import DEFAULT_RATES_MBPS, RadioParams, RateTable, thermal_noise_dbm
from .dqn import TrainConfig
from .experiment import SWEEP_AXES
from .policy import METHODS
from .scenario import ScenarioConfig

DEFAULT_SWEEPS = {
    "distance": (20.0, 40.0, 60.0, 80.0, 100.0),
    "radius": (5.0, 10.0, 15.0, 20.0, 25.0, 30.0),
}
# other-axis value held fixed during each sweep
DEFAULT_FIXED = {"distance": 10.0, "radius": 40.0}

SCENARIO_ALIASES = {"I": "num_bss", "N": "total_stas", "m": "frames_per_step", "B": "distance_b", "sigma": "bss_radius"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EvalConfig:
    episodes: int = 1000
    steps: int = 100
    axis: str = "distance"
    values: tuple[float, ...] | None = None
    fixed: float | None = None
    workers: int = 1

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        if self.episodes < 0 or self.steps < 1 or self.workers < 1:
            raise ConfigError("need episodes >= 0, steps >= 1, workers >= 1")
        if self.values is not None:
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def sweep_values(self) -> tuple[float, ...]:
        return self.values if self.values is not None else DEFAULT_SWEEPS[self.axis]

    @property
    def fixed_value(self) -> float:
        return self.fixed if self.fixed is not None else DEFAULT_FIXED[self.axis]


@dataclass(frozen=True)
class OutputPaths:
    weights: str = "weights.json"
    learning_curve: str = "learning_curve.csv"
    metrics: str = "metrics.csv"
    deployments: str = "deployments.json"


@dataclass(frozen=True)
class RunConfig:
    radio: RadioParams = field(default_factory=RadioParams)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    rates: RateTable = field(default_factory=RateTable)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    method: str = "fore-rule"
    output: OutputPaths = field(default_factory=OutputPaths)
    seed: int = 0


def _build(cls, section: str, data: Any, **extra):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{section}: expected a mapping, got {type(data).__name__}")
    types = {f.name: f.type for f in dataclasses.fields(cls) if not f.name.startswith("_")}
    data = dict(data)
    for key, value in data.items():
        if key not in types:
            raise ConfigError(f"{section}.{key}: unknown field")
        if types[key] in ("float", float) and isinstance(value, str):
            # YAML 1.1 reads exponent literals such as 1e-4 as strings
            try:
                data[key] = float(value)
            except ValueError:
                raise ConfigError(f"{section}.{key}: expected a number, got {value!r}") from None
    kwargs = {**extra, **data}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}: {exc}") from exc


def parse_config(doc: dict | None) -> RunConfig:
    doc = dict(doc or {})
    known = {f.name for f in dataclasses.fields(RunConfig)}
    for key in doc:
        if key not in known:
            raise ConfigError(f"{key}: unknown top-level field")

    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed: must be an unsigned 64-bit integer")

    radio_doc = dict(doc.get("radio") or {})
    radio = _build(RadioParams, "radio", radio_doc)
    if "noise_power_dbm" not in radio_doc and "bandwidth_hz" in radio_doc:
        radio = replace(radio, noise_power_dbm=thermal_noise_dbm(radio.bandwidth_hz))

    rates_doc = doc.get("rates", list(DEFAULT_RATES_MBPS))
    if isinstance(rates_doc, dict):
        rates_doc = rates_doc.get("rates_mbps", list(DEFAULT_RATES_MBPS))
    try:
        rates = RateTable(tuple(float(r) for r in rates_doc), radio.bandwidth_hz)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"rates: {exc}") from exc

    scenario_doc = {SCENARIO_ALIASES.get(k, k): v for k, v in (doc.get("scenario") or {}).items()}
    scenario = _build(ScenarioConfig, "scenario", scenario_doc, seed=seed)

    train_doc = doc.get("train") or {}
    train = _build(TrainConfig, "train", train_doc, seed=seed)
    eval_cfg = _build(EvalConfig, "eval", doc.get("eval"))
    output = _build(OutputPaths, "output", doc.get("output"))

    method = doc.get("method", "fore-rule")
    if method not in METHODS:
        raise ConfigError(f"method: must be one of {METHODS}, got {method!r}")
    for v in eval_cfg.sweep_values:
        b, sigma = (v, eval_cfg.fixed_value) if eval_cfg.axis == "distance" else (eval_cfg.fixed_value, v)
        try:
            scenario.with_geometry(b, sigma)
        except ValueError as exc:
            raise ConfigError(f"eval.values: sweep point {v} is infeasible: {exc}") from exc
    return RunConfig(radio, scenario, rates, train, eval_cfg, method, output, seed)


def load_config(path=None) -> RunConfig:
    if path is None:
        return parse_config({})
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from exc
    if doc is not None and not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(doc)

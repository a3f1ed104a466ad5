"""Rate selectors. Each maps an ``Observation`` to a rate from the table and sees nothing else."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import RadioParams, RateTable, estimate_snr_from_rss
from .dqn import DQNError, QNetwork, forward, greedy_action, load_weights
from .env import Observation, StateEncoder

METHODS = ("minrate", "fore-rule", "fore-drl")


class PolicyError(ValueError):
    pass


def min_rate_select(obs: Observation, rates: RateTable = RateTable()) -> float:
    return rates.min_rate


def rule_rate_index(obs: Observation, params: RadioParams, rates: RateTable) -> int | None:
    """Highest table index whose SNR requirement the weakest overheard STA meets, or None."""
    if len(obs) == 0:
        raise PolicyError("observation holds no overheard frames")
    worst = float(np.min(estimate_snr_from_rss(obs.rss, params)))
    feasible = [k for k, req in enumerate(rates.required_snr_db) if worst >= req]
    return feasible[-1] if feasible else None


def fo_re_rule_select(obs: Observation, params: RadioParams = RadioParams(),
                      rates: RateTable = RateTable()) -> float:
    """Fastest rate every overheard STA can decode; the minimum rate when none qualifies."""
    k = rule_rate_index(obs, params, rates)
    return rates.rates[0 if k is None else k]


def greedy_select(qnet: QNetwork, obs: Observation, encoder: StateEncoder,
                  rates: RateTable = RateTable()) -> float:
    x = encoder(obs)
    if x.size != qnet.input_size:
        raise PolicyError(f"encoded state has {x.size} features, network expects {qnet.input_size}")
    if qnet.num_actions != len(rates):
        raise PolicyError(f"network has {qnet.num_actions} outputs for {len(rates)} rates")
    return rates.rates[greedy_action(forward(qnet, x))]


@dataclass
class MinRatePolicy:
    rates: RateTable = field(default_factory=RateTable)
    name: str = "minrate"

    def select(self, obs: Observation) -> float:
        return min_rate_select(obs, self.rates)


@dataclass
class RulePolicy:
    radio: RadioParams = field(default_factory=RadioParams)
    rates: RateTable = field(default_factory=RateTable)
    name: str = "fore-rule"

    def select(self, obs: Observation) -> float:
        return fo_re_rule_select(obs, self.radio, self.rates)


@dataclass
class DRLPolicy:
    qnet: QNetwork
    encoder: StateEncoder
    rates: RateTable
    name: str = "fore-drl"

    def __post_init__(self):
        if self.encoder.size != self.qnet.input_size:
            raise PolicyError(
                f"encoder produces {self.encoder.size} features, network expects {self.qnet.input_size}"
            )
        if self.qnet.num_actions != len(self.rates):
            raise PolicyError(f"network has {self.qnet.num_actions} outputs for {len(self.rates)} rates")

    @classmethod
    def from_file(cls, path) -> "DRLPolicy":
        try:
            return cls(*load_weights(path))
        except (OSError, KeyError, DQNError) as exc:
            raise PolicyError(f"cannot load weights from {path}: {exc}") from exc

    def select(self, obs: Observation) -> float:
        return greedy_select(self.qnet, obs, self.encoder, self.rates)


def make_policy(method: str, radio: RadioParams, rates: RateTable, weights=None):
    if method == "minrate":
        return MinRatePolicy(rates)
    if method == "fore-rule":
        return RulePolicy(radio, rates)
    if method == "fore-drl":
        if weights is None:
            raise PolicyError("method fore-drl needs a weights file (--weights)")
        policy = DRLPolicy.from_file(weights)
        if policy.rates.rates != rates.rates:
            raise PolicyError(f"weights were trained for rates {policy.rates.rates}, config uses {rates.rates}")
        return policy
    raise PolicyError(f"unknown method {method!r}; choose one of {', '.join(METHODS)}")

"""ACK-less data-rate adaptation for broadcast WLANs via overheard uplink frames."""

from .channel import RadioParams, RateTable
from .env import ApplicationEnv, BroadcastEnv, Observation, StateEncoder
from .policy import DRLPolicy, MinRatePolicy, RulePolicy
from .scenario import Deployment, ScenarioConfig, generate_deployment

__all__ = [
    "ApplicationEnv", "BroadcastEnv", "DRLPolicy", "Deployment", "MinRatePolicy", "Observation",
    "RadioParams", "RateTable", "RulePolicy", "ScenarioConfig", "StateEncoder", "generate_deployment",
]

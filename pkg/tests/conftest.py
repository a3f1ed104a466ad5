import numpy as np
import pytest

from ebcs_rate.channel import RadioParams, RateTable
from ebcs_rate.dqn import TrainConfig, train
from ebcs_rate.env import StateEncoder
from ebcs_rate.experiment import TrainingEpisodes
from ebcs_rate.scenario import ScenarioConfig

DESK_EPISODES = 2000
DESK_SEED = 0

_acceptance_lines: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def acceptance_log():
    def record(name: str, passed: bool, detail: str = ""):
        _acceptance_lines.append((name, bool(passed), detail))
        print(f"\n[{'PASS' if passed else 'FAIL'}] {name} {detail}")

    return record


@pytest.fixture(scope="session")
def desk_trained():
    """The 2,000-episode learning-phase run over B ~ U[10,100] m, sigma ~ U[5,30] m."""
    radio, rates, scenario = RadioParams(), RateTable(), ScenarioConfig()
    cfg = TrainConfig(episodes=DESK_EPISODES, seed=DESK_SEED)
    encoder = StateEncoder(scenario.num_bss, scenario.frames_per_step)
    result = train(TrainingEpisodes(radio, rates, scenario, cfg), cfg, encoder, rates)
    assert np.all(np.isfinite(result.network.params))
    return result, encoder, rates


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _acceptance_lines:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name} {detail}")

import csv
import json

import numpy as np
import pytest

import ebcs_rate.env as env_module
from ebcs_rate.channel import RadioParams, RateTable
from ebcs_rate.cli import main
from ebcs_rate.config import ConfigError, load_config, parse_config
from ebcs_rate.dqn import QNetwork, load_weights, save_weights
from ebcs_rate.env import StateEncoder
from ebcs_rate.experiment import METRICS_HEADER, episode_rngs, evaluate_point, read_metrics_csv, sweep
from ebcs_rate.policy import DRLPolicy, MinRatePolicy, RulePolicy
from ebcs_rate.scenario import ScenarioConfig, generate_deployment, load_deployments


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


@pytest.fixture
def small_cfg(tmp_path):
    return write(tmp_path, "small.yaml", "eval:\n  episodes: 4\n  steps: 20\ntrain:\n  episodes: 3\n  steps_per_episode: 10\n")


@pytest.fixture
def weights(tmp_path):
    net = QNetwork.build(15, 4, rng=np.random.default_rng(0))
    path = tmp_path / "w.json"
    save_weights(path, net, StateEncoder(2, 5), RateTable())
    return str(path)


def test_empty_config_gives_reference_defaults(tmp_path):
    cfg = load_config(write(tmp_path, "empty.yaml", ""))
    assert cfg.radio == RadioParams()
    assert cfg.rates.rates == (8.6, 51.6, 103.2, 143.4)
    assert cfg.scenario.region_side == 300.0
    assert (cfg.scenario.num_bss, cfg.scenario.total_stas, cfg.scenario.frames_per_step) == (2, 100, 5)
    assert (cfg.train.episodes, cfg.train.steps_per_episode, cfg.train.epsilon) == (10_000, 100, 0.3)
    assert (cfg.train.learning_rate, cfg.train.discount, cfg.train.batch_size) == (1e-4, 0.0, 32)
    assert cfg.train.buffer_capacity == 10_000
    assert (cfg.eval.episodes, cfg.eval.steps) == (1000, 100)
    assert cfg.eval.fixed_value == 10.0
    assert load_config(None) == cfg


def test_radius_sweep_fixes_distance_at_40():
    cfg = parse_config({"eval": {"axis": "radius"}})
    assert cfg.eval.fixed_value == 40.0
    assert cfg.eval.sweep_values == (5.0, 10.0, 15.0, 20.0, 25.0, 30.0)


@pytest.mark.parametrize(
    "doc, where",
    [
        ({"scenario": {"m": 200, "N": 100}}, "scenario"),
        ({"train": {"discount": 1.5}}, "train"),
        ({"train": {"epsilon": -0.1}}, "train"),
        ({"scenario": {"bogus": 1}}, "scenario.bogus"),
        ({"nonsense": 1}, "nonsense"),
        ({"method": "oracle"}, "method"),
        ({"rates": [51.6, 8.6]}, "rates"),
        ({"radio": {"bandwidth_hz": -1}}, "radio"),
        ({"eval": {"axis": "distance", "values": [200]}}, "eval.values"),
    ],
)
def test_invalid_configs_are_rejected_with_field_path(doc, where):
    with pytest.raises(ConfigError, match=where.replace(".", r"\.")):
        parse_config(doc)


def test_bandwidth_change_updates_noise_floor():
    cfg = parse_config({"radio": {"bandwidth_hz": 40e6}})
    assert cfg.radio.noise_power_dbm == pytest.approx(-174 + 10 * np.log10(40e6))
    assert cfg.rates.bandwidth_hz == 40e6


def test_parse_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "bad.yaml", "radio: [1, 2\n"))


def test_train_zero_episodes_writes_initial_weights(tmp_path, capsys):
    out = tmp_path / "w.json"
    assert main(["train", "--episodes", "0", "--out", str(out), "--curve", str(tmp_path / "c.csv")]) == 0
    net, enc, rates = load_weights(out)
    assert net.layer_sizes == (15, 64, 64, 64, 64, 64, 4)
    assert enc.size == 15 and rates.rates == (8.6, 51.6, 103.2, 143.4)
    doc = json.loads(out.read_text())
    assert doc["encoder"]["rss_low"] == -100.0 and doc["encoder"]["rss_high"] == -30.0


def test_train_same_seed_same_bytes(tmp_path, small_cfg):
    for name in ("a", "b"):
        assert main(["train", "--config", small_cfg, "--seed", "9", "--out", str(tmp_path / f"{name}.json"),
                     "--curve", str(tmp_path / f"{name}.csv")]) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    rows = list(csv.reader((tmp_path / "a.csv").open()))
    assert rows[0] == ["episode", "mean_reward"]
    assert len(rows) == 1 + 3


def test_eval_minrate_rows(tmp_path, small_cfg):
    out = tmp_path / "m.csv"
    assert main(["eval", "--config", small_cfg, "--method", "minrate", "--sweep", "distance",
                 "--values", "20,40,60,80,100", "--out", str(out)]) == 0
    rows = read_metrics_csv(out)
    assert tuple(rows[0].keys()) == METRICS_HEADER
    assert [float(r["sweep_value"]) for r in rows] == [20, 40, 60, 80, 100]
    for r in rows:
        assert r["method"] == "minrate"
        assert float(r["mean_success_ratio"]) == 1.0
        assert float(r["mean_throughput_mbps"]) == pytest.approx(860.0)
        assert int(r["episodes"]) == 4


def test_minrate_rate_histogram_is_all_minimum():
    cfg = load_config(None)
    for p in sweep(MinRatePolicy(), cfg.scenario, cfg.radio, cfg.rates, "radius", (5, 30), 40.0, 3, 20, 0):
        assert p.rate_histogram() == (1.0, 0.0, 0.0, 0.0)


def test_eval_drl_needs_weights(tmp_path, small_cfg, capsys):
    assert main(["eval", "--config", small_cfg, "--method", "fore-drl", "--out", str(tmp_path / "x.csv")]) == 2
    assert "weights" in capsys.readouterr().err


def test_sweep_compare(tmp_path, small_cfg, weights):
    both = tmp_path / "cmp.csv"
    alone = tmp_path / "min.csv"
    common = ["--config", small_cfg, "--sweep", "distance", "--values", "20,60", "--seed", "3"]
    assert main(["sweep-compare", *common, "--weights", weights, "--out", str(both)]) == 0
    assert main(["eval", *common, "--method", "minrate", "--out", str(alone)]) == 0
    rows = read_metrics_csv(both)
    assert len(rows) == 3 * 2
    assert sorted({r["method"] for r in rows}) == ["fore-drl", "fore-rule", "minrate"]
    assert [r for r in rows if r["method"] == "minrate"] == read_metrics_csv(alone)
    by = {(r["method"], r["sweep_value"]): float(r["mean_throughput_mbps"]) for r in rows}
    for v in ("20.0", "60.0"):
        assert by[("fore-rule", v)] >= by[("minrate", v)]


def test_eval_is_deterministic(tmp_path, small_cfg):
    for name in ("a", "b"):
        main(["eval", "--config", small_cfg, "--seed", "4", "--out", str(tmp_path / f"{name}.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_worker_pool_matches_serial():
    cfg = load_config(None)
    args = (RulePolicy(), cfg.scenario, cfg.radio, cfg.rates, "distance", 40.0, 10.0, 6, 20, 1)
    assert evaluate_point(*args, workers=1) == evaluate_point(*args, workers=3)


def test_application_phase_ignores_reward(monkeypatch):
    cfg = load_config(None)
    net = QNetwork.build(15, 4, rng=np.random.default_rng(1))
    policies = [RulePolicy(), DRLPolicy(net, StateEncoder(2, 5), cfg.rates)]
    args = (cfg.scenario, cfg.radio, cfg.rates, "radius", 25.0, 40.0, 5, 30, 2)
    before = [evaluate_point(p, *args) for p in policies]
    monkeypatch.setattr(env_module, "reward", lambda *a, **k: float("nan"))
    after = [evaluate_point(p, *args) for p in policies]
    assert before == after


def test_gen_deployments_replays_eval_worlds(tmp_path, small_cfg):
    out = tmp_path / "d.json"
    assert main(["gen-deployments", "--config", small_cfg, "--sweep", "radius", "--values", "10,20",
                 "--count", "2", "--seed", "5", "--out", str(out)]) == 0
    deps = load_deployments(out)
    assert len(deps) == 4
    deploy_rng, _ = episode_rngs(5, 20.0, 1)
    expected = generate_deployment(ScenarioConfig(seed=5, distance_b=40.0, bss_radius=20.0), deploy_rng)
    np.testing.assert_array_equal(deps[3].sta_positions, expected.sta_positions)


def test_invalid_config_exits_nonzero(tmp_path, capsys):
    bad = write(tmp_path, "bad.yaml", "scenario:\n  m: 200\n  N: 100\n")
    assert main(["eval", "--config", bad, "--out", str(tmp_path / "x.csv")]) == 2
    assert "frames_per_step" in capsys.readouterr().err


def test_unwritable_output(tmp_path):
    assert main(["train", "--episodes", "0", "--out", str(tmp_path / "missing" / "w.json"),
                 "--curve", str(tmp_path / "c.csv")]) == 2


def test_yaml_exponent_literals(tmp_path):
    cfg = load_config(write(tmp_path, "e.yaml", "radio:\n  bandwidth_hz: 40e6\ntrain:\n  learning_rate: 3e-4\n"))
    assert cfg.radio.bandwidth_hz == 40e6
    assert cfg.train.learning_rate == 3e-4
    with pytest.raises(ConfigError, match=r"train\.learning_rate"):
        parse_config({"train": {"learning_rate": "fast"}})

"""Deep Q-learning in plain numpy.

The value network is a ReLU multilayer perceptron whose parameters live in
one flat float64 vector; per-layer weights and biases are views into it, so
Adam and target syncs are single vectorized operations.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .channel import RateTable
from .env import BroadcastEnv, Observation, StateEncoder

log = logging.getLogger(__name__)

WEIGHTS_FORMAT = "ebcs-qnet/1"
OUTPUT_INIT_LIMIT = 3e-3


class DQNError(ValueError):
    pass


class QNetwork:
    """Fully connected ReLU network; ``weights[l]`` has shape (fan_in, fan_out)."""

    def __init__(self, layer_sizes: Sequence[int], params: np.ndarray | None = None):
        sizes = tuple(int(s) for s in layer_sizes)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise DQNError(f"invalid layer sizes {sizes}")
        self.layer_sizes = sizes
        total = sum(a * b + b for a, b in zip(sizes, sizes[1:]))
        if params is None:
            params = np.zeros(total)
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (total,):
            raise DQNError(f"expected {total} parameters, got shape {params.shape}")
        self.params = params
        self.weights, self.biases = _views(params, sizes)

    @classmethod
    def build(cls, input_size: int, num_actions: int, hidden: Sequence[int] = (64,) * 5,
              rng: np.random.Generator | None = None) -> "QNetwork":
        net = cls((input_size, *hidden, num_actions))
        if rng is not None:
            net.initialize(rng)
        return net

    def initialize(self, rng: np.random.Generator) -> None:
        """He-uniform hidden layers, near-zero linear head, zero biases."""
        last = len(self.weights) - 1
        for l, w in enumerate(self.weights):
            limit = OUTPUT_INIT_LIMIT if l == last else math.sqrt(6.0 / w.shape[0])
            w[...] = rng.uniform(-limit, limit, size=w.shape)
        for b in self.biases:
            b[...] = 0.0

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def num_actions(self) -> int:
        return self.layer_sizes[-1]

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "QNetwork":
        return QNetwork(self.layer_sizes, self.params.copy())

    def load_from(self, other: "QNetwork") -> None:
        self.params[:] = other.params

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return forward(self, x)


def _views(params: np.ndarray, sizes: tuple[int, ...]):
    weights, biases = [], []
    offset = 0
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        weights.append(params[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out))
        offset += fan_in * fan_out
        biases.append(params[offset:offset + fan_out])
        offset += fan_out
    return weights, biases


def forward(net: QNetwork, x: np.ndarray) -> np.ndarray:
    """Q-values for one feature vector (1-D) or a batch (2-D)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.input_size:
        raise DQNError(f"input has {x.shape[-1]} features, network expects {net.input_size}")
    h = x
    last = net.num_layers - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w + b
        if l < last:
            np.maximum(h, 0.0, out=h)
    return h


def huber_loss(prediction, target, delta: float = 1.0):
    err = np.abs(np.asarray(prediction, dtype=float) - np.asarray(target, dtype=float))
    loss = np.where(err <= delta, 0.5 * err**2, delta * (err - 0.5 * delta))
    return float(loss) if loss.ndim == 0 else loss


def huber_grad(error: np.ndarray, delta: float = 1.0) -> np.ndarray:
    """Derivative of the Huber loss w.r.t. ``prediction - target``."""
    return np.clip(error, -delta, delta)


def loss_and_grad(net: QNetwork, x: np.ndarray, actions: np.ndarray, targets: np.ndarray,
                  delta: float = 1.0) -> tuple[float, np.ndarray]:
    """Mean Huber loss on the taken actions and its gradient as a flat vector."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    actions = np.asarray(actions, dtype=int).reshape(-1)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    batch = len(x)
    if x.shape[1] != net.input_size or len(actions) != batch or len(targets) != batch:
        raise DQNError("batch shapes do not match the network")
    if np.any((actions < 0) | (actions >= net.num_actions)):
        raise DQNError("action index out of range")

    acts = [x]
    h = x
    last = net.num_layers - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w + b
        if l < last:
            h = np.maximum(h, 0.0)
        acts.append(h)

    rows = np.arange(batch)
    err = acts[-1][rows, actions] - targets
    loss = float(np.mean(huber_loss(err, 0.0, delta)))

    grad = np.zeros_like(net.params)
    gw, gb = _views(grad, net.layer_sizes)
    dz = np.zeros_like(acts[-1])
    dz[rows, actions] = huber_grad(err, delta) / batch
    for l in range(last, -1, -1):
        gw[l][...] = acts[l].T @ dz
        gb[l][...] = dz.sum(axis=0)
        if l > 0:
            dz = (dz @ net.weights[l].T) * (acts[l] > 0)
    return loss, grad


def backward(net: QNetwork, x: np.ndarray, action_index: int, target: float,
             delta: float = 1.0) -> np.ndarray:
    """Gradient of ``huber(Q(x)[action_index], target)`` for a single sample."""
    return loss_and_grad(net, np.asarray(x)[None, :], [action_index], [target], delta)[1]


class Adam:
    """Adam with bias correction over a flat parameter vector, updated in place."""

    def __init__(self, size: int, lr: float = 1e-4, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, params: np.ndarray, grads: np.ndarray) -> None:
        if params.shape != grads.shape or params.shape != self.m.shape:
            raise DQNError("parameter and gradient shapes differ")
        self.t += 1
        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * grads
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * grads * grads
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        params -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def adam_step(params, grads, m, v, t: int, lr: float = 1e-4, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8):
    """Functional Adam update; returns ``(params, m, v)`` without mutating inputs."""
    if t < 1:
        raise DQNError("Adam step counter starts at 1")
    params, grads = np.asarray(params, dtype=float), np.asarray(grads, dtype=float)
    if params.shape != grads.shape:
        raise DQNError("parameter and gradient shapes differ")
    m = beta1 * np.asarray(m, dtype=float) + (1.0 - beta1) * grads
    v = beta2 * np.asarray(v, dtype=float) + (1.0 - beta2) * grads**2
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    return params - lr * m_hat / (np.sqrt(v_hat) + eps), m, v


class ReplayBuffer:
    """Fixed-capacity ring of (state, action, reward, next_state, done); oldest evicted first."""

    def __init__(self, capacity: int, state_size: int):
        if capacity < 1:
            raise DQNError("replay capacity must be positive")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_size))
        self.next_states = np.zeros((capacity, state_size))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.dones = np.zeros(capacity, dtype=bool)
        self._next = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, state, action: int, reward: float, next_state, done: bool = False) -> None:
        i = self._next
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.dones[i] = done
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        if batch_size > self._size:
            raise DQNError(f"cannot sample {batch_size} from {self._size} transitions")
        idx = rng.choice(self._size, size=batch_size, replace=False)
        return self.states[idx], self.actions[idx], self.rewards[idx], self.next_states[idx], self.dones[idx]

    def transitions(self):
        """Stored transitions from oldest to newest."""
        start = self._next if self._size == self.capacity else 0
        for j in range(self._size):
            i = (start + j) % self.capacity
            yield self.states[i], int(self.actions[i]), float(self.rewards[i]), self.next_states[i], bool(self.dones[i])


def greedy_action(q: np.ndarray) -> int:
    q = np.asarray(q)
    if q.size == 0:
        raise DQNError("empty Q-vector")
    # np.argmax returns the first maximum, i.e. the lowest rate on ties
    return int(np.argmax(q))


def epsilon_greedy(q: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    if not 0.0 <= epsilon <= 1.0:
        raise DQNError(f"epsilon must lie in [0, 1], got {epsilon}")
    q = np.asarray(q)
    if q.size == 0:
        raise DQNError("empty Q-vector")
    if rng.random() < epsilon:
        return int(rng.integers(q.size))
    return greedy_action(q)


def td_targets(rewards, next_states, dones, target_net: QNetwork | None, discount: float) -> np.ndarray:
    rewards = np.asarray(rewards, dtype=np.float64)
    if discount == 0.0:
        return rewards.copy()
    bootstrap = forward(target_net, next_states).max(axis=-1)
    return rewards + discount * bootstrap * (1.0 - np.asarray(dones, dtype=np.float64))


def td_target(transition, target_net: QNetwork | None, discount: float) -> float:
    """``r + discount * max_k Q_target(s')``; the bootstrap is dropped on terminal steps."""
    _, _, r, s_next, done = transition
    return float(td_targets([r], np.atleast_2d(s_next), [done], target_net, discount)[0])


@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 10_000
    steps_per_episode: int = 100
    epsilon: float = 0.3
    learning_rate: float = 1e-4
    discount: float = 0.0
    batch_size: int = 32
    buffer_capacity: int = 10_000
    target_sync_interval: int = 1_000
    huber_delta: float = 1.0
    hidden_units: int = 64
    hidden_layers: int = 5
    distance_range: tuple[float, float] = (10.0, 100.0)
    radius_range: tuple[float, float] = (5.0, 30.0)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "distance_range", tuple(float(v) for v in self.distance_range))
        object.__setattr__(self, "radius_range", tuple(float(v) for v in self.radius_range))
        self.validate()

    def validate(self) -> None:
        if self.episodes < 0 or self.steps_per_episode < 1:
            raise DQNError("episodes must be >= 0 and steps_per_episode >= 1")
        if not 0.0 <= self.epsilon <= 1.0:
            raise DQNError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not 0.0 <= self.discount <= 1.0:
            raise DQNError(f"discount must lie in [0, 1], got {self.discount}")
        if not self.learning_rate > 0:
            raise DQNError("learning_rate must be positive")
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            raise DQNError("need 1 <= batch_size <= buffer_capacity")
        if self.target_sync_interval < 1 or self.huber_delta <= 0:
            raise DQNError("target_sync_interval and huber_delta must be positive")
        if self.hidden_units < 1 or self.hidden_layers < 0:
            raise DQNError("invalid hidden layer shape")
        for name in ("distance_range", "radius_range"):
            lo, hi = getattr(self, name)
            if not 0 <= lo <= hi:
                raise DQNError(f"{name} must satisfy 0 <= low <= high")
        if not 0 <= self.seed < 2**64:
            raise DQNError("seed must be an unsigned 64-bit integer")


@dataclass
class TrainResult:
    network: QNetwork
    episode_rewards: list[float]
    losses: list[float]


EnvFactory = Callable[[int, np.random.Generator], tuple[BroadcastEnv, Observation]]


def train(env_factory: EnvFactory, config: TrainConfig, encoder: StateEncoder, rates: RateTable,
          on_episode: Callable[[int, float], None] | None = None) -> TrainResult:
    """Learning-phase DQN loop: one gradient step per environment step once the buffer holds a batch.

    ``env_factory(episode, rng)`` returns a reset environment and its first
    observation. All randomness is derived from ``config.seed``.
    """
    root = np.random.SeedSequence(config.seed)
    init_ss, explore_ss, replay_ss, env_ss = root.spawn(4)
    net = QNetwork.build(encoder.size, len(rates), (config.hidden_units,) * config.hidden_layers,
                         np.random.default_rng(init_ss))
    target = net.copy()
    opt = Adam(net.params.size, lr=config.learning_rate)
    buffer = ReplayBuffer(config.buffer_capacity, encoder.size)
    explore_rng = np.random.default_rng(explore_ss)
    replay_rng = np.random.default_rng(replay_ss)

    episode_rewards: list[float] = []
    losses: list[float] = []
    updates = 0
    for episode, ep_ss in zip(range(config.episodes), env_ss.spawn(config.episodes)):
        env, obs = env_factory(episode, np.random.default_rng(ep_ss))
        state = encoder(obs)
        total = 0.0
        for t in range(config.steps_per_episode):
            k = epsilon_greedy(forward(net, state), config.epsilon, explore_rng)
            obs, record = env.step(rates.rates[k])
            next_state = encoder(obs)
            done = t == config.steps_per_episode - 1
            buffer.push(state, k, record.reward, next_state, done)
            total += record.reward
            state = next_state

            if len(buffer) >= config.batch_size:
                s, a, r, s2, d = buffer.sample(config.batch_size, replay_rng)
                y = td_targets(r, s2, d, target, config.discount)
                loss, grad = loss_and_grad(net, s, a, y, config.huber_delta)
                opt.step(net.params, grad)
                losses.append(loss)
                updates += 1
                if updates % config.target_sync_interval == 0:
                    target.load_from(net)
        mean_reward = total / config.steps_per_episode
        episode_rewards.append(mean_reward)
        if on_episode is not None:
            on_episode(episode, mean_reward)
        if (episode + 1) % 500 == 0:
            log.info("episode %d: mean reward over last 500 = %.4f", episode + 1,
                     float(np.mean(episode_rewards[-500:])))
    return TrainResult(net, episode_rewards, losses)


def save_weights(path, net: QNetwork, encoder: StateEncoder, rates: RateTable) -> None:
    """Write a self-contained JSON weights file.

    ``layers[l].weight[i][j]`` connects unit i of layer l to unit j of layer
    l+1 (row-major, shape fan_in x fan_out); hidden layers use ReLU and the
    last layer is linear.
    """
    doc = {
        "format": WEIGHTS_FORMAT,
        "layer_sizes": list(net.layer_sizes),
        "activation": "relu",
        "layers": [{"weight": w.tolist(), "bias": b.tolist()} for w, b in zip(net.weights, net.biases)],
        "encoder": asdict(encoder),
        "rates_mbps": list(rates.rates),
        "bandwidth_hz": rates.bandwidth_hz,
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_weights(path) -> tuple[QNetwork, StateEncoder, RateTable]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != WEIGHTS_FORMAT:
        raise DQNError(f"{path}: not a {WEIGHTS_FORMAT} weights file")
    net = QNetwork(doc["layer_sizes"])
    for w, b, layer in zip(net.weights, net.biases, doc["layers"]):
        w[...] = np.asarray(layer["weight"], dtype=np.float64).reshape(w.shape)
        b[...] = np.asarray(layer["bias"], dtype=np.float64).reshape(b.shape)
    encoder = StateEncoder(**doc["encoder"])
    rates = RateTable(tuple(doc["rates_mbps"]), doc["bandwidth_hz"])
    if encoder.size != net.input_size or len(rates) != net.num_actions:
        raise DQNError(f"{path}: encoder/rate table do not match the network shape")
    return net, encoder, rates

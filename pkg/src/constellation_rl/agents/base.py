from __future__ import annotations

from dataclasses import dataclass, field, fields, asdict
from typing import Any

import numpy as np

from ..errors import ConfigurationError

AGENT_NAMES = ("LoadBalancing", "QLearning", "PolicyGradient", "DQN", "PPO")


@dataclass
class Transition:
    state: np.ndarray
    action_index: int
    reward: float
    next_state: np.ndarray
    done: bool
    mask: np.ndarray | None = None
    next_mask: np.ndarray | None = None
    log_prob: float = 0.0
    value: float = 0.0


@dataclass
class AgentConfig:
    learning_rate: float = 0.001
    gamma: float = 0.99
    epsilon: float = 0.1
    epsilon_start: float = 1.0
    epsilon_decay_fraction: float = 0.2
    batch_size: int = 64
    buffer_size: int = 10000
    target_update_every: int = 1000
    entropy_coef: float = 0.01
    grad_clip: float = 0.5
    policy_update_frequency: int = 1
    ppo_clip_epsilon: float = 0.2
    gae_lambda: float = 0.95
    value_coef: float = 0.5
    hidden_sizes: tuple[int, ...] = (64, 64)
    # how stochastic-policy agents act when frozen: "sample" or "mode"
    eval_mode: str = "sample"

    def __post_init__(self):
        self.hidden_sizes = tuple(int(h) for h in self.hidden_sizes)
        if self.eval_mode not in ("sample", "mode"):
            raise ConfigurationError(f"eval_mode: expected 'sample' or 'mode', got {self.eval_mode!r}")
        if not 0 < self.gamma <= 1:
            raise ConfigurationError(f"gamma: must lie in (0, 1], got {self.gamma}")
        if not self.learning_rate > 0:
            raise ConfigurationError(f"learning_rate: must be positive, got {self.learning_rate}")
        if not 0 <= self.epsilon <= 1 or not 0 <= self.epsilon_start <= 1:
            raise ConfigurationError("epsilon: must lie in [0, 1]")
        for name in ("batch_size", "buffer_size", "target_update_every", "policy_update_frequency"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name}: must be >= 1")

    @classmethod
    def defaults(cls, agent: str) -> "AgentConfig":
        """Per-agent hyperparameters used unless a config file overrides them."""
        table = {
            "LoadBalancing": {},
            "QLearning": dict(learning_rate=0.1, epsilon=0.1),
            "PolicyGradient": dict(
                learning_rate=0.001, batch_size=32, entropy_coef=0.01, grad_clip=0.5, policy_update_frequency=1
            ),
            "DQN": dict(
                learning_rate=0.0001, epsilon=0.1, batch_size=64, buffer_size=10000, target_update_every=1000
            ),
            "PPO": dict(
                learning_rate=0.0003,
                batch_size=64,
                entropy_coef=0.01,
                grad_clip=0.5,
                policy_update_frequency=4,
                ppo_clip_epsilon=0.2,
            ),
        }
        if agent not in table:
            raise ConfigurationError(f"agent: unknown agent {agent!r}; expected one of {', '.join(AGENT_NAMES)}")
        return cls(**table[agent])

    def updated(self, overrides: dict[str, Any]) -> "AgentConfig":
        known = {f.name for f in fields(self)}
        for key in overrides:
            if key not in known:
                raise ConfigurationError(f"{key}: unknown agent field")
        d = asdict(self)
        d.update(overrides)
        return AgentConfig(**d)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["hidden_sizes"] = list(self.hidden_sizes)
        return d


class ReplayBuffer:
    """Fixed-size FIFO of transitions with uniform sampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.storage: list[Transition] = []
        self.cursor = 0

    def __len__(self) -> int:
        return len(self.storage)

    def push(self, transition: Transition) -> None:
        if len(self.storage) < self.capacity:
            self.storage.append(transition)
        else:
            self.storage[self.cursor] = transition
        self.cursor = (self.cursor + 1) % self.capacity

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, len(self.storage), size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        return [self.storage[i] for i in self.sample_indices(batch_size, rng)]


def epsilon_greedy_select(
    values: np.ndarray,
    epsilon: float,
    valid_mask: np.ndarray,
    rng: np.random.Generator,
    random_ties: bool = False,
) -> int:
    """Uniform valid action with probability epsilon, else the best valid one.

    Ties go to the lowest index unless ``random_ties`` is set, in which case
    they are broken uniformly with ``rng``.
    """
    valid = np.flatnonzero(valid_mask)
    if valid.size == 0:
        raise ValueError("no valid action to choose from")
    if epsilon > 0 and rng.random() < epsilon:
        return int(valid[rng.integers(valid.size)])
    if not random_ties:
        return masked_argmax(values, valid_mask)
    sub = np.asarray(values)[valid]
    best = valid[sub == sub.max()]
    if best.size == 1:
        return int(best[0])
    return int(best[rng.integers(best.size)])


def masked_argmax(values: np.ndarray, valid_mask: np.ndarray) -> int:
    valid = np.flatnonzero(valid_mask)
    if valid.size == 0:
        raise ValueError("no valid action to choose from")
    return int(valid[np.argmax(np.asarray(values)[valid])])


def split_observation(obs: np.ndarray, num_sats: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-satellite (load fraction, energy fraction, operational flag) columns."""
    per_sat = np.asarray(obs)[: 3 * num_sats].reshape(num_sats, 3)
    return per_sat[:, 0], per_sat[:, 1], per_sat[:, 2] > 0.5


def extreme_loads(loads: np.ndarray, operational: np.ndarray) -> tuple[int, int] | None:
    """Most and least loaded operational satellites, lowest id on ties.

    When every load is equal the least-loaded pick falls through to the next
    operational id so the pair is always distinct.
    """
    ids = np.flatnonzero(operational)
    if ids.size < 2:
        return None
    sub = np.asarray(loads)[ids]
    hi = int(ids[np.argmax(sub)])
    rest = ids[ids != hi]
    lo = int(rest[np.argmin(np.asarray(loads)[rest])])
    return hi, lo


def discretize_state(obs: np.ndarray, num_sats: int) -> int:
    loads, _, operational = split_observation(obs, num_sats)
    pair = extreme_loads(loads, operational)
    if pair is None:
        return 0
    return pair[0] * num_sats + pair[1]


class Agent:
    """Common surface used by the harness."""

    name = "Agent"
    learns = True

    def __init__(self, num_sats: int, config: AgentConfig, rng: np.random.Generator):
        self.num_sats = num_sats
        self.num_actions = num_sats * (num_sats - 1)
        self.obs_size = 3 * num_sats + 1
        self.config = config
        self.rng = rng
        # separate stream for frozen-policy sampling so evaluation never
        # perturbs the training stream
        self.eval_rng = np.random.default_rng(0)

    def begin_evaluation(self, seed: int) -> None:
        self.eval_rng = np.random.default_rng(seed)

    def act(self, obs: np.ndarray, mask: np.ndarray, greedy: bool = False) -> int:
        raise NotImplementedError

    def observe(self, transition: Transition) -> None:
        pass

    def end_episode(self) -> None:
        pass

    def fingerprint(self) -> str:
        return ""

    def checkpoint(self) -> dict[str, Any]:
        return {}

    def load_checkpoint(self, data: dict[str, Any]) -> None:
        pass

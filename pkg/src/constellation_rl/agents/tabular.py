"""Load-balancing baseline and tabular Q-learning."""

from __future__ import annotations

import hashlib
import json
from collections import defaultdict
from typing import Any

import numpy as np

from ..env import encode_action
from .base import (
    Agent,
    AgentConfig,
    Transition,
    discretize_state,
    epsilon_greedy_select,
    extreme_loads,
    split_observation,
)


def load_balancing_select(obs: np.ndarray, operational: np.ndarray, num_sats: int) -> tuple[int, int] | None:
    """Move work from the busiest operational satellite to the idlest one."""
    loads, _, _ = split_observation(obs, num_sats)
    return extreme_loads(loads, np.asarray(operational, dtype=bool))


class LoadBalancingAgent(Agent):
    name = "LoadBalancing"
    learns = False

    def act(self, obs, mask, greedy=False):
        _, _, operational = split_observation(obs, self.num_sats)
        pair = load_balancing_select(obs, operational, self.num_sats)
        if pair is None:
            raise ValueError("load balancing needs at least two operational satellites")
        return encode_action(pair[0], pair[1], self.num_sats)


class QTable:
    """Sparse state -> action-value table; unseen states read as zeros."""

    def __init__(self, num_actions: int):
        self.num_actions = num_actions
        self._rows: dict[int, np.ndarray] = defaultdict(lambda: np.zeros(num_actions))

    def __getitem__(self, state: int) -> np.ndarray:
        return self._rows[state]

    def get(self, state: int) -> np.ndarray:
        row = self._rows.get(state)
        return np.zeros(self.num_actions) if row is None else row

    def __len__(self) -> int:
        return len(self._rows)

    def to_list(self) -> list[list]:
        return [[s, self._rows[s].tolist()] for s in sorted(self._rows)]

    @classmethod
    def from_list(cls, num_actions: int, rows: list) -> "QTable":
        table = cls(num_actions)
        for s, values in rows:
            table._rows[int(s)] = np.array(values, dtype=float)
        return table


def q_update(
    table: QTable,
    s: int,
    a: int,
    r: float,
    s_next: int,
    done: bool,
    alpha: float = 0.1,
    gamma: float = 0.99,
    next_mask: np.ndarray | None = None,
) -> float:
    """One tabular Q-learning backup; returns the new Q(s, a)."""
    bootstrap = 0.0
    if not done:
        nxt = table.get(s_next)
        if next_mask is not None:
            bootstrap = float(nxt[next_mask].max()) if next_mask.any() else 0.0
        else:
            bootstrap = float(nxt.max())
    row = table[s]
    row[a] += alpha * (r + gamma * bootstrap - row[a])
    return float(row[a])


class QLearningAgent(Agent):
    name = "QLearning"

    def __init__(self, num_sats, config: AgentConfig, rng):
        super().__init__(num_sats, config, rng)
        self.table = QTable(self.num_actions)

    def act(self, obs, mask, greedy=False):
        values = self.table.get(discretize_state(obs, self.num_sats))
        # unvisited rows are all zeros; a fixed lowest-index pick there would
        # hammer one satellite pair, so ties are broken at random
        if greedy:
            return epsilon_greedy_select(values, 0.0, mask, self.eval_rng, random_ties=True)
        return epsilon_greedy_select(values, self.config.epsilon, mask, self.rng, random_ties=True)

    def observe(self, t: Transition) -> None:
        q_update(
            self.table,
            discretize_state(t.state, self.num_sats),
            t.action_index,
            t.reward,
            discretize_state(t.next_state, self.num_sats),
            t.done,
            alpha=self.config.learning_rate,
            gamma=self.config.gamma,
            next_mask=t.next_mask,
        )

    def fingerprint(self) -> str:
        return hashlib.sha256(json.dumps(self.table.to_list()).encode()).hexdigest()

    def checkpoint(self) -> dict[str, Any]:
        return {"q_table": self.table.to_list()}

    def load_checkpoint(self, data):
        self.table = QTable.from_list(self.num_actions, data["q_table"])

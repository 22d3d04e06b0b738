"""Deep Q-network with uniform experience replay and a periodically synced target net."""

from __future__ import annotations

import numpy as np

from .. import nn
from .base import Agent, AgentConfig, ReplayBuffer, epsilon_greedy_select


def masked_max(values: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """Row-wise max over valid actions; rows without any valid action give 0."""
    filled = np.where(masks, values, -np.inf)
    best = filled.max(axis=1)
    return np.where(masks.any(axis=1), best, 0.0)


def dqn_targets(rewards, dones, next_q_target, next_masks, gamma: float) -> np.ndarray:
    rewards = np.asarray(rewards, dtype=float)
    dones = np.asarray(dones, dtype=float)
    return rewards + gamma * (1.0 - dones) * masked_max(next_q_target, next_masks)


def target_sync(qnet: nn.MlpParameters, target: nn.MlpParameters) -> None:
    target.copy_from(qnet)


def linear_epsilon(step: int, total_steps: int, start: float, end: float, fraction: float) -> float:
    horizon = fraction * total_steps
    if horizon <= 0 or step >= horizon:
        return end
    return start + (end - start) * step / horizon


class DQNAgent(Agent):
    name = "DQN"

    def __init__(self, num_sats, config: AgentConfig, rng, total_steps: int = 0):
        super().__init__(num_sats, config, rng)
        sizes = [self.obs_size, *config.hidden_sizes, self.num_actions]
        self.qnet = nn.init_mlp(sizes, rng)
        self.target = self.qnet.copy()
        self.adam = nn.AdamState.for_params(self.qnet)
        self.buffer = ReplayBuffer(config.buffer_size)
        self.total_steps = total_steps
        self.env_steps = 0
        self.grad_steps = 0

    @property
    def epsilon(self) -> float:
        c = self.config
        return linear_epsilon(self.env_steps, self.total_steps, c.epsilon_start, c.epsilon, c.epsilon_decay_fraction)

    def act(self, obs, mask, greedy=False):
        q = nn.predict(self.qnet, obs)
        return epsilon_greedy_select(q, 0.0 if greedy else self.epsilon, mask, self.rng)

    def observe(self, t) -> None:
        self.buffer.push(t)
        self.env_steps += 1
        self.update()

    def update(self) -> float | None:
        """One gradient step on a uniform minibatch; None while the buffer is too small."""
        c = self.config
        if len(self.buffer) < c.batch_size:
            return None
        batch = self.buffer.sample(c.batch_size, self.rng)
        states = np.stack([t.state for t in batch])
        next_states = np.stack([t.next_state for t in batch])
        next_masks = np.stack([t.next_mask for t in batch])
        actions = np.array([t.action_index for t in batch])
        y = dqn_targets(
            [t.reward for t in batch],
            [t.done for t in batch],
            nn.predict(self.target, next_states),
            next_masks,
            c.gamma,
        )
        q, trace = nn.forward(self.qnet, states)
        rows = np.arange(len(batch))
        err = q[rows, actions] - y
        dq = np.zeros_like(q)
        dq[rows, actions] = 2.0 * err / len(batch)
        grads, _ = nn.backward(self.qnet, trace, dq)
        nn.adam_step(self.qnet, grads, c.learning_rate, self.adam)
        self.grad_steps += 1
        if self.grad_steps % c.target_update_every == 0:
            target_sync(self.qnet, self.target)
        return float(np.mean(err**2))

    def fingerprint(self) -> str:
        return self.qnet.digest()

    def checkpoint(self):
        return {"qnet": nn.params_to_dict(self.qnet)}

    def load_checkpoint(self, data):
        self.qnet = nn.params_from_dict(data["qnet"])
        self.target = self.qnet.copy()
        self.adam = nn.AdamState.for_params(self.qnet)

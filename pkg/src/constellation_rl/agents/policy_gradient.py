"""REINFORCE with normalized returns and an entropy bonus."""

from __future__ import annotations

import numpy as np

from .. import nn
from .base import Agent, AgentConfig, Transition, masked_argmax


def discounted_returns(rewards, gamma: float) -> np.ndarray:
    out = np.zeros(len(rewards))
    running = 0.0
    for t in reversed(range(len(rewards))):
        running = rewards[t] + gamma * running
        out[t] = running
    return out


def sample_masked(log_probs: np.ndarray, mask: np.ndarray, rng: np.random.Generator) -> int:
    if not np.any(mask):
        raise ValueError("no valid action to choose from")
    cdf = np.cumsum(np.exp(log_probs))
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    idx = min(idx, len(cdf) - 1)
    if not mask[idx]:
        # only reachable through round-off at the very top of the cdf
        idx = int(np.flatnonzero(mask)[-1])
    return idx


def reinforce_update(
    policy: nn.MlpParameters,
    adam: nn.AdamState,
    episode: list[Transition],
    config: AgentConfig,
) -> dict[str, float]:
    if not episode:
        return {}
    returns = discounted_returns([t.reward for t in episode], config.gamma)
    std = returns.std()
    advantages = (returns - returns.mean()) / max(std, 1e-8)

    states = np.stack([t.state for t in episode])
    masks = np.stack([t.mask for t in episode])
    actions = np.array([t.action_index for t in episode])
    n = len(episode)

    logits, trace = nn.forward(policy, states)
    logp = nn.masked_log_softmax(logits, masks)
    probs = np.exp(logp)
    onehot = np.zeros_like(probs)
    onehot[np.arange(n), actions] = 1.0

    dlogits = (probs - onehot) * advantages[:, None] - config.entropy_coef * nn.entropy_logit_grad(logp)
    dlogits /= n
    grads, _ = nn.backward(policy, trace, dlogits)
    grads = nn.clip_gradient_norm(grads, config.grad_clip)
    nn.adam_step(policy, grads, config.learning_rate, adam)

    entropy = nn.categorical_entropy(logp)
    loss = float(np.mean(-logp[np.arange(n), actions] * advantages - config.entropy_coef * entropy))
    return {"loss": loss, "entropy": float(entropy.mean())}


class PolicyGradientAgent(Agent):
    name = "PolicyGradient"

    def __init__(self, num_sats, config: AgentConfig, rng):
        super().__init__(num_sats, config, rng)
        self.policy = nn.init_mlp([self.obs_size, *config.hidden_sizes, self.num_actions], rng)
        self.adam = nn.AdamState.for_params(self.policy)
        self.episode: list[Transition] = []
        self.episodes_seen = 0

    def act(self, obs, mask, greedy=False):
        logp = nn.masked_log_softmax(nn.predict(self.policy, obs), mask)
        if greedy:
            if self.config.eval_mode == "mode":
                return masked_argmax(logp, mask)
            return sample_masked(logp, mask, self.eval_rng)
        return sample_masked(logp, mask, self.rng)

    def observe(self, t: Transition) -> None:
        self.episode.append(t)

    def end_episode(self) -> None:
        self.episodes_seen += 1
        if self.episodes_seen % self.config.policy_update_frequency == 0:
            reinforce_update(self.policy, self.adam, self.episode, self.config)
            self.episode = []

    def fingerprint(self) -> str:
        return self.policy.digest()

    def checkpoint(self):
        return {"policy": nn.params_to_dict(self.policy)}

    def load_checkpoint(self, data):
        self.policy = nn.params_from_dict(data["policy"])
        self.adam = nn.AdamState.for_params(self.policy)

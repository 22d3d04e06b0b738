"""PPO with a clipped surrogate, GAE advantages and separate policy/value nets."""

from __future__ import annotations

import numpy as np

from .. import nn
from .base import Agent, AgentConfig, Transition, masked_argmax
from .policy_gradient import sample_masked


def gae_advantages(rewards, values, dones, last_value: float, gamma: float, lam: float) -> np.ndarray:
    n = len(rewards)
    adv = np.zeros(n)
    running = 0.0
    for t in reversed(range(n)):
        next_value = last_value if t == n - 1 else values[t + 1]
        nonterminal = 1.0 - float(dones[t])
        delta = rewards[t] + gamma * nonterminal * next_value - values[t]
        running = delta + gamma * lam * nonterminal * running
        adv[t] = running
    return adv


def clipped_surrogate(ratio: np.ndarray, advantage: np.ndarray, clip_eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample clipped objective and d objective / d ratio."""
    unclipped = ratio * advantage
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * advantage
    objective = np.minimum(unclipped, clipped)
    grad = np.where(unclipped <= clipped, advantage, 0.0)
    return objective, grad


def ppo_update(
    policy: nn.MlpParameters,
    value_net: nn.MlpParameters,
    policy_adam: nn.AdamState,
    value_adam: nn.AdamState,
    rollout: list[Transition],
    config: AgentConfig,
    rng: np.random.Generator,
    last_value: float = 0.0,
) -> dict[str, object]:
    if not rollout:
        return {}
    n = len(rollout)
    states = np.stack([t.state for t in rollout])
    masks = np.stack([t.mask for t in rollout])
    actions = np.array([t.action_index for t in rollout])
    old_logp = np.array([t.log_prob for t in rollout])
    values = np.array([t.value for t in rollout])
    adv = gae_advantages(
        [t.reward for t in rollout], values, [t.done for t in rollout], last_value, config.gamma, config.gae_lambda
    )
    returns = adv + values
    adv = (adv - adv.mean()) / max(adv.std(), 1e-8)

    stats: dict[str, object] = {"first_ratios": None, "policy_loss": [], "value_loss": []}
    for _ in range(config.policy_update_frequency):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            mb = order[start : start + config.batch_size]
            b = len(mb)
            rows = np.arange(b)

            logits, trace = nn.forward(policy, states[mb])
            logp = nn.masked_log_softmax(logits, masks[mb])
            ratio = np.exp(logp[rows, actions[mb]] - old_logp[mb])
            if stats["first_ratios"] is None:
                stats["first_ratios"] = ratio.copy()
            objective, dobj = clipped_surrogate(ratio, adv[mb], config.ppo_clip_epsilon)
            probs = np.exp(logp)
            onehot = np.zeros_like(probs)
            onehot[rows, actions[mb]] = 1.0
            # d(-objective)/d logits through log pi(a|s); ratio' = ratio * dlogp
            dlogits = -(dobj * ratio)[:, None] * (onehot - probs)
            dlogits -= config.entropy_coef * nn.entropy_logit_grad(logp)
            dlogits /= b
            grads, _ = nn.backward(policy, trace, dlogits)
            grads = nn.clip_gradient_norm(grads, config.grad_clip)
            nn.adam_step(policy, grads, config.learning_rate, policy_adam)
            entropy = nn.categorical_entropy(logp)
            stats["policy_loss"].append(float(-objective.mean() - config.entropy_coef * entropy.mean()))

            v, vtrace = nn.forward(value_net, states[mb])
            err = v[:, 0] - returns[mb]
            dv = (2.0 * config.value_coef * err / b)[:, None]
            vgrads, _ = nn.backward(value_net, vtrace, dv)
            vgrads = nn.clip_gradient_norm(vgrads, config.grad_clip)
            nn.adam_step(value_net, vgrads, config.learning_rate, value_adam)
            stats["value_loss"].append(float(config.value_coef * np.mean(err**2)))
    return stats


class PPOAgent(Agent):
    name = "PPO"

    def __init__(self, num_sats, config: AgentConfig, rng):
        super().__init__(num_sats, config, rng)
        hidden = config.hidden_sizes
        self.policy = nn.init_mlp([self.obs_size, *hidden, self.num_actions], rng)
        self.value_net = nn.init_mlp([self.obs_size, *hidden, 1], rng)
        self.policy_adam = nn.AdamState.for_params(self.policy)
        self.value_adam = nn.AdamState.for_params(self.value_net)
        self.rollout: list[Transition] = []
        self._pending: tuple[float, float] = (0.0, 0.0)
        self.last_stats: dict[str, object] = {}

    def act(self, obs, mask, greedy=False):
        logp = nn.masked_log_softmax(nn.predict(self.policy, obs), mask)
        if greedy:
            if self.config.eval_mode == "mode":
                return masked_argmax(logp, mask)
            return sample_masked(logp, mask, self.eval_rng)
        a = sample_masked(logp, mask, self.rng)
        self._pending = (float(logp[a]), float(nn.predict(self.value_net, obs)[0]))
        return a

    def observe(self, t: Transition) -> None:
        t.log_prob, t.value = self._pending
        self.rollout.append(t)

    def end_episode(self) -> None:
        if not self.rollout:
            return
        last = self.rollout[-1]
        last_value = 0.0 if last.done else float(nn.predict(self.value_net, last.next_state)[0])
        self.last_stats = ppo_update(
            self.policy,
            self.value_net,
            self.policy_adam,
            self.value_adam,
            self.rollout,
            self.config,
            self.rng,
            last_value,
        )
        self.rollout = []

    def fingerprint(self) -> str:
        return self.policy.digest() + self.value_net.digest()

    def checkpoint(self):
        return {"policy": nn.params_to_dict(self.policy), "value": nn.params_to_dict(self.value_net)}

    def load_checkpoint(self, data):
        self.policy = nn.params_from_dict(data["policy"])
        self.value_net = nn.params_from_dict(data["value"])
        self.policy_adam = nn.AdamState.for_params(self.policy)
        self.value_adam = nn.AdamState.for_params(self.value_net)

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from .base import (
    AGENT_NAMES,
    Agent,
    AgentConfig,
    ReplayBuffer,
    Transition,
    discretize_state,
    epsilon_greedy_select,
    masked_argmax,
)
from .dqn import DQNAgent, dqn_targets, target_sync
from .policy_gradient import PolicyGradientAgent, discounted_returns, reinforce_update
from .ppo import PPOAgent, clipped_surrogate, gae_advantages, ppo_update
from .tabular import LoadBalancingAgent, QLearningAgent, QTable, load_balancing_select, q_update

AGENT_CLASSES = {
    "LoadBalancing": LoadBalancingAgent,
    "QLearning": QLearningAgent,
    "PolicyGradient": PolicyGradientAgent,
    "DQN": DQNAgent,
    "PPO": PPOAgent,
}


def make_agent(
    name: str,
    num_sats: int,
    config: AgentConfig | None = None,
    rng: np.random.Generator | None = None,
    total_steps: int = 0,
) -> Agent:
    if name not in AGENT_CLASSES:
        raise ConfigurationError(f"agent: unknown agent {name!r}; expected one of {', '.join(AGENT_NAMES)}")
    config = config or AgentConfig.defaults(name)
    rng = rng if rng is not None else np.random.default_rng(0)
    if name == "DQN":
        return DQNAgent(num_sats, config, rng, total_steps=total_steps)
    return AGENT_CLASSES[name](num_sats, config, rng)


__all__ = [
    "AGENT_CLASSES",
    "AGENT_NAMES",
    "Agent",
    "AgentConfig",
    "DQNAgent",
    "LoadBalancingAgent",
    "PPOAgent",
    "PolicyGradientAgent",
    "QLearningAgent",
    "QTable",
    "ReplayBuffer",
    "Transition",
    "clipped_surrogate",
    "discounted_returns",
    "discretize_state",
    "dqn_targets",
    "epsilon_greedy_select",
    "gae_advantages",
    "load_balancing_select",
    "make_agent",
    "masked_argmax",
    "ppo_update",
    "q_update",
    "reinforce_update",
    "target_sync",
]

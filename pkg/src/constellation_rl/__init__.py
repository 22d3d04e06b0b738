"""Reinforcement-learning retasking and reconfiguration for satellite constellations.

Modules: ``orbital`` (geometry and propagation), ``env`` (the retasking
environment), ``metrics``, ``nn`` (numpy MLP and Adam), ``agents`` (load
balancing, Q-learning, REINFORCE, DQN, PPO), ``harness`` (training, evaluation,
comparison) and ``cli``.
"""

__version__ = "0.1.0"

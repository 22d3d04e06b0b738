"""Training and evaluation loop, seed sweeps and the five-way comparison."""

from __future__ import annotations

import json
import logging
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .agents import AGENT_NAMES, Agent, AgentConfig, Transition, make_agent
from .env import ConstellationEnv, EnvConfig
from .errors import ConfigurationError
from .metrics import EpisodeMetrics, count_tmax_violations

log = logging.getLogger(__name__)

DESK_ENV = {"num_sats": 8, "rounds_per_episode": 100}
DESK_TRAIN_EPISODES = 200
DESK_EVAL_EPISODES = 50
DESK_SEEDS = [0, 1, 2, 3, 4]


@dataclass
class ExperimentSpec:
    env_config: EnvConfig
    agent: str
    agent_config: AgentConfig
    train_episodes: int
    eval_episodes: int
    seeds: list[int]
    experiment_id: str = "experiment"

    def __post_init__(self):
        if self.agent not in AGENT_NAMES:
            raise ConfigurationError(f"agent: unknown agent {self.agent!r}")
        if self.train_episodes < 0:
            raise ConfigurationError("train_episodes: must be >= 0")
        if self.eval_episodes < 1:
            raise ConfigurationError("eval_episodes: must be >= 1")
        if not self.seeds:
            raise ConfigurationError("seeds: at least one seed is required")


@dataclass
class EvalSummary:
    episodes: list[EpisodeMetrics]

    @property
    def mean_reward(self) -> float:
        return float(np.mean([m.reward_sum for m in self.episodes]))

    @property
    def mean_tcr(self) -> float:
        return float(np.mean([m.tcr for m in self.episodes]))

    @property
    def mean_art(self) -> float | None:
        arts = [m.art for m in self.episodes if m.art is not None]
        return float(np.mean(arts)) if arts else None

    @property
    def mean_wall_art(self) -> float | None:
        arts = [m.wall_art for m in self.episodes if m.wall_art is not None]
        return float(np.mean(arts)) if arts else None

    @property
    def capacity_violations(self) -> int:
        return sum(m.capacity_violations for m in self.episodes)

    @property
    def tmax_violations(self) -> int:
        return sum(m.tmax_violations for m in self.episodes)


@dataclass
class ComparisonRow:
    agent: str
    seed: int
    mean_reward: float
    mean_tcr: float
    mean_art: float | None
    capacity_violations: int
    tmax_violations: int


@dataclass
class ComparisonReport:
    experiment_id: str
    rows: list[ComparisonRow] = field(default_factory=list)
    eval_episodes: dict[tuple[str, int], list[EpisodeMetrics]] = field(default_factory=dict)
    train_curves: dict[tuple[str, int], list[EpisodeMetrics]] = field(default_factory=dict)

    def agents(self) -> list[str]:
        seen: list[str] = []
        for r in self.rows:
            if r.agent not in seen:
                seen.append(r.agent)
        return seen

    def summary(self) -> list[dict[str, Any]]:
        """Median across seeds of the per-seed evaluation means, one entry per agent."""
        out = []
        for agent in self.agents():
            rows = [r for r in self.rows if r.agent == agent]
            arts = [r.mean_art for r in rows if r.mean_art is not None]
            out.append(
                {
                    "agent": agent,
                    "seeds": len(rows),
                    "median_reward": statistics.median(r.mean_reward for r in rows),
                    "median_tcr": statistics.median(r.mean_tcr for r in rows),
                    "median_art": statistics.median(arts) if arts else None,
                    "capacity_violations": sum(r.capacity_violations for r in rows),
                    "tmax_violations": sum(r.tmax_violations for r in rows),
                }
            )
        return out


def cell_streams(seed: int) -> tuple[int, np.random.Generator, int]:
    """Independent (train env seed, agent rng, eval env seed) for one seed."""
    env_ss, agent_ss, eval_ss = np.random.SeedSequence(seed).spawn(3)
    return (
        int(env_ss.generate_state(1, np.uint64)[0]),
        np.random.default_rng(agent_ss),
        int(eval_ss.generate_state(1, np.uint64)[0]),
    )


def run_episode(env: ConstellationEnv, agent: Agent, learn: bool, on_step=None) -> EpisodeMetrics:
    obs = env.reset()
    m = EpisodeMetrics(initial_tasks=env.episode_initial_tasks)
    while not env.done:
        mask = env.valid_action_mask()
        t0 = time.perf_counter()
        decided = bool(mask.any())
        # with fewer than two live satellites there is nothing to choose; the
        # env answers action 0 with the invalid-action penalty
        action = agent.act(obs, mask, greedy=not learn) if decided else 0
        latency = time.perf_counter() - t0
        out = env.step(action, selection_latency=latency)
        info = out.info
        m.reward_sum += out.reward
        m.failures += len(info["failures_this_step"])
        m.response_times.extend(info["simulated_response_times"])
        m.wall_response_times.extend(info["response_time_samples"])
        if not info["capacity_feasible"]:
            m.capacity_violations += 1
        if on_step is not None:
            on_step(env.round - 1, action, out)
        if learn and decided:
            agent.observe(
                Transition(obs, action, out.reward, out.observation, out.done, mask, env.valid_action_mask())
            )
        obs = out.observation
    if learn:
        agent.end_episode()
    m.remaining_tasks = env.remaining_tasks()
    m.tmax_violations = count_tmax_violations(m.response_times, env.config.t_max)
    m.rounds = env.round
    return m


def build_agent(spec: ExperimentSpec, rng: np.random.Generator) -> Agent:
    total = spec.train_episodes * spec.env_config.rounds_per_episode
    return make_agent(spec.agent, spec.env_config.num_sats, spec.agent_config, rng, total_steps=total)


def train_agent(spec: ExperimentSpec, seed: int | None = None) -> tuple[Agent, list[EpisodeMetrics]]:
    seed = spec.seeds[0] if seed is None else seed
    env_seed, agent_rng, _ = cell_streams(seed)
    env = ConstellationEnv(spec.env_config.replace(seed=env_seed))
    agent = build_agent(spec, agent_rng)
    if agent.obs_size != env.config.observation_size or agent.num_actions != env.num_actions:
        raise ConfigurationError("num_sats: agent and environment dimensions differ")
    curve = []
    for ep in range(spec.train_episodes):
        m = run_episode(env, agent, learn=True)
        curve.append(m)
        if (ep + 1) % 50 == 0:
            log.info("%s seed %d episode %d reward %.2f tcr %.1f", spec.agent, seed, ep + 1, m.reward_sum, m.tcr)
    return agent, curve


def evaluate_agent(agent: Agent, env_config: EnvConfig, eval_episodes: int, seed: int) -> EvalSummary:
    """Frozen-policy evaluation: greedy actions, no learning hooks called."""
    if agent.num_sats != env_config.num_sats:
        raise ConfigurationError("num_sats: agent and environment dimensions differ")
    env = ConstellationEnv(env_config.replace(seed=seed))
    agent.begin_evaluation(seed)
    return EvalSummary([run_episode(env, agent, learn=False) for _ in range(eval_episodes)])


def _run_cell(spec: ExperimentSpec, seed: int):
    agent, curve = train_agent(spec, seed)
    _, _, eval_seed = cell_streams(seed)
    result = evaluate_agent(agent, spec.env_config, spec.eval_episodes, eval_seed)
    row = ComparisonRow(
        spec.agent,
        seed,
        result.mean_reward,
        result.mean_tcr,
        result.mean_art,
        result.capacity_violations,
        result.tmax_violations,
    )
    log.info("%s seed %d: reward %.2f tcr %.2f", spec.agent, seed, row.mean_reward, row.mean_tcr)
    return row, result.episodes, curve, agent


def run_comparison(specs: list[ExperimentSpec], workers: int = 1) -> ComparisonReport:
    if not specs:
        raise ConfigurationError("agents: nothing to compare")
    report = ComparisonReport(specs[0].experiment_id)
    cells = [(spec, seed) for spec in specs for seed in spec.seeds]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _run_cell(*c), cells))
    else:
        results = [_run_cell(*c) for c in cells]
    for (spec, seed), (row, episodes, curve, _) in zip(cells, results):
        report.rows.append(row)
        report.eval_episodes[(spec.agent, seed)] = episodes
        report.train_curves[(spec.agent, seed)] = curve
    return report


# -- experiment documents ----------------------------------------------------

EXPERIMENT_KEYS = {"experiment_id", "env", "agents", "agent_overrides", "train_episodes", "eval_episodes", "seeds"}


def desk_experiment() -> dict[str, Any]:
    return {
        "experiment_id": "desk",
        "env": dict(DESK_ENV),
        "agents": list(AGENT_NAMES),
        "train_episodes": DESK_TRAIN_EPISODES,
        "eval_episodes": DESK_EVAL_EPISODES,
        "seeds": list(DESK_SEEDS),
    }


def parse_experiment(doc: Any, agents: Iterable[str] | None = None) -> list[ExperimentSpec]:
    if not isinstance(doc, dict):
        raise ConfigurationError("<root>: experiment document must be a JSON object")
    unknown = sorted(set(doc) - EXPERIMENT_KEYS)
    if unknown:
        raise ConfigurationError(f"{unknown[0]}: unknown experiment field")
    env_doc = doc.get("env")
    if not isinstance(env_doc, dict):
        raise ConfigurationError("env: required object is missing")
    env_config = EnvConfig.from_dict(env_doc, require=("num_sats",))

    names = list(agents) if agents else doc.get("agents", list(AGENT_NAMES))
    if not isinstance(names, list) or not names:
        raise ConfigurationError("agents: must be a non-empty list")
    seeds = doc.get("seeds", DESK_SEEDS)
    if not isinstance(seeds, list) or not seeds:
        raise ConfigurationError("seeds: must be a non-empty list of integers")
    if not all(isinstance(s, int) and s >= 0 for s in seeds):
        raise ConfigurationError("seeds: entries must be non-negative integers")
    overrides = doc.get("agent_overrides", {})
    if not isinstance(overrides, dict):
        raise ConfigurationError("agent_overrides: must be an object keyed by agent name")

    train = doc.get("train_episodes", DESK_TRAIN_EPISODES)
    evals = doc.get("eval_episodes", DESK_EVAL_EPISODES)
    for key, val in (("train_episodes", train), ("eval_episodes", evals)):
        if not isinstance(val, int) or isinstance(val, bool):
            raise ConfigurationError(f"{key}: must be an integer")

    specs = []
    for name in names:
        if name not in AGENT_NAMES:
            raise ConfigurationError(f"agents: unknown agent {name!r}")
        cfg = AgentConfig.defaults(name).updated(overrides.get(name, {}))
        specs.append(
            ExperimentSpec(env_config, name, cfg, train, evals, list(seeds), str(doc.get("experiment_id", "experiment")))
        )
    return specs


def load_experiment(path: str | Path, agents: Iterable[str] | None = None) -> list[ExperimentSpec]:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_experiment(doc, agents)

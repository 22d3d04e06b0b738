"""Command-line entry point: ``constellation-rl {train,compare,replay}``.

Exit codes: 0 success, 2 bad configuration or dimension mismatch, 3 I/O failure.
Set ``CONSTELLATION_LOG`` to ``debug``, ``info`` or ``error`` for log output on
stderr (default ``warning``).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any

from . import report
from .agents import make_agent
from .env import ConstellationEnv, EnvConfig
from .errors import ConfigurationError
from .harness import cell_streams, load_experiment, run_comparison, run_episode, train_agent

log = logging.getLogger("constellation_rl")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

CHECKPOINT_FORMAT = "constellation-rl/agent"
CHECKPOINT_VERSION = 1


def _setup_logging() -> None:
    level = os.environ.get("CONSTELLATION_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _prepare_out(out_dir: str) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _pick_agent(specs, agent: str | None):
    if agent is not None:
        for spec in specs:
            if spec.agent == agent:
                return spec
        raise ConfigurationError(f"agent: {agent!r} is not listed in the config")
    if len(specs) != 1:
        raise ConfigurationError("agent: config lists several agents; choose one with --agent")
    return specs[0]


def agent_checkpoint(agent, env_config: EnvConfig) -> dict[str, Any]:
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "agent": agent.name,
        "num_sats": agent.num_sats,
        "agent_config": agent.config.to_dict(),
        "env": env_config.to_dict(),
        "state": agent.checkpoint(),
    }


def restore_agent(doc: Any):
    from .agents import AgentConfig

    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise ConfigurationError("format: not an agent checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ConfigurationError(f"version: unsupported checkpoint version {doc.get('version')!r}")
    for key in ("agent", "num_sats", "agent_config", "state"):
        if key not in doc:
            raise ConfigurationError(f"{key}: missing from checkpoint")
    cfg = AgentConfig.defaults(doc["agent"]).updated(doc["agent_config"])
    agent = make_agent(doc["agent"], int(doc["num_sats"]), cfg)
    agent.load_checkpoint(doc["state"])
    return agent


def cmd_train(config_path: str, out_dir: str, seed: int | None = None, agent: str | None = None) -> int:
    specs = load_experiment(config_path)
    spec = _pick_agent(specs, agent)
    out = _prepare_out(out_dir)
    seed = spec.seeds[0] if seed is None else seed
    trained, curve = train_agent(spec, seed)
    (out / "checkpoint.json").write_text(json.dumps(agent_checkpoint(trained, spec.env_config), sort_keys=True))
    report.write_curve_csv(curve, out / "training_curve.csv")
    if curve:
        report.learning_curve(curve, f"{spec.agent}, seed {seed}", out / "training_curve.svg")
    log.info("trained %s for %d episodes into %s", spec.agent, len(curve), out)
    return EXIT_OK


def cmd_compare(config_path: str, out_dir: str, agent: str | None = None, workers: int = 1) -> int:
    specs = load_experiment(config_path, [agent] if agent else None)
    out = _prepare_out(out_dir)
    result = run_comparison(specs, workers=workers)
    report.write_results_csv(result, out / "results.csv")
    report.write_summary_csv(result.summary(), out / "summary.csv")
    report.render_summary_charts(out / "summary.csv", out)
    return EXIT_OK


def cmd_replay(checkpoint: str, config_path: str, seed: int | None = None, stream=None) -> int:
    stream = stream or sys.stdout
    try:
        doc = json.loads(Path(checkpoint).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    agent = restore_agent(doc)
    spec = load_experiment(config_path, [agent.name])[0]
    env_config = spec.env_config
    if agent.num_sats != env_config.num_sats:
        raise ConfigurationError(
            f"num_sats: checkpoint has {agent.num_sats} satellites, environment has {env_config.num_sats}"
        )
    seed = spec.seeds[0] if seed is None else seed
    _, _, eval_seed = cell_streams(seed)
    env = ConstellationEnv(env_config.replace(seed=eval_seed))
    agent.begin_evaluation(eval_seed)

    # columns: round, from, to, valid, transfer, reward, failed ids (or -)
    lines: list[str] = []

    def on_step(rnd, action, out):
        info = out.info
        failed = ",".join(str(i) for i in info["failures_this_step"]) or "-"
        lines.append(
            "\t".join(
                [
                    str(rnd),
                    str(info["from_sat"]),
                    str(info["to_sat"]),
                    "1" if info["valid"] else "0",
                    report.fmt(info["transfer"]),
                    report.fmt(out.reward),
                    failed,
                ]
            )
        )

    m = run_episode(env, agent, learn=False, on_step=on_step)
    art = report.fmt(m.art) if m.art is not None else "-"
    lines.append(
        f"summary\treward_sum={report.fmt(m.reward_sum)}\ttcr_percent={report.fmt(m.tcr)}"
        f"\tart_seconds={art}\tfailures={m.failures}\trounds={m.rounds}"
    )
    stream.write("\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="constellation-rl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one agent and save a checkpoint")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--agent")

    p = sub.add_parser("compare", help="train and evaluate every listed agent over every seed")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--agent", help="restrict the run to one agent")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("replay", help="run one evaluation episode from a checkpoint and print the log")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            return cmd_train(args.config, args.out, args.seed, args.agent)
        if args.command == "compare":
            return cmd_compare(args.config, args.out, args.agent, args.workers)
        return cmd_replay(args.checkpoint, args.config, args.seed)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

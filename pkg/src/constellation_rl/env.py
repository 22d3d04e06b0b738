"""Satellite-constellation retasking environment.

The agent picks one directed task transfer per round. Between rounds each
operational satellite works off part of its queue, satellites fail at random
(or when their battery runs flat) and a failed satellite's queue is handed to
the survivors while its orbital plane is re-spaced.
"""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Any

import numpy as np

from . import metrics
from .errors import ConfigurationError
from .orbital import (
    OrbitalSlot,
    build_constellation_geometry,
    euclidean_distance,
    gravity,
    mean_motion,
    propagate,
    propagation_delay,
    slot_to_cartesian,
)

log = logging.getLogger(__name__)

FREQUENCY_BANDS = ("L1", "L2", "L5")
MODULATIONS = ("BPSK", "QPSK")


class Status(enum.IntEnum):
    FAILED = 0
    OPERATIONAL = 1


@dataclass
class SatelliteState:
    id: int
    slot: OrbitalSlot
    position: np.ndarray
    velocity: np.ndarray
    status: Status
    energy: float
    task_load: float
    capacity: float
    reliability: float
    bandwidth_row: np.ndarray
    frequency: str
    modulation: str

    @property
    def operational(self) -> bool:
        return self.status is Status.OPERATIONAL

    @property
    def headroom(self) -> float:
        return max(0.0, self.capacity - self.task_load)

    def copy(self) -> "SatelliteState":
        return SatelliteState(
            self.id,
            self.slot,
            self.position.copy(),
            self.velocity.copy(),
            self.status,
            self.energy,
            self.task_load,
            self.capacity,
            self.reliability,
            self.bandwidth_row.copy(),
            self.frequency,
            self.modulation,
        )


@dataclass
class EnvConfig:
    num_sats: int = 24
    rounds_per_episode: int = 100
    base_failure_prob: float = 0.005
    failure_escalation_start: int = 100
    failure_escalation_rate: float = 0.0001
    failure_prob_cap: float = 0.2
    initial_load_range: tuple[float, float] = (200.0, 450.0)
    capacity: float = 500.0
    initial_energy: float = 4.0
    energy_harvest: float = 0.15
    chunk_size: float = 10.0
    service_rate: float = 2.0
    transfer_energy_cost: float = 0.05
    reconfig_energy_cost: float = 1.0
    invalid_penalty: float = -1.0
    t_max: float = 1.0
    seed: int = 0
    # geometry; planes=None picks the largest divisor of num_sats not above 6
    planes: int | None = None
    inclination_deg: float = 55.0
    radius_km: float = 26560.0
    round_seconds: float = 60.0
    propagation_substeps: int = 10

    def __post_init__(self):
        self.initial_load_range = tuple(float(x) for x in self.initial_load_range)
        self.validate()

    def validate(self) -> None:
        def bad(name, why):
            raise ConfigurationError(f"{name}: {why}")

        if int(self.num_sats) != self.num_sats or self.num_sats < 2:
            bad("num_sats", f"must be an integer >= 2, got {self.num_sats!r}")
        if int(self.rounds_per_episode) != self.rounds_per_episode or self.rounds_per_episode < 1:
            bad("rounds_per_episode", "must be an integer >= 1")
        for name in ("base_failure_prob", "failure_prob_cap"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                bad(name, "must lie in [0, 1]")
        if self.base_failure_prob > self.failure_prob_cap:
            bad("failure_prob_cap", "must be >= base_failure_prob")
        if self.failure_escalation_rate < 0:
            bad("failure_escalation_rate", "must be non-negative")
        if len(self.initial_load_range) != 2:
            bad("initial_load_range", "must be [lo, hi]")
        lo, hi = self.initial_load_range
        if not 0 <= lo <= hi <= self.capacity:
            bad("initial_load_range", f"need 0 <= lo <= hi <= capacity, got [{lo}, {hi}]")
        for name in ("capacity", "initial_energy", "chunk_size", "t_max", "round_seconds"):
            if not getattr(self, name) > 0:
                bad(name, "must be positive")
        for name in ("energy_harvest", "service_rate", "transfer_energy_cost", "reconfig_energy_cost"):
            if getattr(self, name) < 0:
                bad(name, "must be non-negative")
        if self.propagation_substeps < 1:
            bad("propagation_substeps", "must be >= 1")
        if self.planes is not None and (self.planes < 1 or self.num_sats % self.planes):
            bad("planes", f"{self.num_sats} satellites cannot be split across {self.planes} planes")

    @property
    def num_planes(self) -> int:
        if self.planes is not None:
            return self.planes
        return max(d for d in range(1, 7) if self.num_sats % d == 0)

    @property
    def num_actions(self) -> int:
        return self.num_sats * (self.num_sats - 1)

    @property
    def observation_size(self) -> int:
        return 3 * self.num_sats + 1

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["initial_load_range"] = list(self.initial_load_range)
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any], require: tuple[str, ...] = ()) -> "EnvConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"{unknown[0]}: unknown environment field")
        for name in require:
            if name not in data:
                raise ConfigurationError(f"{name}: required field is missing")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc

    def replace(self, **changes) -> "EnvConfig":
        d = asdict(self)
        d.update(changes)
        return EnvConfig(**d)


def encode_action(from_sat: int, to_sat: int, num_sats: int) -> int:
    if from_sat == to_sat:
        raise ValueError("a transfer needs two distinct satellites")
    if not (0 <= from_sat < num_sats and 0 <= to_sat < num_sats):
        raise ValueError(f"satellite id out of range for {num_sats} satellites")
    return from_sat * (num_sats - 1) + (to_sat if to_sat < from_sat else to_sat - 1)


def decode_action(index: int, num_sats: int) -> tuple[int, int]:
    if not 0 <= index < num_sats * (num_sats - 1):
        raise ValueError(f"action index {index} outside [0, {num_sats * (num_sats - 1)})")
    from_sat, rest = divmod(int(index), num_sats - 1)
    to_sat = rest if rest < from_sat else rest + 1
    return from_sat, to_sat


def action_mask(operational: np.ndarray) -> np.ndarray:
    """Boolean mask over action indices whose endpoints are both operational."""
    n = len(operational)
    ok = np.asarray(operational, dtype=bool)
    grid = np.outer(ok, ok)
    np.fill_diagonal(grid, False)
    # row-major with the diagonal removed matches encode_action
    return grid[~np.eye(n, dtype=bool)]


def failure_probability_schedule(
    base_p: float, episode: int, start: int, rate: float, p_cap: float
) -> float:
    if episode < start:
        return base_p
    return min(base_p + rate * (episode - start), p_cap)


def compute_reward(
    transfer_effective: float,
    chunk: float,
    delay: float,
    max_delay: float,
    to_load_after: float,
    capacity: float,
) -> float:
    reward = transfer_effective / chunk
    if max_delay > 0:
        reward -= 0.1 * delay / max_delay
    if to_load_after > 0.9 * capacity:
        reward -= 0.5
    return reward


def initialize_satellites(config: EnvConfig, rng: np.random.Generator) -> list[SatelliteState]:
    slots = build_constellation_geometry(
        config.num_sats, config.num_planes, math.radians(config.inclination_deg), config.radius_km
    )
    n = config.num_sats
    lo, hi = config.initial_load_range
    loads = rng.uniform(lo, hi, size=n)
    reliability = rng.uniform(0.9, 1.0, size=n)
    bw = rng.uniform(50.0, 100.0, size=(n, n))
    bw = np.triu(bw, 1)
    bw = bw + bw.T
    sats = []
    for i, slot in enumerate(slots):
        pos, vel = slot_to_cartesian(slot)
        sats.append(
            SatelliteState(
                id=i,
                slot=slot,
                position=pos,
                velocity=vel,
                status=Status.OPERATIONAL,
                energy=float(config.initial_energy),
                task_load=float(loads[i]),
                capacity=float(config.capacity),
                reliability=float(reliability[i]),
                bandwidth_row=bw[i].copy(),
                frequency=FREQUENCY_BANDS[i % len(FREQUENCY_BANDS)],
                modulation=MODULATIONS[slot.plane_index % len(MODULATIONS)],
            )
        )
    return sats


def redistribute_tasks(sats: list[SatelliteState], failed_id: int) -> tuple[dict[int, float], float]:
    """Hand a failed satellite's queue to the operational ones.

    Equal shares first, each capped at the receiver's headroom; the residue is
    spread in proportion to whatever headroom is left. Returns the amount each
    receiver got and the amount nobody could absorb.
    """
    failed = sats[failed_id]
    if failed.operational:
        raise ValueError(f"satellite {failed_id} is still operational")
    total = failed.task_load
    failed.task_load = 0.0
    receivers = [s for s in sats if s.operational]
    if not receivers:
        return {}, total
    before = {s.id: s.task_load for s in receivers}

    share = total / len(receivers)
    for s in receivers:
        s.task_load = min(s.capacity, s.task_load + min(share, s.headroom))
    residue = total - sum(s.task_load - before[s.id] for s in receivers)

    room = [s.headroom for s in receivers]
    total_room = sum(room)
    if residue > 0 and total_room > 0:
        frac = min(1.0, residue / total_room)
        for s, h in zip(receivers, room):
            s.task_load = min(s.capacity, s.task_load + h * frac)

    received = {s.id: s.task_load - before[s.id] for s in receivers}
    dropped = max(0.0, total - sum(received.values()))
    return received, dropped


def reconfigure(
    sats: list[SatelliteState], failed_id: int, elapsed: float = 0.0, energy_cost: float = 1.0
) -> list[int]:
    """Re-space the surviving satellites of the failed satellite's plane.

    The lowest-id survivor keeps its phase and the rest are placed uniformly
    after it. Every survivor in the plane pays ``energy_cost``. Returns the ids
    that were re-spaced.
    """
    plane = sats[failed_id].slot.plane_index
    survivors = [s for s in sats if s.operational and s.slot.plane_index == plane]
    if not survivors:
        return []
    anchor = survivors[0].slot.phase_angle
    ordered = sorted(survivors, key=lambda s: ((s.slot.phase_angle - anchor) % (2 * math.pi), s.id))
    step = 2 * math.pi / len(ordered)
    for k, s in enumerate(ordered):
        s.slot = s.slot.with_phase(anchor + k * step)
        s.position, s.velocity = slot_to_cartesian(s.slot, mean_motion(s.slot.radius) * elapsed)
        s.energy = max(0.0, s.energy - energy_cost)
    return [s.id for s in ordered]


@dataclass
class FailureEvent:
    sat_id: int
    detected_at: float
    completed_at: float
    selection_latency: float
    simulated_seconds: float
    dropped: float
    cause: str


def measure_response_time(event: FailureEvent) -> float:
    """Wall-clock seconds from detection to completed retasking, plus action latency."""
    return max(0.0, event.completed_at - event.detected_at) + max(0.0, event.selection_latency)


@dataclass
class StepOutcome:
    observation: np.ndarray
    reward: float
    done: bool
    info: dict[str, Any] = field(default_factory=dict)


class ConstellationEnv:
    def __init__(self, config: EnvConfig):
        self.config = config
        self.num_sats = config.num_sats
        self.num_actions = config.num_actions
        self.rng = np.random.default_rng(config.seed)
        self.satellites = initialize_satellites(config, self.rng)
        self.episode_counter = 0
        self.failure_prob = config.base_failure_prob
        self.round = 0
        self.max_delay = self._diameter_delay()
        self.episode_initial_tasks = self.total_load()
        self.episode_dropped = 0.0
        self._done = False

    # -- state views ---------------------------------------------------
    def loads(self) -> np.ndarray:
        return np.array([s.task_load for s in self.satellites])

    def total_load(self) -> float:
        return math.fsum(s.task_load for s in self.satellites)

    def operational(self) -> np.ndarray:
        return np.array([s.operational for s in self.satellites], dtype=bool)

    def valid_action_mask(self) -> np.ndarray:
        return action_mask(self.operational())

    def observation(self) -> np.ndarray:
        cfg = self.config
        obs = np.empty(3 * self.num_sats + 1)
        for i, s in enumerate(self.satellites):
            obs[3 * i] = s.task_load / s.capacity
            obs[3 * i + 1] = s.energy / cfg.initial_energy
            obs[3 * i + 2] = float(s.operational)
        obs[-1] = self.round / cfg.rounds_per_episode
        return np.clip(obs, 0.0, 1.0)

    def calculate_distance(self, i: int, j: int) -> float:
        return euclidean_distance(self.satellites[i].position, self.satellites[j].position)

    def _diameter_delay(self) -> float:
        pos = np.array([s.position for s in self.satellites])
        diff = pos[:, None, :] - pos[None, :, :]
        return propagation_delay(float(np.sqrt((diff**2).sum(-1)).max()))

    # -- episode control ---------------------------------------------------
    def reset(self) -> np.ndarray:
        cfg = self.config
        self.round = 0
        self._done = False
        # leftover queues of failed satellites go to the survivors first
        carried_drop = 0.0
        for s in self.satellites:
            if not s.operational and s.task_load > 0:
                _, dropped = redistribute_tasks(self.satellites, s.id)
                carried_drop += dropped
        if carried_drop:
            log.debug("dropped %.3f tasks carried over from failed satellites", carried_drop)

        slots = build_constellation_geometry(
            cfg.num_sats, cfg.num_planes, math.radians(cfg.inclination_deg), cfg.radius_km
        )
        lo, hi = cfg.initial_load_range
        fresh_loads = self.rng.uniform(lo, hi, size=cfg.num_sats)
        fresh_rel = self.rng.uniform(0.9, 1.0, size=cfg.num_sats)
        for i, s in enumerate(self.satellites):
            if not s.operational:
                # failed units are swapped for spares between episodes
                s.reliability = float(fresh_rel[i])
                s.status = Status.OPERATIONAL
            s.slot = slots[i]
            s.position, s.velocity = slot_to_cartesian(slots[i])
            s.energy = float(cfg.initial_energy)
            s.task_load = float(fresh_loads[i])

        self.episode_counter += 1
        self.failure_prob = failure_probability_schedule(
            cfg.base_failure_prob,
            self.episode_counter,
            cfg.failure_escalation_start,
            cfg.failure_escalation_rate,
            cfg.failure_prob_cap,
        )
        self.max_delay = self._diameter_delay()
        self.episode_initial_tasks = self.total_load()
        self.episode_dropped = 0.0
        return self.observation()

    def _advance_orbits(self) -> None:
        cfg = self.config
        dt = cfg.round_seconds / cfg.propagation_substeps
        p = np.array([s.position for s in self.satellites])
        v = np.array([s.velocity for s in self.satellites])
        for _ in range(cfg.propagation_substeps):
            p, v = propagate(p, v, gravity(p), dt)
        for s, pos, vel in zip(self.satellites, p, v):
            s.position, s.velocity = pos.copy(), vel.copy()

    def _simulated_response(self, failed: SatelliteState, received: dict[int, float], moved: list[int]) -> float:
        """Deterministic response-time model built from light-time delays.

        Detection is the delay to the nearest live neighbour, retasking hands
        the queue to each receiver in turn, and the re-spacing commands go out
        in parallel from the plane's anchor satellite.
        """
        live = [s for s in self.satellites if s.operational]
        if not live:
            return 0.0
        delay = lambda a, b: propagation_delay(euclidean_distance(a.position, b.position))
        detect = min(delay(failed, s) for s in live)
        retask = math.fsum(delay(failed, self.satellites[i]) for i, amt in received.items() if amt > 0)
        reconf = 0.0
        if len(moved) > 1:
            anchor = self.satellites[moved[0]]
            reconf = max(delay(anchor, self.satellites[i]) for i in moved[1:])
        return detect + retask + reconf

    def step(self, action: int, selection_latency: float = 0.0) -> StepOutcome:
        cfg = self.config
        from_id, to_id = decode_action(action, self.num_sats)
        if self._done:
            raise RuntimeError("episode is over; call reset() first")
        src, dst = self.satellites[from_id], self.satellites[to_id]
        info: dict[str, Any] = {
            "from_sat": from_id,
            "to_sat": to_id,
            "valid": True,
            "transfer": 0.0,
            "delay": 0.0,
            "failures_this_step": [],
            "failure_causes": [],
            "response_time_samples": [],
            "simulated_response_times": [],
            "tasks_completed_this_step": 0.0,
            "dropped_this_step": 0.0,
            "capacity_feasible": True,
        }

        if not (src.operational and dst.operational):
            info["valid"] = False
            self.round += 1
            self._done = self.round >= cfg.rounds_per_episode or not self.operational().any()
            return StepOutcome(self.observation(), cfg.invalid_penalty, self._done, info)

        delay = propagation_delay(euclidean_distance(src.position, dst.position))
        moved = max(0.0, min(cfg.chunk_size, src.task_load, dst.capacity - dst.task_load))
        src.task_load = max(0.0, src.task_load - moved)
        dst.task_load = min(dst.capacity, dst.task_load + moved)
        for s in (src, dst):
            s.energy = max(0.0, s.energy - cfg.transfer_energy_cost * moved)
        to_load_after = dst.task_load
        info["transfer"] = moved
        info["delay"] = delay

        completed = 0.0
        for s in self.satellites:
            if s.operational:
                work = min(cfg.service_rate, s.task_load)
                s.task_load -= work
                completed += work
                if s.energy > 0:
                    s.energy = min(cfg.initial_energy, s.energy + cfg.energy_harvest)
        info["tasks_completed_this_step"] = completed

        self._advance_orbits()
        elapsed = (self.round + 1) * cfg.round_seconds

        draws = self.rng.random(self.num_sats)
        newly_failed = []
        for s, u in zip(self.satellites, draws):
            if not s.operational:
                continue
            p = min(1.0, max(0.0, self.failure_prob * (2.0 - s.reliability) * 0.5))
            if s.energy <= 0:
                newly_failed.append((s, "energy"))
            elif u < p:
                newly_failed.append((s, "random"))

        for s, cause in newly_failed:
            detected = time.perf_counter()
            s.status = Status.FAILED
            received, dropped = redistribute_tasks(self.satellites, s.id)
            moved_ids = reconfigure(self.satellites, s.id, elapsed, cfg.reconfig_energy_cost)
            event = FailureEvent(
                sat_id=s.id,
                detected_at=detected,
                completed_at=time.perf_counter(),
                selection_latency=selection_latency,
                simulated_seconds=self._simulated_response(s, received, moved_ids),
                dropped=dropped,
                cause=cause,
            )
            self.episode_dropped += dropped
            info["failures_this_step"].append(s.id)
            info["failure_causes"].append(cause)
            info["dropped_this_step"] += dropped
            info["response_time_samples"].append(measure_response_time(event))
            info["simulated_response_times"].append(event.simulated_seconds)
            log.debug("satellite %d failed (%s), dropped %.3f", s.id, cause, dropped)

        live = [s for s in self.satellites if s.operational]
        info["capacity_feasible"] = metrics.capacity_feasible(
            [s.task_load for s in live], [s.capacity for s in live]
        )
        reward = compute_reward(moved, cfg.chunk_size, delay, self.max_delay, to_load_after, dst.capacity)

        self.round += 1
        self._done = self.round >= cfg.rounds_per_episode or not live
        return StepOutcome(self.observation(), reward, self._done, info)

    @property
    def done(self) -> bool:
        return self._done

    def remaining_tasks(self) -> float:
        return self.total_load() + self.episode_dropped

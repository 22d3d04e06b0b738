"""Task completion rate, average response time and the two feasibility checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import UndefinedMetricError


def task_completion_rate(initial: float, remaining: float) -> float:
    """Percentage of the initial workload that was completed."""
    if initial <= 0:
        raise UndefinedMetricError("task completion rate is undefined with no initial tasks")
    if remaining < 0 or remaining > initial * (1 + 1e-12):
        raise ValueError(f"remaining tasks {remaining} outside [0, {initial}]")
    return min(100.0, (initial - remaining) / initial * 100.0)


def average_response_time(samples: Sequence[float]) -> float:
    if len(samples) == 0:
        raise UndefinedMetricError("average response time is undefined without failures")
    return math.fsum(samples) / len(samples)


def capacity_feasible(loads: Sequence[float], capacities: Sequence[float]) -> bool:
    if len(loads) != len(capacities):
        raise ValueError(f"{len(loads)} loads but {len(capacities)} capacities")
    return all(load <= cap for load, cap in zip(loads, capacities))


def response_time_feasible(samples: Sequence[float], t_max: float) -> bool:
    if t_max <= 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    return all(t <= t_max for t in samples)


def count_tmax_violations(samples: Sequence[float], t_max: float) -> int:
    return sum(1 for t in samples if t > t_max)


@dataclass
class EpisodeMetrics:
    """Bookkeeping for one episode.

    ``response_times`` holds the simulated (deterministic) response times;
    ``wall_response_times`` the wall-clock measurements of the same events.
    """

    initial_tasks: float = 0.0
    remaining_tasks: float = 0.0
    reward_sum: float = 0.0
    response_times: list[float] = field(default_factory=list)
    wall_response_times: list[float] = field(default_factory=list)
    failures: int = 0
    capacity_violations: int = 0
    tmax_violations: int = 0
    rounds: int = 0

    @property
    def tcr(self) -> float:
        return task_completion_rate(self.initial_tasks, self.remaining_tasks)

    @property
    def art(self) -> float | None:
        if not self.response_times:
            return None
        return average_response_time(self.response_times)

    @property
    def wall_art(self) -> float | None:
        if not self.wall_response_times:
            return None
        return average_response_time(self.wall_response_times)

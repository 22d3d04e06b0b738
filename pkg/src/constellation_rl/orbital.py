"""Constellation geometry and simple kinematics.

Satellites sit on circular orbits laid out Walker-style: planes evenly spaced
in right ascension, satellites evenly spaced in phase within a plane. Inside an
episode positions are advanced with explicit Euler steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

EARTH_RADIUS_KM = 6371.0
MU_EARTH = 398600.4418  # km^3 / s^2
SPEED_OF_LIGHT_KM_S = 299792.458

Vec3 = np.ndarray


@dataclass(frozen=True)
class OrbitalSlot:
    plane_index: int
    slot_index: int
    inclination: float
    raan: float
    phase_angle: float
    radius: float

    def __post_init__(self):
        if not self.radius > EARTH_RADIUS_KM:
            raise ConfigurationError(
                f"orbit radius {self.radius} km is not above the Earth's surface"
            )

    def with_phase(self, phase_angle: float) -> "OrbitalSlot":
        return OrbitalSlot(
            self.plane_index,
            self.slot_index,
            self.inclination,
            self.raan,
            phase_angle % (2 * math.pi),
            self.radius,
        )


def build_constellation_geometry(
    num_sats: int, planes: int, inclination: float, radius: float
) -> list[OrbitalSlot]:
    if planes < 1:
        raise ConfigurationError(f"planes must be >= 1, got {planes}")
    if num_sats < 1 or num_sats % planes:
        raise ConfigurationError(
            f"{num_sats} satellites cannot be split evenly across {planes} planes"
        )
    if not radius > EARTH_RADIUS_KM:
        raise ConfigurationError(f"orbit radius {radius} km is not above the Earth's surface")
    per_plane = num_sats // planes
    slots = []
    for p in range(planes):
        raan = p * 2 * math.pi / planes
        for s in range(per_plane):
            slots.append(
                OrbitalSlot(p, s, inclination, raan, s * 2 * math.pi / per_plane, radius)
            )
    return slots


def _rotation(inclination: float, raan: float) -> np.ndarray:
    ci, si = math.cos(inclination), math.sin(inclination)
    co, so = math.cos(raan), math.sin(raan)
    rot_x = np.array([[1.0, 0.0, 0.0], [0.0, ci, -si], [0.0, si, ci]])
    rot_z = np.array([[co, -so, 0.0], [so, co, 0.0], [0.0, 0.0, 1.0]])
    return rot_z @ rot_x


def slot_to_cartesian(slot: OrbitalSlot, true_anomaly_offset: float = 0.0) -> tuple[Vec3, Vec3]:
    """Inertial position (km) and velocity (km/s) of a circular-orbit slot."""
    u = slot.phase_angle + true_anomaly_offset
    speed = math.sqrt(MU_EARTH / slot.radius)
    pos = np.array([slot.radius * math.cos(u), slot.radius * math.sin(u), 0.0])
    vel = np.array([-speed * math.sin(u), speed * math.cos(u), 0.0])
    rot = _rotation(slot.inclination, slot.raan)
    return rot @ pos, rot @ vel


def mean_motion(radius: float) -> float:
    """Angular rate (rad/s) of a circular orbit."""
    return math.sqrt(MU_EARTH / radius**3)


def gravity(position: Vec3) -> Vec3:
    """Point-mass acceleration; also accepts an (n, 3) stack of positions."""
    position = np.asarray(position, dtype=float)
    r = np.sqrt((position * position).sum(axis=-1, keepdims=True))
    return -MU_EARTH * position / r**3


def propagate(position: Vec3, velocity: Vec3, acceleration: Vec3, dt: float) -> tuple[Vec3, Vec3]:
    """One explicit Euler step: p + v dt, v + a dt."""
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    position = np.asarray(position, dtype=float)
    velocity = np.asarray(velocity, dtype=float)
    acceleration = np.asarray(acceleration, dtype=float)
    return position + velocity * dt, velocity + acceleration * dt


def euclidean_distance(a: Vec3, b: Vec3) -> float:
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return math.sqrt(float(d @ d))


def propagation_delay(distance: float) -> float:
    if distance < 0:
        raise ValueError(f"distance must be non-negative, got {distance}")
    return distance / SPEED_OF_LIGHT_KM_S

"""External excitation engines: two-family unicycle drive and uniform shaking.

Both drives are pure functions of time and tile pose.  The unicycle drive
pushes each free tile along its body heading with a sign set by its family
and twists it with a matching family-signed torque; with equally many tiles
of each family the population-level force and torque sums cancel.  The
shaking drive applies one rotating force vector, identical for every free
tile, and no torque.

Note the body-heading convention ``[sin(phi), cos(phi)]``: at ``phi = 0`` a
family-A tile is pushed along +y.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class DriveMode(Enum):
    UNICYCLE = "unicycle"
    SHAKING = "shaking"


@dataclass(frozen=True)
class DriveSpec:
    mode: DriveMode = DriveMode.UNICYCLE
    force_mag: float = 0.05  # N
    torque_mag: float = 5e-4  # N*m
    frequency: float = 0.1  # Hz

    def __post_init__(self) -> None:
        if self.force_mag < 0 or self.torque_mag < 0:
            raise ValueError("force_mag and torque_mag must be non-negative")
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")


def excitation(t: float, frequency: float) -> float:
    """Periodic excitation u(t) = sin(2 pi f t), in [-1, 1]."""
    return math.sin(2.0 * math.pi * frequency * t)


def unicycle_drive(
    phi: float, drive_a: float, drive_omega: float, u: float, spec: DriveSpec
) -> tuple[float, float, float]:
    """(fx, fy, torque) on one free tile under the unicycle drive."""
    f = u * drive_a * spec.force_mag
    return (f * math.sin(phi), f * math.cos(phi), u * drive_omega * spec.torque_mag)


def shaking_drive(t: float, spec: DriveSpec) -> tuple[float, float]:
    """The rotating uniform force shared by every free tile; no torque."""
    arg = 2.0 * math.pi * spec.frequency * t
    return (spec.force_mag * math.sin(arg), spec.force_mag * math.cos(arg))


def drive_forces(
    t: float,
    phi: np.ndarray,
    drive_a: np.ndarray,
    drive_omega: np.ndarray,
    static: np.ndarray,
    spec: DriveSpec,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-tile (forces, torques) arrays for a whole population at time t.

    Static tiles receive zero force and torque in either mode.
    """
    n = phi.shape[0]
    forces = np.zeros((n, 2))
    torques = np.zeros(n)
    free = ~static
    if spec.mode is DriveMode.UNICYCLE:
        u = excitation(t, spec.frequency)
        amp = u * drive_a * spec.force_mag
        forces[:, 0] = amp * np.sin(phi)
        forces[:, 1] = amp * np.cos(phi)
        torques[:] = u * drive_omega * spec.torque_mag
        forces[static] = 0.0
        torques[static] = 0.0
    else:
        fx, fy = shaking_drive(t, spec)
        forces[free, 0] = fx
        forces[free, 1] = fy
    return forces, torques

"""Analytical stability theory: net forces on a seeded assembly, the
detachment predicate, and the critical seed size under harmonic agitation.

Conventions, in the seed-aligned frame: the seed direction is +[1, 1] (the
corner the L-shaped seed wraps around), and the net glue force on the
assembly points along it.  The general detachment predicate tests whether
the resultant of net tile force and net glue force still points into the
seed; under harmonic (cyclic) agitation it reduces to a norm comparison,
which is the operative test.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

SEED_DIRECTION = (math.sqrt(0.5), math.sqrt(0.5))


@dataclass(frozen=True)
class StabilityInput:
    seed_side: int  # tiles per seed side
    tile_mass: float  # kg
    glue_force: float  # N, holding force of a single glue
    accel: tuple[float, float]  # m/s^2, agitation acceleration

    def __post_init__(self) -> None:
        if self.seed_side < 1:
            raise ValueError("seed_side must be >= 1")
        if self.tile_mass <= 0 or self.glue_force <= 0:
            raise ValueError("tile_mass and glue_force must be positive")


def net_tile_force(forces: Iterable[tuple[float, float]]) -> tuple[float, float]:
    """Vector sum of the per-tile driving forces."""
    fx = fy = 0.0
    for x, y in forces:
        fx += x
        fy += y
    return (fx, fy)


def net_glue_force(seed_side: int, glue_force: float) -> tuple[float, float]:
    """Combined holding force of the seed's 2*n_s glues, along +[1, 1].

    The magnitude is 2 * n_s * F_g.
    """
    if seed_side < 1:
        raise ValueError("seed_side must be >= 1")
    if glue_force <= 0:
        raise ValueError("glue_force must be positive")
    c = 2.0 * seed_side * glue_force * math.sqrt(2.0) / 2.0
    return (c, c)


def is_detached(
    f_nt: tuple[float, float],
    f_ng: tuple[float, float],
    harmonic: bool = True,
    quadrant_into_seed: bool = True,
) -> bool:
    """Detachment predicate.

    In harmonic mode (cyclic agitation sweeping all directions) the assembly
    detaches as soon as the net tile force can overpower the net glue force:
    ``|F_ng| < |F_nt|``.

    In the general (directional) mode the assembly stays attached while the
    resultant F_nt + F_ng lies in the closed quadrant pointing into the seed
    (both components non-negative when the seed direction is +[1, 1]).  With
    ``quadrant_into_seed=False`` the opposite sign convention is used, i.e.
    attached means the resultant occupies the closed third quadrant.
    """
    if harmonic:
        return math.hypot(*f_ng) < math.hypot(*f_nt)
    rx = f_nt[0] + f_ng[0]
    ry = f_nt[1] + f_ng[1]
    if quadrant_into_seed:
        attached = rx >= 0.0 and ry >= 0.0
    else:
        attached = rx <= 0.0 and ry <= 0.0
    return not attached


def critical_seed_size(glue_force: float, tile_mass: float, accel_norm: float) -> float:
    """Fundamental size limit sqrt(2 F_g / (m_t * |a|)) under harmonic shaking.

    Assemblies with more than this many tiles per seed side detach.  The
    square-root law corresponds to a holding force that does not grow with
    the assembly (a fixed 2 F_g anchoring): see the harmonic predicate with
    a constant glue term.
    """
    if glue_force <= 0 or tile_mass <= 0 or accel_norm <= 0:
        raise ValueError("all inputs must be positive")
    return math.sqrt(2.0 * glue_force / (tile_mass * accel_norm))


def measured_net_force(
    forces: np.ndarray, component_ids: Iterable[int]
) -> tuple[float, float]:
    """Empirical probe: sum the per-tile forces over a simulated component.

    ``forces`` is the (N, 2) per-tile force array of a snapshot instant and
    ``component_ids`` the tile indices belonging to the seed component.
    """
    ids = list(component_ids)
    if not ids:
        return (0.0, 0.0)
    sub = forces[np.asarray(ids, dtype=int)]
    return (float(sub[:, 0].sum()), float(sub[:, 1].sum()))


def threshold_sweep(
    glue_forces: Iterable[float],
    accels: Iterable[float],
    tile_mass: float,
) -> list[tuple[float, float, float]]:
    """Grid of (F_g, |a|, critical seed size) rows for the sweep table."""
    rows = []
    for fg in glue_forces:
        for a in accels:
            rows.append((fg, a, critical_seed_size(fg, tile_mass, a)))
    return rows

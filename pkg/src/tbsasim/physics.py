"""Fixed-timestep 2D rigid-body core for square tiles in a circular reactor.

Integration is semi-implicit (velocities first, then positions), contacts
are resolved by sequential impulses with Coulomb friction and restitution,
and a capped Baumgarte bias pushes resting overlap back out without the
sinking or popping of direct projection.  The floor acts on every free tile
as a Coulomb force clamped so it can stop but never reverse motion within a
step, plus an exponential velocity damping exp(-c*dt).

The world clock is derived from the step count, never accumulated, so two
runs with identical inputs agree bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _kernels
from .drive import DriveSpec
from .glue import MagnetParams, magnet_offsets
from .model import PlacedTile, ReactorSpec, Tileset

GRAVITY = 9.81  # m/s^2, sets the floor friction normal force


@dataclass(frozen=True)
class PhysicsParams:
    """Engine constants; the defaults are the bench-measured tile values."""

    restitution: float = 0.2
    friction_tile_tile: float = 0.25
    friction_tile_floor: float = 0.25
    angular_friction_floor: float = 0.25
    tile_mass: float = 0.016  # kg
    tile_width: float = 0.03  # m
    linear_damping: float = 0.8  # 1/s
    angular_damping: float = 0.5  # 1/s
    dt: float = 1.0 / 120.0  # s
    solver_iterations: int = 8
    velocity_cap: float = 100.0  # m/s, divergence guard on corner speeds
    baumgarte: float = 0.2  # fraction of penetration recovered per step
    slop: float = 2e-4  # m, allowed resting penetration
    max_bias_speed: float = 0.2  # m/s, cap on the push-out bias
    restitution_threshold: float = 0.05  # m/s, below this impacts are plastic
    wall_skin: float = 5e-4  # m, wall contacts activate inside this band

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0.0 <= self.restitution <= 1.0:
            raise ValueError("restitution must lie in [0, 1]")
        if self.solver_iterations < 1:
            raise ValueError("solver_iterations must be >= 1")
        for name in (
            "friction_tile_tile",
            "friction_tile_floor",
            "angular_friction_floor",
            "tile_mass",
            "tile_width",
            "linear_damping",
            "angular_damping",
            "velocity_cap",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.tile_mass == 0 or self.tile_width == 0:
            raise ValueError("tile_mass and tile_width must be positive")

    @property
    def inertia(self) -> float:
        """Rotational inertia of a uniform square, m * w^2 / 6."""
        return self.tile_mass * self.tile_width**2 / 6.0


@dataclass(frozen=True)
class TileState:
    """Pose and motion of one tile, as exposed to callers."""

    kind_id: int
    position: tuple[float, float]
    orientation: float
    linear_velocity: tuple[float, float]
    angular_velocity: float
    static_flag: bool


@dataclass(frozen=True)
class Contact:
    """One resolved contact point; ``tile_b`` is None for the reactor wall."""

    tile_a: int
    tile_b: int | None
    point: tuple[float, float]
    normal: tuple[float, float]  # from tile_a toward tile_b (or the wall)
    penetration: float


class NumericalDivergence(RuntimeError):
    """Raised when any tile speed exceeds the configured cap."""


class World:
    """Mutable simulation state: tile arrays plus engine parameters.

    Tiles are stored as flat numpy arrays (postion, orientation, velocity,
    angular velocity, kind, static flag) so the compiled kernels can chew
    on them directly.  Stepping is single-threaded per world; distinct
    worlds may run concurrently.
    """

    def __init__(
        self,
        placed: Sequence[PlacedTile],
        tileset: Tileset,
        reactor: ReactorSpec,
        params: PhysicsParams | None = None,
        glue_params: MagnetParams | None = None,
        drive_spec: DriveSpec | None = None,
    ) -> None:
        self.tileset = tileset
        self.reactor = reactor
        self.params = params or PhysicsParams()
        self.glue_params = glue_params or MagnetParams()
        self.drive_spec = drive_spec or DriveSpec()
        n = len(placed)
        self.kind_id = np.array([p.kind.id for p in placed], dtype=np.int64)
        self.pos = np.array([[p.x, p.y] for p in placed], dtype=float).reshape(n, 2)
        self.phi = np.array([p.phi for p in placed], dtype=float)
        self.vel = np.zeros((n, 2))
        self.omega = np.zeros(n)
        self.static = np.array([p.static for p in placed], dtype=np.bool_)
        self.glue_labels = np.array(
            [g for p in placed for g in p.kind.glues], dtype=np.int64
        )
        self.drive_a = np.array([p.kind.drive_a for p in placed], dtype=float)
        self.drive_omega = np.array([p.kind.drive_omega for p in placed], dtype=float)
        self.step_count = 0
        self._magnet_offsets = magnet_offsets(
            self.params.tile_width, self.glue_params.inset
        )

    @property
    def n(self) -> int:
        return self.pos.shape[0]

    @property
    def clock(self) -> float:
        """Simulation time, derived from the step count (never accumulated)."""
        return self.step_count * self.params.dt

    def tile_state(self, i: int) -> TileState:
        return TileState(
            kind_id=int(self.kind_id[i]),
            position=(float(self.pos[i, 0]), float(self.pos[i, 1])),
            orientation=float(self.phi[i]),
            linear_velocity=(float(self.vel[i, 0]), float(self.vel[i, 1])),
            angular_velocity=float(self.omega[i]),
            static_flag=bool(self.static[i]),
        )

    @property
    def tiles(self) -> list[TileState]:
        return [self.tile_state(i) for i in range(self.n)]

    # -- forces ---------------------------------------------------------

    def magnet_positions(self) -> np.ndarray:
        """(4n, 2) world positions of all glue magnets; tile i owns rows 4i..4i+3."""
        return _kernels.magnet_world_positions(self.pos, self.phi, self._magnet_offsets)

    def glue_forces(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-tile (forces, torques) from all pairwise magnet interactions."""
        forces = np.zeros((self.n, 2))
        torques = np.zeros(self.n)
        if self.n < 2:
            return forces, torques
        gp = self.glue_params
        mpos = self.magnet_positions()
        pairs = _kernels.candidate_pairs(mpos, gp.cutoff, gp.cutoff)
        _kernels.accumulate_magnet_forces(
            mpos,
            self.glue_labels,
            pairs,
            self.pos,
            gp.alpha,
            gp.beta,
            gp.cutoff,
            forces,
            torques,
        )
        return forces, torques

    # -- contacts -------------------------------------------------------

    def _contact_arrays(self, reference: bool = False):
        p = self.params
        half_w = p.tile_width / 2.0
        reach = p.tile_width * math.sqrt(2.0)
        if reference:
            pairs = _all_pairs(self.pos, reach)
        else:
            pairs = _kernels.candidate_pairs(self.pos, reach, reach)
        # Drop static-static pairs; seeds never collide with each other.
        if pairs.shape[0]:
            keep = ~(self.static[pairs[:, 0]] & self.static[pairs[:, 1]])
            pairs = pairs[keep]
        tk, tia, tib, tn, tp, tpen = _kernels.box_contacts(
            self.pos, self.phi, pairs, half_w
        )
        wk, wia, wn, wp, wpen = _kernels.wall_contacts(
            self.pos,
            self.phi,
            self.static,
            half_w,
            self.reactor.radius,
            p.wall_skin,
        )
        return (tk, tia, tib, tn, tp, tpen), (wk, wia, wn, wp, wpen)

    def detect_contacts(self, reference: bool = False) -> list[Contact]:
        """Current contact set; ``reference=True`` uses the all-pairs broad phase."""
        (tk, tia, tib, tn, tp, tpen), (wk, wia, wn, wp, wpen) = self._contact_arrays(
            reference
        )
        out = []
        for k in range(tk):
            out.append(
                Contact(
                    tile_a=int(tia[k]),
                    tile_b=int(tib[k]),
                    point=(float(tp[k, 0]), float(tp[k, 1])),
                    normal=(float(tn[k, 0]), float(tn[k, 1])),
                    penetration=float(tpen[k]),
                )
            )
        for k in range(wk):
            out.append(
                Contact(
                    tile_a=int(wia[k]),
                    tile_b=None,
                    point=(float(wp[k, 0]), float(wp[k, 1])),
                    normal=(float(wn[k, 0]), float(wn[k, 1])),
                    penetration=float(wpen[k]),
                )
            )
        return out

    # -- stepping -------------------------------------------------------

    def step(
        self,
        forces: np.ndarray | None = None,
        torques: np.ndarray | None = None,
    ) -> "World":
        """Advance the world by one dt under the given external forces."""
        p = self.params
        n = self.n
        if forces is None:
            forces = np.zeros((n, 2))
        if torques is None:
            torques = np.zeros(n)
        forces = np.ascontiguousarray(forces, dtype=float)
        torques = np.ascontiguousarray(torques, dtype=float)
        if not (np.all(np.isfinite(forces)) and np.all(np.isfinite(torques))):
            raise ValueError("external forces must be finite")

        inv_mass = 1.0 / p.tile_mass
        inv_inertia = 1.0 / p.inertia
        _kernels.integrate_velocities(
            self.vel,
            self.omega,
            self.static,
            forces,
            torques,
            inv_mass,
            inv_inertia,
            p.dt,
            p.friction_tile_floor * GRAVITY,
            2.0 * p.angular_friction_floor * GRAVITY / p.tile_width,
            math.exp(-p.linear_damping * p.dt),
            math.exp(-p.angular_damping * p.dt),
        )

        (tk, tia, tib, tn, tp, tpen), (wk, wia, wn, wp, wpen) = self._contact_arrays()
        m = tk + wk
        if m:
            ia = np.concatenate([tia, wia])
            ib = np.concatenate([tib, np.full(wk, -1, dtype=np.int64)])
            normals = np.concatenate([tn, wn]) if wk else tn
            points = np.concatenate([tp, wp]) if wk else tp
            pens = np.concatenate([tpen, wpen])
            frictions = np.concatenate(
                [
                    np.full(tk, p.friction_tile_tile),
                    np.full(wk, self.reactor.wall_friction),
                ]
            )
            restitutions = np.concatenate(
                [
                    np.full(tk, p.restitution),
                    np.full(wk, self.reactor.wall_restitution),
                ]
            )
            _kernels.solve_contacts(
                self.vel,
                self.omega,
                self.pos,
                self.static,
                inv_mass,
                inv_inertia,
                np.ascontiguousarray(ia),
                np.ascontiguousarray(ib),
                np.ascontiguousarray(normals),
                np.ascontiguousarray(points),
                np.ascontiguousarray(pens),
                frictions,
                restitutions,
                p.solver_iterations,
                p.dt,
                p.baumgarte,
                p.slop,
                p.max_bias_speed,
                p.restitution_threshold,
            )

        _kernels.integrate_positions(
            self.pos,
            self.phi,
            self.vel,
            self.omega,
            self.static,
            p.dt,
            p.tile_width / 2.0,
            self.reactor.radius,
        )
        self.step_count += 1
        # The cap guards the fastest material point: |v| + |omega| * r_corner.
        worst = _kernels.max_speed(
            self.vel, self.omega, p.tile_width * math.sqrt(2.0) / 2.0
        )
        if worst > p.velocity_cap:
            raise NumericalDivergence(
                f"speed {worst:.3g} exceeds cap {p.velocity_cap:.3g} "
                f"at t={self.clock:.6g}"
            )
        return self

    # -- diagnostics ----------------------------------------------------

    def kinetic_energy(self) -> float:
        p = self.params
        lin = 0.5 * p.tile_mass * float(np.sum(self.vel**2))
        rot = 0.5 * p.inertia * float(np.sum(self.omega**2))
        return lin + rot

    def momentum(self) -> tuple[float, float]:
        m = self.params.tile_mass
        return (
            m * math.fsum(self.vel[:, 0].tolist()),
            m * math.fsum(self.vel[:, 1].tolist()),
        )


def _all_pairs(points: np.ndarray, max_dist: float) -> np.ndarray:
    """Brute-force candidate pairs, the oracle for broad-phase soundness."""
    n = points.shape[0]
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            d = points[j] - points[i]
            if float(d @ d) <= max_dist * max_dist:
                out.append((i, j))
    if not out:
        return np.empty((0, 2), dtype=np.int64)
    return np.array(out, dtype=np.int64)

"""Canned experiment setups: detachment threshold and desk-scale batches.

The detachment experiment realizes the critical-size prediction in the
engine: an n x n block bonded to a static two-tile seed segment is pulled
by a uniform shaking force, and the sweep records the smallest block edge
that tears off.  Anchoring strength is fixed by the two seed bonds no
matter how large the block grows, which is exactly the regime where the
square-root threshold applies, so the measured onset can be compared with
``critical_seed_size`` directly.

Guide walls (static, glue-free) flank the block so the rotating force's
horizontal component cannot peel it sideways; with wall and floor friction
zeroed the vertical dynamics stay one-dimensional and quasi-static.
"""
from __future__ import annotations

from dataclasses import dataclass

from .analysis import detect_bonds, seed_component
from .drive import DriveMode, DriveSpec, drive_forces
from .glue import MagnetParams
from .harness import ExperimentConfig
from .model import (
    Color,
    Family,
    PlacedTile,
    ReactorSpec,
    SeedSpec,
    TileKind,
    Tileset,
    build_chessboard_tileset,
)
from .physics import PhysicsParams, World
from .stability import critical_seed_size

WALL_KIND_ID = 6
WALL_CLEARANCE = 5e-4  # m, gap between block faces and guide walls


def measured_bond_force(
    params: PhysicsParams | None = None,
    glue_params: MagnetParams | None = None,
) -> float:
    """Net holding force of one flush bonded pair, measured in the engine.

    Places a black and a white tile in contact and sums the glue forces on
    one of them, so the value includes every magnet-magnet term the solver
    will actually see (the facing pair plus the weaker cross terms), not
    just the idealized single-magnet contact value.
    """
    params = params or PhysicsParams()
    tileset = build_chessboard_tileset()
    black = tileset.kind_by_id(0)
    white = tileset.kind_by_id(2)
    placed = [
        PlacedTile(kind=black, x=0.0, y=0.0, phi=0.0),
        PlacedTile(kind=white, x=params.tile_width, y=0.0, phi=0.0),
    ]
    world = World(placed, tileset, ReactorSpec(radius=1.0), params, glue_params)
    forces, _ = world.glue_forces()
    return float(forces[0, 0])


def _wall_kind() -> TileKind:
    """Static spacer with null glues: collides but never bonds or drives."""
    return TileKind(
        id=WALL_KIND_ID,
        glues=(0, 0, 0, 0),
        family=Family.SEED,
        role_color=Color.BLACK,
    )


def _detachment_tileset() -> Tileset:
    base = build_chessboard_tileset()
    return Tileset(kinds=base.kinds + (_wall_kind(),), ground_truth=base.ground_truth)


def build_detachment_world(
    block_size: int,
    accel: float,
    params: PhysicsParams | None = None,
    glue_params: MagnetParams | None = None,
    frequency: float = 0.25,
) -> World:
    """World with a two-tile static seed, an n x n block above, guide walls.

    The seed occupies lattice cells (0, 0) and (1, 0); the block fills
    columns 0..n-1 in rows 1..n, colored by the ground truth so every
    adjacency bonds.  The drive force per tile is ``tile_mass * accel``.

    The default timestep is 1/480 s rather than the usual 1/120 s: a flush
    magnet pair couples the tiles with stiffness of order F_g divided by
    the magnet gap, a ~300 rad/s spring that sits at the stability edge of
    the integrator at 120 Hz.  The assembly experiments never notice
    because floor friction clamps the jitter every step, but this rig is
    deliberately frictionless.
    """
    if block_size < 2:
        raise ValueError("block_size must be at least 2 for two-bond anchoring")
    params = params or PhysicsParams(
        restitution=0.0,
        friction_tile_tile=0.0,
        friction_tile_floor=0.0,
        angular_friction_floor=0.0,
        linear_damping=0.5,
        angular_damping=0.5,
        dt=1.0 / 480.0,
    )
    tileset = _detachment_tileset()
    w = params.tile_width
    placed: list[PlacedTile] = []
    for i in (0, 1):
        kind = tileset.seed_kind_for(tileset.ground_truth(i, 0))
        placed.append(PlacedTile(kind=kind, x=i * w, y=0.0, phi=0.0, static=True))
    free_by_color = {
        Color.BLACK: tileset.kind_by_id(0),
        Color.WHITE: tileset.kind_by_id(2),
    }
    for j in range(1, block_size + 1):
        for i in range(block_size):
            kind = free_by_color[tileset.ground_truth(i, j)]
            placed.append(PlacedTile(kind=kind, x=i * w, y=j * w, phi=0.0))
    wall = _wall_kind()
    for j in range(0, block_size + 3):
        placed.append(
            PlacedTile(kind=wall, x=-w - WALL_CLEARANCE, y=j * w, phi=0.0, static=True)
        )
        placed.append(
            PlacedTile(
                kind=wall,
                x=block_size * w + WALL_CLEARANCE,
                y=j * w,
                phi=0.0,
                static=True,
            )
        )
    reactor = ReactorSpec(radius=0.6, wall_friction=0.0)
    drive = DriveSpec(
        mode=DriveMode.SHAKING,
        force_mag=params.tile_mass * accel,
        torque_mag=0.0,
        frequency=frequency,
    )
    return World(placed, tileset, reactor, params, glue_params, drive)


def run_detachment(
    block_size: int,
    accel: float,
    duration: float = 8.0,
    check_period: float = 0.1,
    glue_params: MagnetParams | None = None,
) -> bool:
    """True when any block tile leaves the seed component during the run."""
    world = build_detachment_world(block_size, accel, glue_params=glue_params)
    block_ids = set(range(2, 2 + block_size * block_size))
    check_steps = max(1, round(check_period / world.params.dt))
    total_steps = round(duration / world.params.dt)

    def detached() -> bool:
        bonds = detect_bonds(
            world.pos,
            world.phi,
            world.glue_labels.reshape(world.n, 4),
            world.params.tile_width,
        )
        return not block_ids <= seed_component(bonds, (0, 1))

    for step in range(1, total_steps + 1):
        gf, gt = world.glue_forces()
        df, dtq = drive_forces(
            world.clock,
            world.phi,
            world.drive_a,
            world.drive_omega,
            world.static,
            world.drive_spec,
        )
        world.step(gf + df, gt + dtq)
        if step % check_steps == 0 and detached():
            return True
    return False


@dataclass(frozen=True)
class DetachmentResult:
    """Sweep outcome for one acceleration target."""

    target: int
    accel: float
    onset: int | None  # smallest detaching block edge, None if all held
    held: tuple[int, ...] = ()


def detachment_sweep(
    targets: tuple[int, ...] = (2, 3, 4, 5, 6),
    sizes: tuple[int, ...] = (2, 3, 4, 5, 6, 7),
    glue_params: MagnetParams | None = None,
) -> list[DetachmentResult]:
    """Measure detachment onset for accelerations tuned to each target size.

    For target t the acceleration is set so the analytic critical size is
    exactly t (a = 2 F_g / (m t^2), F_g from ``measured_bond_force``).  The
    size sweep stops at the first detaching block: with constant two-bond
    anchoring, any heavier block tears off a fortiori.
    """
    fg = measured_bond_force(glue_params=glue_params)
    mass = PhysicsParams().tile_mass
    results = []
    for t in targets:
        accel = 2.0 * fg / (mass * t * t)
        assert abs(critical_seed_size(fg, mass, accel) - t) < 1e-9
        onset = None
        held = []
        for n in sizes:
            if run_detachment(n, accel, glue_params=glue_params):
                onset = n
                break
            held.append(n)
        results.append(
            DetachmentResult(target=t, accel=accel, onset=onset, held=tuple(held))
        )
    return results


def desk_scale_config(
    mode: DriveMode,
    rng_seed: int = 0,
    output_dir: str = "runs",
    duration: float = 600.0,
) -> ExperimentConfig:
    """Reduced-scale comparison config: 0.3 m reactor, 4x4 seed, 80 tiles.

    The drive magnitudes come from a calibration sweep at this scale: 0.06 N
    keeps single tiles mobile against floor friction without launching them,
    1 Hz shaking keeps gyration orbits small enough to assemble at all, and
    the 4.5e-4 N*m torque sits just above the rotational stiction threshold
    so unicycle tiles tumble in bursts instead of pinwheeling in place.
    """
    return ExperimentConfig(
        reactor=ReactorSpec(radius=0.3),
        seed=SeedSpec(bounding_size=4, arm_width=2),
        free_tiles=80,
        drive=DriveSpec(
            mode=mode, force_mag=0.06, torque_mag=4.5e-4, frequency=1.0
        ),
        duration=duration,
        snapshot_period=30.0,
        rng_seed=rng_seed,
        output_dir=output_dir,
    )


def full_scale_config(
    mode: DriveMode,
    rng_seed: int = 0,
    output_dir: str = "runs",
) -> ExperimentConfig:
    """Full-scale configuration (0.6 m reactor, 10x10 seed, 550 tiles, 1 h).

    Provided for optional long-running studies; a single run takes hours of
    CPU, so nothing in the test suite depends on it.
    """
    return ExperimentConfig(
        reactor=ReactorSpec(radius=0.6),
        seed=SeedSpec(bounding_size=10, arm_width=2),
        free_tiles=550,
        drive=DriveSpec(
            mode=mode, force_mag=0.06, torque_mag=4.5e-4, frequency=1.0
        ),
        duration=3600.0,
        snapshot_period=60.0,
        rng_seed=rng_seed,
        output_dir=output_dir,
    )

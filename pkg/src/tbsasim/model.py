"""Domain model: tiles, glues, tilesets, seeds and reactors.

Glue labels are small signed integers; a pair of glues bonds exactly when the
labels sum to zero (``+1`` with ``-1``, ``+2`` with ``-2``).  ``0`` marks a
glue-free edge that neither attracts nor repels.  Edge order everywhere in
this package is (North, East, South, West) in the tile body frame, i.e. at
orientation ``phi = 0`` the North edge faces +y and the East edge faces +x.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

NULL_GLUE = 0

# Edge index constants (body frame).
NORTH, EAST, SOUTH, WEST = 0, 1, 2, 3


class Family(Enum):
    """Drive family of a tile kind.

    A and B carry drive parameters of equal magnitude and opposite sign;
    SEED kinds are static and carry no drive.
    """

    A = "A"
    B = "B"
    SEED = "Seed"


class Color(Enum):
    BLACK = "black"
    WHITE = "white"


def glue_match(label: int) -> int:
    """Return the label that bonds with ``label`` (its sign opposite)."""
    return -label


def glues_attract(a: int, b: int) -> bool:
    """True when two glue labels form an attracting pair.

    Only exact opposite-sign pairs attract; every other nonzero pairing
    repels and a null glue does nothing.
    """
    if a == NULL_GLUE or b == NULL_GLUE:
        return False
    return a + b == 0


@dataclass(frozen=True)
class TileKind:
    """A tile type: four edge glues plus drive-family parameters."""

    id: int
    glues: tuple[int, int, int, int]  # (N, E, S, W), body frame
    family: Family
    role_color: Color
    drive_a: float = 0.0
    drive_b: float = 0.0
    drive_omega: float = 0.0

    def __post_init__(self) -> None:
        if self.family is Family.SEED and (
            self.drive_a or self.drive_b or self.drive_omega
        ):
            raise ValueError("seed kinds carry no drive parameters")


@dataclass(frozen=True)
class ReactorSpec:
    """Circular reactor arena."""

    radius: float = 0.6
    wall_restitution: float = 0.2
    wall_friction: float = 0.25

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("reactor radius must be positive")
        if not 0.0 <= self.wall_restitution <= 1.0:
            raise ValueError("wall restitution must lie in [0, 1]")
        if self.wall_friction < 0:
            raise ValueError("wall friction must be non-negative")


@dataclass(frozen=True)
class SeedSpec:
    """Cross-shaped static seed: a plus sign inside an n-by-n bounding box."""

    bounding_size: int = 10
    arm_width: int = 2
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if not 1 <= self.arm_width <= self.bounding_size:
            raise ValueError("arm_width must lie in [1, bounding_size]")
        if (self.bounding_size - self.arm_width) % 2 != 0:
            # Bars can only be centred on the cell lattice when the parities
            # agree; off-centre bars break the 90-degree rotation symmetry.
            raise ValueError("bounding_size and arm_width must share parity")


@dataclass(frozen=True)
class Tileset:
    """Tile kinds plus the ground-truth coloring for error classification."""

    kinds: tuple[TileKind, ...]
    ground_truth: Callable[[int, int], Color]

    def __post_init__(self) -> None:
        labels = {g for k in self.kinds for g in k.glues if g != NULL_GLUE}
        for g in labels:
            if glue_match(g) not in labels:
                raise ValueError(f"glue {g} has no matching partner in tileset")

    def kind_by_id(self, kind_id: int) -> TileKind:
        for k in self.kinds:
            if k.id == kind_id:
                return k
        raise KeyError(kind_id)

    def free_kind_ids(self) -> list[int]:
        return [k.id for k in self.kinds if k.family is not Family.SEED]

    def seed_kind_for(self, color: Color) -> TileKind:
        for k in self.kinds:
            if k.family is Family.SEED and k.role_color is color:
                return k
        raise KeyError(color)


def chessboard_ground_truth(i: int, j: int) -> Color:
    """Parity coloring of the lattice cell (i, j): even parity is black."""
    return Color.BLACK if (i + j) % 2 == 0 else Color.WHITE


def build_chessboard_tileset() -> Tileset:
    """Tileset assembling a chessboard from two colors and four glue types.

    Black tiles carry +1 glues on North/South and +2 on East/West; white
    tiles carry the negated labels.  Any color-alternating placement then
    pairs opposite-sign labels (bonds), any same-color adjacency pairs
    same-sign labels (repels), and a 90-degree misrotation presents a
    cross-magnitude pair (also repels).  Families A and B differ only in
    the sign of their drive parameters, never in glues.
    """
    black_glues = (+1, +2, +1, +2)
    white_glues = (-1, -2, -1, -2)
    kinds = (
        TileKind(0, black_glues, Family.A, Color.BLACK, 1.0, 1.0, 1.0),
        TileKind(1, black_glues, Family.B, Color.BLACK, -1.0, -1.0, -1.0),
        TileKind(2, white_glues, Family.A, Color.WHITE, 1.0, 1.0, 1.0),
        TileKind(3, white_glues, Family.B, Color.WHITE, -1.0, -1.0, -1.0),
        TileKind(4, black_glues, Family.SEED, Color.BLACK),
        TileKind(5, white_glues, Family.SEED, Color.WHITE),
    )
    return Tileset(kinds=kinds, ground_truth=chessboard_ground_truth)


def cross_cells(bounding_size: int, arm_width: int) -> set[tuple[int, int]]:
    """Lattice cells of the plus-shaped seed inside its bounding box.

    Cells are indexed (i, j) with i, j in [0, bounding_size).
    """
    n, w = bounding_size, arm_width
    start = (n - w) // 2
    bar = range(start, start + w)
    cells = {(i, j) for i in range(n) for j in bar}
    cells |= {(i, j) for i in bar for j in range(n)}
    return cells


@dataclass(frozen=True)
class Lattice:
    """Seed-aligned integer lattice used for snapping and ground truth.

    Cell (i, j) has its center at ``origin + (i * spacing, j * spacing)``.
    The origin is the center of the seed's cell (0, 0), which anchors the
    parity coloring.
    """

    origin: tuple[float, float]
    spacing: float

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        return (
            self.origin[0] + i * self.spacing,
            self.origin[1] + j * self.spacing,
        )

    def nearest_cell(self, x: float, y: float) -> tuple[int, int]:
        return (
            round((x - self.origin[0]) / self.spacing),
            round((y - self.origin[1]) / self.spacing),
        )


def seed_lattice(spec: SeedSpec, tile_width: float) -> Lattice:
    """Lattice on which the seed's bounding box spans cells [0, n) x [0, n)."""
    n = spec.bounding_size
    half_span = (n - 1) / 2.0
    origin = (
        spec.center[0] - half_span * tile_width,
        spec.center[1] - half_span * tile_width,
    )
    return Lattice(origin=origin, spacing=tile_width)


@dataclass
class PlacedTile:
    """A tile kind with a pose, prior to being loaded into a world."""

    kind: TileKind
    x: float
    y: float
    phi: float
    static: bool = False


def build_cross_seed(
    spec: SeedSpec, tileset: Tileset, tile_width: float
) -> list[PlacedTile]:
    """Static seed tiles forming the plus shape, colored by ground truth."""
    lattice = seed_lattice(spec, tile_width)
    placed = []
    for i, j in sorted(cross_cells(spec.bounding_size, spec.arm_width)):
        color = tileset.ground_truth(i, j)
        kind = tileset.seed_kind_for(color)
        x, y = lattice.cell_center(i, j)
        placed.append(PlacedTile(kind=kind, x=x, y=y, phi=0.0, static=True))
    return placed


class PlacementOverflow(RuntimeError):
    """Raised when rejection sampling cannot place the requested tiles."""


def scatter_free_tiles(
    count: int,
    reactor: ReactorSpec,
    tileset: Tileset,
    occupied: list[tuple[float, float]],
    rng: np.random.Generator,
    tile_width: float,
    max_attempts_per_tile: int = 1000,
) -> list[PlacedTile]:
    """Scatter free tiles uniformly in the reactor disc without overlap.

    Placements keep a center-to-center clearance of one tile diagonal (the
    worst case over orientations) from each other and from ``occupied``
    positions.  Kinds cycle through (black/A, white/B, white/A, black/B) so
    family counts differ by at most ``count % 2`` and colors stay balanced.
    """
    if count == 0:
        return []
    free_ids = tileset.free_kind_ids()
    blacks = [i for i in free_ids if tileset.kind_by_id(i).role_color is Color.BLACK]
    whites = [i for i in free_ids if tileset.kind_by_id(i).role_color is Color.WHITE]
    black_a = next(i for i in blacks if tileset.kind_by_id(i).family is Family.A)
    black_b = next(i for i in blacks if tileset.kind_by_id(i).family is Family.B)
    white_a = next(i for i in whites if tileset.kind_by_id(i).family is Family.A)
    white_b = next(i for i in whites if tileset.kind_by_id(i).family is Family.B)
    cycle = [black_a, white_b, white_a, black_b]

    diagonal = tile_width * math.sqrt(2.0)
    max_center_r = reactor.radius - diagonal / 2.0
    if max_center_r <= 0:
        raise PlacementOverflow("reactor too small for a single tile")

    taken = list(occupied)
    placed: list[PlacedTile] = []
    for k in range(count):
        kind = tileset.kind_by_id(cycle[k % 4])
        for _ in range(max_attempts_per_tile):
            # Uniform in the disc via sqrt radius transform.
            r = max_center_r * math.sqrt(rng.uniform(0.0, 1.0))
            theta = rng.uniform(0.0, 2.0 * math.pi)
            x, y = r * math.cos(theta), r * math.sin(theta)
            if all((x - px) ** 2 + (y - py) ** 2 >= diagonal**2 for px, py in taken):
                break
        else:
            raise PlacementOverflow(
                f"could not place tile {k + 1}/{count} after "
                f"{max_attempts_per_tile} attempts"
            )
        phi = rng.uniform(0.0, 2.0 * math.pi)
        placed.append(PlacedTile(kind=kind, x=x, y=y, phi=phi, static=False))
        taken.append((x, y))
    return placed

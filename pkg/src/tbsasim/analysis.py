"""Offline snapshot analysis: bonds, seed component, holes, errors, aggregation.

Bonds are emergent in the physics (magnet pairs holding tiles flush), so the
analyzer reconstructs them geometrically: two tiles are bonded when a pair of
facing edges carries glue labels that sum to zero, the edge midpoints are
closer than a gap tolerance, and the relative orientation is within an angle
tolerance of a multiple of 90 degrees.  Everything downstream (component,
holes, errors) is a pure function of one snapshot, so re-analysis of stored
streams is bit-reproducible.
"""
from __future__ import annotations

import csv
import math
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .model import Color, Lattice

DEFAULT_GAP_TOL_FACTOR = 0.2  # of tile width
DEFAULT_ANGLE_TOL = math.radians(15.0)

# Body-frame edge midpoint directions, order (N, E, S, W).
_EDGE_DIRS = ((0.0, 1.0), (1.0, 0.0), (0.0, -1.0), (-1.0, 0.0))


@dataclass(frozen=True)
class BondEdge:
    tile_i: int
    tile_j: int
    label_i: int
    label_j: int


@dataclass(frozen=True)
class BondGraph:
    node_count: int
    edges: tuple[BondEdge, ...]

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = defaultdict(list)
        for e in self.edges:
            adj[e.tile_i].append(e.tile_j)
            adj[e.tile_j].append(e.tile_i)
        return adj


@dataclass(frozen=True)
class MetricsRow:
    time: float
    size: int  # tiles in the seed component, errors included
    size_excluding_seed: int
    error_pct: float
    hole_pct: float


class LatticeSnapFailure(RuntimeError):
    """Raised when two component tiles snap to the same lattice cell."""


def _edge_midpoints(x: float, y: float, phi: float, half_w: float):
    c, s = math.cos(phi), math.sin(phi)
    for ex, ey in _EDGE_DIRS:
        yield (x + (c * ex - s * ey) * half_w, y + (s * ex + c * ey) * half_w)


def detect_bonds(
    pos: np.ndarray,
    phi: np.ndarray,
    glues: Sequence[tuple[int, int, int, int]],
    tile_width: float,
    gap_tol: float | None = None,
    angle_tol: float = DEFAULT_ANGLE_TOL,
) -> BondGraph:
    """Reconstruct the bond graph of one snapshot.

    ``glues`` holds the (N, E, S, W) labels of each tile.  At most one edge
    is emitted per tile pair (the closest qualifying edge pair).
    """
    n = pos.shape[0]
    if gap_tol is None:
        gap_tol = DEFAULT_GAP_TOL_FACTOR * tile_width
    half_w = tile_width / 2.0

    # Spatial hash on centers; bonded tiles sit within ~1 width + gap_tol.
    reach = tile_width + gap_tol
    cell = reach
    grid: dict[tuple[int, int], list[int]] = defaultdict(list)
    for i in range(n):
        grid[(int(math.floor(pos[i, 0] / cell)), int(math.floor(pos[i, 1] / cell)))].append(i)

    edges: list[BondEdge] = []
    for i in range(n):
        ci = int(math.floor(pos[i, 0] / cell))
        cj = int(math.floor(pos[i, 1] / cell))
        mids_i = None
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for j in grid.get((ci + dx, cj + dy), ()):
                    if j <= i:
                        continue
                    ddx = pos[j, 0] - pos[i, 0]
                    ddy = pos[j, 1] - pos[i, 1]
                    if ddx * ddx + ddy * ddy > reach * reach:
                        continue
                    # Relative orientation near a multiple of 90 degrees.
                    rel = (phi[j] - phi[i]) % (math.pi / 2.0)
                    if min(rel, math.pi / 2.0 - rel) > angle_tol:
                        continue
                    if mids_i is None:
                        mids_i = list(_edge_midpoints(pos[i, 0], pos[i, 1], phi[i], half_w))
                    mids_j = list(_edge_midpoints(pos[j, 0], pos[j, 1], phi[j], half_w))
                    best = None
                    for ei in range(4):
                        li = glues[i][ei]
                        if li == 0:
                            continue
                        for ej in range(4):
                            lj = glues[j][ej]
                            if li + lj != 0:
                                continue
                            gap = math.hypot(
                                mids_j[ej][0] - mids_i[ei][0],
                                mids_j[ej][1] - mids_i[ei][1],
                            )
                            if gap < gap_tol and (best is None or gap < best[0]):
                                best = (gap, li, lj)
                    if best is not None:
                        edges.append(BondEdge(i, j, best[1], best[2]))
    return BondGraph(node_count=n, edges=tuple(edges))


def seed_component(bonds: BondGraph, seed_ids: Iterable[int]) -> set[int]:
    """Breadth-first closure of the seed ids over bond edges."""
    seeds = set(seed_ids)
    if not seeds:
        raise ValueError("seed ids must be nonempty")
    adj = bonds.adjacency()
    seen = set(seeds)
    queue = deque(seeds)
    while queue:
        u = queue.popleft()
        for v in adj.get(u, ()):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def snap_component(
    pos: np.ndarray,
    component_ids: Iterable[int],
    lattice: Lattice,
) -> dict[tuple[int, int], int]:
    """Assign each component tile to its nearest lattice cell.

    Raises LatticeSnapFailure when two tiles land on the same cell, which
    would make occupancy-based metrics ill-defined.
    """
    cells: dict[tuple[int, int], int] = {}
    for i in sorted(component_ids):
        cell = lattice.nearest_cell(pos[i, 0], pos[i, 1])
        if cell in cells:
            raise LatticeSnapFailure(
                f"tiles {cells[cell]} and {i} both snap to cell {cell}"
            )
        cells[cell] = i
    return cells


def snap_component_tolerant(
    pos: np.ndarray,
    component_ids: Iterable[int],
    lattice: Lattice,
) -> tuple[dict[tuple[int, int], int], list[int]]:
    """Like snap_component, but resolves cell collisions instead of raising.

    Two bonded tiles can transiently round to one cell without overlapping
    (both roughly half a width off center).  The tile nearer the cell
    center keeps it (ties go to the lower id); the displaced tiles are
    returned so callers can exclude them from occupancy-based metrics while
    still counting them in the component size.
    """
    cells: dict[tuple[int, int], int] = {}
    dropped: list[int] = []
    for i in sorted(component_ids):
        cell = lattice.nearest_cell(pos[i, 0], pos[i, 1])
        if cell not in cells:
            cells[cell] = i
            continue
        j = cells[cell]
        cx, cy = lattice.cell_center(*cell)
        d_i = (pos[i, 0] - cx) ** 2 + (pos[i, 1] - cy) ** 2
        d_j = (pos[j, 0] - cx) ** 2 + (pos[j, 1] - cy) ** 2
        if d_i < d_j:
            cells[cell] = i
            dropped.append(j)
        else:
            dropped.append(i)
    return cells, dropped


def detect_holes(occupied: Iterable[tuple[int, int]]) -> int:
    """Count empty cells whose four orthogonal neighbors are all occupied.

    This is strictly the 4-neighbor rule: an enclosed 2x1 void counts zero
    holes because neither of its cells has four occupied neighbors.
    """
    occ = set(occupied)
    candidates = set()
    for i, j in occ:
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            c = (i + di, j + dj)
            if c not in occ:
                candidates.add(c)
    holes = 0
    for i, j in candidates:
        if all((i + di, j + dj) in occ for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1))):
            holes += 1
    return holes


def classify_errors(
    cells: Mapping[tuple[int, int], int],
    tile_colors: Mapping[int, Color],
    ground_truth,
) -> int:
    """Count component tiles whose color disagrees with the ground truth."""
    errors = 0
    for (i, j), tile in cells.items():
        if tile_colors[tile] is not ground_truth(i, j):
            errors += 1
    return errors


def snapshot_metrics(
    time: float,
    pos: np.ndarray,
    phi: np.ndarray,
    glues: Sequence[tuple[int, int, int, int]],
    tile_colors: Mapping[int, Color],
    static: np.ndarray,
    lattice: Lattice,
    ground_truth,
    tile_width: float,
    gap_tol: float | None = None,
    angle_tol: float = DEFAULT_ANGLE_TOL,
) -> MetricsRow:
    """The three assembly metrics for one snapshot.

    Occupancy metrics (holes, errors) use the collision-tolerant lattice
    snap; a tile displaced from a contested cell still counts in the size.
    """
    bonds = detect_bonds(pos, phi, glues, tile_width, gap_tol, angle_tol)
    seed_ids = [i for i in range(pos.shape[0]) if static[i]]
    component = seed_component(bonds, seed_ids)
    cells, _ = snap_component_tolerant(pos, component, lattice)
    holes = detect_holes(cells.keys())
    errors = classify_errors(cells, tile_colors, ground_truth)
    size = len(component)
    return MetricsRow(
        time=time,
        size=size,
        size_excluding_seed=size - len(seed_ids),
        error_pct=100.0 * errors / size,
        hole_pct=100.0 * holes / size,
    )


@dataclass(frozen=True)
class AggregateRow:
    time: float
    size_mean: float
    size_std: float
    size_excluding_seed_mean: float
    size_excluding_seed_std: float
    error_pct_mean: float
    error_pct_std: float
    hole_pct_mean: float
    hole_pct_std: float


def aggregate(runs: Sequence[Sequence[MetricsRow]]) -> list[AggregateRow]:
    """Pointwise mean and population standard deviation across runs.

    All runs must share the snapshot time grid; aggregation is independent
    of the order of ``runs``.
    """
    if not runs:
        raise ValueError("no runs to aggregate")
    grid = [row.time for row in runs[0]]
    for series in runs[1:]:
        if [row.time for row in series] != grid:
            raise ValueError("metrics series have mismatched time grids")
    out = []
    for k, t in enumerate(grid):
        cols = {}
        for name in ("size", "size_excluding_seed", "error_pct", "hole_pct"):
            vals = np.array([float(getattr(series[k], name)) for series in runs])
            cols[name] = (float(vals.mean()), float(vals.std()))
        out.append(
            AggregateRow(
                time=t,
                size_mean=cols["size"][0],
                size_std=cols["size"][1],
                size_excluding_seed_mean=cols["size_excluding_seed"][0],
                size_excluding_seed_std=cols["size_excluding_seed"][1],
                error_pct_mean=cols["error_pct"][0],
                error_pct_std=cols["error_pct"][1],
                hole_pct_mean=cols["hole_pct"][0],
                hole_pct_std=cols["hole_pct"][1],
            )
        )
    return out


METRICS_FIELDS = ("time", "size", "size_excluding_seed", "error_pct", "hole_pct")
AGGREGATE_FIELDS = (
    "time",
    "size_mean",
    "size_std",
    "size_excluding_seed_mean",
    "size_excluding_seed_std",
    "error_pct_mean",
    "error_pct_std",
    "hole_pct_mean",
    "hole_pct_std",
)


def write_metrics_csv(path, rows: Sequence[MetricsRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_FIELDS)
        for r in rows:
            writer.writerow(
                [repr(r.time), r.size, r.size_excluding_seed,
                 repr(r.error_pct), repr(r.hole_pct)]
            )


def read_metrics_csv(path) -> list[MetricsRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append(
                MetricsRow(
                    time=float(rec["time"]),
                    size=int(rec["size"]),
                    size_excluding_seed=int(rec["size_excluding_seed"]),
                    error_pct=float(rec["error_pct"]),
                    hole_pct=float(rec["hole_pct"]),
                )
            )
    return rows


def write_aggregate_csv(path, rows: Sequence[AggregateRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_FIELDS)
        for r in rows:
            writer.writerow([repr(float(getattr(r, f))) for f in AGGREGATE_FIELDS])


def read_aggregate_csv(path) -> list[AggregateRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append(AggregateRow(**{f: float(rec[f]) for f in AGGREGATE_FIELDS}))
    return rows

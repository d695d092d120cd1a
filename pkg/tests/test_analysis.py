import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tbsasim.analysis import (
    BondEdge,
    BondGraph,
    LatticeSnapFailure,
    MetricsRow,
    aggregate,
    classify_errors,
    detect_bonds,
    detect_holes,
    read_aggregate_csv,
    read_metrics_csv,
    seed_component,
    snap_component,
    snap_component_tolerant,
    snapshot_metrics,
    write_aggregate_csv,
    write_metrics_csv,
)
from tbsasim.model import Color, Lattice, chessboard_ground_truth

W = 0.03
BLACK = (1, 2, 1, 2)
WHITE = (-1, -2, -1, -2)


def grid_world(cells, jitter=0.0, rotations=None):
    """Positions, orientations and parity glues for the given lattice cells."""
    pos = np.array([[i * W + jitter, j * W] for i, j in cells], dtype=float)
    phi = np.array(
        [0.0 if rotations is None else rotations[k] for k in range(len(cells))]
    )
    glues = [BLACK if (i + j) % 2 == 0 else WHITE for i, j in cells]
    return pos, phi, glues


def edges_of(graph: BondGraph):
    return {(e.tile_i, e.tile_j) for e in graph.edges}


def test_flush_matched_pair_bonds():
    pos, phi, glues = grid_world([(0, 0), (1, 0)])
    g = detect_bonds(pos, phi, glues, W)
    assert edges_of(g) == {(0, 1)}


def test_repelling_pair_does_not_bond():
    pos, phi, _ = grid_world([(0, 0), (1, 0)])
    g = detect_bonds(pos, phi, [BLACK, BLACK], W)
    assert edges_of(g) == set()


def test_gap_threshold():
    pos, phi, glues = grid_world([(0, 0), (1, 0)])
    pos[1, 0] += 0.19 * W  # edge gap just inside the tolerance
    assert edges_of(detect_bonds(pos, phi, glues, W)) == {(0, 1)}
    pos[1, 0] += 0.22 * W  # now past it
    assert edges_of(detect_bonds(pos, phi, glues, W)) == set()


def test_angle_threshold():
    pos, phi, glues = grid_world([(0, 0), (1, 0)])
    phi[1] = math.radians(14.0)
    assert edges_of(detect_bonds(pos, phi, glues, W)) == {(0, 1)}
    phi[1] = math.radians(16.0)
    assert edges_of(detect_bonds(pos, phi, glues, W)) == set()
    # near a half turn the strong edges face each other again
    phi[1] = math.radians(180.0 - 14.0)
    assert edges_of(detect_bonds(pos, phi, glues, W)) == {(0, 1)}


def test_bond_requires_facing_labels_to_match():
    # quarter-turned white tile presents an edge with a cross-magnitude
    # label: +2 meets -1, which repels
    pos, phi, glues = grid_world([(0, 0), (1, 0)])
    phi[1] = math.pi / 2
    g = detect_bonds(pos, phi, glues, W)
    assert edges_of(g) == set()


def test_one_edge_per_pair_and_chain():
    pos, phi, glues = grid_world([(0, 0), (1, 0), (2, 0), (1, 1)])
    g = detect_bonds(pos, phi, glues, W)
    assert edges_of(g) == {(0, 1), (1, 2), (1, 3)}


def test_seed_component_requires_seed_ids():
    g = BondGraph(node_count=3, edges=())
    with pytest.raises(ValueError):
        seed_component(g, [])


def test_seed_component_closure():
    pos, phi, glues = grid_world([(0, 0), (1, 0), (2, 0), (5, 5), (6, 5)])
    g = detect_bonds(pos, phi, glues, W)
    assert seed_component(g, [0]) == {0, 1, 2}
    assert seed_component(g, [3]) == {3, 4}


def brute_component(n, edges, seeds):
    reach = set(seeds)
    changed = True
    while changed:
        changed = False
        for a, b in edges:
            if a in reach and b not in reach:
                reach.add(b)
                changed = True
            if b in reach and a not in reach:
                reach.add(a)
                changed = True
    return reach


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_seed_component_matches_brute_force(data):
    n = data.draw(st.integers(2, 30))
    m = data.draw(st.integers(0, 60))
    edges = [
        (data.draw(st.integers(0, n - 1)), data.draw(st.integers(0, n - 1)))
        for _ in range(m)
    ]
    edges = [(a, b) for a, b in edges if a != b]
    graph = BondGraph(
        node_count=n,
        edges=tuple(
            BondEdge(tile_i=min(a, b), tile_j=max(a, b), label_i=1, label_j=-1)
            for a, b in edges
        ),
    )
    seeds = {data.draw(st.integers(0, n - 1))}
    assert seed_component(graph, seeds) == brute_component(n, edges, seeds)


def test_snap_component_exact_and_collision():
    lat = Lattice(origin=(0.0, 0.0), spacing=W)
    pos = np.array([[0.0, 0.0], [W, 0.0], [W * 1.1, 0.0]])
    cells = snap_component(pos, [0, 1], lat)
    assert cells == {(0, 0): 0, (1, 0): 1}
    with pytest.raises(LatticeSnapFailure):
        snap_component(pos, [0, 1, 2], lat)


def test_snap_tolerant_keeps_tile_nearest_center():
    lat = Lattice(origin=(0.0, 0.0), spacing=W)
    pos = np.array([[0.0, 0.0], [W, 0.0], [W * 1.1, 0.0]])
    cells, dropped = snap_component_tolerant(pos, [0, 1, 2], lat)
    assert cells[(1, 0)] == 1  # tile 1 is dead-center, tile 2 is 0.1 w off
    assert dropped == [2]
    # equidistant contenders resolve to the lower id for determinism
    pos2 = np.array([[W * 0.4, 0.0], [-W * 0.4, 0.0]])
    cells2, dropped2 = snap_component_tolerant(pos2, [0, 1], lat)
    assert cells2 == {(0, 0): 0}
    assert dropped2 == [1]


def test_detect_holes_ring():
    ring = {(i, j) for i in range(3) for j in range(3)} - {(1, 1)}
    assert detect_holes(ring) == 1


def test_detect_holes_full_rectangle():
    assert detect_holes({(i, j) for i in range(4) for j in range(3)}) == 0


def test_detect_holes_two_cell_void_counts_zero():
    # 4-neighbor rule: neither void cell has four occupied neighbors
    block = {(i, j) for i in range(4) for j in range(3)}
    assert detect_holes(block - {(1, 1), (2, 1)}) == 0


def brute_holes(occ, span=6):
    count = 0
    for i in range(-1, span + 1):
        for j in range(-1, span + 1):
            if (i, j) in occ:
                continue
            if all(
                (i + di, j + dj) in occ
                for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1))
            ):
                count += 1
    return count


@settings(max_examples=80, deadline=None)
@given(st.sets(st.tuples(st.integers(0, 4), st.integers(0, 4)), max_size=25))
def test_detect_holes_matches_brute_force(occ):
    assert detect_holes(occ) == brute_holes(occ)


def test_classify_errors_counts_color_mismatches():
    cells = {(0, 0): 0, (1, 0): 1, (0, 1): 2}
    colors = {0: Color.BLACK, 1: Color.WHITE, 2: Color.BLACK}  # 2 should be white
    assert classify_errors(cells, colors, chessboard_ground_truth) == 1


def test_snapshot_metrics_ring_with_hole():
    ring = [(0, 0), (1, 0), (2, 0), (0, 1), (2, 1), (0, 2), (1, 2), (2, 2)]
    pos, phi, glues = grid_world(ring)
    colors = {
        k: (Color.BLACK if (i + j) % 2 == 0 else Color.WHITE)
        for k, (i, j) in enumerate(ring)
    }
    static = np.zeros(len(ring), dtype=bool)
    static[0] = True  # one seed tile anchors the component
    lat = Lattice(origin=(0.0, 0.0), spacing=W)
    row = snapshot_metrics(
        time=12.0,
        pos=pos,
        phi=phi,
        glues=glues,
        tile_colors=colors,
        static=static,
        lattice=lat,
        ground_truth=chessboard_ground_truth,
        tile_width=W,
    )
    assert row.time == 12.0
    assert row.size == 8
    assert row.size_excluding_seed == 7
    assert row.error_pct == 0.0
    assert row.hole_pct == pytest.approx(100.0 / 8.0)


def test_snapshot_metrics_error_percentage():
    pair = [(0, 0), (1, 0)]
    pos, phi, glues = grid_world(pair)
    # tile 1 carries white glues but a black role color: bonded yet wrong
    colors = {0: Color.BLACK, 1: Color.BLACK}
    static = np.array([True, False])
    row = snapshot_metrics(
        time=0.0,
        pos=pos,
        phi=phi,
        glues=glues,
        tile_colors=colors,
        static=static,
        lattice=Lattice(origin=(0.0, 0.0), spacing=W),
        ground_truth=chessboard_ground_truth,
        tile_width=W,
    )
    assert row.size == 2
    assert row.error_pct == pytest.approx(50.0)


def test_aggregate_mean_and_population_std():
    runs = [
        [MetricsRow(0.0, 60, 48, 0.0, 0.0), MetricsRow(10.0, 62, 50, 1.0, 0.0)],
        [MetricsRow(0.0, 80, 68, 2.0, 4.0), MetricsRow(10.0, 78, 66, 3.0, 4.0)],
    ]
    rows = aggregate(runs)
    assert rows[0].time == 0.0
    assert rows[0].size_mean == pytest.approx(70.0)
    assert rows[0].size_std == pytest.approx(10.0)  # population std
    assert rows[1].error_pct_mean == pytest.approx(2.0)
    assert rows[0].hole_pct_std == pytest.approx(2.0)


def test_aggregate_single_run_is_identity_with_zero_std():
    run = [MetricsRow(0.0, 12, 0, 0.0, 0.0)]
    rows = aggregate([run])
    assert rows[0].size_mean == 12.0
    assert rows[0].size_std == 0.0


def test_aggregate_rejects_mismatched_time_grids():
    with pytest.raises(ValueError):
        aggregate(
            [
                [MetricsRow(0.0, 1, 0, 0.0, 0.0)],
                [MetricsRow(5.0, 1, 0, 0.0, 0.0)],
            ]
        )


def test_metrics_csv_round_trip(tmp_path):
    rows = [
        MetricsRow(0.0, 12, 0, 0.0, 0.0),
        MetricsRow(10.0, 14, 2, 7.142857142857143, 0.0),
    ]
    path = tmp_path / "m.csv"
    write_metrics_csv(path, rows)
    assert read_metrics_csv(path) == rows


def test_aggregate_csv_round_trip(tmp_path):
    rows = aggregate(
        [
            [MetricsRow(0.0, 60, 48, 0.0, 0.0)],
            [MetricsRow(0.0, 80, 68, 2.0, 4.0)],
        ]
    )
    path = tmp_path / "a.csv"
    write_aggregate_csv(path, rows)
    assert read_aggregate_csv(path) == rows

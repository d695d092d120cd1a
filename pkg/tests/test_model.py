import math

import numpy as np
import pytest

from tbsasim.model import (
    Color,
    Family,
    Lattice,
    PlacementOverflow,
    ReactorSpec,
    SeedSpec,
    TileKind,
    Tileset,
    build_chessboard_tileset,
    build_cross_seed,
    chessboard_ground_truth,
    cross_cells,
    glue_match,
    glues_attract,
    scatter_free_tiles,
    seed_lattice,
)


def test_glue_match_is_sign_flip():
    assert glue_match(1) == -1
    assert glue_match(-2) == 2
    assert glue_match(0) == 0


def test_glues_attract_truth_table():
    assert glues_attract(1, -1)
    assert glues_attract(-2, 2)
    assert not glues_attract(1, 1)
    assert not glues_attract(1, -2)
    assert not glues_attract(1, 2)
    assert not glues_attract(0, 0)
    assert not glues_attract(0, 1)


def test_ground_truth_is_parity_coloring():
    assert chessboard_ground_truth(0, 0) is Color.BLACK
    assert chessboard_ground_truth(1, 0) is Color.WHITE
    assert chessboard_ground_truth(0, 1) is Color.WHITE
    assert chessboard_ground_truth(-1, 0) is Color.WHITE
    assert chessboard_ground_truth(-1, -1) is Color.BLACK


def test_chessboard_tileset_structure():
    ts = build_chessboard_tileset()
    assert len(ts.kinds) == 6
    assert sorted(ts.free_kind_ids()) == [0, 1, 2, 3]
    for k in ts.kinds:
        if k.role_color is Color.BLACK:
            assert k.glues == (1, 2, 1, 2)
        else:
            assert k.glues == (-1, -2, -1, -2)
        if k.family is Family.A:
            assert k.drive_a == 1.0 and k.drive_omega == 1.0
        elif k.family is Family.B:
            assert k.drive_a == -1.0 and k.drive_omega == -1.0
        else:
            assert k.drive_a == 0.0 and k.drive_omega == 0.0
    assert ts.seed_kind_for(Color.BLACK).family is Family.SEED


def test_chessboard_adjacent_colors_bond_same_colors_repel():
    # neighboring cells have opposite colors; facing glue labels must sum
    # to zero there and must not for any same-color adjacency
    ts = build_chessboard_tileset()
    black = ts.kind_by_id(0).glues
    white = ts.kind_by_id(2).glues
    north, east, south, west = 0, 1, 2, 3
    assert glues_attract(black[north], white[south])
    assert glues_attract(black[east], white[west])
    assert not glues_attract(black[north], black[south])
    assert not glues_attract(white[east], white[west])


def test_tileset_rejects_unmatched_glue():
    kind = TileKind(0, (3, 0, 0, 0), Family.A, Color.BLACK, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        Tileset(kinds=(kind,), ground_truth=chessboard_ground_truth)


def test_seed_kind_carries_no_drive():
    with pytest.raises(ValueError):
        TileKind(9, (1, -1, 1, -1), Family.SEED, Color.BLACK, drive_a=1.0)


def test_cross_cells_plus_shape():
    cells = cross_cells(4, 2)
    # two 4x2 bars minus the shared 2x2 core
    assert len(cells) == 4 * 2 + 4 * 2 - 2 * 2
    assert len(cross_cells(10, 2)) == 10 * 2 + 10 * 2 - 2 * 2
    # four-fold symmetry about the bounding-box center
    center = (4 - 1) / 2
    for i, j in cells:
        ri = round(2 * center - i)
        rj = round(2 * center - j)
        assert (ri, rj) in cells
        assert (j, i) in cells


def test_seed_spec_validates_parity():
    SeedSpec(bounding_size=4, arm_width=2)
    with pytest.raises(ValueError):
        SeedSpec(bounding_size=5, arm_width=2)
    with pytest.raises(ValueError):
        SeedSpec(bounding_size=4, arm_width=3)
    with pytest.raises(ValueError):
        SeedSpec(bounding_size=2, arm_width=4)


def test_lattice_round_trip():
    lat = Lattice(origin=(0.05, -0.02), spacing=0.03)
    for cell in [(0, 0), (3, -2), (-7, 11)]:
        x, y = lat.cell_center(*cell)
        assert lat.nearest_cell(x, y) == cell
        assert lat.nearest_cell(x + 0.011, y - 0.011) == cell


def test_cross_seed_matches_ground_truth_colors():
    spec = SeedSpec(bounding_size=4, arm_width=2)
    ts = build_chessboard_tileset()
    placed = build_cross_seed(spec, ts, tile_width=0.03)
    assert len(placed) == 12
    lat = seed_lattice(spec, 0.03)
    for p in placed:
        assert p.static
        assert p.kind.family is Family.SEED
        cell = lat.nearest_cell(p.x, p.y)
        assert p.kind.role_color is chessboard_ground_truth(*cell)


def test_scatter_is_deterministic_and_non_overlapping():
    reactor = ReactorSpec(radius=0.3)
    ts = build_chessboard_tileset()
    width = 0.03
    occupied = [(0.0, 0.0)]
    tiles_a = scatter_free_tiles(
        40, reactor, ts, occupied, np.random.Generator(np.random.PCG64(7)), width
    )
    tiles_b = scatter_free_tiles(
        40, reactor, ts, occupied, np.random.Generator(np.random.PCG64(7)), width
    )
    assert [(t.x, t.y, t.phi, t.kind.id) for t in tiles_a] == [
        (t.x, t.y, t.phi, t.kind.id) for t in tiles_b
    ]
    diag = width * math.sqrt(2.0)
    pts = [(t.x, t.y) for t in tiles_a] + occupied
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            assert math.dist(pts[i], pts[j]) >= diag - 1e-12
    for t in tiles_a:
        assert math.hypot(t.x, t.y) <= reactor.radius - diag / 2
        assert not t.static


def test_scatter_balances_families_and_colors():
    reactor = ReactorSpec(radius=0.4)
    ts = build_chessboard_tileset()
    tiles = scatter_free_tiles(
        40, reactor, ts, [], np.random.Generator(np.random.PCG64(3)), 0.03
    )
    fams = [t.kind.family for t in tiles]
    cols = [t.kind.role_color for t in tiles]
    assert fams.count(Family.A) == fams.count(Family.B) == 20
    assert cols.count(Color.BLACK) == cols.count(Color.WHITE) == 20


def test_scatter_overflow_raises():
    reactor = ReactorSpec(radius=0.05)
    ts = build_chessboard_tileset()
    with pytest.raises(PlacementOverflow):
        scatter_free_tiles(
            200, reactor, ts, [], np.random.Generator(np.random.PCG64(0)), 0.03
        )

"""Deterministic 2D physics simulator and analysis toolkit for macroscale
tile-based self-assembly, comparing a self-stabilizing two-family drive
against uniform shaking."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    Color,
    Family,
    Lattice,
    PlacedTile,
    ReactorSpec,
    SeedSpec,
    TileKind,
    Tileset,
    build_chessboard_tileset,
    build_cross_seed,
    scatter_free_tiles,
    seed_lattice,
)
from .glue import MagnetFit, MagnetParams, fit_magnet_params, pair_force  # noqa: F401
from .drive import DriveMode, DriveSpec, drive_forces  # noqa: F401
from .physics import (  # noqa: F401
    Contact,
    NumericalDivergence,
    PhysicsParams,
    TileState,
    World,
)
from .stability import critical_seed_size, is_detached, net_glue_force, net_tile_force  # noqa: F401
from .analysis import BondGraph, MetricsRow, aggregate, detect_bonds, detect_holes, seed_component  # noqa: F401
from .harness import ExperimentConfig, load_config, run_batch, run_experiment  # noqa: F401

"""Experiment configuration, deterministic runs, and batch orchestration.

A run is fully determined by (config, rng seed): tile placement uses a
seeded PCG64 generator, the physics is fixed-timestep, and snapshots are
serialized with round-trip ``repr``, so identical inputs give byte-identical
stream files.  Batches fan runs out over processes; aggregation sorts by
seed first, so results do not depend on the parallelism level or completion
order.
"""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from . import __version__
from .analysis import (
    AggregateRow,
    MetricsRow,
    aggregate,
    snapshot_metrics,
    write_aggregate_csv,
    write_metrics_csv,
)
from .drive import DriveMode, DriveSpec, drive_forces
from .glue import MagnetParams
from .model import (
    ReactorSpec,
    SeedSpec,
    build_chessboard_tileset,
    build_cross_seed,
    scatter_free_tiles,
    seed_lattice,
)
from .physics import PhysicsParams, World
from .streams import StreamMeta, StreamWriter, read_stream


@dataclass(frozen=True)
class AnalysisParams:
    """Bond-detection thresholds used when computing metrics."""

    gap_tol_factor: float = 0.2  # of tile width
    angle_tol_deg: float = 15.0

    def __post_init__(self) -> None:
        if self.gap_tol_factor <= 0 or not 0 < self.angle_tol_deg < 45:
            raise ValueError("invalid analysis tolerances")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that defines one experiment; defaults are the full scale."""

    reactor: ReactorSpec = field(default_factory=ReactorSpec)
    seed: SeedSpec = field(default_factory=SeedSpec)
    free_tiles: int = 550
    drive: DriveSpec = field(default_factory=DriveSpec)
    physics: PhysicsParams = field(default_factory=PhysicsParams)
    magnet: MagnetParams = field(default_factory=MagnetParams)
    analysis: AnalysisParams = field(default_factory=AnalysisParams)
    duration: float = 3600.0  # s
    snapshot_period: float = 10.0  # s
    rng_seed: int = 0
    output_dir: str = "runs"

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.snapshot_period <= 0:
            raise ValueError("snapshot period must be positive")
        ratio = self.duration / self.snapshot_period
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("snapshot period must divide the duration")
        steps = self.snapshot_period / self.physics.dt
        if abs(steps - round(steps)) > 1e-6:
            raise ValueError("snapshot period must be a whole number of steps")
        if self.free_tiles < 0:
            raise ValueError("free tile count must be non-negative")

    # -- serialization ------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        d["drive"]["mode"] = self.drive.mode.value
        d["seed"]["center"] = list(self.seed.center)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        kwargs = {}
        if "reactor" in d:
            kwargs["reactor"] = ReactorSpec(**d.pop("reactor"))
        if "seed" in d:
            s = dict(d.pop("seed"))
            if "center" in s:
                s["center"] = tuple(s["center"])
            kwargs["seed"] = SeedSpec(**s)
        if "drive" in d:
            dr = dict(d.pop("drive"))
            if "mode" in dr:
                dr["mode"] = DriveMode(dr["mode"])
            kwargs["drive"] = DriveSpec(**dr)
        if "physics" in d:
            kwargs["physics"] = PhysicsParams(**d.pop("physics"))
        if "magnet" in d:
            kwargs["magnet"] = MagnetParams(**d.pop("magnet"))
        if "analysis" in d:
            kwargs["analysis"] = AnalysisParams(**d.pop("analysis"))
        known = {
            "free_tiles", "duration", "snapshot_period", "rng_seed", "output_dir",
        }
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs.update(d)
        return cls(**kwargs)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form; embedded in all outputs."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    return ExperimentConfig.from_dict(data)


def save_config(config: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=True)


def build_world(config: ExperimentConfig, rng_seed: int | None = None) -> World:
    """Seed tiles plus scattered free tiles, ready to step."""
    seed = config.rng_seed if rng_seed is None else rng_seed
    tileset = build_chessboard_tileset()
    placed = build_cross_seed(config.seed, tileset, config.physics.tile_width)
    rng = np.random.Generator(np.random.PCG64(seed))
    placed += scatter_free_tiles(
        config.free_tiles,
        config.reactor,
        tileset,
        [(p.x, p.y) for p in placed],
        rng,
        config.physics.tile_width,
    )
    return World(
        placed,
        tileset,
        config.reactor,
        params=config.physics,
        glue_params=config.magnet,
        drive_spec=config.drive,
    )


@dataclass
class RunResult:
    rng_seed: int
    stream_path: Path | None
    metrics_path: Path | None
    metrics: list[MetricsRow]


def run_experiment(
    config: ExperimentConfig,
    rng_seed: int | None = None,
    output_dir: str | Path | None = None,
) -> RunResult:
    """One deterministic run: snapshot stream plus per-run metrics CSV.

    Snapshots are emitted at t = 0 and after every snapshot period,
    duration/period + 1 in total; their labels are k * period while the
    engine clock stays step-derived.
    """
    seed = config.rng_seed if rng_seed is None else rng_seed
    out = Path(output_dir if output_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    world = build_world(config, seed)
    tileset = world.tileset
    lattice = seed_lattice(config.seed, config.physics.tile_width)
    colors = {i: tileset.kind_by_id(int(k)).role_color for i, k in enumerate(world.kind_id)}
    glues = [tileset.kind_by_id(int(k)).glues for k in world.kind_id]
    gap_tol = config.analysis.gap_tol_factor * config.physics.tile_width
    angle_tol = math.radians(config.analysis.angle_tol_deg)

    meta = StreamMeta(
        config_digest=config.digest(),
        version=__version__,
        run_seed=seed,
        dt=config.physics.dt,
        tile_width=config.physics.tile_width,
        reactor_radius=config.reactor.radius,
        lattice_origin=lattice.origin,
        snapshot_period=config.snapshot_period,
        kinds=tileset.kinds,
    )
    steps_per_snap = round(config.snapshot_period / config.physics.dt)
    total_steps = steps_per_snap * round(config.duration / config.snapshot_period)

    stream_path = out / f"run_{seed}.snapshots"
    metrics: list[MetricsRow] = []

    def measure(k: int) -> MetricsRow:
        return snapshot_metrics(
            time=k * config.snapshot_period,
            pos=world.pos,
            phi=world.phi,
            glues=glues,
            tile_colors=colors,
            static=world.static,
            lattice=lattice,
            ground_truth=tileset.ground_truth,
            tile_width=config.physics.tile_width,
            gap_tol=gap_tol,
            angle_tol=angle_tol,
        )

    with open(stream_path, "w") as fh:
        writer = StreamWriter(fh, meta)
        writer.write_snapshot(0.0, world)
        metrics.append(measure(0))
        try:
            for step in range(1, total_steps + 1):
                gf, gt = world.glue_forces()
                df, dtq = drive_forces(
                    world.clock,
                    world.phi,
                    world.drive_a,
                    world.drive_omega,
                    world.static,
                    config.drive,
                )
                world.step(gf + df, gt + dtq)
                if step % steps_per_snap == 0:
                    k = step // steps_per_snap
                    writer.write_snapshot(k * config.snapshot_period, world)
                    metrics.append(measure(k))
        except Exception as exc:
            raise type(exc)(
                f"run seed={seed} failed at t={world.clock:.3f}: {exc}"
            ) from exc

    metrics_path = out / f"run_{seed}.metrics.csv"
    write_metrics_csv(metrics_path, metrics)
    return RunResult(
        rng_seed=seed, stream_path=stream_path, metrics_path=metrics_path,
        metrics=metrics,
    )


def analyze_stream(
    path, analysis: AnalysisParams | None = None
) -> list[MetricsRow]:
    """Recompute per-run metrics from a stored snapshot stream."""
    from .model import Lattice, chessboard_ground_truth
    from .streams import snapshot_colors, snapshot_glues

    analysis = analysis or AnalysisParams()
    with open(path) as fh:
        meta, snapshots = read_stream(fh)
    lattice = Lattice(origin=meta.lattice_origin, spacing=meta.tile_width)
    rows = []
    for snap in snapshots:
        rows.append(
            snapshot_metrics(
                time=snap.time,
                pos=snap.pos,
                phi=snap.phi,
                glues=snapshot_glues(snap, meta.kinds),
                tile_colors=snapshot_colors(snap, meta.kinds),
                static=snap.static,
                lattice=lattice,
                ground_truth=chessboard_ground_truth,
                tile_width=meta.tile_width,
                gap_tol=analysis.gap_tol_factor * meta.tile_width,
                angle_tol=math.radians(analysis.angle_tol_deg),
            )
        )
    return rows


def _run_one(config: ExperimentConfig, seed: int, output_dir: str) -> RunResult:
    return run_experiment(config, rng_seed=seed, output_dir=output_dir)


@dataclass
class BatchResult:
    completed: list[RunResult]
    failures: list[tuple[int, str]]
    aggregate_rows: list[AggregateRow]
    aggregate_path: Path | None
    manifest_path: Path | None


def run_batch(
    config: ExperimentConfig,
    n_runs: int,
    base_seed: int | None = None,
    jobs: int = 1,
    output_dir: str | Path | None = None,
) -> BatchResult:
    """Run ``n_runs`` experiments with seeds base, base+1, ... and aggregate.

    Runs may execute in parallel; the aggregate is computed from results
    sorted by seed, so it is identical for any ``jobs``.  Per-run failures
    are recorded and the aggregate covers the completed runs.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    base = config.rng_seed if base_seed is None else base_seed
    out = Path(output_dir if output_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = [base + i for i in range(n_runs)]

    completed: list[RunResult] = []
    failures: list[tuple[int, str]] = []
    if jobs <= 1:
        for s in seeds:
            try:
                completed.append(_run_one(config, s, str(out)))
            except Exception as exc:
                failures.append((s, f"{type(exc).__name__}: {exc}"))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_run_one, config, s, str(out)): s for s in seeds}
            for fut in as_completed(futures):
                s = futures[fut]
                try:
                    completed.append(fut.result())
                except Exception as exc:
                    failures.append((s, f"{type(exc).__name__}: {exc}"))
    completed.sort(key=lambda r: r.rng_seed)
    failures.sort()

    agg_rows: list[AggregateRow] = []
    agg_path = None
    if completed:
        agg_rows = aggregate([r.metrics for r in completed])
        agg_path = out / "aggregate.csv"
        write_aggregate_csv(agg_path, agg_rows)

    manifest = {
        "config_digest": config.digest(),
        "version": __version__,
        "config": config.to_dict(),
        "seeds": seeds,
        "completed": [r.rng_seed for r in completed],
        "failed": [{"seed": s, "error": msg} for s, msg in failures],
        "runs": [
            {
                "seed": r.rng_seed,
                "stream": r.stream_path.name if r.stream_path else None,
                "metrics": r.metrics_path.name if r.metrics_path else None,
            }
            for r in completed
        ],
        "aggregate": agg_path.name if agg_path else None,
    }
    manifest_path = out / "manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return BatchResult(
        completed=completed,
        failures=failures,
        aggregate_rows=agg_rows,
        aggregate_path=agg_path,
        manifest_path=manifest_path,
    )

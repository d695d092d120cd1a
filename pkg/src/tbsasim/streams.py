"""Snapshot stream files: framed, line-delimited, greppable.

Layout:

    # tbsa-sim snapshot stream v1
    META key=value ...
    KIND id=0 glues=1,2,1,2 family=A color=black
    ...
    SNAPSHOT t=<time> n=<tiles>
    <id> <kind_id> <x> <y> <phi> <vx> <vy> <omega> <static 0|1>
    ...
    END

Floats are serialized with ``repr``, the shortest round-trip decimal, so a
deterministic simulation yields byte-identical streams.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterator, Sequence

import numpy as np

from .model import Color, Family, TileKind

MAGIC = "# tbsa-sim snapshot stream v1"


@dataclass(frozen=True)
class StreamMeta:
    """Header of one stream: provenance plus what analysis needs."""

    config_digest: str
    version: str
    run_seed: int
    dt: float
    tile_width: float
    reactor_radius: float
    lattice_origin: tuple[float, float]
    snapshot_period: float
    kinds: tuple[TileKind, ...]


@dataclass(frozen=True)
class Snapshot:
    """One framed block: tile states at a single simulated time."""

    time: float
    kind_id: np.ndarray
    pos: np.ndarray
    phi: np.ndarray
    vel: np.ndarray
    omega: np.ndarray
    static: np.ndarray

    @property
    def n(self) -> int:
        return self.kind_id.shape[0]


def _meta_lines(meta: StreamMeta) -> Iterator[str]:
    yield MAGIC
    yield (
        "META "
        f"digest={meta.config_digest} "
        f"version={meta.version} "
        f"run_seed={meta.run_seed} "
        f"dt={meta.dt!r} "
        f"tile_width={meta.tile_width!r} "
        f"reactor_radius={meta.reactor_radius!r} "
        f"lattice_origin={meta.lattice_origin[0]!r},{meta.lattice_origin[1]!r} "
        f"snapshot_period={meta.snapshot_period!r}"
    )
    for k in meta.kinds:
        glues = ",".join(str(g) for g in k.glues)
        yield (
            f"KIND id={k.id} glues={glues} family={k.family.value} "
            f"color={k.role_color.value} drive_a={k.drive_a!r} "
            f"drive_b={k.drive_b!r} drive_omega={k.drive_omega!r}"
        )


class StreamWriter:
    """Writes the header on construction, then one block per snapshot."""

    def __init__(self, fh: IO[str], meta: StreamMeta) -> None:
        self._fh = fh
        self.meta = meta
        for line in _meta_lines(meta):
            fh.write(line + "\n")

    def write_snapshot(self, time: float, world) -> None:
        fh = self._fh
        fh.write(f"SNAPSHOT t={float(time)!r} n={world.n}\n")
        for i in range(world.n):
            fh.write(
                f"{i} {int(world.kind_id[i])} "
                f"{float(world.pos[i, 0])!r} {float(world.pos[i, 1])!r} "
                f"{float(world.phi[i])!r} "
                f"{float(world.vel[i, 0])!r} {float(world.vel[i, 1])!r} "
                f"{float(world.omega[i])!r} "
                f"{1 if world.static[i] else 0}\n"
            )
        fh.write("END\n")


def _parse_kv(line: str, tag: str) -> dict[str, str]:
    body = line[len(tag):].strip()
    out = {}
    for tok in body.split(" "):
        key, _, val = tok.partition("=")
        out[key] = val
    return out


def _parse_kind(line: str) -> TileKind:
    kv = _parse_kv(line, "KIND")
    glues = tuple(int(g) for g in kv["glues"].split(","))
    return TileKind(
        id=int(kv["id"]),
        glues=glues,  # type: ignore[arg-type]
        family=Family(kv["family"]),
        role_color=Color(kv["color"]),
        drive_a=float(kv.get("drive_a", "0.0")),
        drive_b=float(kv.get("drive_b", "0.0")),
        drive_omega=float(kv.get("drive_omega", "0.0")),
    )


def read_stream(fh: IO[str]) -> tuple[StreamMeta, list[Snapshot]]:
    """Parse a whole stream file into its header and snapshot list."""
    first = fh.readline().rstrip("\n")
    if first != MAGIC:
        raise ValueError(f"not a snapshot stream (got {first!r})")
    meta_kv: dict[str, str] = {}
    kinds: list[TileKind] = []
    snapshots: list[Snapshot] = []
    line = fh.readline()
    while line:
        line = line.rstrip("\n")
        if line.startswith("META"):
            meta_kv = _parse_kv(line, "META")
        elif line.startswith("KIND"):
            kinds.append(_parse_kind(line))
        elif line.startswith("SNAPSHOT"):
            kv = _parse_kv(line, "SNAPSHOT")
            t = float(kv["t"])
            n = int(kv["n"])
            kind_id = np.empty(n, dtype=np.int64)
            pos = np.empty((n, 2))
            phi = np.empty(n)
            vel = np.empty((n, 2))
            omega = np.empty(n)
            static = np.empty(n, dtype=np.bool_)
            for r in range(n):
                parts = fh.readline().split()
                idx = int(parts[0])
                kind_id[idx] = int(parts[1])
                pos[idx, 0] = float(parts[2])
                pos[idx, 1] = float(parts[3])
                phi[idx] = float(parts[4])
                vel[idx, 0] = float(parts[5])
                vel[idx, 1] = float(parts[6])
                omega[idx] = float(parts[7])
                static[idx] = parts[8] == "1"
            terminator = fh.readline().rstrip("\n")
            if terminator != "END":
                raise ValueError(f"snapshot block at t={t} not terminated")
            snapshots.append(
                Snapshot(
                    time=t, kind_id=kind_id, pos=pos, phi=phi,
                    vel=vel, omega=omega, static=static,
                )
            )
        elif line:
            raise ValueError(f"unrecognized stream line: {line!r}")
        line = fh.readline()
    if not meta_kv:
        raise ValueError("stream has no META line")
    ox, _, oy = meta_kv["lattice_origin"].partition(",")
    meta = StreamMeta(
        config_digest=meta_kv["digest"],
        version=meta_kv["version"],
        run_seed=int(meta_kv["run_seed"]),
        dt=float(meta_kv["dt"]),
        tile_width=float(meta_kv["tile_width"]),
        reactor_radius=float(meta_kv["reactor_radius"]),
        lattice_origin=(float(ox), float(oy)),
        snapshot_period=float(meta_kv["snapshot_period"]),
        kinds=tuple(kinds),
    )
    return meta, snapshots


def snapshot_glues(
    snapshot: Snapshot, kinds: Sequence[TileKind]
) -> list[tuple[int, int, int, int]]:
    """Per-tile glue labels resolved against the stream's kind table."""
    table = {k.id: k.glues for k in kinds}
    return [table[int(k)] for k in snapshot.kind_id]


def snapshot_colors(snapshot: Snapshot, kinds: Sequence[TileKind]) -> dict[int, Color]:
    table = {k.id: k.role_color for k in kinds}
    return {i: table[int(snapshot.kind_id[i])] for i in range(snapshot.n)}

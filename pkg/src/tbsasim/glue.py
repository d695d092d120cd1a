"""Magnetic glue engine: pairwise magnet forces and the fitted force law.

The force between two glue magnets follows the fitted point model

    F = p * alpha / (d_cm - beta)^2

with the distance ``d_cm`` measured in centimeters and the force in newtons;
``p`` is +1 for an attracting label pair and -1 otherwise.  ``alpha`` and
``beta`` come from a least-squares fit to bench measurements of the real
magnets, so the unit convention (cm in, N out) is part of the parameterization
and is converted to/from SI here, at the boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .model import NULL_GLUE, glues_attract

M_TO_CM = 100.0
# Below this separation (in cm) the point model blows up; clamp instead.
MIN_DISTANCE_CM = 1e-6


@dataclass(frozen=True)
class MagnetParams:
    """Fitted force-law constants plus magnet geometry."""

    alpha: float = 0.18
    beta: float = -0.64
    inset: float = 0.00015  # m, offset of each magnet into the tile body
    cutoff: float = 0.03  # m, interactions beyond one tile width are dropped

    def __post_init__(self) -> None:
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.cutoff <= 0:
            raise ValueError("cutoff must be positive")


@dataclass(frozen=True)
class MagnetInstance:
    """One glue magnet rigidly attached to a tile edge."""

    tile_id: int
    edge: int
    label: int
    position: tuple[float, float]  # world frame, m


def magnet_offsets(tile_width: float, inset: float) -> np.ndarray:
    """Body-frame magnet positions, edge order (N, E, S, W)."""
    h = tile_width / 2.0 - inset
    return np.array([(0.0, h), (h, 0.0), (0.0, -h), (-h, 0.0)])


def tile_magnets(
    tile_id: int,
    kind_glues: tuple[int, int, int, int],
    x: float,
    y: float,
    phi: float,
    tile_width: float,
    inset: float,
) -> list[MagnetInstance]:
    """The four magnets of one tile at its current pose."""
    c, s = math.cos(phi), math.sin(phi)
    out = []
    for edge, (ox, oy) in enumerate(magnet_offsets(tile_width, inset)):
        wx = x + c * ox - s * oy
        wy = y + s * ox + c * oy
        out.append(MagnetInstance(tile_id, edge, kind_glues[edge], (wx, wy)))
    return out


def force_magnitude(distance_m: float, params: MagnetParams) -> float:
    """Unsigned force-law magnitude at a magnet separation given in meters."""
    d_cm = max(distance_m * M_TO_CM, MIN_DISTANCE_CM)
    return params.alpha / (d_cm - params.beta) ** 2


def pair_force(
    g_i: MagnetInstance, g_j: MagnetInstance, params: MagnetParams
) -> tuple[float, float]:
    """Force exerted on magnet ``g_i`` by magnet ``g_j`` (newtons).

    Returns the zero vector beyond the cutoff or when either label is null.
    The force on ``g_j`` is the exact negation.
    """
    if g_i.label == NULL_GLUE or g_j.label == NULL_GLUE:
        return (0.0, 0.0)
    dx = g_j.position[0] - g_i.position[0]
    dy = g_j.position[1] - g_i.position[1]
    dist = math.hypot(dx, dy)
    if dist > params.cutoff:
        return (0.0, 0.0)
    p = 1.0 if glues_attract(g_i.label, g_j.label) else -1.0
    mag = p * force_magnitude(dist, params)
    if dist <= 0.0:
        # Coincident points have no defined direction.
        return (0.0, 0.0)
    return (mag * dx / dist, mag * dy / dist)


class NonConvergence(RuntimeError):
    """Raised when the force-law fit fails to converge."""


@dataclass(frozen=True)
class MagnetFit:
    alpha: float
    beta: float
    residual: float  # sum of squared residuals at the optimum


def fit_magnet_params(
    samples: list[tuple[float, float]],
    initial: tuple[float, float] = (0.1, -0.5),
    max_evaluations: int = 2000,
) -> MagnetFit:
    """Fit (alpha, beta) of ``F = alpha / (d - beta)^2`` to measured data.

    ``samples`` are (distance_cm, force_N) pairs.  Uses trust-region
    Levenberg-Marquardt iteration from the given initial guess.
    """
    if len(samples) < 3:
        raise ValueError("need at least 3 samples to fit two parameters")
    d = np.array([s[0] for s in samples], dtype=float)
    f = np.array([s[1] for s in samples], dtype=float)
    if len(np.unique(d)) != len(d):
        raise ValueError("sample distances must be distinct")

    def residuals(theta: np.ndarray) -> np.ndarray:
        alpha, beta = theta
        return alpha / (d - beta) ** 2 - f

    result = least_squares(
        residuals,
        x0=np.array(initial),
        method="lm",
        max_nfev=max_evaluations,
    )
    if not result.success:
        raise NonConvergence(result.message)
    alpha, beta = result.x
    return MagnetFit(alpha=float(alpha), beta=float(beta), residual=float(2.0 * result.cost))

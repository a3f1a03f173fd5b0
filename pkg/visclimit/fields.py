#!/usr/bin/env python3
"""
Physical fields of a (-1)-homogeneous profile.

A profile U on x = cos(theta) gives the velocity u_theta = U(cos theta) / (r sin theta),
u_r = U'(cos theta) / r, the pressure through the radial momentum balance and the
stream function psi = -r U(cos theta) whose level sets are the meridian streamlines.
Euler profiles are accepted everywhere a Navier-Stokes profile is, with nu = 0.
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")

import numpy as np
import pandas as pd
from matplotlib.figure import Figure
from pydantic import BaseModel, ConfigDict, field_validator

from .errors import ParameterDomainError, PoleError
from .eulerlim import EulerProfile
from .riccati import SolutionProfile
from .settings import LabSettings, resolve

logger = logging.getLogger("FieldReconstruction")

Profile = Union[SolutionProfile, EulerProfile]
BBox = Tuple[float, float, float, float]

DEFAULT_BBOX: BBox = (0.02, 1.0, -1.0, 1.0)
NEWTON_STEPS = 8


class FieldSample(BaseModel):
    """Velocity and pressure at one point (r, theta) of a meridian plane"""
    model_config = ConfigDict(frozen=True)

    theta: float
    r: float
    u_r: float
    u_theta: float
    p: float


class StreamlineSet(BaseModel):
    """
    Contours of psi in the meridian plane (x1, x3) = (r sin theta, r cos theta).

    polylines[i] holds the vertex chains of levels[i], each an (n, 2) array of (x1, x3).
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    levels: List[float]
    polylines: List[List[np.ndarray]]
    bbox: BBox
    psi_scale: float

    @field_validator("polylines", mode="before")
    @classmethod
    def _as_arrays(cls, value):
        out = []
        for chains in value:
            arrays = []
            for chain in chains:
                array = np.array(chain, dtype=float).reshape(-1, 2)
                array.setflags(write=False)
                arrays.append(array)
            out.append(arrays)
        return out

    def vertex_count(self) -> int:
        return sum(len(chain) for chains in self.polylines for chain in chains)

    def to_frame(self) -> pd.DataFrame:
        """Long table with columns level_index, level, line, x1, x3"""
        rows = []
        for i, (level, chains) in enumerate(zip(self.levels, self.polylines)):
            for j, chain in enumerate(chains):
                for x1, x3 in chain:
                    rows.append((i, level, j, x1, x3))
        return pd.DataFrame(rows, columns=["level_index", "level", "line", "x1", "x3"])


def _check_point(theta: float, r: float, settings: LabSettings) -> None:
    if r <= 0:
        raise ParameterDomainError(f"r must be positive, got {r}")
    if not settings.theta_min < theta < math.pi - settings.theta_min:
        raise PoleError(f"theta = {theta} is within {settings.theta_min} of the symmetry axis")


def _unit_velocity(p: Profile, theta: float) -> Tuple[float, float]:
    x = math.cos(theta)
    return float(p.slope(x)), float(p(x)) / math.sin(theta)


def velocity_from_profile(p: Profile, theta: float, r: float = 1.0,
                          settings: Optional[LabSettings] = None) -> Tuple[float, float]:
    """
    Velocity components at (r, theta).

    Args:
        p: solution or Euler profile
        theta: polar angle, at least theta_min away from both poles
        r: distance from the origin

    Returns:
        (u_r, u_theta)
    """
    settings = resolve(settings)
    _check_point(theta, r, settings)
    u_r, u_theta = _unit_velocity(p, theta)
    return u_r / r, u_theta / r


def pressure_from_profile(p: Profile, theta: float, r: float = 1.0,
                          settings: Optional[LabSettings] = None) -> float:
    """
    2p = -nu u_r'' - (nu cot(theta) - u_theta) u_r' - u_r^2 - u_theta^2 at r = 1, theta
    derivatives by centred differences of step pressure_step, then scaled by r^-2.
    For Euler profiles nu = 0 and the viscous terms drop out.
    """
    settings = resolve(settings)
    _check_point(theta, r, settings)
    h = settings.pressure_step
    nu = p.nu
    u_r, u_theta = _unit_velocity(p, theta)
    ahead = float(p.slope(math.cos(theta + h)))
    behind = float(p.slope(math.cos(theta - h)))
    d1 = (ahead - behind) / (2.0 * h)
    d2 = (ahead - 2.0 * u_r + behind) / (h * h)
    cot = math.cos(theta) / math.sin(theta)
    two_p = -nu * d2 - (nu * cot - u_theta) * d1 - u_r * u_r - u_theta * u_theta
    return 0.5 * two_p / (r * r)


def field_sample(p: Profile, theta: float, r: float = 1.0,
                 settings: Optional[LabSettings] = None) -> FieldSample:
    u_r, u_theta = velocity_from_profile(p, theta, r, settings)
    return FieldSample(theta=theta, r=r, u_r=u_r, u_theta=u_theta,
                       p=pressure_from_profile(p, theta, r, settings))


def stream_function(p: Profile, x1, x3):
    """psi = -r U(x3 / r) at meridian points (x1, x3), x1 > 0"""
    x1 = np.asarray(x1, dtype=float)
    x3 = np.asarray(x3, dtype=float)
    r = np.hypot(x1, x3)
    cos = np.clip(x3 / r, -1.0, 1.0)
    return -r * np.asarray(p(cos), dtype=float)


def _psi_gradient(p: Profile, x1: np.ndarray, x3: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    r = np.hypot(x1, x3)
    s = np.clip(x3 / r, -1.0, 1.0)
    U = np.asarray(p(s), dtype=float)
    dU = np.asarray(p.slope(s), dtype=float)
    g1 = -(x1 / r) * U + dU * x3 * x1 / (r * r)
    g3 = -(x3 / r) * U - dU * x1 * x1 / (r * r)
    return g1, g3


def _project(p: Profile, chain: np.ndarray, level: float) -> np.ndarray:
    """Newton steps along grad psi moving each vertex onto psi = level"""
    x1, x3 = chain[:, 0].copy(), chain[:, 1].copy()
    for _ in range(NEWTON_STEPS):
        f = stream_function(p, x1, x3) - level
        g1, g3 = _psi_gradient(p, x1, x3)
        norm2 = g1 * g1 + g3 * g3
        step = np.where(norm2 > 0, f / np.where(norm2 > 0, norm2, 1.0), 0.0)
        x1 -= step * g1
        x3 -= step * g3
        x1 = np.maximum(x1, 1e-12)
    return np.column_stack([x1, x3])


def _split_bad(chain: np.ndarray, good: np.ndarray) -> List[np.ndarray]:
    pieces, start = [], None
    for i, ok in enumerate(good):
        if ok and start is None:
            start = i
        if not ok and start is not None:
            pieces.append(chain[start:i])
            start = None
    if start is not None:
        pieces.append(chain[start:])
    return [piece for piece in pieces if len(piece) >= 2]


def _check_bbox(bbox: BBox) -> None:
    x1_min, x1_max, x3_min, x3_max = bbox
    if x1_min <= 0:
        raise ParameterDomainError(f"bounding box must exclude the axis x1 = 0, got x1_min = {x1_min}")
    if x1_max <= x1_min or x3_max <= x3_min:
        raise ParameterDomainError(f"bounding box {bbox} is empty")


def default_levels(psi: np.ndarray, count: int = 12) -> List[float]:
    """Evenly spaced levels strictly inside the range of psi"""
    lo, hi = float(np.min(psi)), float(np.max(psi))
    return [float(v) for v in np.linspace(lo, hi, count + 2)[1:-1]]


def streamlines(p: Profile, levels: Optional[Sequence[float]] = None, bbox: Optional[BBox] = None,
                settings: Optional[LabSettings] = None) -> StreamlineSet:
    """
    Contours of psi on a raster x raster grid over the bounding box.

    Vertices from the contour engine are Newton-projected onto their level set; vertices
    that do not reach it (across the jump of a glued Euler profile) are dropped and the
    chain is split there.

    Args:
        p: solution or Euler profile
        levels: psi values, default 12 levels spread over the sampled range
        bbox: (x1_min, x1_max, x3_min, x3_max) with x1_min > 0

    Returns:
        StreamlineSet with one list of chains per level (possibly empty)
    """
    settings = resolve(settings)
    bbox = DEFAULT_BBOX if bbox is None else tuple(float(v) for v in bbox)
    _check_bbox(bbox)
    x1 = np.linspace(bbox[0], bbox[1], settings.raster)
    x3 = np.linspace(bbox[2], bbox[3], settings.raster)
    X1, X3 = np.meshgrid(x1, x3)
    psi = stream_function(p, X1, X3)
    psi_scale = max(1.0, float(np.max(np.abs(psi))))

    if levels is None:
        levels = default_levels(psi)
    levels = sorted({float(v) for v in levels})
    if not levels:
        raise ParameterDomainError("at least one streamline level is needed")

    fig = Figure()
    ax = fig.subplots()
    contours = ax.contour(X1, X3, psi, levels=levels)
    tol = 1e-9 * psi_scale
    polylines, dropped = [], 0
    for level, segments in zip(levels, contours.allsegs):
        chains = []
        for segment in segments:
            if len(segment) < 2:
                continue
            projected = _project(p, np.asarray(segment, dtype=float), level)
            good = np.abs(stream_function(p, projected[:, 0], projected[:, 1]) - level) <= tol
            dropped += int(np.count_nonzero(~good))
            chains.extend(_split_bad(projected, good))
        polylines.append(chains)
    if dropped:
        logger.debug(f"Dropped {dropped} vertices that do not lie on their level set")
    result = StreamlineSet(levels=levels, polylines=polylines, bbox=bbox, psi_scale=psi_scale)
    logger.debug(f"Traced {len(levels)} levels, {result.vertex_count()} vertices")
    return result


def level_residual(p: Profile, lines: StreamlineSet) -> float:
    """max over vertices of |psi - level| relative to the sampled size of psi"""
    worst = 0.0
    for level, chains in zip(lines.levels, lines.polylines):
        for chain in chains:
            gap = np.abs(stream_function(p, chain[:, 0], chain[:, 1]) - level)
            worst = max(worst, float(np.max(gap)))
    return worst / lines.psi_scale


def quadrant_counts(lines: StreamlineSet) -> Tuple[int, int, int, int]:
    """
    Vertex counts in the four quarters of the bounding box, ordered
    (lower-left, lower-right, upper-left, upper-right) in (x1, x3).
    """
    x1_mid = 0.5 * (lines.bbox[0] + lines.bbox[1])
    x3_mid = 0.5 * (lines.bbox[2] + lines.bbox[3])
    counts = [0, 0, 0, 0]
    for chains in lines.polylines:
        for chain in chains:
            right = chain[:, 0] >= x1_mid
            upper = chain[:, 1] >= x3_mid
            for k, (u, rr) in enumerate(((False, False), (False, True), (True, False), (True, True))):
                counts[k] += int(np.count_nonzero((upper == u) & (right == rr)))
    return counts[0], counts[1], counts[2], counts[3]

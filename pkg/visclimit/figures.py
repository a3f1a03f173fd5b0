#!/usr/bin/env python3
"""
Illustration datasets for P_c(x) = 2 (x - 2/3)^2 with the solution zero at x_0 = 0.

fig1: interior-branch profiles for nu = 1, 1/8, 1/20, 1/50 against the Euler limits
fig2: streamlines of those four profiles
fig3: streamlines of the non-smooth Euler limits +-sqrt(2 P_c)
fig4: streamlines of the smooth Euler solutions +-2 (x - 2/3)
"""
import logging
import time
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from matplotlib.figure import Figure
from pydantic import BaseModel, ConfigDict

from .eulerlim import EulerSign, SignKind, euler_profile
from .export import (
    OutputWriter,
    euler_frame,
    file_sha256,
    matched_frame,
    new_figure,
    plot_streamlines,
    profile_frame,
)
from .fields import streamlines
from .layers import layer_spec
from .polyparams import Coeffs, from_monomial
from .riccati import SolutionProfile, chebyshev_grid, solve_interior
from .settings import LabSettings, resolve

logger = logging.getLogger("FigureBuilder")

X_ZERO = 0.0
FIG1_VISCOSITIES: List[Tuple[float, str]] = [
    (1.0, "1"),
    (1.0 / 8.0, "1_8"),
    (1.0 / 20.0, "1_20"),
    (1.0 / 50.0, "1_50"),
]
STREAMLINE_LEVELS = 16


def illustration_coeffs() -> Coeffs:
    """c = (25/9, 1/9, -2), i.e. P_c = 2 (x - 2/3)^2"""
    return from_monomial(8.0 / 9.0, -8.0 / 3.0, 2.0)


class ManifestEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    file: str
    sha256: str


class DatasetManifest(BaseModel):
    """Files written for a figure dataset, relative to out_dir"""
    model_config = ConfigDict(frozen=True)

    out_dir: str
    manifest: str
    files: List[ManifestEntry]


def _finish(writer: OutputWriter, figures: List[str]) -> DatasetManifest:
    path = writer.manifest(extra={"figures": figures, "c": illustration_coeffs().model_dump(),
                                  "x0": X_ZERO})
    entries = [
        ManifestEntry(file=p.relative_to(writer.out_dir).as_posix(), sha256=file_sha256(p))
        for p in sorted(set(writer.written))
    ]
    return DatasetManifest(out_dir=str(writer.out_dir), manifest=path.name, files=entries)


def fig1_profiles(settings: Optional[LabSettings] = None) -> Dict[str, SolutionProfile]:
    """Interior-branch solutions with zero at x_0 for each fig1 viscosity, keyed by label"""
    settings = resolve(settings)
    c = illustration_coeffs()
    profiles = {}
    for nu, label in FIG1_VISCOSITIES:
        started = time.time()
        profiles[label] = solve_interior(nu, c, X_ZERO, settings=settings)
        logger.info(f"Solved nu={nu:.4g} in {time.time() - started:.2f}s")
    return profiles


def _write_fig1(writer: OutputWriter, profiles: Dict[str, SolutionProfile], settings: LabSettings) -> None:
    c = illustration_coeffs()
    grid = chebyshev_grid(settings.cheb_points)
    for label, p in profiles.items():
        writer.csv(f"fig1/interior_nu_{label}.csv", profile_frame(p))
        spec = layer_spec(p.nu, c, X_ZERO, settings=settings)
        writer.csv(f"fig1/matched_nu_{label}.csv", matched_frame(spec, grid))

    glued = euler_profile(c, EulerSign.glued(X_ZERO), grid, settings)
    plus = euler_profile(c, EulerSign.plus(), grid, settings)
    minus = euler_profile(c, EulerSign.minus(), grid, settings)
    writer.csv("fig1/euler_glued.csv", euler_frame(glued))
    writer.csv("fig1/euler_plus.csv", euler_frame(plus))
    writer.csv("fig1/euler_minus.csv", euler_frame(minus))

    fig, ax = new_figure("x", "U")
    for label, p in profiles.items():
        ax.plot(p.grid, p.values, linewidth=1.0, label=f"nu = {label.replace('_', '/')}")
    left = glued.grid < X_ZERO
    ax.plot(glued.grid[left], glued.values[left], color="black", linestyle="--", linewidth=0.8)
    ax.plot(glued.grid[~left], glued.values[~left], color="black", linestyle="--", linewidth=0.8,
            label="Euler limit")
    ax.legend(loc="lower right", fontsize=8)
    writer.svg("fig1/overlay.svg", fig)


def _write_streamlines(writer: OutputWriter, name: str, items, settings: LabSettings) -> None:
    fig = Figure(figsize=(3.0 * len(items), 4.5))
    axes = fig.subplots(1, len(items), squeeze=False)[0]
    for ax, (label, p) in zip(axes, items):
        psi_lines = streamlines(p, levels=_levels_for(p, settings), settings=settings)
        writer.streamlines_csv(f"{name}/streamlines_{label}.csv", psi_lines)
        plot_streamlines(ax, psi_lines)
        ax.set_title(label.replace("_", " "), fontsize=8)
        ax.set_aspect("equal")
    writer.svg(f"{name}/streamlines.svg", fig)


def _levels_for(p, settings: LabSettings) -> List[float]:
    # levels from psi on the unit half circle, where |psi| = |U|
    xs = np.linspace(-1.0, 1.0, 201)
    values = np.asarray(p(xs), dtype=float)
    lo, hi = -float(np.max(values)), -float(np.min(values))
    if hi <= lo:
        hi, lo = lo + 1.0, lo - 1.0
    return [float(v) for v in np.linspace(lo, hi, STREAMLINE_LEVELS + 2)[1:-1]]


def fig1_dataset(out_dir: Union[str, Path], settings: Optional[LabSettings] = None) -> DatasetManifest:
    """
    Write the fig1 profiles, Euler limits, matched layers and the overlay SVG.

    Args:
        out_dir: target directory (created if missing)

    Returns:
        DatasetManifest listing every file with its checksum
    """
    settings = resolve(settings)
    started = time.time()
    writer = OutputWriter(out_dir)
    _write_fig1(writer, fig1_profiles(settings), settings)
    manifest = _finish(writer, ["fig1"])
    logger.info(f"fig1 dataset written to {out_dir} in {time.time() - started:.2f}s")
    return manifest


def figure_datasets(out_dir: Union[str, Path], settings: Optional[LabSettings] = None) -> DatasetManifest:
    """All four illustration datasets with one manifest"""
    settings = resolve(settings)
    started = time.time()
    c = illustration_coeffs()
    writer = OutputWriter(out_dir)
    profiles = fig1_profiles(settings)
    _write_fig1(writer, profiles, settings)

    _write_streamlines(writer, "fig2", [(f"nu_{label}", p) for label, p in profiles.items()], settings)
    grid = chebyshev_grid(settings.cheb_points)
    non_smooth = [(kind.value, euler_profile(c, EulerSign(kind=kind), grid, settings))
                  for kind in (SignKind.PLUS, SignKind.MINUS)]
    _write_streamlines(writer, "fig3", non_smooth, settings)
    smooth = [(kind.value, euler_profile(c, EulerSign(kind=kind), grid, settings))
              for kind in (SignKind.SMOOTH_PLUS, SignKind.SMOOTH_MINUS)]
    _write_streamlines(writer, "fig4", smooth, settings)

    manifest = _finish(writer, ["fig1", "fig2", "fig3", "fig4"])
    logger.info(f"Figure datasets written to {out_dir} in {time.time() - started:.2f}s")
    return manifest

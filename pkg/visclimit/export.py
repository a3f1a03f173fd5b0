#!/usr/bin/env python3
"""
File output: profile tables as CSV, reports as JSON, static SVG plots and a checksum
manifest. Every file goes through one OutputWriter so the manifest sees all of them.
"""
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import numpy as np
import pandas as pd
from matplotlib.figure import Figure
from pydantic import BaseModel

from .eulerlim import EulerProfile
from .fields import StreamlineSet
from .layers import LayerSpec, matched_profile
from .riccati import SolutionProfile

logger = logging.getLogger("ResultWriter")

FLOAT_FORMAT = "%.17g"
SVG_HASHSALT = "visclimit"


def profile_frame(p: SolutionProfile) -> pd.DataFrame:
    return pd.DataFrame({"x": p.grid, "U": p.values, "dUdx": p.deriv})


def euler_frame(e: EulerProfile) -> pd.DataFrame:
    return pd.DataFrame({"x": e.grid, "V": e.values})


def matched_frame(spec: LayerSpec, grid) -> pd.DataFrame:
    xs = np.asarray(grid, dtype=float)
    return pd.DataFrame({"x": xs, "Utilde": matched_profile(spec, xs)})


def read_table(path: Union[str, Path]) -> pd.DataFrame:
    """Read a CSV written by OutputWriter; floats come back bit-identical"""
    return pd.read_csv(path, float_precision="round_trip")


def profile_json(p: SolutionProfile) -> Dict[str, Any]:
    return {
        "nu": p.nu,
        "c": p.c.model_dump(),
        "branch": p.branch.label(),
        "x": p.grid.tolist(),
        "U": p.values.tolist(),
        "dUdx": p.deriv.tolist(),
        "residual_sup": p.residual_sup,
    }


def to_jsonable(obj: Any) -> Any:
    """pydantic models, numpy arrays and containers of them as plain JSON values"""
    if isinstance(obj, SolutionProfile):
        return profile_json(obj)
    if isinstance(obj, BaseModel):
        return json.loads(obj.model_dump_json())
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), ensure_ascii=False, indent=2)


def file_sha256(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def new_figure(xlabel: str, ylabel: str, aspect: Optional[str] = None):
    fig = Figure(figsize=(6.0, 4.5))
    ax = fig.subplots()
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if aspect:
        ax.set_aspect(aspect)
    return fig, ax


def plot_streamlines(ax, lines: StreamlineSet, color: str = "black") -> None:
    for chains in lines.polylines:
        for chain in chains:
            ax.plot(chain[:, 0], chain[:, 1], color=color, linewidth=0.6)
    ax.set_xlim(lines.bbox[0], lines.bbox[1])
    ax.set_ylim(lines.bbox[2], lines.bbox[3])


class OutputWriter:
    """Writes result files under one directory and records them for the manifest"""

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.written: List[Path] = []

    def _target(self, name: str) -> Path:
        path = self.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def _record(self, path: Path) -> Path:
        self.written.append(path)
        logger.info(f"Wrote {path}")
        return path

    def csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = self._target(name)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return self._record(path)

    def json(self, name: str, obj: Any) -> Path:
        path = self._target(name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(dumps(obj) + "\n")
        return self._record(path)

    def svg(self, name: str, fig: Figure) -> Path:
        """Save a matplotlib figure as SVG with fixed element ids and no date stamp"""
        path = self._target(name)
        with matplotlib.rc_context({"svg.hashsalt": SVG_HASHSALT}):
            fig.savefig(path, format="svg", metadata={"Date": None})
        return self._record(path)

    def streamlines_csv(self, name: str, lines: StreamlineSet) -> Path:
        return self.csv(name, lines.to_frame())

    def manifest(self, name: str = "manifest.json", extra: Optional[Dict[str, Any]] = None) -> Path:
        """JSON list of every written file (relative path and SHA-256)"""
        entries = [
            {"file": path.relative_to(self.out_dir).as_posix(), "sha256": file_sha256(path)}
            for path in sorted(set(self.written))
        ]
        payload: Dict[str, Any] = {"files": entries}
        if extra:
            payload.update(extra)
        path = self._target(name)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, ensure_ascii=False, indent=2)
            f.write("\n")
        logger.info(f"Manifest lists {len(entries)} files")
        return path


def write_single(obj: Any, path: Union[str, Path], fmt: str,
                 plot_profiles: Sequence[SolutionProfile] = ()) -> Path:
    """
    Write one command result to path in csv, json or svg form.

    Args:
        obj: a SolutionProfile, EulerProfile, StreamlineSet, DataFrame or JSON-able object
        path: target file
        fmt: "csv", "json" or "svg"
        plot_profiles: profiles drawn when obj itself has no plot form
    """
    path = Path(path)
    writer = OutputWriter(path.parent if str(path.parent) else ".")
    name = path.name
    if fmt == "json":
        return writer.json(name, obj)
    if fmt == "csv":
        if isinstance(obj, SolutionProfile):
            return writer.csv(name, profile_frame(obj))
        if isinstance(obj, EulerProfile):
            return writer.csv(name, euler_frame(obj))
        if isinstance(obj, StreamlineSet):
            return writer.streamlines_csv(name, obj)
        if isinstance(obj, pd.DataFrame):
            return writer.csv(name, obj)
        return writer.csv(name, pd.json_normalize(to_jsonable(obj)))
    if isinstance(obj, StreamlineSet):
        fig, ax = new_figure("x1", "x3", aspect="equal")
        plot_streamlines(ax, obj)
        return writer.svg(name, fig)
    fig, ax = new_figure("x", "U")
    drawn = [obj] if isinstance(obj, (SolutionProfile, EulerProfile)) else list(plot_profiles)
    for p in drawn:
        ax.plot(p.grid, p.values, linewidth=1.0)
    return writer.svg(name, fig)

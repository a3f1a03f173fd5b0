"""
Lab settings: solver tolerances, grid sizes, sweep defaults and logging.

Values come from (lowest to highest precedence) the model defaults, an optional
flat key=value config file, the VISCLIMIT_THREADS environment variable and
explicit command-line flags.
"""
import logging
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import UsageError

THREADS_ENV = "VISCLIMIT_THREADS"
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

logger = logging.getLogger("LabSettings")


class LabSettings(BaseModel):
    """Tunables shared by the solver, the sweep harness and the exporters"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    # integrator
    method: str = "DOP853"
    rtol: float = Field(1e-12, gt=0)
    atol: float = Field(1e-14, gt=0)
    cheb_points: int = Field(2001, ge=3)
    endpoint_gap_min: float = Field(1e-8, gt=0)
    endpoint_gap_max: float = Field(1e-6, gt=0)
    endpoint_gap_nu_factor: float = Field(1e-4, gt=0)
    far_gap: float = Field(1e-6, gt=0)
    fd_step: float = Field(1e-7, gt=0)
    residual_factor: float = Field(1e-6, gt=0)
    endpoint_defect_factor: float = Field(1e-2, gt=0)
    tolerance_factor: float = Field(1e-12, gt=0)

    # layers / sweeps
    layer_K_floor: float = Field(4.0, gt=0)
    slope_tolerance: float = Field(0.15, ge=0)
    window_eps: float = Field(0.1, gt=0, lt=1)
    nu_grid: str = "1e-1:3.1622776601683794e-4:8"
    threads: int = Field(1, ge=1)

    # fields / figures
    theta_min: float = Field(1e-3, gt=0)
    pressure_step: float = Field(1e-4, gt=0)
    raster: int = Field(400, ge=10)

    log_level: str = "INFO"

    @field_validator("method")
    @classmethod
    def _known_method(cls, value: str) -> str:
        if value not in ("DOP853", "RK45", "Radau", "LSODA"):
            raise ValueError(f"unsupported integrator {value!r}")
        return value

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        value = value.upper()
        if value not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level {value!r}")
        return value

    @field_validator("nu_grid")
    @classmethod
    def _parsable_grid(cls, value: str) -> str:
        parse_nu_grid(value)
        return value

    def nu_values(self) -> List[float]:
        return parse_nu_grid(self.nu_grid)

    def tolerance(self, scale: float) -> float:
        """Equality tolerance for quantities of size ``scale`` (typically |c|)"""
        return self.tolerance_factor * (1.0 + scale)

    def residual_threshold(self, scale: float) -> float:
        return self.residual_factor * (1.0 + scale)

    def endpoint_tolerance(self, scale: float) -> float:
        """Allowed gap between an integrated far endpoint and its tau value"""
        return 10.0 * (self.rtol * (1.0 + scale) + self.atol)

    def endpoint_hard_limit(self, scale: float) -> float:
        return self.endpoint_defect_factor * (1.0 + scale)


DEFAULT_SETTINGS = LabSettings()


def resolve(settings: Optional[LabSettings]) -> LabSettings:
    return DEFAULT_SETTINGS if settings is None else settings


def parse_nu_grid(text: str) -> List[float]:
    """
    Parse START:STOP:COUNT into COUNT log-spaced viscosities, both ends included.

    Args:
        text: grid description, e.g. "1e-1:3e-4:8"

    Returns:
        List of viscosities in the given order
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"nu grid must look like START:STOP:COUNT, got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"nu grid must look like START:STOP:COUNT, got {text!r}")
    if start <= 0 or stop <= 0 or count < 1:
        raise UsageError(f"nu grid needs positive ends and count, got {text!r}")
    return [float(v) for v in np.logspace(np.log10(start), np.log10(stop), count)]


def read_config_file(path: Path) -> Dict[str, str]:
    """
    Read a flat key=value file. Blank lines and lines starting with '#' are skipped;
    dashes in keys are folded to underscores so flag spellings work too.
    """
    values: Dict[str, str] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise UsageError(f"cannot read config file {path}: {e}")
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{number}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip().lstrip("-").replace("-", "_")
        values[key] = value.strip()
    logger.debug(f"Read {len(values)} entries from {path}")
    return values


def build_settings(
    file_values: Optional[Mapping[str, Any]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> LabSettings:
    """
    Merge config-file values, environment and flag overrides into LabSettings.

    Args:
        file_values: entries from read_config_file restricted to settings fields
        overrides: explicit flag values (None entries are ignored)
        environ: environment mapping, defaults to os.environ

    Returns:
        Validated settings
    """
    environ = os.environ if environ is None else environ
    merged: Dict[str, Any] = {}
    if file_values:
        merged.update(file_values)
    env_threads = environ.get(THREADS_ENV)
    if env_threads:
        merged["threads"] = env_threads
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        settings = LabSettings(**merged)
    except ValidationError as e:
        raise UsageError(f"invalid settings: {e.errors()[0]['loc']}: {e.errors()[0]['msg']}")
    if env_threads:
        # the environment caps parallelism even when a flag asks for more
        try:
            cap = max(1, int(env_threads))
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {env_threads!r}")
        if settings.threads > cap:
            settings = settings.model_copy(update={"threads": cap})
    return settings


def settings_fields() -> Iterable[str]:
    return LabSettings.model_fields.keys()


def configure_logging(level: str = "INFO") -> None:
    """Configure root logging once for command-line entry points"""
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT)
    logging.getLogger().setLevel(getattr(logging, level.upper(), logging.INFO))
    # matplotlib is chatty at DEBUG
    logging.getLogger("matplotlib").setLevel(logging.WARNING)

"""
Transition layers: the tanh core around a zero x_k, the three-piece matched profile,
window sizes and default width constant.
"""
import logging
import math
from typing import TYPE_CHECKING, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .errors import MismatchError, ParameterDomainError
from .polyparams import Coeffs, eval_poly, in_J
from .settings import LabSettings, resolve

if TYPE_CHECKING:
    from .riccati import SolutionProfile

logger = logging.getLogger("LayerProfile")


def log_nu(nu: float) -> float:
    """|ln nu| clamped to >= 1 so windows never collapse for nu near 1"""
    return max(1.0, abs(math.log(nu)))


def _window_min_P(c: Coeffs, x_k: float, half: float) -> float:
    a, b = max(-1.0, x_k - half), min(1.0, x_k + half)
    xs = np.linspace(a, b, 401)
    value = float(np.min(eval_poly(c, xs)))
    # the vertex of P_c may fall between samples
    if c.c3 < 0:
        x_crit = (c.c2 - c.c1) / (2.0 * c.c3)
        if a <= x_crit <= b:
            value = min(value, float(eval_poly(c, x_crit)))
    return value


def default_K(nu: float, c: Coeffs, x_k: float, settings: Optional[LabSettings] = None) -> float:
    """
    Smallest K >= layer_K_floor with K sqrt(2 min P_c) >= 2 over the window
    |x - x_k| <= K nu |ln nu| (1 - x_k^2). Falls back to the floor when P_c vanishes
    inside the window.
    """
    settings = resolve(settings)
    K = settings.layer_K_floor
    for _ in range(20):
        min_p = _window_min_P(c, x_k, K * nu * log_nu(nu) * (1.0 - x_k * x_k))
        if min_p <= 0:
            return settings.layer_K_floor
        needed = 2.0 / math.sqrt(2.0 * min_p)
        if needed <= K:
            return K
        K = needed
    return K


class LayerSpec(BaseModel):
    """Interior or boundary layer around the zero x_k"""
    model_config = ConfigDict(frozen=True)

    nu: float
    c: Coeffs
    x_k: float
    K: float
    window_halfwidth: float
    amplitude: float
    core_scale: float

    @model_validator(mode="after")
    def _positive(self) -> "LayerSpec":
        if self.amplitude <= 0:
            raise ValueError("layer amplitude needs P_c(x_k) > 0")
        if self.window_halfwidth <= 0 or self.K <= 0 or self.nu <= 0:
            raise ValueError("nu, K and the window must be positive")
        return self

    @property
    def window(self) -> Tuple[float, float]:
        return (self.x_k - self.window_halfwidth, self.x_k + self.window_halfwidth)


def layer_spec(nu: float, c: Coeffs, x_k: float, K: Optional[float] = None,
               settings: Optional[LabSettings] = None) -> LayerSpec:
    """
    Build the layer description for (nu, c, x_k).

    Args:
        nu: viscosity
        c: coefficients
        x_k: layer centre in (-1, 1)
        K: window constant, default from default_K

    Returns:
        LayerSpec with amplitude sqrt(2 P_c(x_k)) and core scale amplitude / (2 (1 - x_k^2) nu)
    """
    if not -1.0 < x_k < 1.0:
        raise ParameterDomainError(f"x_k must lie in (-1, 1), got {x_k}")
    if nu <= 0:
        raise ParameterDomainError(f"viscosity must be positive, got {nu}")
    p_k = float(eval_poly(c, x_k))
    if p_k <= 0:
        raise ParameterDomainError(f"P_c(x_k) = {p_k:.3g} must be positive for a layer")
    if K is None:
        K = default_K(nu, c, x_k, settings)
    amplitude = math.sqrt(2.0 * p_k)
    return LayerSpec(
        nu=nu, c=c, x_k=x_k, K=K,
        window_halfwidth=K * nu * log_nu(nu) * (1.0 - x_k * x_k),
        amplitude=amplitude,
        core_scale=amplitude / (2.0 * (1.0 - x_k * x_k) * nu),
    )


def tanh_core(spec: LayerSpec, x):
    """w(x) = A tanh(s (x - x_k)); solves nu (1 - x_k^2) w' + w^2 / 2 = P_c(x_k) exactly"""
    return spec.amplitude * np.tanh(spec.core_scale * (np.asarray(x, dtype=float) - spec.x_k))


def tanh_core_slope(spec: LayerSpec, x):
    t = np.tanh(spec.core_scale * (np.asarray(x, dtype=float) - spec.x_k))
    return spec.amplitude * spec.core_scale * (1.0 - t * t)


def core_identity_residual(spec: LayerSpec, x):
    """|nu (1 - x_k^2) w' + w^2 / 2 - P_c(x_k)|"""
    w = tanh_core(spec, x)
    lhs = spec.nu * (1.0 - spec.x_k ** 2) * tanh_core_slope(spec, x) + 0.5 * w * w
    return np.abs(lhs - 0.5 * spec.amplitude ** 2)


def matched_profile(spec: LayerSpec, x):
    """
    -sqrt(2 P_c) left of the window, the tanh core inside it, +sqrt(2 P_c) right of it.
    """
    if not in_J(0.0, spec.c):
        raise ParameterDomainError(f"P_c is negative somewhere on [-1, 1] for c = {spec.c.as_tuple()}")
    xs = np.asarray(x, dtype=float)
    outer = np.sqrt(2.0 * np.maximum(eval_poly(spec.c, xs), 0.0))
    lo, hi = spec.window
    out = np.where(xs < lo, -outer, np.where(xs > hi, outer, tanh_core(spec, xs)))
    return float(out) if out.ndim == 0 else out


def edge_jumps(spec: LayerSpec) -> Tuple[float, float]:
    """Mismatch of the matched profile across the two window edges (edges outside [-1,1] give 0)"""
    jumps = []
    for edge, sign in zip(spec.window, (-1.0, 1.0)):
        if not -1.0 <= edge <= 1.0:
            jumps.append(0.0)
            continue
        outer = sign * math.sqrt(2.0 * max(float(eval_poly(spec.c, edge)), 0.0))
        jumps.append(abs(outer - float(tanh_core(spec, edge))))
    return jumps[0], jumps[1]


def layer_error(p: "SolutionProfile", spec: LayerSpec) -> float:
    """
    sup over the profile grid of |U - matched_profile|.

    Args:
        p: interior-branch profile
        spec: layer description with the same (nu, c, x_k)

    Returns:
        Sup-norm distance to the matched profile
    """
    x_k = getattr(p.branch, "x_k", None)
    if x_k is None or x_k != spec.x_k:
        raise MismatchError(f"profile branch {p.branch.label()} does not match layer centre {spec.x_k}")
    if p.nu != spec.nu or p.c != spec.c:
        raise MismatchError(
            f"profile (nu={p.nu}, c={p.c.as_tuple()}) differs from layer (nu={spec.nu}, c={spec.c.as_tuple()})"
        )
    error = float(np.max(np.abs(p.values - matched_profile(spec, p.grid))))
    logger.debug(f"Layer error at nu={p.nu:.4g}, x_k={x_k}: {error:.4g}")
    return error

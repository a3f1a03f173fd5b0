"""
Inviscid limits: profiles V with V^2 / 2 = P_c, the glued discontinuous limits,
the smooth branches through a double root, and the Euler fields (v_r, v_theta, q).
"""
import logging
import math
from enum import Enum
from typing import Any, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .errors import ParameterDomainError, SingularityError
from .polyparams import Coeffs, RegimeKind, classify, eval_poly, in_J, poly_deriv, poly_second
from .riccati import chebyshev_grid
from .settings import LabSettings, resolve

logger = logging.getLogger("EulerLimit")


class SignKind(str, Enum):
    PLUS = "Plus"
    MINUS = "Minus"
    GLUED = "GluedAt"
    SMOOTH_PLUS = "SmoothPlus"
    SMOOTH_MINUS = "SmoothMinus"


class EulerSign(BaseModel):
    """Branch choice for V: +-sqrt(2P_c), glued at x0, or the smooth double-root lines"""
    model_config = ConfigDict(frozen=True)

    kind: SignKind
    x0: Optional[float] = None

    @model_validator(mode="after")
    def _x0_for_glued(self) -> "EulerSign":
        if (self.x0 is not None) != (self.kind == SignKind.GLUED):
            raise ValueError("x0 is set exactly for glued profiles")
        return self

    @classmethod
    def plus(cls) -> "EulerSign":
        return cls(kind=SignKind.PLUS)

    @classmethod
    def minus(cls) -> "EulerSign":
        return cls(kind=SignKind.MINUS)

    @classmethod
    def glued(cls, x0: float) -> "EulerSign":
        return cls(kind=SignKind.GLUED, x0=x0)

    def label(self) -> str:
        return f"GluedAt({self.x0!r})" if self.kind == SignKind.GLUED else self.kind.value

    @classmethod
    def from_label(cls, label: str) -> "EulerSign":
        if label.startswith("GluedAt(") and label.endswith(")"):
            return cls.glued(float(label[len("GluedAt("):-1]))
        return cls(kind=SignKind(label))

    @property
    def smooth(self) -> bool:
        return self.kind in (SignKind.SMOOTH_PLUS, SignKind.SMOOTH_MINUS)

    def signs(self, x) -> np.ndarray:
        """+-1 per point; glued profiles take the + branch at x0 itself"""
        xs = np.asarray(x, dtype=float)
        if self.kind in (SignKind.PLUS, SignKind.SMOOTH_PLUS):
            return np.ones_like(xs)
        if self.kind in (SignKind.MINUS, SignKind.SMOOTH_MINUS):
            return -np.ones_like(xs)
        return np.where(xs < self.x0, -1.0, 1.0)


def _double_root(c: Coeffs, settings: LabSettings) -> float:
    regime = classify(c, settings)
    if regime.kind != RegimeKind.DOUBLE_ROOT:
        raise ParameterDomainError(f"smooth branches need a double root of P_c, c = {c.as_tuple()} is {regime.kind.value}")
    return regime.xbar


def _require_J0(c: Coeffs) -> None:
    if c.is_zero():
        raise ParameterDomainError("c = 0 is excluded")
    if not in_J(0.0, c):
        raise ParameterDomainError(f"P_c is negative somewhere on [-1, 1] for c = {c.as_tuple()}")


def euler_values(c: Coeffs, sign: EulerSign, x, settings: Optional[LabSettings] = None):
    """V(x) for the chosen branch"""
    settings = resolve(settings)
    xs = np.asarray(x, dtype=float)
    if sign.smooth:
        xbar = _double_root(c, settings)
        return sign.signs(xs) * math.sqrt(2.0 * abs(c.c3)) * (xs - xbar)
    return sign.signs(xs) * np.sqrt(2.0 * np.maximum(eval_poly(c, xs), 0.0))


def euler_slopes(c: Coeffs, sign: EulerSign, x, settings: Optional[LabSettings] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    V'(x) with the flag mask of points where P_c vanishes.

    At a double root the slope is the one-sided limit +-sqrt(2|c3|) sign(x - xbar), taken
    from the right at xbar itself. At a simple root (only possible at x = +-1) the slope is
    unbounded; the nearest finite sample is reused there.
    """
    settings = resolve(settings)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if sign.smooth:
        _double_root(c, settings)
        slope = sign.signs(xs) * math.sqrt(2.0 * abs(c.c3))
        return slope, np.zeros(xs.shape, dtype=bool)
    p = eval_poly(c, xs)
    dp = poly_deriv(c, xs)
    tol = settings.tolerance(c.norm())
    flagged = p <= tol
    root = np.sqrt(2.0 * np.where(flagged, 1.0, p))
    slope = np.where(flagged, 0.0, dp / root)
    if np.any(flagged):
        double = flagged & (np.abs(dp) <= math.sqrt(tol))
        limit = math.sqrt(2.0 * abs(c.c3))
        slope = np.where(double, limit * np.where(xs < _vertex(c) - math.sqrt(tol), -1.0, 1.0), slope)
        simple = flagged & ~double
        if np.any(simple) and np.any(~flagged):
            finite = np.nonzero(~flagged)[0]
            for i in np.nonzero(simple)[0]:
                slope[i] = slope[finite[np.argmin(np.abs(finite - i))]]
    return sign.signs(xs) * slope, flagged


def _vertex(c: Coeffs) -> float:
    return (c.c2 - c.c1) / (2.0 * c.c3) if c.c3 != 0 else 0.0


class EulerProfile(BaseModel):
    """Samples of an Euler limit V on a grid"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    c: Coeffs
    sign: EulerSign
    grid: np.ndarray
    values: np.ndarray
    deriv: np.ndarray
    flagged: List[float] = []

    @field_validator("grid", "values", "deriv", mode="before")
    @classmethod
    def _as_array(cls, value: Any) -> np.ndarray:
        array = np.array(value, dtype=float)
        array.setflags(write=False)
        return array

    @property
    def nu(self) -> float:
        return 0.0

    def __call__(self, x):
        out = euler_values(self.c, self.sign, x)
        return float(out) if np.ndim(out) == 0 else out

    def slope(self, x):
        out, _ = euler_slopes(self.c, self.sign, x)
        return float(out[0]) if np.ndim(x) == 0 else out

    def jump(self) -> float:
        """Size of the discontinuity of a glued profile, 0 otherwise"""
        if self.sign.kind != SignKind.GLUED:
            return 0.0
        return 2.0 * math.sqrt(2.0 * max(float(eval_poly(self.c, self.sign.x0)), 0.0))


def euler_profile(c: Coeffs, sign: EulerSign, grid: Optional[np.ndarray] = None,
                  settings: Optional[LabSettings] = None) -> EulerProfile:
    """
    Sample V = +-sqrt(2 P_c) (or a glued / smooth variant) on a grid.

    Args:
        c: coefficients in J_0
        sign: branch choice
        grid: points in [-1, 1]; Chebyshev extrema by default (x0 is added for glued profiles)

    Returns:
        EulerProfile with values, slopes and the list of flagged roots of P_c
    """
    settings = resolve(settings)
    _require_J0(c)
    xs = chebyshev_grid(settings.cheb_points) if grid is None else np.asarray(grid, dtype=float)
    if np.any(xs < -1.0) or np.any(xs > 1.0):
        raise ParameterDomainError("grid points must lie in [-1, 1]")
    if sign.kind == SignKind.GLUED:
        if not -1.0 <= sign.x0 <= 1.0:
            raise ParameterDomainError(f"glue point must lie in [-1, 1], got {sign.x0}")
        xs = np.concatenate([xs, [sign.x0]])
    xs = np.unique(xs)
    values = euler_values(c, sign, xs, settings)
    deriv, flagged = euler_slopes(c, sign, xs, settings)
    if np.any(flagged):
        logger.debug(f"Euler profile {sign.label()}: P_c vanishes at {np.count_nonzero(flagged)} grid points")
    return EulerProfile(c=c, sign=sign, grid=xs, values=values, deriv=deriv,
                        flagged=[float(v) for v in xs[flagged]])


def _check_angle(theta: float, r: float) -> None:
    if not 0.0 < theta < math.pi:
        raise ParameterDomainError(f"theta must lie in (0, pi), got {theta}")
    if r <= 0:
        raise ParameterDomainError(f"r must be positive, got {r}")


def closed_form_pressure(c: Coeffs, theta: float, r: float = 1.0) -> float:
    """q_c = -(P_c'' + 2 P_c / sin^2 theta) / (2 r^2)"""
    _check_angle(theta, r)
    s = math.sin(theta)
    return -(poly_second(c) + 2.0 * float(eval_poly(c, math.cos(theta))) / (s * s)) / (2.0 * r * r)


def euler_field(c: Coeffs, sign: EulerSign, theta: float, r: float = 1.0,
                settings: Optional[LabSettings] = None) -> Tuple[float, float, float]:
    """
    Euler velocity and pressure at (r, theta).

    Returns:
        (v_r, v_theta, q) with v_theta = V(cos theta) / (r sin theta), v_r = V'(cos theta) / r
    """
    settings = resolve(settings)
    _check_angle(theta, r)
    _require_J0(c)
    x = math.cos(theta)
    V = float(euler_values(c, sign, x, settings))
    if not sign.smooth and float(eval_poly(c, x)) <= settings.tolerance(c.norm()):
        raise SingularityError(f"P_c(cos theta) = 0 at theta = {theta}; v_r divides by sqrt(2 P_c)")
    slope, _ = euler_slopes(c, sign, x, settings)
    v_theta = V / (r * math.sin(theta))
    v_r = float(slope[0]) / r
    return v_r, v_theta, closed_form_pressure(c, theta, r)


def euler_pressure_ode(c: Coeffs, sign: EulerSign, thetas, r: float = 1.0,
                       settings: Optional[LabSettings] = None) -> np.ndarray:
    """
    q from 2q = v_theta dv_r/dtheta - v_r^2 - v_theta^2, with dv_r/dtheta by centred
    differences of step pressure_step.
    """
    settings = resolve(settings)
    h = settings.pressure_step
    out = []
    for theta in np.atleast_1d(np.asarray(thetas, dtype=float)):
        v_r, v_theta, _ = euler_field(c, sign, theta, 1.0, settings)
        ahead, _, _ = euler_field(c, sign, theta + h, 1.0, settings)
        behind, _, _ = euler_field(c, sign, theta - h, 1.0, settings)
        dv_r = (ahead - behind) / (2.0 * h)
        out.append(0.5 * (v_theta * dv_r - v_r * v_r - v_theta * v_theta) / (r * r))
    return np.array(out)

#!/usr/bin/env python3
"""
Solutions of the viscous reduced equation

    nu (1 - x^2) U' + 2 nu x U + U^2 / 2 = P_c(x),   -1 < x < 1

with singular endpoints: the extremal solutions U+ / U-, interior solutions with a
prescribed zero, solutions anchored at an arbitrary point, and the affine solution U*
of the degenerate case c3 = c3_bar(c1, c2; nu).

Perturbations obey d' = -(2 nu x + U) d / (nu (1 - x^2)), so every piece is integrated
in the direction where that factor damps errors: increasing x where U + 2 nu x > 0,
decreasing x where it is negative.
"""
import logging
import math
from enum import Enum
from functools import cached_property
from typing import Any, List, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import (
    BracketError,
    DegenerateEndpointError,
    NonconvergenceError,
    ParameterDomainError,
    RegionError,
    SignViolationError,
)
from .layers import default_K, log_nu
from .polyparams import Coeffs, c3_bar, eval_poly, in_J, poly_deriv, tau
from .settings import LabSettings, resolve

logger = logging.getLogger("RiccatiSolver")

IMPLICIT_METHODS = ("Radau", "BDF", "LSODA")


class Side(str, Enum):
    LEFT = "Left"
    RIGHT = "Right"


class BranchKind(str, Enum):
    UPPER = "Upper"
    LOWER = "Lower"
    INTERIOR = "Interior"
    ANCHORED = "Anchored"
    STAR = "ClosedFormStar"


class Branch(BaseModel):
    """Which member of the solution family a profile represents"""
    model_config = ConfigDict(frozen=True)

    kind: BranchKind
    x_k: Optional[float] = None
    x_a: Optional[float] = None
    U_a: Optional[float] = None

    @model_validator(mode="after")
    def _fields_match_kind(self) -> "Branch":
        if (self.x_k is not None) != (self.kind == BranchKind.INTERIOR):
            raise ValueError("x_k is set exactly for interior branches")
        if ((self.x_a is not None and self.U_a is not None) != (self.kind == BranchKind.ANCHORED)):
            raise ValueError("x_a and U_a are set exactly for anchored branches")
        return self

    @classmethod
    def upper(cls) -> "Branch":
        return cls(kind=BranchKind.UPPER)

    @classmethod
    def lower(cls) -> "Branch":
        return cls(kind=BranchKind.LOWER)

    @classmethod
    def star(cls) -> "Branch":
        return cls(kind=BranchKind.STAR)

    @classmethod
    def interior(cls, x_k: float) -> "Branch":
        return cls(kind=BranchKind.INTERIOR, x_k=x_k)

    @classmethod
    def anchored(cls, x_a: float, U_a: float) -> "Branch":
        return cls(kind=BranchKind.ANCHORED, x_a=x_a, U_a=U_a)

    def label(self) -> str:
        if self.kind == BranchKind.INTERIOR:
            return f"Interior({self.x_k!r})"
        if self.kind == BranchKind.ANCHORED:
            return f"Anchored({self.x_a!r},{self.U_a!r})"
        return self.kind.value

    @classmethod
    def from_label(cls, label: str) -> "Branch":
        if "(" not in label:
            return cls(kind=BranchKind(label))
        name, args = label.rstrip(")").split("(", 1)
        values = [float(v) for v in args.split(",")]
        if name == BranchKind.INTERIOR.value and len(values) == 1:
            return cls.interior(values[0])
        if name == BranchKind.ANCHORED.value and len(values) == 2:
            return cls.anchored(values[0], values[1])
        raise ValueError(f"unrecognised branch label {label!r}")


class SolutionProfile(BaseModel):
    """A sampled solution U(x) with its derivative and residual diagnostics"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    nu: float
    c: Coeffs
    branch: Branch
    grid: np.ndarray
    values: np.ndarray
    deriv: np.ndarray
    residual_sup: float
    endpoint_defect: float = 0.0

    @field_validator("grid", "values", "deriv", mode="before")
    @classmethod
    def _as_array(cls, value: Any) -> np.ndarray:
        array = np.array(value, dtype=float)
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def _shapes(self) -> "SolutionProfile":
        n = self.grid.shape
        if len(n) != 1 or self.values.shape != n or self.deriv.shape != n:
            raise ValueError("grid, values and deriv must be 1-D arrays of equal length")
        if n[0] < 2 or np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if self.nu <= 0:
            raise ValueError("viscosity must be positive")
        return self

    @cached_property
    def _spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.grid, self.values, self.deriv)

    def __call__(self, x):
        """Evaluate U by Hermite interpolation of the stored samples"""
        result = self._spline(x)
        return float(result) if np.ndim(result) == 0 else result

    def slope(self, x):
        result = self._spline(x, 1)
        return float(result) if np.ndim(result) == 0 else result

    def interior_mask(self) -> np.ndarray:
        return (self.grid > -1.0) & (self.grid < 1.0)

    def sign_changes(self, zero_tol: float = 0.0) -> int:
        """Number of sign changes over the open interval, samples with |U| <= zero_tol skipped"""
        v = self.values[self.interior_mask()]
        signs = np.sign(v[np.abs(v) > zero_tol])
        return int(np.count_nonzero(signs[1:] != signs[:-1]))

    def zeros(self, lo: float = -1.0, hi: float = 1.0) -> List[float]:
        """Zeros of the interpolant on [lo, hi], one per sign change of the samples"""
        # one sample beyond each end, so crossings between lo (or hi) and the nearest sample count
        first = max(int(np.searchsorted(self.grid, lo, side="left")) - 1, 0)
        last = min(int(np.searchsorted(self.grid, hi, side="right")) + 1, len(self.grid))
        xs, vs = self.grid[first:last], self.values[first:last]
        found = []
        for i in np.nonzero(np.sign(vs[1:]) * np.sign(vs[:-1]) < 0)[0]:
            found.append(float(brentq(self._spline, xs[i], xs[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)))
        found.extend(float(x) for x, v in zip(xs, vs) if v == 0.0)
        return sorted(x for x in found if lo <= x <= hi)

    def endpoint_values(self) -> Tuple[float, float]:
        return float(self.values[0]), float(self.values[-1])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


class _Piece(NamedTuple):
    lo: float
    hi: float
    sol: Any  # scipy OdeSolution on [lo, hi]
    origin: Optional[Side]  # endpoint the integration started from, None for an interior start


class _BlowUp(Exception):
    def __init__(self, x: float, value: float):
        super().__init__(f"|U| left the a-priori envelope near x = {x:.6g} (U = {value:.3g})")
        self.x = x
        self.value = value


def chebyshev_grid(n: int) -> np.ndarray:
    """Chebyshev extrema on [-1, 1] in increasing order, endpoints exact"""
    j = np.arange(n)
    grid = -np.cos(np.pi * j / (n - 1))
    grid[0], grid[-1] = -1.0, 1.0
    if n % 2 == 1:
        grid[n // 2] = 0.0
    return grid


def apriori_bound(c: Coeffs) -> float:
    """|U| <= 5 sqrt(1 + |c|) for every solution when nu <= 1"""
    return 5.0 * math.sqrt(1.0 + c.norm())


def start_gap(nu: float, settings: Optional[LabSettings] = None) -> float:
    settings = resolve(settings)
    return min(settings.endpoint_gap_max,
               max(settings.endpoint_gap_min, settings.endpoint_gap_nu_factor * nu * nu))


def endpoint_derivative(nu: float, c: Coeffs, side: Side, U_end: float) -> float:
    """
    One-sided derivative at a singular endpoint, from differentiating the equation once:
    U'(end) = (P_c'(end) - 2 nu U_end) / U_end.

    Args:
        nu: viscosity
        c: coefficients
        side: Left (x = -1) or Right (x = 1)
        U_end: endpoint value, |U_end| >= 2 nu

    Returns:
        U'(-1) or U'(1)
    """
    if abs(U_end) < 2.0 * nu * (1.0 - 1e-9):
        raise DegenerateEndpointError(
            f"|U_end| = {abs(U_end):.3g} is below 2 nu = {2 * nu:.3g}; the endpoint has no Taylor start"
        )
    x_end = -1.0 if Side(side) == Side.LEFT else 1.0
    return (float(poly_deriv(c, x_end)) - 2.0 * nu * U_end) / U_end


def _is_degenerate(nu: float, c: Coeffs, settings: LabSettings) -> bool:
    if c.c1 < -nu * nu or c.c2 < -nu * nu:
        return False
    return abs(c.c3 - c3_bar(c.c1, c.c2, nu)) <= settings.tolerance(c.norm())


def residual_values(nu: float, c: Coeffs, grid: np.ndarray, values: np.ndarray,
                    deriv: np.ndarray) -> np.ndarray:
    return np.abs(nu * (1.0 - grid * grid) * deriv + 2.0 * nu * grid * values
                  + 0.5 * values * values - eval_poly(c, grid))


class _Integrator:
    """Stability-directed integration of one (nu, c) equation"""

    def __init__(self, nu: float, c: Coeffs, settings: LabSettings, x_layer: Optional[float] = None):
        self.nu = nu
        self.c = c
        self.settings = settings
        self.guard = 10.0 * apriori_bound(c) + 10.0 * nu
        self.eps0 = start_gap(nu, settings)
        self.far = settings.far_gap
        self.window = None
        if x_layer is not None:
            K = default_K(nu, c, x_layer, settings)
            half = 2.0 * K * nu * log_nu(nu) * (1.0 - x_layer * x_layer)
            self.window = (x_layer - half, x_layer + half)
        self.steps: List[np.ndarray] = []
        self.nfev = 0

    def rhs(self, x, y):
        c, nu = self.c, self.nu
        U = y[0]
        P = c.c1 * (1.0 - x) + c.c2 * (1.0 + x) + c.c3 * (1.0 - x * x)
        return [(P - 2.0 * nu * x * U - 0.5 * U * U) / (nu * (1.0 - x * x))]

    def jac(self, x, y):
        return [[-(2.0 * self.nu * x + y[0]) / (self.nu * (1.0 - x * x))]]

    def _breakpoints(self, x0: float, x1: float) -> List[float]:
        lo, hi = min(x0, x1), max(x0, x1)
        points = {lo, hi}
        d = 0.5
        while d > min(self.eps0, self.far) / 2.0:
            for p in (-1.0 + d, 1.0 - d):
                if lo < p < hi:
                    points.add(p)
            d /= 2.0
        if self.window is not None:
            for p in self.window:
                if lo < p < hi:
                    points.add(p)
        ordered = sorted(points)
        return ordered if x1 > x0 else ordered[::-1]

    def _max_step(self, s: float, t: float) -> float:
        cap = np.inf
        dist = 1.0 - max(abs(s), abs(t))
        if dist <= 0.5:
            cap = dist / 8.0
        if self.window is not None:
            a, b = self.window
            if min(s, t) < b and max(s, t) > a:
                cap = min(cap, self.nu / 4.0)
        return cap

    def span(self, x0: float, U0: float, x1: float, origin: Optional[Side] = None) -> Tuple[List[_Piece], float]:
        """Integrate from (x0, U0) to x1 in dyadic segments; returns the pieces and U(x1)"""
        def escaped(x, y):
            return self.guard - abs(y[0])
        escaped.terminal = True

        kwargs = {}
        if self.settings.method in IMPLICIT_METHODS:
            kwargs["jac"] = self.jac
        points = self._breakpoints(x0, x1)
        pieces: List[_Piece] = []
        U = U0
        for s, t in zip(points[:-1], points[1:]):
            sol = solve_ivp(
                self.rhs, (s, t), [U],
                method=self.settings.method,
                rtol=self.settings.rtol,
                atol=self.settings.atol,
                max_step=self._max_step(s, t),
                dense_output=True,
                events=escaped,
                **kwargs,
            )
            self.nfev += sol.nfev
            if sol.status == 1:
                raise _BlowUp(float(sol.t[-1]), float(sol.y[0, -1]))
            if sol.status != 0:
                raise NonconvergenceError(f"integrator failed on [{s:.6g}, {t:.6g}]: {sol.message}")
            self.steps.append(sol.t)
            pieces.append(_Piece(min(s, t), max(s, t), sol.sol, origin))
            U = float(sol.y[0, -1])
        logger.debug(f"Integrated {x0:.6g} -> {x1:.6g} in {len(pieces)} segments (nfev so far {self.nfev})")
        return pieces, U

    def from_left_end(self, x_stop: float) -> List[_Piece]:
        """Upper solution from x = -1 (value tau2) forward to x_stop"""
        _, tau2, _, _ = tau(self.nu, self.c)
        slope = endpoint_derivative(self.nu, self.c, Side.LEFT, tau2)
        x0 = -1.0 + self.eps0
        pieces, _ = self.span(x0, tau2 + slope * self.eps0, x_stop, origin=Side.LEFT)
        return pieces

    def from_right_end(self, x_stop: float) -> List[_Piece]:
        """Lower solution from x = 1 (value tau1') backward to x_stop"""
        _, _, tau1p, _ = tau(self.nu, self.c)
        slope = endpoint_derivative(self.nu, self.c, Side.RIGHT, tau1p)
        x0 = 1.0 - self.eps0
        pieces, _ = self.span(x0, tau1p - slope * self.eps0, x_stop, origin=Side.RIGHT)
        return pieces

    def degenerate_pieces(self) -> List[_Piece]:
        """U* assembled from a forward piece on [-1, x*] and a backward piece on [x*, 1]"""
        a = math.sqrt(self.nu ** 2 + self.c.c1)
        b = math.sqrt(self.nu ** 2 + self.c.c2)
        x_star = 0.0 if a + b == 0 else (a - b) / (a + b)
        x_star = min(max(x_star, -1.0 + 2 * self.eps0), 1.0 - 2 * self.eps0)
        logger.debug(f"Degenerate c3 = c3_bar: joining branches at x* = {x_star:.6g}")
        return self.from_left_end(x_star) + self.from_right_end(x_star)


def _evaluate(pieces: List[_Piece], xs: np.ndarray) -> np.ndarray:
    los = np.array([p.lo for p in pieces])
    index = np.clip(np.searchsorted(los, xs, side="right") - 1, 0, len(pieces) - 1)
    out = np.empty_like(xs)
    for i, piece in enumerate(pieces):
        mask = index == i
        if np.any(mask):
            out[mask] = piece.sol(xs[mask])[0]
    return out


def _differentiate(pieces: List[_Piece], xs: np.ndarray, h: float) -> np.ndarray:
    """Finite-difference slopes of the dense output, one-sided near segment ends"""
    los = np.array([p.lo for p in pieces])
    index = np.clip(np.searchsorted(los, xs, side="right") - 1, 0, len(pieces) - 1)
    out = np.empty_like(xs)
    for i, piece in enumerate(pieces):
        mask = index == i
        if not np.any(mask):
            continue
        x = xs[mask]
        step = min(h, (piece.hi - piece.lo) / 4.0)
        f = lambda z: piece.sol(z)[0]
        d = np.empty_like(x)
        central = (x - step >= piece.lo) & (x + step <= piece.hi)
        forward = ~central & (x + 2 * step <= piece.hi)
        backward = ~central & ~forward
        if np.any(central):
            z = x[central]
            d[central] = (f(z + step) - f(z - step)) / (2 * step)
        if np.any(forward):
            z = x[forward]
            d[forward] = (-3 * f(z) + 4 * f(z + step) - f(z + 2 * step)) / (2 * step)
        if np.any(backward):
            z = x[backward]
            d[backward] = (3 * f(z) - 4 * f(z - step) + f(z - 2 * step)) / (2 * step)
        out[mask] = d
    return out


def _base_grid(grid: Optional[np.ndarray], settings: LabSettings) -> np.ndarray:
    if grid is None:
        return chebyshev_grid(settings.cheb_points)
    base = np.asarray(grid, dtype=float)
    if np.any(base < -1.0) or np.any(base > 1.0):
        raise ParameterDomainError("grid points must lie in [-1, 1]")
    return base


def _assemble(
    nu: float,
    c: Coeffs,
    branch: Branch,
    pieces: List[_Piece],
    integrator: _Integrator,
    grid: Optional[np.ndarray],
    settings: LabSettings,
    extra_points: Tuple[float, ...] = (),
) -> SolutionProfile:
    pieces = sorted(pieces, key=lambda p: p.lo)
    cover_lo, cover_hi = pieces[0].lo, pieces[-1].hi
    base = _base_grid(grid, settings)
    inner = [base[(base >= cover_lo) & (base <= cover_hi)], [cover_lo, cover_hi]]
    inner.extend(steps[(steps >= cover_lo) & (steps <= cover_hi)] for steps in integrator.steps)
    inner.append([p for p in extra_points if cover_lo <= p <= cover_hi])
    xs = np.unique(np.concatenate([np.asarray(a, dtype=float) for a in inner]))
    xs = xs[np.concatenate([[True], np.diff(xs) > 1e-13])]

    values = _evaluate(pieces, xs)
    deriv = _differentiate(pieces, xs, settings.fd_step)

    tau1, tau2, tau1p, tau2p = tau(nu, c)
    left_value = tau2 if pieces[0].origin == Side.LEFT else tau1
    right_value = tau1p if pieces[-1].origin == Side.RIGHT else tau2p
    defect = 0.0
    ends = []
    for side, x_end, x_cov, value, k in (
        (Side.LEFT, -1.0, cover_lo, left_value, 0),
        (Side.RIGHT, 1.0, cover_hi, right_value, -1),
    ):
        gap = x_end - x_cov
        try:
            slope = endpoint_derivative(nu, c, side, value)
        except DegenerateEndpointError:
            slope = float(deriv[k])
        if (pieces[0] if k == 0 else pieces[-1]).origin != side:
            # Taylor line through tau, compared with the integrated value at the last covered point
            defect = max(defect, abs(values[k] - (value - slope * gap)))
        ends.append((x_end, value, slope))

    grid_out = np.concatenate([[ends[0][0]], xs, [ends[1][0]]])
    values_out = np.concatenate([[ends[0][1]], values, [ends[1][1]]])
    deriv_out = np.concatenate([[ends[0][2]], deriv, [ends[1][2]]])
    residual_sup = float(np.max(residual_values(nu, c, grid_out, values_out, deriv_out)))

    threshold = settings.residual_threshold(c.norm())
    if not np.isfinite(defect) or defect > settings.endpoint_hard_limit(c.norm()):
        raise NonconvergenceError(
            f"{branch.label()} at nu={nu:.4g}, c={c.as_tuple()}: far endpoint misses tau by {defect:.3g}"
        )
    if defect > settings.endpoint_tolerance(c.norm()):
        logger.warning(f"{branch.label()} at nu={nu:.4g}: far endpoint extrapolates {defect:.3g} away from tau")
    if not np.isfinite(residual_sup) or residual_sup > threshold:
        raise NonconvergenceError(
            f"{branch.label()} at nu={nu:.4g}, c={c.as_tuple()}: residual {residual_sup:.3g} above {threshold:.3g}"
        )
    if nu <= 1.0 and np.max(np.abs(values_out)) > apriori_bound(c):
        raise NonconvergenceError(
            f"{branch.label()} at nu={nu:.4g}: |U| exceeds the a-priori bound {apriori_bound(c):.4g}"
        )
    logger.debug(f"{branch.label()} at nu={nu:.4g}: {len(grid_out)} points, residual {residual_sup:.3g}")
    return SolutionProfile(
        nu=nu, c=c, branch=branch, grid=grid_out, values=values_out, deriv=deriv_out,
        residual_sup=residual_sup, endpoint_defect=float(defect),
    )


def _require_region(nu: float, c: Coeffs) -> None:
    if nu <= 0:
        raise ParameterDomainError(f"viscosity must be positive, got {nu}")
    if c.is_zero():
        raise ParameterDomainError("c = 0 is excluded")
    if not in_J(nu, c):
        raise RegionError(f"c = {c.as_tuple()} is not in J_nu for nu = {nu}")


def _check_sign(p: SolutionProfile, sign: float, settings: LabSettings) -> None:
    if not in_J(0.0, p.c):
        return
    v = sign * p.values[p.interior_mask()]
    if np.min(v) < -settings.residual_threshold(p.c.norm()):
        raise NonconvergenceError(
            f"{p.branch.label()} at nu={p.nu:.4g}: sign law violated (min {sign * np.min(v):.3g})"
        )


def closed_form_star(nu: float, c1: float, c2: float, grid: Optional[np.ndarray] = None,
                     settings: Optional[LabSettings] = None) -> SolutionProfile:
    """
    The affine solution U*(x) = (nu + a)(1 - x) - (nu + b)(1 + x), a = sqrt(nu^2+c1),
    b = sqrt(nu^2+c2), which solves the equation with c3 = c3_bar(c1, c2; nu).
    """
    settings = resolve(settings)
    if nu <= 0:
        raise ParameterDomainError(f"viscosity must be positive, got {nu}")
    if nu * nu + c1 < 0 or nu * nu + c2 < 0:
        raise ParameterDomainError(f"c1, c2 must be >= -nu^2 (c1={c1}, c2={c2}, nu={nu})")
    a = math.sqrt(nu * nu + c1)
    b = math.sqrt(nu * nu + c2)
    c = Coeffs(c1=c1, c2=c2, c3=c3_bar(c1, c2, nu))
    xs = np.unique(np.concatenate([_base_grid(grid, settings), [-1.0, 1.0]]))
    values = (nu + a) * (1.0 - xs) - (nu + b) * (1.0 + xs)
    deriv = np.full_like(xs, -(2.0 * nu + a + b))
    residual_sup = float(np.max(residual_values(nu, c, xs, values, deriv)))
    return SolutionProfile(nu=nu, c=c, branch=Branch.star(), grid=xs, values=values,
                           deriv=deriv, residual_sup=residual_sup)


def _upper_pieces(nu: float, c: Coeffs, integrator: _Integrator, settings: LabSettings) -> List[_Piece]:
    if _is_degenerate(nu, c, settings):
        return integrator.degenerate_pieces()
    return integrator.from_left_end(1.0 - integrator.far)


def _lower_pieces(nu: float, c: Coeffs, integrator: _Integrator, settings: LabSettings) -> List[_Piece]:
    if _is_degenerate(nu, c, settings):
        return integrator.degenerate_pieces()
    return integrator.from_right_end(-1.0 + integrator.far)


def _run(kind: str, nu: float, c: Coeffs, build) -> Any:
    try:
        return build()
    except _BlowUp as e:
        raise NonconvergenceError(f"{kind} at nu={nu:.4g}, c={c.as_tuple()}: {e}")


def solve_upper(nu: float, c: Coeffs, grid: Optional[np.ndarray] = None,
                settings: Optional[LabSettings] = None) -> SolutionProfile:
    """
    Upper solution U+: value tau2 at x = -1, integrated forward.

    Args:
        nu: viscosity
        c: coefficients in J_nu
        grid: sample points merged with the accepted steps (Chebyshev by default)
        settings: solver settings

    Returns:
        SolutionProfile with branch Upper
    """
    settings = resolve(settings)
    _require_region(nu, c)
    integrator = _Integrator(nu, c, settings)

    def build():
        pieces = _upper_pieces(nu, c, integrator, settings)
        return _assemble(nu, c, Branch.upper(), pieces, integrator, grid, settings)

    profile = _run("Upper", nu, c, build)
    _check_sign(profile, 1.0, settings)
    return profile


def solve_lower(nu: float, c: Coeffs, grid: Optional[np.ndarray] = None,
                settings: Optional[LabSettings] = None) -> SolutionProfile:
    """Lower solution U-: value tau1' at x = 1, integrated backward"""
    settings = resolve(settings)
    _require_region(nu, c)
    integrator = _Integrator(nu, c, settings)

    def build():
        pieces = _lower_pieces(nu, c, integrator, settings)
        return _assemble(nu, c, Branch.lower(), pieces, integrator, grid, settings)

    profile = _run("Lower", nu, c, build)
    _check_sign(profile, -1.0, settings)
    return profile


def solve_interior(nu: float, c: Coeffs, x_k: float, grid: Optional[np.ndarray] = None,
                   settings: Optional[LabSettings] = None) -> SolutionProfile:
    """
    Solution vanishing at x_k, integrated outward in both directions.

    Args:
        nu: viscosity
        c: coefficients in J_nu
        x_k: prescribed zero in (-1, 1)
        grid: sample points merged with the accepted steps
        settings: solver settings

    Returns:
        SolutionProfile with branch Interior(x_k)
    """
    settings = resolve(settings)
    _require_region(nu, c)
    if not -1.0 < x_k < 1.0:
        raise ParameterDomainError(f"x_k must lie in (-1, 1), got {x_k}")
    integrator = _Integrator(nu, c, settings, x_layer=x_k)
    try:
        right, _ = integrator.span(x_k, 0.0, 1.0 - integrator.far)
        left, _ = integrator.span(x_k, 0.0, -1.0 + integrator.far)
    except _BlowUp as e:
        raise BracketError(f"no solution with a zero at x_k = {x_k} for nu = {nu:.4g}: {e}")
    profile = _assemble(nu, c, Branch.interior(x_k), left + right, integrator, grid, settings,
                        extra_points=(x_k,))
    zero_tol = settings.tolerance(c.norm())
    if profile.sign_changes(zero_tol) > 1:
        raise SignViolationError(f"interior solution at nu={nu:.4g}, x_k={x_k} changes sign more than once")
    if in_J(0.0, c):
        inside = profile.interior_mask()
        left_bad = np.any(profile.values[inside & (profile.grid < x_k)] > zero_tol)
        right_bad = np.any(profile.values[inside & (profile.grid > x_k)] < -zero_tol)
        if left_bad or right_bad:
            raise SignViolationError(f"interior solution at nu={nu:.4g}, x_k={x_k} has the wrong sign pattern")
    return profile


def solve_anchored(nu: float, c: Coeffs, x_a: float, U_a: float, grid: Optional[np.ndarray] = None,
                   settings: Optional[LabSettings] = None) -> SolutionProfile:
    """
    Solution through (x_a, U_a), which must lie in the envelope [U-(x_a), U+(x_a)].
    On the envelope the unstable direction is taken from the extremal solution itself.
    """
    settings = resolve(settings)
    _require_region(nu, c)
    if not -1.0 < x_a < 1.0:
        raise ParameterDomainError(f"x_a must lie in (-1, 1), got {x_a}")
    upper = solve_upper(nu, c, settings=settings)
    lower = solve_lower(nu, c, settings=settings)
    hi, lo = upper(x_a), lower(x_a)
    slack = 1e-8 * (1.0 + abs(U_a))
    if U_a > hi + slack or U_a < lo - slack:
        raise BracketError(f"U_a = {U_a:.6g} outside the envelope [{lo:.6g}, {hi:.6g}] at x_a = {x_a}")

    integrator = _Integrator(nu, c, settings)
    try:
        if U_a >= hi - slack:
            left = [p for p in sorted(_upper_pieces(nu, c, integrator, settings), key=lambda p: p.lo) if p.lo < x_a]
            left[-1] = left[-1]._replace(hi=min(left[-1].hi, x_a))
        else:
            left, _ = integrator.span(x_a, U_a, -1.0 + integrator.far)
        if U_a <= lo + slack:
            right = [p for p in sorted(_lower_pieces(nu, c, integrator, settings), key=lambda p: p.lo) if p.hi > x_a]
            right[0] = right[0]._replace(lo=max(right[0].lo, x_a))
        else:
            right, _ = integrator.span(x_a, U_a, 1.0 - integrator.far)
    except _BlowUp as e:
        raise BracketError(f"anchored solution through ({x_a}, {U_a}) leaves the envelope: {e}")
    return _assemble(nu, c, Branch.anchored(x_a, U_a), left + right, integrator, grid, settings,
                     extra_points=(x_a,))


def residual(p: SolutionProfile) -> float:
    """sup over the grid of |nu (1 - x^2) U' + 2 nu x U + U^2 / 2 - P_c(x)|"""
    return float(np.max(residual_values(p.nu, p.c, p.grid, p.values, p.deriv)))


def _rescaled_branch(branch: Branch, value_scale: float) -> Branch:
    if branch.kind == BranchKind.ANCHORED:
        return Branch.anchored(branch.x_a, branch.U_a * value_scale)
    return branch


def rescale_by_norm(p: SolutionProfile, lam: float) -> SolutionProfile:
    """
    U -> U / sqrt(lam) solves the equation with nu / sqrt(lam) and c / lam.
    """
    if lam <= 0:
        raise ParameterDomainError(f"scale must be positive, got {lam}")
    s = 1.0 / math.sqrt(lam)
    nu = p.nu * s
    c = p.c.scaled(1.0 / lam)
    values, deriv = p.values * s, p.deriv * s
    return SolutionProfile(
        nu=nu, c=c, branch=_rescaled_branch(p.branch, s), grid=p.grid, values=values, deriv=deriv,
        residual_sup=float(np.max(residual_values(nu, c, p.grid, values, deriv))),
        endpoint_defect=p.endpoint_defect * s,
    )


def rescale_by_nu(p: SolutionProfile) -> SolutionProfile:
    """
    U / nu solves (1 - x^2) U' + 2 x U + U^2 / 2 = P_{c / nu^2}, the unit-viscosity form.
    """
    s = 1.0 / p.nu
    c = p.c.scaled(s * s)
    values, deriv = p.values * s, p.deriv * s
    return SolutionProfile(
        nu=1.0, c=c, branch=_rescaled_branch(p.branch, s), grid=p.grid, values=values, deriv=deriv,
        residual_sup=float(np.max(residual_values(1.0, c, p.grid, values, deriv))),
        endpoint_defect=p.endpoint_defect * s,
    )


def solve(nu: float, c: Coeffs, branch: Branch, grid: Optional[np.ndarray] = None,
          settings: Optional[LabSettings] = None) -> SolutionProfile:
    """Dispatch on the branch description"""
    if branch.kind == BranchKind.UPPER:
        return solve_upper(nu, c, grid, settings)
    if branch.kind == BranchKind.LOWER:
        return solve_lower(nu, c, grid, settings)
    if branch.kind == BranchKind.INTERIOR:
        return solve_interior(nu, c, branch.x_k, grid, settings)
    if branch.kind == BranchKind.ANCHORED:
        return solve_anchored(nu, c, branch.x_a, branch.U_a, grid, settings)
    return closed_form_star(nu, c.c1, c.c2, grid, settings)

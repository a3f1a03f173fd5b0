#!/usr/bin/env python3
"""
The quadratic family P_c(x) = c1(1-x) + c2(1+x) + c3(1-x^2) on [-1,1],
the admissible parameter regions J_nu, J_0 and the boundary piece d'J_0,
and the regime classification that fixes the predicted convergence exponents.
"""
import logging
import math
from enum import Enum
from fractions import Fraction
from typing import Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .errors import ParameterDomainError, RegionError, UsageError
from .settings import LabSettings, resolve

logger = logging.getLogger("PolyParams")

ArrayLike = Union[float, np.ndarray]


class Coeffs(BaseModel):
    """The parameter triple c = (c1, c2, c3)"""
    model_config = ConfigDict(frozen=True)

    c1: float
    c2: float
    c3: float

    @field_validator("c1", "c2", "c3")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("coefficients must be finite")
        return float(value)

    def norm(self) -> float:
        return math.sqrt(self.c1 ** 2 + self.c2 ** 2 + self.c3 ** 2)

    def is_zero(self) -> bool:
        return self.c1 == 0.0 and self.c2 == 0.0 and self.c3 == 0.0

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.c1, self.c2, self.c3)

    def scaled(self, factor: float) -> "Coeffs":
        return Coeffs(c1=self.c1 * factor, c2=self.c2 * factor, c3=self.c3 * factor)

    def swapped(self) -> "Coeffs":
        """Coefficients of P_c(-x)"""
        return Coeffs(c1=self.c2, c2=self.c1, c3=self.c3)

    def with_c3(self, c3: float) -> "Coeffs":
        return Coeffs(c1=self.c1, c2=self.c2, c3=c3)

    def to_cli(self) -> str:
        return f"{self.c1!r},{self.c2!r},{self.c3!r}"

    @classmethod
    def from_cli(cls, text: str) -> "Coeffs":
        """Parse "c1,c2,c3" (decimals only, no spaces, no fractions)"""
        parts = text.split(",")
        if len(parts) != 3 or any(not p or " " in p or "/" in p for p in parts):
            raise UsageError(f"--c expects three comma-separated decimals, got {text!r}")
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise UsageError(f"--c expects three comma-separated decimals, got {text!r}")
        if not all(math.isfinite(v) for v in values):
            raise UsageError(f"--c values must be finite, got {text!r}")
        return cls(c1=values[0], c2=values[1], c3=values[2])


class RegimeKind(str, Enum):
    INTERIOR_J0 = "InteriorJ0"
    DOUBLE_ROOT = "DoubleRoot"
    EDGE_C1_ZERO = "EdgeC1Zero"
    EDGE_C2_ZERO = "EdgeC2Zero"
    EDGE_BOTH_ZERO = "EdgeBothZero"
    OUTSIDE_J0 = "OutsideJ0"


class Regime(BaseModel):
    """Classification of c with the exponents alpha(c), kappa(c) and the double root"""
    model_config = ConfigDict(frozen=True)

    kind: RegimeKind
    alpha: Optional[float] = None
    kappa: Optional[int] = None
    xbar: Optional[float] = None

    @model_validator(mode="after")
    def _consistent(self) -> "Regime":
        if (self.alpha is None) != (self.kind == RegimeKind.OUTSIDE_J0):
            raise ValueError("alpha is present exactly when c lies in J_0")
        if self.alpha is not None and (self.alpha == 1.0) != (self.kappa == 1):
            raise ValueError("alpha = 1 exactly when kappa = 1")
        if (self.xbar is not None) != (self.kind == RegimeKind.DOUBLE_ROOT):
            raise ValueError("xbar is present exactly for the double-root regime")
        return self

    def alpha_fraction(self) -> Optional[Fraction]:
        if self.alpha is None:
            return None
        return Fraction(self.alpha).limit_denominator(6)


def _check_x(x: ArrayLike) -> None:
    xs = np.asarray(x, dtype=float)
    if np.any(xs < -1.0) or np.any(xs > 1.0) or np.any(np.isnan(xs)):
        raise ParameterDomainError("x must lie in [-1, 1]")


def eval_poly(c: Coeffs, x: ArrayLike) -> ArrayLike:
    """
    Evaluate P_c(x). Exact at the endpoints: P_c(-1) = 2c1, P_c(1) = 2c2.

    Args:
        c: coefficients
        x: point or array of points in [-1, 1]

    Returns:
        P_c(x) with the shape of x
    """
    _check_x(x)
    return c.c1 * (1 - x) + c.c2 * (1 + x) + c.c3 * (1 - x * x)


def poly_deriv(c: Coeffs, x: ArrayLike) -> ArrayLike:
    """P_c'(x) = c2 - c1 - 2c3 x"""
    _check_x(x)
    return (c.c2 - c.c1) - 2.0 * c.c3 * x


def poly_second(c: Coeffs) -> float:
    """P_c'' = -2c3"""
    return -2.0 * c.c3


def from_monomial(a0: float, a1: float, a2: float) -> Coeffs:
    """Coefficients of P_c equal to a0 + a1 x + a2 x^2"""
    c3 = -a2
    # c1 + c2 = a0 - c3, c2 - c1 = a1
    total = a0 - c3
    return Coeffs(c1=(total - a1) / 2.0, c2=(total + a1) / 2.0, c3=c3)


def to_monomial(c: Coeffs) -> Tuple[float, float, float]:
    return (c.c1 + c.c2 + c.c3, c.c2 - c.c1, -c.c3)


def c3_bar(c1: float, c2: float, nu: float) -> float:
    """
    Lower bound of c3 in J_nu: -(a+b)(a+b+2nu)/2 with a = sqrt(nu^2+c1), b = sqrt(nu^2+c2).
    """
    if nu < 0:
        raise ParameterDomainError(f"viscosity must be nonnegative, got {nu}")
    if nu * nu + c1 < 0 or nu * nu + c2 < 0:
        raise ParameterDomainError(f"c1, c2 must be >= -nu^2 (c1={c1}, c2={c2}, nu={nu})")
    s = math.sqrt(nu * nu + c1) + math.sqrt(nu * nu + c2)
    return -0.5 * s * (s + 2.0 * nu)


def c3_star(c1: float, c2: float) -> float:
    """c3_bar at zero viscosity: -(sqrt(c1)+sqrt(c2))^2/2"""
    if c1 < 0 or c2 < 0:
        raise ParameterDomainError(f"c3_star needs c1, c2 >= 0 (got {c1}, {c2})")
    if c1 + c2 <= 0:
        raise ParameterDomainError("c3_star needs c1 + c2 > 0")
    return -0.5 * (math.sqrt(c1) + math.sqrt(c2)) ** 2


def _c3_star_total(c1: float, c2: float) -> float:
    # c3_star extended to the origin, used by membership tests
    return -0.5 * (math.sqrt(c1) + math.sqrt(c2)) ** 2


def in_J(nu: float, c: Coeffs, settings: Optional[LabSettings] = None) -> bool:
    """Membership in J_nu; nu = 0 tests J_0. The c3 bound is tested with the equality tolerance."""
    if nu < 0:
        raise ParameterDomainError(f"viscosity must be nonnegative, got {nu}")
    floor = -nu * nu
    if c.c1 < floor or c.c2 < floor:
        return False
    return c.c3 >= c3_bar(c.c1, c.c2, nu) - resolve(settings).tolerance(c.norm())


def in_interior_J0(c: Coeffs) -> bool:
    """c1, c2 > 0 and c3 > c3*(c1, c2): P_c > 0 on [-1, 1]"""
    return c.c1 > 0 and c.c2 > 0 and c.c3 > _c3_star_total(c.c1, c.c2)


def in_partial_prime_J0(c: Coeffs) -> bool:
    """The part of the boundary of J_0 where P_c stays positive on (-1, 1)"""
    if c.c1 == 0 and c.c2 == 0:
        return c.c3 > 0
    if c.c1 > 0 and c.c2 == 0:
        return c.c3 >= -0.5 * c.c1
    if c.c1 == 0 and c.c2 > 0:
        return c.c3 >= -0.5 * c.c2
    return False


def poly_min(c: Coeffs) -> Tuple[float, float]:
    """
    Minimum of P_c over [-1, 1].

    Returns:
        (x_min, value); the interior critical point (c2-c1)/(2c3) competes when c3 < 0,
        otherwise the smaller endpoint value, ties going to the smaller x
    """
    candidates = [(-1.0, 2.0 * c.c1), (1.0, 2.0 * c.c2)]
    if c.c3 < 0:
        x_crit = (c.c2 - c.c1) / (2.0 * c.c3)
        if -1.0 <= x_crit <= 1.0:
            candidates.append((x_crit, float(eval_poly(c, x_crit))))
    value = min(v for _, v in candidates)
    x_min = min(x for x, v in candidates if v == value)
    return x_min, value


def classify(c: Coeffs, settings: Optional[LabSettings] = None) -> Regime:
    """
    Classify c and attach the rate exponents.

    Args:
        c: nonzero coefficients
        settings: supplies the equality tolerance 1e-12 (1 + |c|)

    Returns:
        Regime with alpha/kappa (and xbar for a double root)
    """
    settings = resolve(settings)
    if c.is_zero():
        raise ParameterDomainError("classification is undefined for c = 0")
    tol = settings.tolerance(c.norm())
    if c.c1 < 0 or c.c2 < 0:
        return Regime(kind=RegimeKind.OUTSIDE_J0)
    star = _c3_star_total(c.c1, c.c2)
    if c.c3 < star - tol:
        return Regime(kind=RegimeKind.OUTSIDE_J0)
    if abs(c.c3 - star) <= tol and star < 0:
        s1, s2 = math.sqrt(c.c1), math.sqrt(c.c2)
        xbar = (s1 - s2) / (s1 + s2)
        return Regime(kind=RegimeKind.DOUBLE_ROOT, alpha=2.0 / 3.0, kappa=0, xbar=xbar)
    if c.c1 > 0 and c.c2 > 0:
        return Regime(kind=RegimeKind.INTERIOR_J0, alpha=1.0, kappa=1)
    if c.c1 == 0 and c.c2 == 0:
        kind = RegimeKind.EDGE_BOTH_ZERO
    elif c.c1 == 0:
        kind = RegimeKind.EDGE_C1_ZERO
    else:
        kind = RegimeKind.EDGE_C2_ZERO
    return Regime(kind=kind, alpha=0.5, kappa=0)


def tau(nu: float, c: Coeffs) -> Tuple[float, float, float, float]:
    """
    The attainable endpoint values.

    Returns:
        (tau1, tau2) at x = -1 and (tau1', tau2') at x = 1:
        2nu -/+ 2sqrt(nu^2+c1) and -2nu -/+ 2sqrt(nu^2+c2)
    """
    if nu <= 0:
        raise ParameterDomainError(f"viscosity must be positive, got {nu}")
    if not in_J(nu, c):
        raise RegionError(f"c = {c.as_tuple()} is not in J_nu for nu = {nu}")
    a = math.sqrt(nu * nu + c.c1)
    b = math.sqrt(nu * nu + c.c2)
    return (2.0 * nu - 2.0 * a, 2.0 * nu + 2.0 * a, -2.0 * nu - 2.0 * b, -2.0 * nu + 2.0 * b)

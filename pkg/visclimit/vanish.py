#!/usr/bin/env python3
"""
Vanishing-viscosity harness: sup-norm errors against Euler limits, log-log rate fits,
the convergence table and the search for non-convergent upper solutions.
"""
import logging
import math
import queue
import time
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .errors import (
    BracketError,
    EmptyWindowError,
    FitError,
    NonconvergenceError,
    ParameterDomainError,
    RegionError,
    UsageError,
    VisclimitError,
)
from .eulerlim import EulerProfile, EulerSign, euler_slopes, euler_values
from .layers import layer_spec, matched_profile
from .polyparams import Coeffs, Regime, RegimeKind, c3_bar, c3_star, classify, eval_poly, in_J
from .riccati import Branch, SolutionProfile, solve, solve_upper
from .settings import LabSettings, resolve

logger = logging.getLogger("RateSweep")

Interval = Tuple[float, float]
Profile = Union[SolutionProfile, EulerProfile]


class RefKind(str, Enum):
    EULER_PLUS = "EulerPlus"
    EULER_MINUS = "EulerMinus"
    GLUED = "Glued"
    LAYER = "Layer"


class Reference(BaseModel):
    """Limit profile an error is measured against"""
    model_config = ConfigDict(frozen=True)

    kind: RefKind
    x0: Optional[float] = None
    K: Optional[float] = None

    @model_validator(mode="after")
    def _params(self) -> "Reference":
        if (self.x0 is not None) != (self.kind == RefKind.GLUED):
            raise ValueError("x0 is set exactly for glued references")
        if self.K is not None and self.kind != RefKind.LAYER:
            raise ValueError("K only applies to layer references")
        return self

    @classmethod
    def plus(cls) -> "Reference":
        return cls(kind=RefKind.EULER_PLUS)

    @classmethod
    def minus(cls) -> "Reference":
        return cls(kind=RefKind.EULER_MINUS)

    @classmethod
    def glued(cls, x0: float) -> "Reference":
        return cls(kind=RefKind.GLUED, x0=x0)

    @classmethod
    def layer(cls, K: Optional[float] = None) -> "Reference":
        return cls(kind=RefKind.LAYER, K=K)

    def label(self) -> str:
        if self.kind == RefKind.GLUED:
            return f"Glued({self.x0!r})"
        if self.kind == RefKind.LAYER:
            return f"Layer({'default' if self.K is None else repr(self.K)})"
        return self.kind.value

    def euler_sign(self) -> EulerSign:
        if self.kind == RefKind.EULER_PLUS:
            return EulerSign.plus()
        if self.kind == RefKind.EULER_MINUS:
            return EulerSign.minus()
        if self.kind == RefKind.GLUED:
            return EulerSign.glued(self.x0)
        raise UsageError("layer references have no Euler sign")


class Metric(str, Enum):
    SUP_U = "SupU"
    SUP_H = "SupHalfUSqMinusP"
    SUP_DERIV = "SupDeriv"


class RateFit(BaseModel):
    """Least-squares line through (ln nu, ln err)"""
    model_config = ConfigDict(frozen=True)

    points: List[Tuple[float, float]]
    slope: float
    intercept: float
    r2: float

    def local_slopes(self) -> List[Optional[float]]:
        out: List[Optional[float]] = [None]
        for (n0, e0), (n1, e1) in zip(self.points[:-1], self.points[1:]):
            out.append(math.log(e1 / e0) / math.log(n1 / n0))
        return out

    def predict(self, nu: float) -> float:
        return math.exp(self.intercept) * nu ** self.slope


class SweepReport(BaseModel):
    """Outcome of one vanishing-viscosity sweep"""
    model_config = ConfigDict(frozen=True)

    c: Coeffs
    branch: str
    reference: str
    metric: Metric
    window: List[Interval]
    fit: RateFit
    predicted_alpha: float
    verdict: bool
    bound_holds: bool
    failures: List[float] = []


class NonconvWitness(BaseModel):
    """Upper (or lower) solution with a zero close to the endpoint"""
    model_config = ConfigDict(frozen=True)

    nu: float
    c1: float
    c2: float
    c3: float
    delta: float
    side: str
    zero_location: float
    gap: float
    limit_value: float
    certified: bool


def full_window() -> List[Interval]:
    return [(-1.0, 1.0)]


def window_excluding(x0: float, eps: float) -> List[Interval]:
    """[-1, 1] minus (x0 - eps, x0 + eps)"""
    parts = []
    if x0 - eps > -1.0:
        parts.append((-1.0, x0 - eps))
    if x0 + eps < 1.0:
        parts.append((x0 + eps, 1.0))
    return parts


def parse_window(text: str) -> List[Interval]:
    """'A,B' or 'A,B;C,D' into a list of intervals inside [-1, 1]"""
    intervals = []
    for chunk in text.split(";"):
        parts = chunk.split(",")
        if len(parts) != 2:
            raise UsageError(f"window must look like A,B (or A,B;C,D), got {text!r}")
        try:
            a, b = float(parts[0]), float(parts[1])
        except ValueError:
            raise UsageError(f"window must look like A,B (or A,B;C,D), got {text!r}")
        if not -1.0 <= a < b <= 1.0:
            raise UsageError(f"window interval ({a}, {b}) must satisfy -1 <= a < b <= 1")
        intervals.append((a, b))
    return intervals


def _window_mask(grid: np.ndarray, window: Sequence[Interval]) -> np.ndarray:
    mask = np.zeros(grid.shape, dtype=bool)
    for a, b in window:
        if not -1.0 <= a <= b <= 1.0:
            raise ParameterDomainError(f"window interval ({a}, {b}) is not inside [-1, 1]")
        mask |= (grid >= a) & (grid <= b)
    return mask


def _reference_values(p: Profile, ref: Reference, xs: np.ndarray, settings: LabSettings) -> np.ndarray:
    if ref.kind == RefKind.LAYER:
        x_k = getattr(getattr(p, "branch", None), "x_k", None)
        if x_k is None:
            raise UsageError("layer references need an interior-branch profile")
        return matched_profile(layer_spec(p.nu, p.c, x_k, ref.K, settings), xs)
    return euler_values(p.c, ref.euler_sign(), xs, settings)


def sup_error(p: Profile, ref: Reference, metric: Metric, window: Sequence[Interval],
              settings: Optional[LabSettings] = None) -> float:
    """
    Sup over the grid points inside the window of the chosen error.

    Args:
        p: sampled solution (or Euler samples)
        ref: limit profile for SupU / SupDeriv
        metric: SupU (|U - V|), SupHalfUSqMinusP (|U^2/2 - P_c|) or SupDeriv (|U' - V'|)
        window: list of intervals in [-1, 1]

    Returns:
        The sup-norm error
    """
    settings = resolve(settings)
    metric = Metric(metric)
    mask = _window_mask(p.grid, window)
    if not np.any(mask):
        raise EmptyWindowError(f"window {list(window)} contains no grid points")
    xs, values = p.grid[mask], p.values[mask]
    if metric == Metric.SUP_H:
        return float(np.max(np.abs(0.5 * values * values - eval_poly(p.c, xs))))
    if metric == Metric.SUP_U:
        return float(np.max(np.abs(values - _reference_values(p, ref, xs, settings))))
    if ref.kind == RefKind.LAYER:
        raise UsageError("derivative errors are measured against Euler references")
    slopes, flagged = euler_slopes(p.c, ref.euler_sign(), xs, settings)
    keep = ~flagged
    if ref.kind == RefKind.GLUED:
        keep &= xs != ref.x0
    if not np.any(keep):
        raise EmptyWindowError("window contains only roots of P_c")
    return float(np.max(np.abs(p.deriv[mask][keep] - slopes[keep])))


def fit_rate(points: Sequence[Tuple[float, float]]) -> RateFit:
    """
    Least-squares fit of ln err = slope ln nu + intercept.

    Args:
        points: (nu, err) pairs with err > 0

    Returns:
        RateFit with points sorted by decreasing nu
    """
    ordered = sorted(((float(n), float(e)) for n, e in points), key=lambda t: -t[0])
    if len(ordered) < 2:
        raise FitError("a rate fit needs at least two points")
    if any(e <= 0 or not math.isfinite(e) for _, e in ordered):
        raise FitError(f"errors must be positive and finite for a log-log fit: {ordered}")
    log_nu = np.log([n for n, _ in ordered])
    log_err = np.log([e for _, e in ordered])
    slope, intercept = np.polyfit(log_nu, log_err, 1)
    fitted = slope * log_nu + intercept
    ss_res = float(np.sum((log_err - fitted) ** 2))
    ss_tot = float(np.sum((log_err - np.mean(log_err)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return RateFit(points=ordered, slope=float(slope), intercept=float(intercept), r2=r2)


def predicted_alpha(regime: Regime, metric: Metric, window: Sequence[Interval], eps: float) -> float:
    """
    Exponent the sweep is compared with: alpha(c), except for SupU / SupDeriv errors on
    windows that stay eps away from the degenerate points (the double root in the
    double-root regime, the endpoints in the edge regimes) where the rate is nu.
    """
    if regime.alpha is None:
        raise RegionError(f"no convergence rate outside J_0 ({regime.kind.value})")
    if metric == Metric.SUP_H or regime.kind == RegimeKind.INTERIOR_J0:
        return regime.alpha
    if regime.kind == RegimeKind.DOUBLE_ROOT:
        away = all(b <= regime.xbar - eps or a >= regime.xbar + eps for a, b in window)
    else:
        away = all(a >= -1.0 + eps and b <= 1.0 - eps for a, b in window)
    return 1.0 if away else regime.alpha


def _check_grid(nu_grid: Sequence[float]) -> None:
    if len(nu_grid) < 4:
        raise ParameterDomainError(f"a rate sweep needs at least 4 viscosities, got {len(nu_grid)}")
    if any(nu <= 0 for nu in nu_grid):
        raise ParameterDomainError("viscosities must be positive")
    if math.log10(max(nu_grid) / min(nu_grid)) < 1.5 - 1e-12:
        raise ParameterDomainError("the viscosity grid must span at least 1.5 decades")


def _solve_all(c: Coeffs, branch: Branch, nu_grid: Sequence[float], settings: LabSettings,
               measure) -> List[Tuple[float, Union[float, Exception]]]:
    """Run measure(solve(nu)) for every nu; results collected through a queue, sorted by nu"""
    collector: "queue.Queue[Tuple[float, Union[float, Exception]]]" = queue.Queue()

    def work(nu: float) -> None:
        started = time.time()
        try:
            profile = solve(nu, c, branch, settings=settings)
            collector.put((nu, measure(profile)))
            logger.info(f"nu={nu:.4g}: done in {time.time() - started:.1f}s")
        except VisclimitError as e:
            logger.error(f"nu={nu:.4g}: {e}")
            collector.put((nu, e))

    workers = max(1, min(settings.threads, len(nu_grid)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(work, nu_grid))
    results = []
    while not collector.empty():
        results.append(collector.get())
    return sorted(results, key=lambda item: -item[0])


def rate_sweep(
    c: Coeffs,
    branch: Branch,
    ref: Reference,
    metric: Metric,
    window: Sequence[Interval],
    nu_grid: Optional[Sequence[float]] = None,
    settings: Optional[LabSettings] = None,
    alpha: Optional[float] = None,
    strict: bool = True,
) -> SweepReport:
    """
    Solve for every viscosity, measure the error and fit its rate.

    Args:
        c: coefficients
        branch: solution branch to sweep
        ref: limit profile
        metric: error functional
        window: intervals the sup is taken over
        nu_grid: viscosities (settings.nu_grid by default)
        alpha: exponent to compare with, predicted_alpha() by default
        strict: re-raise the first solver failure instead of dropping that viscosity

    Returns:
        SweepReport with the fit and both verdicts
    """
    settings = resolve(settings)
    nu_grid = list(settings.nu_values() if nu_grid is None else nu_grid)
    _check_grid(nu_grid)
    metric = Metric(metric)
    if alpha is None:
        alpha = predicted_alpha(classify(c, settings), metric, window, settings.window_eps)
    logger.info(f"Sweeping {branch.label()} at c={c.as_tuple()} over {len(nu_grid)} viscosities "
                f"({metric.value} vs {ref.label()}, {settings.threads} thread(s))")

    results = _solve_all(c, branch, nu_grid, settings,
                         lambda p: sup_error(p, ref, metric, window, settings))
    failures = [nu for nu, r in results if isinstance(r, Exception)]
    if failures and strict:
        raise next(r for _, r in results if isinstance(r, Exception))
    fit = fit_rate([(nu, r) for nu, r in results if not isinstance(r, Exception)])
    tolerance = settings.slope_tolerance
    report = SweepReport(
        c=c,
        branch=branch.label(),
        reference=ref.label(),
        metric=metric,
        window=[(float(a), float(b)) for a, b in window],
        fit=fit,
        predicted_alpha=alpha,
        verdict=abs(fit.slope - alpha) <= tolerance,
        bound_holds=fit.slope >= alpha - tolerance,
        failures=failures,
    )
    level = logging.INFO if report.verdict else logging.WARNING
    logger.log(level, f"Fitted slope {fit.slope:.3f} (r2={fit.r2:.4f}) vs predicted {alpha:.3f}: "
                      f"verdict={report.verdict}, bound_holds={report.bound_holds}")
    return report


def _convergence_cells(c: Coeffs, regime: Regime) -> List[Tuple[str, str]]:
    """(row, column) cells of the convergence table that hold for a fixed c = c_k"""
    rows: List[Tuple[str, str]] = []
    if regime.kind == RegimeKind.INTERIOR_J0:
        rows += [("c in interior J0", "U+"), ("c in interior J0", "U-")]
    elif regime.kind == RegimeKind.DOUBLE_ROOT:
        rows += [("c3=c3*, c_k in J0", "U+"), ("c3=c3*, c_k in J0", "U-")]
        if c.c2 == 0:
            rows.append(("c3=c3*, c2=0", "U+"))
        if c.c1 == 0:
            rows.append(("c3=c3*, c1=0", "U-"))
    else:
        rows += [("c3>c3*, c1c2=0", "U+"), ("c3>c3*, c1c2=0", "U-")]
    return rows


def table1_check(c: Coeffs, nu_grid: Optional[Sequence[float]] = None,
                 settings: Optional[LabSettings] = None) -> Dict[str, bool]:
    """
    Empirical check of the 'True' cells of the convergence table for c_k = c.

    A cell holds when the sup error at the smallest viscosity is below half the error at
    the largest one and below 0.1. 'False' cells assert the existence of bad sequences and
    are left to nonconv_search.

    Returns:
        {"<row>: <column>": bool}
    """
    settings = resolve(settings)
    if c.is_zero():
        raise ParameterDomainError("c = 0 is excluded")
    if not in_J(0.0, c, settings):
        raise RegionError(f"c = {c.as_tuple()} is not in J_0")
    nu_grid = sorted(settings.nu_values() if nu_grid is None else nu_grid, reverse=True)
    if len(nu_grid) < 2:
        raise ParameterDomainError("the table check needs at least two viscosities")
    regime = classify(c, settings)
    cache: Dict[str, bool] = {}
    verdicts: Dict[str, bool] = {}
    for row, column in _convergence_cells(c, regime):
        if column not in cache:
            branch = Branch.upper() if column == "U+" else Branch.lower()
            ref = Reference.plus() if column == "U+" else Reference.minus()
            results = _solve_all(c, branch, [nu_grid[0], nu_grid[-1]], settings,
                                 lambda p, ref=ref: sup_error(p, ref, Metric.SUP_U, full_window(), settings))
            for _, r in results:
                if isinstance(r, Exception):
                    raise r
            first, last = results[0][1], results[-1][1]
            cache[column] = bool(last < 0.5 * first and last < 0.1)
            logger.info(f"{column}: sup error {first:.3g} at nu={nu_grid[0]:.3g} -> {last:.3g} at nu={nu_grid[-1]:.3g}")
        verdicts[f"{row}: {column}"] = cache[column]
    return verdicts


def _upper_for_delta(nu: float, c1: float, c2: float, delta: float, settings: LabSettings) -> SolutionProfile:
    try:
        return solve_upper(nu, Coeffs(c1=c1, c2=c2, c3=c3_bar(c1, c2, nu) + delta), settings=settings)
    except NonconvergenceError as e:
        logger.warning(f"nu={nu:.4g}: upper solve failed for delta={delta:.3g}")
        raise BracketError(f"nu={nu:.4g}: upper solve failed for delta={delta:.3g}: {e}") from e


def _search_one(nu: float, c1: float, c2: float, eps: float, settings: LabSettings) -> NonconvWitness:
    base = c3_bar(c1, c2, nu)
    scale = Coeffs(c1=c1, c2=c2, c3=base).norm()
    lo = 4.0 * settings.tolerance(scale)
    hi = (c3_star(c1, c2) - base) + 1.0
    # U+ > 0 at x = 1, so U+(1 - eps/2) < 0 puts a zero strictly inside (1 - eps/2, 1)
    x_check = 1.0 - 0.5 * eps

    # closest to c3_bar the forward solve may not resolve; step away until it does
    while True:
        try:
            best = _upper_for_delta(nu, c1, c2, lo, settings)
            break
        except BracketError:
            lo *= 10.0
            if lo >= hi:
                raise
    if best(x_check) >= 0.0:
        raise BracketError(f"nu={nu:.4g}: U+ is already nonnegative at 1-eps/2 for delta={lo:.3g}")
    best_delta = lo
    if _upper_for_delta(nu, c1, c2, hi, settings)(x_check) < 0.0:
        raise BracketError(f"nu={nu:.4g}: U+ is still negative at 1-eps/2 for delta={hi:.3g}")

    for _ in range(80):
        if hi / lo < 1.01:
            break
        mid = math.sqrt(lo * hi)
        profile = _upper_for_delta(nu, c1, c2, mid, settings)
        if profile(x_check) < 0.0:
            lo, best, best_delta = mid, profile, mid
        else:
            hi = mid

    zeros = best.zeros(x_check, 1.0)
    if not zeros:
        raise BracketError(f"nu={nu:.4g}: bisection ended without a zero in (1-eps/2, 1)")
    x_zero = zeros[-1]
    U = best(x_zero)
    gap = abs(0.5 * U * U - float(eval_poly(best.c, x_zero)))
    limit = Coeffs(c1=c1, c2=c2, c3=c3_star(c1, c2))
    limit_value = float(eval_poly(limit, x_zero))
    return NonconvWitness(
        nu=nu, c1=c1, c2=c2, c3=best.c.c3, delta=best_delta, side="right", zero_location=x_zero,
        gap=gap, limit_value=limit_value, certified=bool(limit_value > 0 and gap >= 0.5 * limit_value),
    )


def nonconv_search(c1: float, c2: float, eps: float, nu_grid: Optional[Sequence[float]] = None,
                   side: str = "right", settings: Optional[LabSettings] = None) -> List[NonconvWitness]:
    """
    For each viscosity, bisect delta > 0 so that U+ with c3 = c3_bar(c1, c2; nu) + delta has a
    zero in (1 - eps, 1); the gap |U^2/2 - P| at that zero stays of order P_c there.
    side="left" searches U- with a zero in (-1, -1 + eps) through the reflection x -> -x.

    Args:
        c1, c2: coefficients of the double-root limit c3 = c3*(c1, c2)
        eps: endpoint window width in (0, 1/4)
        nu_grid: viscosities
        side: "right" (needs c2 > 0) or "left" (needs c1 > 0)

    Returns:
        One witness per viscosity, in decreasing nu
    """
    settings = resolve(settings)
    if not 0.0 < eps < 0.25:
        raise ParameterDomainError(f"eps must lie in (0, 1/4), got {eps}")
    if c1 < 0 or c2 < 0:
        raise ParameterDomainError("c1 and c2 must be nonnegative")
    if side not in ("right", "left"):
        raise UsageError(f"side must be 'right' or 'left', got {side!r}")
    if side == "right" and c2 <= 0:
        raise ParameterDomainError("the right-endpoint search needs c2 > 0")
    if side == "left" and c1 <= 0:
        raise ParameterDomainError("the left-endpoint search needs c1 > 0")
    nu_grid = sorted(settings.nu_values() if nu_grid is None else nu_grid, reverse=True)

    witnesses = []
    for nu in nu_grid:
        started = time.time()
        if side == "right":
            w = _search_one(nu, c1, c2, eps, settings)
        else:
            mirrored = _search_one(nu, c2, c1, eps, settings)
            w = mirrored.model_copy(update={"c1": c1, "c2": c2, "side": "left",
                                            "zero_location": -mirrored.zero_location})
        logger.info(f"nu={nu:.4g}: zero at {w.zero_location:.6f}, delta={w.delta:.3g}, "
                    f"gap={w.gap:.4g} vs P_c={w.limit_value:.4g} ({time.time() - started:.1f}s)")
        witnesses.append(w)
    return witnesses

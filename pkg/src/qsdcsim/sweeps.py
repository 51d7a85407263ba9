"""Distance sweeps and 1-D optimization over the analytic rate curves.

Provides the rate-versus-distance table, a bisection finder for the
distance where the protocol rate first exceeds the PLOB bound, the
maximum-distance finder, a coarse-scan-plus-golden-section intensity
optimizer and dark-count sweep families, plus CSV/JSON writers for the
curve tables.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

from .params import InvalidParameterError, SystemParams, channel_transmittance
from .rates import ComparisonRates, RateBreakdown, comparison_rates, plob_bound, secrecy_rate

__all__ = [
    "CurvePoint",
    "CrossingResult",
    "MaxDistanceResult",
    "IntensityOptimum",
    "DarkCountCurve",
    "rate_curve",
    "find_plob_crossing",
    "max_distance",
    "optimize_intensity",
    "dark_count_sweep",
    "curve_to_csv",
    "curve_to_json",
    "SEARCH_CEILING_KM",
]

SEARCH_CEILING_KM = 600.0
DISTANCE_TOL_KM = 0.1
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

CSV_COLUMNS = [
    "d_km", "R", "log10R", "plob", "dl04", "mdi",
    "opi_ideal", "dl04_ideal", "mdi_ideal", "Q", "EX", "EZ",
]


@dataclass(frozen=True)
class CurvePoint:
    d: float
    rates: RateBreakdown
    comparisons: ComparisonRates

    def row(self) -> dict:
        r = self.rates.R
        return {
            "d_km": self.d,
            "R": r,
            "log10R": math.log10(r) if r > 0.0 else -math.inf,
            "plob": self.comparisons.plob,
            "dl04": self.comparisons.dl04,
            "mdi": self.comparisons.mdi,
            "opi_ideal": self.comparisons.opi_ideal,
            "dl04_ideal": self.comparisons.dl04_ideal,
            "mdi_ideal": self.comparisons.mdi_ideal,
            "Q": self.rates.Q,
            "EX": self.rates.EX,
            "EZ": self.rates.EZ,
        }


@dataclass(frozen=True)
class CrossingResult:
    """Where the analytic rate first rises above the PLOB bound."""

    crossing_km: Optional[float]   # None when the curve never crosses
    searched_up_to_km: float


@dataclass(frozen=True)
class MaxDistanceResult:
    """Largest distance with a positive secrecy rate."""

    distance_km: Optional[float]   # None when R(0) <= 0
    at_ceiling: bool               # rate still positive at the search ceiling


@dataclass(frozen=True)
class IntensityOptimum:
    u_star: float
    d_max_km: float
    unimodal: bool                 # False: coarse scan saw multiple local maxima


@dataclass(frozen=True)
class DarkCountCurve:
    p_d: float
    points: List[CurvePoint]
    crossing: CrossingResult
    max_distance_km: Optional[float]


def rate_curve(params: SystemParams, d_grid: Sequence[float]) -> List[CurvePoint]:
    """Evaluate the full rate table on a sorted, non-negative distance grid."""
    grid = list(d_grid)
    if any(d < 0 for d in grid):
        raise InvalidParameterError("distance grid must be non-negative")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise InvalidParameterError("distance grid must be sorted ascending")
    return [
        CurvePoint(d=d, rates=secrecy_rate(params, d), comparisons=comparison_rates(params, d))
        for d in grid
    ]


def _bisect(pred: Callable[[float], bool], lo: float, hi: float, tol: float) -> float:
    """Shrink [lo, hi] with pred(lo)=True, pred(hi)=False to width tol."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_plob_crossing(
    params: SystemParams,
    d_lo: float = 1.0,
    d_hi: float = SEARCH_CEILING_KM,
    tol: float = DISTANCE_TOL_KM,
) -> CrossingResult:
    """Locate the up-crossing of R(d) - PLOB(d) by scan plus bisection.

    Scans a 1 km grid for the first sign change from negative to
    non-negative, then bisects to ``tol``.  Distances past the point
    where the rate is identically zero cannot cross, so the scan stops
    early once R hits zero while still below the bound.
    """
    margin = lambda d: secrecy_rate(params, d).R - plob_bound(channel_transmittance(params.zeta, d))
    prev_d, prev_m = d_lo, margin(d_lo)
    if prev_m >= 0.0:
        # already above the bound at the start of the search interval
        return CrossingResult(crossing_km=d_lo, searched_up_to_km=d_lo)
    d = prev_d
    while d < d_hi:
        d = min(d + 1.0, d_hi)
        m = margin(d)
        if m >= 0.0:
            root = _bisect(lambda x: margin(x) < 0.0, prev_d, d, tol)
            return CrossingResult(crossing_km=root, searched_up_to_km=d)
        if secrecy_rate(params, d).R == 0.0:
            return CrossingResult(crossing_km=None, searched_up_to_km=d)
        prev_d, prev_m = d, m
    return CrossingResult(crossing_km=None, searched_up_to_km=d_hi)


def max_distance(
    params: SystemParams,
    d_hi: float = SEARCH_CEILING_KM,
    tol: float = DISTANCE_TOL_KM,
) -> MaxDistanceResult:
    """Largest d with R(d) > 0, to ``tol`` km, searched up to ``d_hi``."""
    if secrecy_rate(params, 0.0).R <= 0.0:
        return MaxDistanceResult(distance_km=None, at_ceiling=False)
    if secrecy_rate(params, d_hi).R > 0.0:
        return MaxDistanceResult(distance_km=d_hi, at_ceiling=True)
    root = _bisect(lambda d: secrecy_rate(params, d).R > 0.0, 0.0, d_hi, tol)
    return MaxDistanceResult(distance_km=root, at_ceiling=False)


def optimize_intensity(
    params: SystemParams,
    u_range: tuple = (0.005, 0.2),
    tolerance: float = 1e-3,
    coarse_points: int = 50,
) -> IntensityOptimum:
    """Maximize the reachable distance over the intensity u.

    A coarse scan over ``coarse_points`` grid values brackets the
    maximum (and checks unimodality); golden-section refinement then
    shrinks the bracket to ``tolerance`` in u.  Deterministic for fixed
    inputs.  When the coarse scan is not unimodal the coarse-grid
    maximum is returned with ``unimodal=False``.
    """
    u_lo, u_hi = u_range
    if not 0.0 < u_lo < u_hi:
        raise InvalidParameterError(f"invalid u_range {u_range}")

    def objective(u: float) -> float:
        res = max_distance(params.replace(u=u))
        return res.distance_km if res.distance_km is not None else -1.0

    grid = [u_lo + (u_hi - u_lo) * i / (coarse_points - 1) for i in range(coarse_points)]
    values = [objective(u) for u in grid]
    best = max(range(coarse_points), key=lambda i: values[i])

    # unimodality: values rise to the peak then fall (ties tolerated)
    rising = all(values[i] <= values[i + 1] + 1e-9 for i in range(best))
    falling = all(values[i] >= values[i + 1] - 1e-9 for i in range(best, coarse_points - 1))
    if not (rising and falling):
        return IntensityOptimum(u_star=grid[best], d_max_km=values[best], unimodal=False)

    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, coarse_points - 1)]
    # golden-section search on the bracket
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > tolerance:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = objective(d)
    u_star = c if fc >= fd else d
    return IntensityOptimum(u_star=u_star, d_max_km=objective(u_star), unimodal=True)


def dark_count_sweep(
    params: SystemParams,
    p_d_list: Sequence[float],
    d_grid: Optional[Sequence[float]] = None,
) -> List[DarkCountCurve]:
    """Rate curves for a family of dark-count probabilities."""
    if d_grid is None:
        d_grid = [float(i) for i in range(0, int(SEARCH_CEILING_KM) + 1, 1)]
    out = []
    for p_d in p_d_list:
        p = params.replace(p_d=p_d)
        res = max_distance(p)
        out.append(
            DarkCountCurve(
                p_d=p_d,
                points=rate_curve(p, d_grid),
                crossing=find_plob_crossing(p),
                max_distance_km=res.distance_km,
            )
        )
    return out


# --- serialization -----------------------------------------------------------

def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".12g")


def curve_to_csv(points: Sequence[CurvePoint]) -> str:
    """Render a curve as CSV text with the documented column order."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for p in points:
        row = p.row()
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def curve_to_json(points: Sequence[CurvePoint]) -> str:
    """Render a curve as a JSON array; non-finite values become null."""
    rows = []
    for p in points:
        row = p.row()
        rows.append({k: (v if math.isfinite(v) else None) for k, v in row.items()})
    return json.dumps(rows, indent=2) + "\n"

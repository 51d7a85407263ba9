"""Closed-form secrecy-rate analytics.

Implements the gain / QBER / phase-error chain for the single-photon
interference protocol and the comparison rates (PLOB repeaterless bound,
idealized rates, the two-way single-photon and MDI protocols with
masking).  All functions are pure and deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import gammaln

from .params import InvalidParameterError, SystemParams, channel_transmittance, system_transmittance

__all__ = [
    "RateBreakdown",
    "ComparisonRates",
    "DegenerateChannelError",
    "TruncationError",
    "binary_entropy",
    "yield_n",
    "gain",
    "poisson_weight",
    "x_error",
    "z_error",
    "even_series_sum",
    "secrecy_rate",
    "plob_bound",
    "ideal_rates",
    "dl04_rate",
    "mdi_rate",
    "comparison_rates",
    "DEFAULT_N_MAX",
]

DEFAULT_N_MAX = 40
_TAIL_REL_TOL = 1e-12


class DegenerateChannelError(ZeroDivisionError):
    """Raised when an error rate is requested for a channel with zero gain."""


class TruncationError(ValueError):
    """Raised when a photon-number series has not converged at n_max."""


@dataclass(frozen=True)
class RateBreakdown:
    """Per-distance analytic quantities for the interference protocol."""

    d: float          # total distance, km
    eta: float        # per-arm transmittance incl. detector efficiency
    Q: float          # gain: one-click probability per pulse pair
    EX: float         # X-basis (bit) error rate
    EZ: float         # Z-basis (phase) error rate
    RC: float         # rate of the D0-only branch (may be negative)
    RD: float         # rate of the D1-only branch
    R: float          # total secrecy rate, max(RC,0)+max(RD,0)


@dataclass(frozen=True)
class ComparisonRates:
    """Reference rates evaluated at one distance."""

    plob: float
    opi_ideal: float
    dl04_ideal: float
    mdi_ideal: float
    dl04: float
    mdi: float


def binary_entropy(x: float) -> float:
    """Binary entropy h(x) = -x log2 x - (1-x) log2 (1-x), with h(0)=h(1)=0."""
    if not 0.0 <= x <= 1.0:
        raise InvalidParameterError(f"binary_entropy argument must be in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def yield_n(n: int, eta: float, p_d: float) -> float:
    """Click probability given n photons in the channel.

    Y_n = 1 - (1-2 p_d)(1-eta)^n, evaluated in a cancellation-free form.
    """
    if n < 0:
        raise InvalidParameterError(f"photon number must be >= 0, got {n}")
    if not 0.0 <= eta <= 1.0:
        raise InvalidParameterError(f"eta must be in [0, 1], got {eta}")
    if eta == 1.0:
        survive = 0.0 if n > 0 else 1.0
    else:
        survive = math.exp(n * math.log1p(-eta))
    # 1 - (1-2pd)*s = (1-s) + 2pd*s, both terms non-negative
    return (1.0 - survive) + 2.0 * p_d * survive


def gain(u: float, eta: float, p_d: float) -> float:
    """Total gain Q = 1 - e^(-2 eta u) + 2 p_d e^(-2 eta u)."""
    if u <= 0.0:
        raise InvalidParameterError(f"intensity must be > 0, got {u}")
    if not 0.0 <= eta <= 1.0:
        raise InvalidParameterError(f"eta must be in [0, 1], got {eta}")
    t = math.exp(-2.0 * eta * u)
    return -math.expm1(-2.0 * eta * u) + 2.0 * p_d * t


def poisson_weight(n: int, mean: float) -> float:
    """Poisson probability mass e^(-mean) mean^n / n!."""
    if n < 0:
        raise InvalidParameterError(f"photon number must be >= 0, got {n}")
    if mean < 0.0:
        raise InvalidParameterError(f"mean must be >= 0, got {mean}")
    if mean == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(-mean + n * math.log(mean) - math.lgamma(n + 1))


def x_error(u: float, eta: float, p_d: float, delta_sin2: float) -> float:
    """X-basis QBER (e^(-2 eta u)/Q) [p_d + 2 eta u sin^2(delta/2)].

    ``delta_sin2`` is the effective sin^2(delta/2) misalignment weight.
    """
    q = gain(u, eta, p_d)
    if q <= 0.0:
        raise DegenerateChannelError("zero gain: X error undefined for a dead channel")
    t = math.exp(-2.0 * eta * u)
    return (t / q) * (p_d + 2.0 * eta * u * delta_sin2)


def even_series_sum(
    u: float,
    eta: float,
    p_d: float,
    n_max: int = DEFAULT_N_MAX,
    include_vacuum: bool = False,
) -> float:
    """Truncated sum S = sum_n sqrt(P(2n) Y_2n) over even photon numbers.

    The n=0 term sqrt(P(0) * 2 p_d) is purely dark-count driven and is
    included only when ``include_vacuum`` is set.  Raises TruncationError
    if the series has not converged at ``n_max``.
    """
    if n_max < 1:
        raise InvalidParameterError(f"n_max must be >= 1, got {n_max}")
    n0 = 0 if include_vacuum else 1
    ks = 2 * np.arange(n0, n_max + 1, dtype=np.float64)
    mean = 2.0 * u
    log_p = -mean + ks * math.log(mean) - gammaln(ks + 1.0)
    if eta == 1.0:
        survive = np.where(ks > 0, 0.0, 1.0)
    else:
        survive = np.exp(ks * math.log1p(-eta))
    yields = (1.0 - survive) + 2.0 * p_d * survive
    terms = np.sqrt(np.exp(log_p) * yields)
    total = float(np.sum(terms))
    # convergence: the last amplitude must be negligible against the sum
    if total > 0.0 and math.sqrt(math.exp(float(log_p[-1]))) > _TAIL_REL_TOL * total:
        raise TruncationError(
            f"even-photon series not converged at n_max={n_max} (u={u}, eta={eta})"
        )
    return total


def z_error(
    u: float,
    eta: float,
    p_d: float,
    n_max: int = DEFAULT_N_MAX,
    include_vacuum: bool = False,
) -> float:
    """Z-basis (phase) error rate E^Z = (sum_n sqrt(P(2n) Y_2n))^2 / Q."""
    q = gain(u, eta, p_d)
    if q <= 0.0:
        raise DegenerateChannelError("zero gain: Z error undefined for a dead channel")
    s = even_series_sum(u, eta, p_d, n_max=n_max, include_vacuum=include_vacuum)
    return s * s / q


def secrecy_rate(params: SystemParams, d: float, n_max: int = DEFAULT_N_MAX) -> RateBreakdown:
    """Full analytic rate breakdown at total distance d (km).

    RC = q * Q * [1 - f h(EX) - h(EZ)]; the D1 branch is symmetric under
    the misalignment model used here, so RD = RC and
    R = max(RC,0) + max(RD,0).
    """
    eta = system_transmittance(params, d)
    q_match = params.mode_match
    Q = gain(params.u, eta, params.p_d)
    EX = x_error(params.u, eta, params.p_d, params.misalignment_sin2)
    EZ = z_error(params.u, eta, params.p_d, n_max=n_max, include_vacuum=params.include_vacuum)
    penalty = 1.0 - params.f * binary_entropy(_clip01(EX)) - binary_entropy(_clip01(EZ))
    rc = q_match * Q * penalty
    r = 2.0 * max(rc, 0.0)
    return RateBreakdown(d=d, eta=eta, Q=Q, EX=EX, EZ=EZ, RC=rc, RD=rc, R=r)


def _clip01(x: float) -> float:
    return min(max(x, 0.0), 1.0)


def plob_bound(eta_c: float) -> float:
    """Repeaterless secret-capacity bound -log2(1 - eta_c)."""
    if not 0.0 <= eta_c < 1.0:
        raise InvalidParameterError(f"plob_bound needs eta_c in [0, 1), got {eta_c}")
    return -math.log2(1.0 - eta_c)


def ideal_rates(eta_d: float, eta_c: float) -> Tuple[float, float, float]:
    """Idealized rates (eta_d sqrt(eta_c), eta_d eta_c^2, (eta_d eta_c)^2).

    Returned in the order (interference protocol, two-way single-photon,
    two-way MDI).
    """
    if not 0.0 <= eta_d <= 1.0 or not 0.0 <= eta_c <= 1.0:
        raise InvalidParameterError("transmittances must be in [0, 1]")
    return (
        eta_d * math.sqrt(eta_c),
        eta_d * eta_c**2,
        (eta_d * eta_c) ** 2,
    )


def dl04_rate(params: SystemParams, d: float) -> float:
    """Two-way single-photon protocol rate with masking.

    C_s = max{Q_B [1 - h(e) - h(eps_x + eps_z)], 0} with
    Q_A = eta_d eta_c + p_d, Q_B = eta_d eta_c^2 + p_d,
    e Q_B = e_d eta_d eta_c^2 + e_0 p_d and eps Q_A = e_d eta_d eta_c + e_0 p_d,
    taking eps_x = eps_z = eps.
    """
    eta_c = channel_transmittance(params.zeta, d)
    q_a = params.eta_d * eta_c + params.p_d
    q_b = params.eta_d * eta_c**2 + params.p_d
    if q_b <= 0.0 or q_a <= 0.0:
        return 0.0
    e = (params.e_d * params.eta_d * eta_c**2 + params.e_0 * params.p_d) / q_b
    eps = (params.e_d * params.eta_d * eta_c + params.e_0 * params.p_d) / q_a
    rate = q_b * (1.0 - binary_entropy(_clip01(e)) - binary_entropy(_clip01(2.0 * eps)))
    return max(rate, 0.0)


def mdi_rate(params: SystemParams, d: float) -> float:
    """Two-way MDI protocol rate with masking, C_s = Q [1 - h(e) - h(eps_y)].

    Evaluates the coincidence-probability table verbatim and assembles
    Q = q_C1 q_C2, the QBER e and the detection error eps_y.  With
    ``params.mdi_effective_eta`` the effective transmittance eta_d*eta_c
    is substituted for the bare channel transmittance.
    """
    eta_c = channel_transmittance(params.zeta, d)
    t = params.eta_d * eta_c if params.mdi_effective_eta else eta_c
    p_d = params.p_d
    if t <= 0.0:
        return 0.0

    one = (1.0 - p_d) ** 2
    base = (1.0 - t) ** 2 * p_d**2 * one + (1.0 - t) * t * p_d * one
    p_hv = base + 0.25 * t**2 * one                    # cross-polarized, also VH
    p_hh = base + 0.50 * t**2 * p_d * one              # co-polarized, also VV
    p_adj_pm = base + 0.25 * t**2 * p_d * one          # (1,2)/(3,4) with -+ or +-
    p_opp_pm = base + 0.25 * t**2 * (p_d + 1.0) * one  # (1,4)/(2,3) with -+ or +-
    p_adj_pp = base + 0.25 * t**2 * (p_d + 1.0) * one  # (1,2)/(3,4) with ++ or --
    p_opp_pp = base + 0.50 * t**2 * p_d * one          # (1,4)/(2,3) with ++ or --

    g_x = p_adj_pm + p_opp_pm + p_adj_pp + p_opp_pp
    g_y = g_x
    g_z = 2.0 * (p_hv + p_hh)
    q_c1 = (t / 3.0) * (g_x + g_z)
    q_c2 = t + (1.0 - t) * p_d
    q = q_c1 * q_c2

    denom = t + (1.0 - t) * p_d
    if denom <= 0.0 or g_y <= 0.0 or q <= 0.0:
        return 0.0
    e = (params.e_0 * p_d + params.e_d * t) / denom
    # numerator: (1,4),(2,3) with ++/-- plus (1,2),(3,4) with +-/-+, four terms each
    eps_hat = 4.0 * (p_opp_pp + p_adj_pm) / (4.0 * g_y)
    eps_y = params.e_d * (1.0 - 2.0 * eps_hat) + eps_hat
    rate = q * (1.0 - binary_entropy(_clip01(e)) - binary_entropy(_clip01(eps_y)))
    return max(rate, 0.0)


def comparison_rates(params: SystemParams, d: float) -> ComparisonRates:
    """Evaluate every comparison rate at distance d.

    The PLOB bound diverges at d=0 (eta_c=1) and is reported as +inf.
    """
    eta_c = channel_transmittance(params.zeta, d)
    plob = math.inf if eta_c >= 1.0 else plob_bound(eta_c)
    opi_i, dl04_i, mdi_i = ideal_rates(params.eta_d, eta_c)
    return ComparisonRates(
        plob=plob,
        opi_ideal=opi_i,
        dl04_ideal=dl04_i,
        mdi_ideal=mdi_i,
        dl04=dl04_rate(params, d),
        mdi=mdi_rate(params, d),
    )

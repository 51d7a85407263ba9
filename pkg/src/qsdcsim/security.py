"""Eavesdropping bounds from the Bell-diagonal state model.

The shared two-qubit state after the measurement node is modeled as a
Bell-diagonal mixture with weights (lambda1..lambda4) on
(Psi-, Psi+, Phi-, Phi+).  This module computes the eavesdropper's
mutual information, its entropy upper bound, and the even/odd coherent
state amplitude split that feeds the phase-error series.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import gammaln

from .params import InvalidParameterError
from .rates import (
    DEFAULT_N_MAX,
    DegenerateChannelError,
    TruncationError,
    binary_entropy,
    even_series_sum,
    gain,
)

__all__ = [
    "BellDiagonal",
    "FockCoefficients",
    "eve_information",
    "phase_error",
    "eve_bound_gap",
    "fock_coefficients",
    "conditional_weights",
    "sample_bell_diagonal",
]

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class BellDiagonal:
    """Weights of the four Bell states; must form a probability vector."""

    lambda1: float
    lambda2: float
    lambda3: float
    lambda4: float

    def __post_init__(self) -> None:
        lams = self.as_tuple()
        if any(l < 0.0 for l in lams):
            raise InvalidParameterError(f"Bell weights must be >= 0, got {lams}")
        if abs(sum(lams) - 1.0) > _SUM_TOL:
            raise InvalidParameterError(f"Bell weights must sum to 1, got {sum(lams)!r}")

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.lambda1, self.lambda2, self.lambda3, self.lambda4)


@dataclass(frozen=True)
class FockCoefficients:
    """Even/odd photon-number amplitudes of a coherent state sqrt(2)*alpha.

    ``even[n]`` is the amplitude of the 2n-photon component, ``odd[n]``
    of the (2n+1)-photon component, for n = 0..n_max.
    """

    even: np.ndarray
    odd: np.ndarray
    n_max: int


def _plogp(x: float) -> float:
    return 0.0 if x <= 0.0 else x * math.log2(x)


def eve_information(state: BellDiagonal) -> float:
    """Mutual information leaked to the eavesdropper, in bits.

    I(A:E) = H(lambda1..lambda4) - h(lambda1 + lambda3), which lies in
    [0, h(lambda3+lambda4)].
    """
    l1, l2, l3, l4 = state.as_tuple()
    h4 = -(_plogp(l1) + _plogp(l2) + _plogp(l3) + _plogp(l4))
    return h4 - binary_entropy(min(l1 + l3, 1.0))


def phase_error(state: BellDiagonal) -> float:
    """Phase-error rate lambda3 + lambda4 of the shared state."""
    return state.lambda3 + state.lambda4


def eve_bound_gap(state: BellDiagonal) -> float:
    """Slack h(phase_error) - eve_information; >= 0 for every valid state."""
    return binary_entropy(min(phase_error(state), 1.0)) - eve_information(state)


def fock_coefficients(u: float, n_max: int = DEFAULT_N_MAX) -> FockCoefficients:
    """Amplitudes of |sqrt(2) alpha> with |alpha|^2 = u, split even/odd.

    |C_n|^2 equals the Poisson weight of n at mean 2u.  Raises
    TruncationError when the tail mass beyond 2*n_max+1 photons is not
    negligible (< 1e-12).
    """
    if u <= 0.0:
        raise InvalidParameterError(f"intensity must be > 0, got {u}")
    ns = np.arange(0, 2 * n_max + 2, dtype=np.float64)
    mean = 2.0 * u
    log_p = -mean + ns * math.log(mean) - gammaln(ns + 1.0)
    amps = np.exp(0.5 * log_p)
    mass = float(np.sum(amps**2))
    if 1.0 - mass > 1e-12:
        raise TruncationError(
            f"fock_coefficients: tail mass {1.0 - mass:.3e} at n_max={n_max} (u={u})"
        )
    return FockCoefficients(even=amps[0::2].copy(), odd=amps[1::2].copy(), n_max=n_max)


def conditional_weights(
    u: float,
    eta: float,
    p_d: float,
    n_max: int = DEFAULT_N_MAX,
    include_vacuum: bool = False,
) -> Tuple[float, float]:
    """Unnormalized Bell-state weights of the post-measurement state.

    Returns (w_psi_plus, w_phi_plus) where
    w_phi_plus = (sum_n sqrt(|C_2n|^2 Y_2n))^2 / Q and w_psi_plus is the
    analogous odd-photon sum.  w_phi_plus reuses the exact even-photon
    series of rates.z_error, so the two agree bit for bit.  The weights
    are reported raw: their sum is not normalized to 1 because the
    squared-sum construction keeps cross terms.
    """
    q = gain(u, eta, p_d)
    if q <= 0.0:
        raise DegenerateChannelError("zero gain: conditional state undefined")
    s_even = even_series_sum(u, eta, p_d, n_max=n_max, include_vacuum=include_vacuum)
    ks = 2.0 * np.arange(0, n_max + 1, dtype=np.float64) + 1.0
    mean = 2.0 * u
    log_p = -mean + ks * math.log(mean) - gammaln(ks + 1.0)
    survive = np.exp(ks * math.log1p(-eta)) if eta < 1.0 else np.zeros_like(ks)
    yields = (1.0 - survive) + 2.0 * p_d * survive
    s_odd = float(np.sum(np.sqrt(np.exp(log_p) * yields)))
    return (s_odd * s_odd / q, s_even * s_even / q)


def sample_bell_diagonal(n: int, seed: int) -> np.ndarray:
    """Sample n points uniformly from the probability simplex, shape (n, 4).

    Uses sorted uniform spacings: for each sample, three sorted U(0,1)
    draws cut [0,1] into four lengths.  Seeded and reproducible.
    """
    rng = np.random.default_rng(seed)
    cuts = np.sort(rng.random((n, 3)), axis=1)
    bounds = np.concatenate(
        [np.zeros((n, 1)), cuts, np.ones((n, 1))], axis=1
    )
    return np.diff(bounds, axis=1)

"""Vectorized pure-numpy chunk kernel; fallback for the compiled one.

Consumes a (m, 9) matrix of uniforms (columns: mode_a, mode_b, choice_a,
choice_b, phase_a, phase_b, jitter, detector_c, detector_d) and returns
the 13 integer tallies defined in TALLY_FIELDS.  The arithmetic mirrors
the compiled kernel expression for expression so both backends produce
the same clicks from the same draws.
"""
from __future__ import annotations

import math

import numpy as np

TALLY_FIELDS = (
    "rounds",
    "coding_coding",
    "cc_one_click",
    "cc_errors",
    "cc_two_clicks",
    "multi_multi",
    "mixed_mode",
    "decoy_pairs_nu1",
    "decoy_pairs_nu2",
    "decoy_pairs_vac",
    "decoy_one_nu1",
    "decoy_one_nu2",
    "decoy_one_vac",
)
N_TALLIES = len(TALLY_FIELDS)


def run_chunk(
    uni: np.ndarray,
    p_multi: float,
    u: float,
    nu1: float,
    nu2: float,
    eta: float,
    p_d: float,
    delta_offset: float,
    jitter_halfwidth: float,
    n_slices: int,
) -> np.ndarray:
    """Tally one chunk of rounds from pre-drawn uniforms."""
    m = uni.shape[0]
    multi_a = uni[:, 0] < p_multi
    multi_b = uni[:, 1] < p_multi

    idx_a = np.minimum((uni[:, 2] * 3.0).astype(np.int64), 2)
    idx_b = np.minimum((uni[:, 3] * 3.0).astype(np.int64), 2)
    decoy_lut = np.array([nu1, nu2, 0.0])
    bit_a = uni[:, 2] < 0.5
    bit_b = uni[:, 3] < 0.5

    int_a = np.where(multi_a, decoy_lut[idx_a], u)
    int_b = np.where(multi_b, decoy_lut[idx_b], u)
    phase_a = np.where(multi_a, 2.0 * math.pi * uni[:, 4], math.pi * bit_a)
    phase_b = np.where(multi_b, 2.0 * math.pi * uni[:, 5], math.pi * bit_b)
    slice_a = (uni[:, 4] * n_slices).astype(np.int64)
    slice_b = (uni[:, 5] * n_slices).astype(np.int64)

    mis = delta_offset + jitter_halfwidth * (2.0 * uni[:, 6] - 1.0)
    delta = (phase_b - phase_a) + mis
    s = int_a + int_b
    cross = 2.0 * np.sqrt(int_a * int_b) * np.cos(delta)
    mu_c = np.maximum(0.5 * eta * (s + cross), 0.0)
    mu_d = np.maximum(0.5 * eta * (s - cross), 0.0)
    click_c = uni[:, 7] < (1.0 - (1.0 - p_d) * np.exp(-mu_c))
    click_d = uni[:, 8] < (1.0 - (1.0 - p_d) * np.exp(-mu_d))

    one = click_c ^ click_d
    two = click_c & click_d
    cc = ~multi_a & ~multi_b
    mm = multi_a & multi_b

    bits_equal = bit_a == bit_b
    err = cc & one & ((bits_equal & click_d) | (~bits_equal & click_c))

    pair = mm & (idx_a == idx_b)
    slice_diff = (slice_a - slice_b) % n_slices
    pair &= (slice_diff == 0) | (slice_diff == n_slices // 2)

    out = np.zeros(N_TALLIES, dtype=np.int64)
    out[0] = m
    out[1] = np.count_nonzero(cc)
    out[2] = np.count_nonzero(cc & one)
    out[3] = np.count_nonzero(err)
    out[4] = np.count_nonzero(cc & two)
    out[5] = np.count_nonzero(mm)
    out[6] = m - out[1] - out[5]
    for k in range(3):
        sel = pair & (idx_a == k)
        out[7 + k] = np.count_nonzero(sel)
        out[10 + k] = np.count_nonzero(sel & one)
    return out

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled chunk kernel for the pulse simulation hot loop.

Same contract as _kernel_numpy.run_chunk: a (m, 9) uniform matrix in,
13 int64 tallies out, expression-for-expression identical arithmetic.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport M_PI, cos, exp, sqrt

cnp.import_array()

N_TALLIES = 13


def run_chunk(
    double[:, ::1] uni,
    double p_multi,
    double u,
    double nu1,
    double nu2,
    double eta,
    double p_d,
    double delta_offset,
    double jitter_halfwidth,
    int n_slices,
):
    """Tally one chunk of rounds from pre-drawn uniforms."""
    out_arr = np.zeros(N_TALLIES, dtype=np.int64)
    cdef long long[::1] out = out_arr
    _run(uni, p_multi, u, nu1, nu2, eta, p_d,
         delta_offset, jitter_halfwidth, n_slices, out)
    return out_arr


cdef void _run(
    double[:, ::1] uni,
    double p_multi,
    double u,
    double nu1,
    double nu2,
    double eta,
    double p_d,
    double delta_offset,
    double jitter_halfwidth,
    int n_slices,
    long long[::1] out,
) nogil:
    cdef Py_ssize_t i, m = uni.shape[0]
    cdef bint multi_a, multi_b, bit_a, bit_b, click_c, click_d
    cdef bint one, two, cc, mm, pair
    cdef long long idx_a, idx_b, slice_a, slice_b, diff
    cdef double int_a, int_b, phase_a, phase_b, mis, delta
    cdef double s, cross, mu_c, mu_d

    out[0] = m
    for i in range(m):
        multi_a = uni[i, 0] < p_multi
        multi_b = uni[i, 1] < p_multi

        bit_a = uni[i, 2] < 0.5
        bit_b = uni[i, 3] < 0.5
        if multi_a:
            idx_a = <long long>(uni[i, 2] * 3.0)
            if idx_a > 2:
                idx_a = 2
            int_a = nu1 if idx_a == 0 else (nu2 if idx_a == 1 else 0.0)
            phase_a = 2.0 * M_PI * uni[i, 4]
        else:
            idx_a = -1
            int_a = u
            phase_a = M_PI * bit_a
        if multi_b:
            idx_b = <long long>(uni[i, 3] * 3.0)
            if idx_b > 2:
                idx_b = 2
            int_b = nu1 if idx_b == 0 else (nu2 if idx_b == 1 else 0.0)
            phase_b = 2.0 * M_PI * uni[i, 5]
        else:
            idx_b = -1
            int_b = u
            phase_b = M_PI * bit_b

        mis = delta_offset + jitter_halfwidth * (2.0 * uni[i, 6] - 1.0)
        delta = (phase_b - phase_a) + mis
        s = int_a + int_b
        cross = 2.0 * sqrt(int_a * int_b) * cos(delta)
        mu_c = 0.5 * eta * (s + cross)
        if mu_c < 0.0:
            mu_c = 0.0
        mu_d = 0.5 * eta * (s - cross)
        if mu_d < 0.0:
            mu_d = 0.0
        click_c = uni[i, 7] < (1.0 - (1.0 - p_d) * exp(-mu_c))
        click_d = uni[i, 8] < (1.0 - (1.0 - p_d) * exp(-mu_d))

        one = click_c != click_d
        two = click_c and click_d
        cc = (not multi_a) and (not multi_b)
        mm = multi_a and multi_b

        if cc:
            out[1] += 1
            if one:
                out[2] += 1
                if (bit_a == bit_b and click_d) or (bit_a != bit_b and click_c):
                    out[3] += 1
            elif two:
                out[4] += 1
        elif mm:
            out[5] += 1
            if idx_a == idx_b:
                slice_a = <long long>(uni[i, 4] * n_slices)
                slice_b = <long long>(uni[i, 5] * n_slices)
                diff = (slice_a - slice_b) % n_slices
                if diff < 0:
                    diff += n_slices
                if diff == 0 or diff == n_slices // 2:
                    out[7 + idx_a] += 1
                    if one:
                        out[10 + idx_a] += 1
        else:
            out[6] += 1

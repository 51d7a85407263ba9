import math

import numpy as np
import pytest

from qsdcsim import (
    BellDiagonal,
    InvalidParameterError,
    TruncationError,
    binary_entropy,
    conditional_weights,
    eve_bound_gap,
    eve_information,
    fock_coefficients,
    phase_error,
    poisson_weight,
    sample_bell_diagonal,
    z_error,
)


class TestBellDiagonal:
    def test_validation(self):
        with pytest.raises(InvalidParameterError):
            BellDiagonal(0.5, 0.5, 0.5, -0.5)
        with pytest.raises(InvalidParameterError):
            BellDiagonal(0.3, 0.3, 0.3, 0.3)

    def test_tolerant_normalization(self):
        BellDiagonal(0.25, 0.25, 0.25, 0.25 + 5e-13)


class TestEveInformation:
    def test_pure_state_leaks_nothing(self):
        assert eve_information(BellDiagonal(1.0, 0.0, 0.0, 0.0)) == 0.0

    def test_uniform_state(self):
        assert eve_information(BellDiagonal(0.25, 0.25, 0.25, 0.25)) == pytest.approx(1.0, abs=1e-12)

    def test_two_state_mixture(self):
        assert eve_information(BellDiagonal(0.5, 0.5, 0.0, 0.0)) == pytest.approx(0.0, abs=1e-12)

    def test_grouped_entropy_identity(self, rng):
        # H(l) - h(l1+l3) equals the paper-free regrouped two-branch form
        for lam in sample_bell_diagonal(200, seed=7):
            state = BellDiagonal(*lam)
            w1, w2 = lam[0] + lam[2], lam[1] + lam[3]
            expected = 0.0
            if w1 > 0:
                expected += w1 * binary_entropy(min(lam[0] / w1, 1.0))
            if w2 > 0:
                expected += w2 * binary_entropy(min(lam[1] / w2, 1.0))
            assert eve_information(state) == pytest.approx(expected, abs=1e-10)


class TestPhaseErrorAndBound:
    def test_phase_error_values(self):
        assert phase_error(BellDiagonal(1.0, 0.0, 0.0, 0.0)) == 0.0
        assert phase_error(BellDiagonal(0.0, 0.0, 0.5, 0.5)) == 1.0
        assert phase_error(BellDiagonal(0.2, 0.3, 0.1, 0.4)) == pytest.approx(0.5, rel=1e-12)

    def test_gap_trivial_cases(self):
        assert eve_bound_gap(BellDiagonal(0.25, 0.25, 0.25, 0.25)) == pytest.approx(0.0, abs=1e-12)
        assert eve_bound_gap(BellDiagonal(1.0, 0.0, 0.0, 0.0)) == 0.0

    def test_gap_nonnegative_random_sampling(self):
        # seeded sorted-uniform-spacings sampling over the simplex
        samples = sample_bell_diagonal(100_000, seed=20240811)
        for lam in samples:
            assert eve_bound_gap(BellDiagonal(*lam)) >= -1e-12


class TestSimplexSampler:
    def test_shape_and_normalization(self):
        s = sample_bell_diagonal(1000, seed=3)
        assert s.shape == (1000, 4)
        assert np.all(s >= 0.0)
        assert np.allclose(s.sum(axis=1), 1.0, atol=1e-12)

    def test_seeded_reproducibility(self):
        assert np.array_equal(sample_bell_diagonal(50, seed=1), sample_bell_diagonal(50, seed=1))


class TestFockCoefficients:
    def test_vacuum_amplitude(self):
        fc = fock_coefficients(0.046)
        assert fc.even[0] ** 2 == pytest.approx(math.exp(-0.092), rel=1e-12)

    def test_normalization(self):
        fc = fock_coefficients(0.046)
        total = float(np.sum(fc.even**2) + np.sum(fc.odd**2))
        assert abs(total - 1.0) < 1e-10

    def test_matches_poisson_weights(self):
        u = 0.12
        fc = fock_coefficients(u)
        for n in range(0, 20):
            amp = fc.even[n // 2] if n % 2 == 0 else fc.odd[n // 2]
            assert amp**2 == pytest.approx(poisson_weight(n, 2.0 * u), rel=1e-12)

    def test_weak_source_limit(self):
        fc = fock_coefficients(1e-9)
        assert fc.even[0] ** 2 == pytest.approx(1.0, abs=1e-8)
        assert fc.odd[0] ** 2 < 1e-8

    def test_insufficient_truncation(self):
        with pytest.raises(TruncationError):
            fock_coefficients(5.0, n_max=3)


class TestConditionalWeights:
    def test_matches_z_error_bit_for_bit(self, rng):
        for _ in range(100):
            u = rng.uniform(5e-3, 0.5)
            eta = rng.uniform(1e-5, 0.9)
            p_d = rng.uniform(0.0, 1e-5)
            include_vacuum = bool(rng.integers(0, 2))
            _, w_phi = conditional_weights(u, eta, p_d, include_vacuum=include_vacuum)
            assert w_phi == z_error(u, eta, p_d, include_vacuum=include_vacuum)

    def test_table1_scale(self):
        _, w_phi = conditional_weights(0.046, 0.15, 8e-8, include_vacuum=True)
        assert w_phi == pytest.approx(8.0e-2, rel=0.1)

    def test_weak_source_even_weight_vanishes(self):
        # the even weight scales linearly with u while the odd one stays O(1)
        _, w_phi_small = conditional_weights(1e-6, 0.15, 0.0)
        _, w_phi_large = conditional_weights(1e-2, 0.15, 0.0)
        assert w_phi_small < 1e-5
        assert w_phi_small < 1e-3 * w_phi_large
        w_psi, _ = conditional_weights(1e-6, 0.15, 0.0)
        assert w_psi > 0.5

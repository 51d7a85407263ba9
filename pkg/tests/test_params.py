import math

import numpy as np
import pytest

from qsdcsim import (
    InvalidParameterError,
    SystemParams,
    channel_transmittance,
    load_config,
    mode_match_rate,
    system_transmittance,
)
from qsdcsim.params import dump_config


class TestChannelTransmittance:
    def test_zero_distance(self):
        assert channel_transmittance(0.2, 0.0) == 1.0

    def test_exact_decade_exponent(self):
        assert channel_transmittance(0.2, 50.0) == pytest.approx(0.1, rel=1e-15)

    def test_long_haul_against_log_identity(self):
        # independent evaluation through exp/log instead of the power form
        expected = math.exp(-0.2 * 228.0 / 10.0 * math.log(10.0))
        got = channel_transmittance(0.2, 228.0)
        assert got == pytest.approx(expected, rel=1e-12)
        assert got == pytest.approx(2.754e-5, rel=1e-3)

    def test_rejects_negative_inputs(self):
        with pytest.raises(InvalidParameterError):
            channel_transmittance(0.2, -1.0)
        with pytest.raises(InvalidParameterError):
            channel_transmittance(-0.2, 1.0)

    def test_multiplicative_and_decreasing(self, rng):
        for _ in range(200):
            d1, d2 = rng.uniform(0.0, 300.0, size=2)
            lhs = channel_transmittance(0.2, d1 + d2)
            rhs = channel_transmittance(0.2, d1) * channel_transmittance(0.2, d2)
            assert lhs == pytest.approx(rhs, rel=1e-12)
        grid = [channel_transmittance(0.2, d) for d in np.linspace(0.0, 500.0, 100)]
        assert all(b < a for a, b in zip(grid, grid[1:]))


class TestSystemTransmittance:
    def test_zero_distance_is_detector_efficiency(self, table1):
        assert system_transmittance(table1, 0.0) == table1.eta_d

    def test_half_exponent(self, table1):
        assert system_transmittance(table1, 100.0) == pytest.approx(0.015, rel=1e-12)

    def test_perfect_detector(self):
        p = SystemParams(eta_d=1.0)
        assert system_transmittance(p, 200.0) == pytest.approx(0.01, rel=1e-12)

    def test_square_recovers_channel(self, table1, rng):
        for d in rng.uniform(0.0, 400.0, size=50):
            eta = system_transmittance(table1, d)
            assert (eta / table1.eta_d) ** 2 == pytest.approx(
                channel_transmittance(table1.zeta, d), rel=1e-12
            )


class TestModeMatchRate:
    @pytest.mark.parametrize("p,expected", [(0.0, 1.0), (0.5, 0.5), (0.1, 0.82)])
    def test_values(self, p, expected):
        assert mode_match_rate(p) == pytest.approx(expected, rel=1e-12)

    def test_symmetry_and_minimum(self, rng):
        for p in rng.uniform(0.0, 1.0, size=100):
            assert mode_match_rate(p) == pytest.approx(mode_match_rate(1.0 - p), rel=1e-12)
            assert mode_match_rate(p) >= 0.5

    def test_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            mode_match_rate(1.5)


class TestSystemParams:
    def test_table_defaults(self, table1):
        assert table1.zeta == 0.2
        assert table1.eta_d == 0.15
        assert table1.p_d == 8e-8
        assert table1.delta_mis == 0.015
        assert table1.f == 1.2
        assert table1.u == 0.046

    @pytest.mark.parametrize(
        "bad",
        [
            {"u": 0.0},
            {"p_d": 1.0},
            {"eta_d": 1.5},
            {"f": 0.9},
            {"p_multi": 0.0},
            {"nu1": 0.05},            # violates u > nu1
            {"nu2": 0.02},            # violates nu1 > nu2
            {"phase_slices": 3},      # odd
            {"delta_model": "weird"},
        ],
    )
    def test_validation(self, bad):
        with pytest.raises(InvalidParameterError):
            SystemParams(**bad)

    def test_delta_interpretations(self):
        prob = SystemParams(delta_model="probability")
        ang = SystemParams(delta_model="angle")
        assert prob.misalignment_sin2 == 0.015
        assert ang.misalignment_sin2 == pytest.approx(math.sin(0.0075) ** 2, rel=1e-12)

    def test_replace_is_functional(self, table1):
        other = table1.replace(u=0.1)
        assert other.u == 0.1 and table1.u == 0.046


class TestConfigFiles:
    def test_round_trip(self, tmp_path, table1):
        path = tmp_path / "params.cfg"
        dump_config(table1.replace(u=0.07, include_vacuum=True), path)
        loaded = load_config(path)
        assert loaded.u == 0.07
        assert loaded.include_vacuum is True
        assert loaded == table1.replace(u=0.07, include_vacuum=True)

    def test_overrides_win(self, tmp_path, table1):
        path = tmp_path / "params.cfg"
        dump_config(table1, path)
        loaded = load_config(path, u=0.09)
        assert loaded.u == 0.09

    def test_comments_and_unknown_keys(self, tmp_path):
        path = tmp_path / "params.cfg"
        path.write_text("# comment\nu = 0.05  # inline\n")
        assert load_config(path).u == 0.05
        path.write_text("nonsense = 1\n")
        with pytest.raises(InvalidParameterError, match="nonsense"):
            load_config(path)

    def test_bad_boolean(self, tmp_path):
        path = tmp_path / "params.cfg"
        path.write_text("include_vacuum = maybe\n")
        with pytest.raises(InvalidParameterError):
            load_config(path)

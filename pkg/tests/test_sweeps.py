import json
import math
import time

import numpy as np
import pytest

from qsdcsim import (
    InvalidParameterError,
    SystemParams,
    dark_count_sweep,
    find_plob_crossing,
    max_distance,
    optimize_intensity,
    rate_curve,
)
from qsdcsim.sweeps import SEARCH_CEILING_KM, curve_to_csv, curve_to_json


class TestRateCurve:
    def test_origin_handles_infinite_plob(self, table1):
        points = rate_curve(table1, [0.0])
        assert math.isinf(points[0].comparisons.plob)
        row = points[0].row()
        assert row["plob"] == math.inf

    def test_full_grid_performance_and_monotonicity(self, table1):
        start = time.monotonic()
        points = rate_curve(table1, [float(d) for d in range(0, 501)])
        elapsed = time.monotonic() - start
        assert elapsed < 10.0
        assert len(points) == 501
        rates = [p.rates.R for p in points]
        assert all(b <= a + 1e-15 for a, b in zip(rates, rates[1:]))

    def test_grid_validation(self, table1):
        with pytest.raises(InvalidParameterError):
            rate_curve(table1, [-1.0, 0.0])
        with pytest.raises(InvalidParameterError):
            rate_curve(table1, [10.0, 5.0])

    def test_pure_function_of_inputs(self, table1):
        grid = [0.0, 100.0, 200.0]
        assert rate_curve(table1, grid) == rate_curve(table1, grid)

    def test_csv_shape_and_determinism(self, table1):
        points = rate_curve(table1, [float(d) for d in range(0, 11)])
        text = curve_to_csv(points)
        lines = text.strip().split("\n")
        assert len(lines) == 12
        assert lines[0].startswith("d_km,R,log10R,plob,dl04,mdi")
        assert text == curve_to_csv(rate_curve(table1, [float(d) for d in range(0, 11)]))

    def test_json_nulls_non_finite(self, table1):
        points = rate_curve(table1, [0.0])
        rows = json.loads(curve_to_json(points))
        assert rows[0]["plob"] is None  # +inf at zero distance


class TestPlobCrossing:
    def test_table1_value(self, table1):
        start = time.monotonic()
        res = find_plob_crossing(table1)
        assert time.monotonic() - start < 5.0
        # calibration anchor of this model; see the README deviation table
        assert res.crossing_km == pytest.approx(210.0, abs=0.5)

    def test_better_hardware_crosses_sooner(self, table1):
        sharp = table1.replace(eta_d=1.0, p_d=1e-15)
        res = find_plob_crossing(sharp)
        assert res.crossing_km is not None
        assert res.crossing_km < find_plob_crossing(table1).crossing_km

    def test_no_crossing_reported(self, table1):
        res = find_plob_crossing(table1.replace(p_d=4e-6))
        assert res.crossing_km is None

    def test_bracket_independence(self, table1):
        a = find_plob_crossing(table1, d_lo=1.0, d_hi=500.0)
        b = find_plob_crossing(table1, d_lo=150.0, d_hi=SEARCH_CEILING_KM)
        assert abs(a.crossing_km - b.crossing_km) <= 0.2


class TestMaxDistance:
    def test_table1_value(self, table1):
        res = max_distance(table1)
        assert not res.at_ceiling
        assert res.distance_km == pytest.approx(436.3, abs=0.5)

    def test_noise_free_hits_ceiling(self, table1):
        res = max_distance(table1.replace(p_d=0.0, delta_mis=0.0))
        assert res.at_ceiling and res.distance_km == SEARCH_CEILING_KM
        assert res.distance_km > max_distance(table1).distance_km

    def test_dead_protocol_reports_none(self, table1):
        res = max_distance(table1.replace(f=50.0))
        assert res.distance_km is None

    def test_weak_source_collapses(self, table1):
        weak = table1.replace(u=1e-6, nu1=1e-7, nu2=1e-8)
        strong = max_distance(table1).distance_km
        res = max_distance(weak)
        assert res.distance_km is not None
        assert res.distance_km < 0.5 * strong

    def test_bisection_tolerance(self, table1):
        a = max_distance(table1, tol=0.1)
        b = max_distance(table1, d_hi=550.0, tol=0.1)
        assert abs(a.distance_km - b.distance_km) <= 0.2


class TestOptimizeIntensity:
    def test_table1_optimum(self, table1):
        res = optimize_intensity(table1)
        assert res.unimodal
        # calibration values for this model (README deviation table)
        assert res.u_star == pytest.approx(0.039, abs=0.004)
        assert res.d_max_km == pytest.approx(436.8, abs=1.0)

    def test_objective_beats_bracket_ends(self, table1):
        res = optimize_intensity(table1)
        lo = max_distance(table1.replace(u=0.005)).distance_km
        hi = max_distance(table1.replace(u=0.2)).distance_km
        assert res.d_max_km >= lo and res.d_max_km >= hi

    def test_deterministic(self, table1):
        assert optimize_intensity(table1) == optimize_intensity(table1)

    def test_bad_range(self, table1):
        with pytest.raises(InvalidParameterError):
            optimize_intensity(table1, u_range=(0.2, 0.1))


class TestDarkCountSweep:
    def test_family_ordering(self, table1):
        curves = dark_count_sweep(table1, [8e-8, 8e-7, 4e-6], d_grid=[0.0, 100.0, 200.0])
        dmax = [c.max_distance_km for c in curves]
        assert dmax[0] > dmax[1] > dmax[2]

    def test_zero_dark_count_is_not_representable_as_family_max(self, table1):
        # p_d = 0 gives the longest reach of any family member
        curves = dark_count_sweep(table1, [0.0, 8e-8], d_grid=[0.0])
        assert curves[0].max_distance_km >= curves[1].max_distance_km

    def test_crossing_flags_recorded(self, table1):
        curves = dark_count_sweep(table1, [8e-8, 4e-6], d_grid=[0.0])
        assert curves[0].crossing.crossing_km is not None
        assert curves[1].crossing.crossing_km is None  # default delta model


class TestIdealSlope:
    def test_exact_decade_per_hundred_km(self, table1):
        # eta_d * 10^(-zeta d / 20): one decade per 200 km at 0.2 dB/km
        points = rate_curve(table1, [float(d) for d in range(0, 201, 1)])
        logs = [math.log10(p.comparisons.opi_ideal) for p in points]
        diffs = [a - b for a, b in zip(logs, logs[1:])]
        assert all(d == pytest.approx(0.01, abs=1e-12) for d in diffs)

    def test_protocol_ordering_in_reach(self, table1):
        # interference protocol reaches farther than the two-way
        # comparisons under the same hardware
        grid = [float(d) for d in range(0, 401, 10)]
        points = rate_curve(table1, grid)
        def reach(getter):
            alive = [p.d for p in points if getter(p) > 0.0]
            return max(alive) if alive else -1.0
        opi = reach(lambda p: p.rates.R)
        dl04 = reach(lambda p: p.comparisons.dl04)
        mdi = reach(lambda p: p.comparisons.mdi)
        assert opi > dl04 > mdi

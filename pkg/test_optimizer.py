#!/usr/bin/env python3
"""
Tests for the tau optimizer, T2 profiles and rotation-speed sweeps.
"""

import logging
import math
from dataclasses import replace

import numpy as np
import pytest

from src.analysis.optimizer import (
    T2Profile,
    golden_section_max,
    optimal_tau,
    required_t2_for_gain,
    speed_sweep,
)
from src.core.errors import InvalidParameter, ProfileRangeError, UnreachableGain
from src.core.model import ReadoutModel, RotationState, SensorConfig, revival_time
from src.sensing.sensitivity import drum_slope, gain_ratio

SENSOR = SensorConfig()
ROT = RotationState.from_speed_hz(3750.0)


class TestGoldenSection:
    def test_parabola(self):
        x, fx = golden_section_max(lambda v: -(v - 0.3) ** 2, 0.0, 1.0)
        assert x == pytest.approx(0.3, abs=1e-6)
        assert fx == pytest.approx(0.0, abs=1e-12)

    def test_peak_at_edge(self):
        x, _ = golden_section_max(lambda v: v, 0.0, 2.0)
        assert x == pytest.approx(2.0, abs=1e-6)


class TestOptimalTau:
    def test_operating_point(self):
        point = optimal_tau(ROT, SENSOR)
        assert 0.65 <= point.tau_opt / SENSOR.t2 <= 0.85
        assert point.tau_opt == pytest.approx(182e-6, rel=0.02)
        assert point.speed_hz == pytest.approx(3750.0)

    def test_beats_dense_grid(self):
        point = optimal_tau(ROT, SENSOR)
        grid = np.linspace(ROT.t_rot / 10000, ROT.t_rot, 10000)
        best = max(drum_slope(t, ROT, SENSOR) for t in grid)
        assert point.slope_at_opt >= best * (1 - 1e-6)

    def test_bias_field_places_revival(self):
        point = optimal_tau(ROT, SENSOR)
        assert revival_time(point.b_z, ROT, SENSOR) == pytest.approx(point.tau_opt, rel=1e-9)

    def test_long_coherence_uses_full_rotation(self):
        point = optimal_tau(ROT, replace(SENSOR, t2=1e3))
        assert point.tau_opt == pytest.approx(ROT.t_rot, rel=1e-6)

    def test_amplitude_invariant(self):
        assert optimal_tau(ROT, SENSOR, amplitude=0.4).tau_opt == pytest.approx(optimal_tau(ROT, SENSOR).tau_opt, rel=1e-9)

    def test_monotone_in_t2(self):
        taus = [optimal_tau(ROT, replace(SENSOR, t2=t2)).tau_opt for t2 in (100e-6, 200e-6, 400e-6, 800e-6)]
        assert taus == sorted(taus)
        assert taus[0] < taus[-1]

    def test_reverse_rotation(self):
        forward = optimal_tau(ROT, SENSOR)
        reverse = optimal_tau(RotationState.from_speed_hz(-3750.0), SENSOR)
        assert reverse.tau_opt == pytest.approx(forward.tau_opt, rel=1e-9)


class TestT2Profile:
    def test_default_operating_point(self):
        assert T2Profile.default().t2_at(3750.0) == pytest.approx(250e-6, rel=1e-3)
        assert T2Profile.default().t2_at(-3750.0) == pytest.approx(250e-6, rel=1e-3)

    def test_constant(self):
        assert T2Profile.constant(300e-6).t2_at(12345.0) == 300e-6

    def test_out_of_range(self):
        with pytest.raises(ProfileRangeError):
            T2Profile.default().t2_at(8000.0)

    def test_extrapolation_warns(self, caplog):
        profile = replace(T2Profile.default(), extrapolate=True)
        with caplog.at_level(logging.WARNING):
            t2 = profile.t2_at(7000.0)
        assert t2 == pytest.approx(211e-6, rel=1e-6)
        assert "Extrapolating" in caplog.text

    @pytest.mark.parametrize("speeds, values", [
        ((1000.0,), (250e-6,)),
        ((2000.0, 1000.0), (250e-6, 260e-6)),
        ((1000.0, 2000.0), (250e-6, 0.0)),
        ((1000.0, 2000.0), (250e-6,)),
    ])
    def test_invalid(self, speeds, values):
        with pytest.raises(InvalidParameter):
            T2Profile(speeds, values)


class TestSpeedSweep:
    def test_constant_t2_is_flat(self):
        result = speed_sweep(np.arange(3000.0, 6001.0, 500.0), T2Profile.constant(250e-6), SENSOR)
        assert len(result.points) == 7
        assert result.sensitivity_spread() < 2.0

    def test_default_profile_slopes_fall_with_speed(self):
        result = speed_sweep([4000.0, 5000.0, 6000.0], T2Profile.default(), SENSOR)
        slopes = [p.slope_at_opt for p in result.points]
        assert slopes[0] > slopes[1] > slopes[2]

    def test_order_independent(self):
        profile = T2Profile.default()
        shuffled = speed_sweep([5000.0, 3000.0, 4000.0, 3000.0], profile, SENSOR, max_workers=3)
        ordered = speed_sweep([3000.0, 4000.0, 5000.0], profile, SENSOR, max_workers=1)
        assert shuffled == ordered
        assert [p.speed_hz for p in ordered.points] == pytest.approx([3000.0, 4000.0, 5000.0])

    def test_failures_collected(self):
        result = speed_sweep([3000.0, 8000.0], T2Profile.default(), SENSOR)
        assert len(result.points) == 1
        assert [s for s, _ in result.failures] == [8000.0]

    def test_readout_model_override(self):
        base = speed_sweep([3750.0], T2Profile.default(), SENSOR)
        dim = speed_sweep([3750.0], T2Profile.default(), SENSOR, model=ReadoutModel(c_override=0.05))
        assert dim.points[0].sensitivity_at_opt == pytest.approx(2 * base.points[0].sensitivity_at_opt)
        assert dim.points[0].tau_opt == base.points[0].tau_opt

    def test_single_speed_matches_optimal_tau(self):
        result = speed_sweep([3750.0], T2Profile.constant(SENSOR.t2), SENSOR)
        assert result.points[0].tau_opt == pytest.approx(optimal_tau(ROT, SENSOR).tau_opt, rel=1e-9)

    def test_empty(self):
        with pytest.raises(InvalidParameter):
            speed_sweep([], T2Profile.default(), SENSOR)


class TestRequiredT2:
    def test_ten_times_gain(self):
        assert required_t2_for_gain(10, SENSOR) == pytest.approx(61.685 * SENSOR.t2_star, rel=1e-4)

    @pytest.mark.parametrize("target", [2.0, 5.0, 10.0, 40.0])
    def test_round_trip(self, target):
        sensor = replace(SENSOR, t2=required_t2_for_gain(target, SENSOR))
        assert 1 / gain_ratio(sensor) == pytest.approx(target, rel=1e-10)

    @pytest.mark.parametrize("target", [0.5, 1.0])
    def test_unreachable(self, target):
        with pytest.raises(UnreachableGain):
            required_t2_for_gain(target, SENSOR)

    def test_rejects_non_positive(self):
        with pytest.raises(InvalidParameter):
            required_t2_for_gain(0.0, SENSOR)

#!/usr/bin/env python3
"""
Tests for the analytic DRUM and Ramsey sensitivities and the operational estimate.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from src.core.errors import DegenerateSeries, InsufficientSamples, InvalidParameter, ZeroSlope
from src.core.model import RotationState, SensorConfig
from src.sensing.interferometry import SequenceParams
from src.sensing.sensitivity import (
    build_report,
    coherence_ratio,
    drum_shot_noise_sensitivity,
    drum_slope,
    gain_ratio,
    ideal_ramsey_sensitivity,
    operational_sensitivity,
    ramsey_sensitivity,
)

SENSOR = SensorConfig()
ROT = RotationState.from_speed_hz(3750.0)
SEQ = SequenceParams(tau=180e-6)
THIRTY = SensorConfig(theta_nv=math.radians(30.0))


class TestDrumSlope:
    def test_vanishes_at_short_tau(self):
        assert drum_slope(1e-12, ROT, SENSOR) < 1e-9 * drum_slope(SEQ.tau, ROT, SENSOR)

    def test_rejects_non_positive_tau(self):
        with pytest.raises(InvalidParameter):
            drum_slope(0.0, ROT, SENSOR)

    def test_direction_independent(self):
        reverse = RotationState.from_speed_hz(-3750.0)
        assert drum_slope(SEQ.tau, reverse, SENSOR) == pytest.approx(drum_slope(SEQ.tau, ROT, SENSOR))

    def test_argmax_invariant_under_amplitude(self):
        taus = np.linspace(1e-6, ROT.t_rot, 500)
        unit = [drum_slope(t, ROT, SENSOR, 1.0) for t in taus]
        scaled = [drum_slope(t, ROT, SENSOR, 0.37) for t in taus]
        assert np.argmax(unit) == np.argmax(scaled)


class TestShotNoiseSensitivity:
    def test_operating_point(self):
        value = drum_shot_noise_sensitivity(180e-6, ROT, THIRTY)
        assert 15.3e-9 <= value <= 20.7e-9
        assert value == pytest.approx(19.5e-9, rel=1e-2)

    def test_halving_efficiency_doubles(self):
        full = drum_shot_noise_sensitivity(SEQ.tau, ROT, SENSOR, efficiency=0.1)
        half = drum_shot_noise_sensitivity(SEQ.tau, ROT, SENSOR, efficiency=0.05)
        assert half == pytest.approx(2 * full, rel=1e-14)

    def test_orientation(self):
        side = SensorConfig(theta_nv=math.pi / 2)
        assert drum_shot_noise_sensitivity(SEQ.tau, ROT, THIRTY) == pytest.approx(
            2 * drum_shot_noise_sensitivity(SEQ.tau, ROT, side), rel=1e-12
        )

    def test_normalized_is_twice_pre_penalty(self):
        pre = drum_shot_noise_sensitivity(SEQ.tau, ROT, SENSOR, 'pre_penalty')
        assert drum_shot_noise_sensitivity(SEQ.tau, ROT, SENSOR, 'normalized') == pytest.approx(2 * pre)

    def test_pre_penalty_times_slope_independent_of_tau(self):
        products = [
            drum_shot_noise_sensitivity(tau, ROT, SENSOR, 'pre_penalty') * drum_slope(tau, ROT, SENSOR)
            for tau in np.linspace(20e-6, ROT.t_rot, 12)
        ]
        np.testing.assert_allclose(products, products[0], rtol=1e-10)

    def test_tau_beyond_rotation(self):
        with pytest.raises(InvalidParameter):
            drum_shot_noise_sensitivity(300e-6, ROT, SENSOR)

    def test_unknown_variant(self):
        with pytest.raises(InvalidParameter):
            drum_shot_noise_sensitivity(SEQ.tau, ROT, SENSOR, 'doubled')


class TestRamsey:
    def test_ideal(self):
        assert ideal_ramsey_sensitivity(SENSOR) == pytest.approx(122e-9, rel=0.10)
        assert ideal_ramsey_sensitivity(SENSOR) == pytest.approx(128.8e-9, rel=1e-3)

    def test_ideal_scales_with_root_t2_star(self):
        longer = replace(SENSOR, t2_star=4 * SENSOR.t2_star)
        assert ideal_ramsey_sensitivity(longer) == pytest.approx(ideal_ramsey_sensitivity(SENSOR) / 2)

    def test_dead_time_costs(self):
        with_dead_time = ramsey_sensitivity(SENSOR.t2_star, SENSOR, 4.4e-6)
        assert math.isfinite(with_dead_time)
        assert with_dead_time > ideal_ramsey_sensitivity(SENSOR)

    def test_long_dead_time_limit(self):
        tau = SENSOR.t2_star
        ratio = ramsey_sensitivity(tau, SENSOR, 4e-3) / ramsey_sensitivity(tau, SENSOR, 1e-3)
        assert ratio == pytest.approx(2.0, rel=1e-3)

    def test_zero_dead_time(self):
        tau = SENSOR.t2_star
        expected = math.e / (SENSOR.gamma_e * 0.1 * math.sqrt(tau))
        assert ramsey_sensitivity(tau, SENSOR, 0.0) == pytest.approx(expected)

    def test_demonstrated_drum_ratio(self):
        assert ideal_ramsey_sensitivity(SENSOR) / 28e-9 == pytest.approx(4.5, rel=0.05)


class TestGain:
    def test_ten_times_threshold(self):
        sensor = replace(SENSOR, t2=62 * SENSOR.t2_star)
        assert gain_ratio(sensor) == pytest.approx(0.100, abs=0.002)

    def test_coherence_ratio(self):
        assert coherence_ratio(SENSOR) == pytest.approx(26.3, rel=0.02)

    def test_drum_always_wins_for_valid_sensor(self):
        sensor = replace(SENSOR, t2=1.0001 * SENSOR.t2_star)
        assert gain_ratio(sensor) < 1


class TestOperationalSensitivity:
    def test_injected_noise(self):
        rng = np.random.default_rng(12)
        sigma, slope, t = 0.01, 2e7, 1e-3
        samples = rng.normal(0.0, sigma, 10_000)
        assert operational_sensitivity(samples, slope, t) == pytest.approx(sigma * math.sqrt(t) / slope, rel=0.05)

    def test_noiseless_series(self):
        assert operational_sensitivity(np.full(20, 0.3), 1e7, 1e-3) == 0.0

    def test_short_identical_series(self):
        with pytest.raises(DegenerateSeries):
            operational_sensitivity([0.1, 0.1, 0.1], 1e7, 1e-3)

    def test_needs_two_samples(self):
        with pytest.raises(InsufficientSamples):
            operational_sensitivity([0.1], 1e7, 1e-3)

    def test_zero_slope(self):
        with pytest.raises(ZeroSlope):
            operational_sensitivity([0.1, 0.2], 0.0, 1e-3)


class TestReport:
    def test_fields(self):
        report = build_report(SEQ, SENSOR, ROT)
        assert report.slope == pytest.approx(drum_slope(SEQ.tau, ROT, SENSOR))
        assert report.readout_efficiency == 0.1
        assert report.ideal_ramsey < report.ramsey_operational
        assert report.coherence_ratio == pytest.approx(coherence_ratio(SENSOR))
        assert report.params['tau'] == SEQ.tau

    def test_operational_optional(self):
        assert 'operational' not in build_report(SEQ, SENSOR, ROT).to_dict()
        assert build_report(SEQ, SENSOR, ROT, operational=25e-9).to_dict()['operational'] == 25e-9

    def test_rejects_non_positive_operational(self):
        with pytest.raises(InvalidParameter):
            build_report(SEQ, SENSOR, ROT, operational=0.0)

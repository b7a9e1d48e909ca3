#!/usr/bin/env python3
"""
Tests for the core model: configuration types, up-converted shift,
pseudo-field and 13C revival timing.
"""

import logging
import math

import numpy as np
import pytest

from src.core import constants
from src.core.errors import InvalidParameter, NegativeBiasField, NonPositiveEffectiveField
from src.core.model import (
    FieldConfig,
    ReadoutModel,
    RotationState,
    SensorConfig,
    bias_field_for_tau,
    effective_larmor_frequency,
    pseudo_field,
    revival_time,
    up_converted_shift,
)

SENSOR = SensorConfig()
ROT = RotationState.from_speed_hz(3750.0)


class TestConfigTypes:
    def test_defaults_validate(self):
        assert SENSOR.t2 > SENSOR.t2_star > 0
        assert SENSOR.readout.c_override == 0.1
        assert SENSOR.sin_theta == pytest.approx(0.503, abs=1e-3)

    @pytest.mark.parametrize("kwargs", [
        {'theta_nv': -0.1},
        {'theta_nv': 2.0},
        {'t2': 100e-9},
        {'n_exp': 0.0},
        {'gamma_e': -1.0},
        {'gamma_c13': 0.0},
    ])
    def test_sensor_rejects_invalid(self, kwargs):
        with pytest.raises(InvalidParameter):
            SensorConfig(**kwargs)

    @pytest.mark.parametrize("kwargs", [
        {'contrast_eps': 0.0},
        {'contrast_eps': 1.0},
        {'count_rate': -5.0},
        {'t_laser': 0.0},
        {'c_override': 1.5},
        {'c_override': 0.0},
    ])
    def test_readout_rejects_invalid(self, kwargs):
        with pytest.raises(InvalidParameter):
            ReadoutModel(**kwargs)

    def test_rotation_period(self):
        assert ROT.t_rot == pytest.approx(1 / 3750.0, rel=1e-12)
        assert RotationState.from_speed_hz(-3750.0).t_rot == pytest.approx(ROT.t_rot, rel=1e-12)
        assert ROT.speed_hz == pytest.approx(3750.0)

    def test_rotation_period_undefined_at_rest(self):
        with pytest.raises(InvalidParameter):
            RotationState(omega_rot=0.0).t_rot

    def test_field_rejects_non_finite(self):
        with pytest.raises(InvalidParameter):
            FieldConfig(b_x=math.inf)

    def test_strong_transverse_field_warns(self, caplog):
        with caplog.at_level(logging.WARNING):
            FieldConfig(b_z=1e-3, b_x=2e-4)
        assert "weak-field" in caplog.text

    def test_nulled_field_does_not_warn(self, caplog):
        with caplog.at_level(logging.WARNING):
            FieldConfig(b_z=1e-3, b_x=2e-4, b_x0=2e-4)
        assert caplog.text == ""


class TestUpConvertedShift:
    def test_no_transverse_field(self):
        t = np.linspace(0, 1e-3, 17)
        np.testing.assert_array_equal(up_converted_shift(t, SENSOR, ROT, FieldConfig()), 0.0)

    def test_peak_value(self):
        fields = FieldConfig(b_x=1e-6)
        t = ROT.phi0 / ROT.omega_rot
        shift = up_converted_shift(t, SENSOR, ROT, fields)
        assert shift == pytest.approx(constants.GAMMA_E * 1e-6 * math.sin(constants.THETA_NV), rel=1e-12)
        assert shift == pytest.approx(2 * math.pi * 28e3 * 0.503, rel=1e-3)

    def test_axis_aligned_nv_sees_nothing(self):
        sensor = SensorConfig(theta_nv=0.0)
        t = np.linspace(0, 1e-3, 17)
        np.testing.assert_array_equal(up_converted_shift(t, sensor, ROT, FieldConfig(b_x=1e-6)), 0.0)

    def test_periodic_in_rotation(self):
        fields = FieldConfig(b_x=1e-6, b_y=-0.5e-6)
        t = np.linspace(0, 3e-4, 31)
        np.testing.assert_allclose(
            up_converted_shift(t + ROT.t_rot, SENSOR, ROT, fields),
            up_converted_shift(t, SENSOR, ROT, fields),
            rtol=1e-12, atol=1e-12 * constants.GAMMA_E * 1e-6,
        )

    def test_linear_in_field(self):
        t = np.linspace(0, 3e-4, 31)
        single = up_converted_shift(t, SENSOR, ROT, FieldConfig(b_x=1e-6))
        double = up_converted_shift(t, SENSOR, ROT, FieldConfig(b_x=2e-6))
        np.testing.assert_allclose(double, 2 * single, rtol=1e-14)

    def test_nulling_offsets_cancel(self):
        t = np.linspace(0, 3e-4, 31)
        fields = FieldConfig(b_x=1e-6, b_y=2e-6, b_x0=1e-6, b_y0=2e-6)
        np.testing.assert_array_equal(up_converted_shift(t, SENSOR, ROT, fields), 0.0)


class TestPseudoFieldAndRevival:
    def test_pseudo_field(self):
        assert pseudo_field(ROT, SENSOR) == pytest.approx(350.1e-6, rel=1e-3)
        assert pseudo_field(RotationState(omega_rot=0.0), SENSOR) == 0.0

    def test_pseudo_field_is_odd(self):
        reverse = RotationState.from_speed_hz(-3750.0)
        assert pseudo_field(reverse, SENSOR) == -pseudo_field(ROT, SENSOR)

    def test_effective_larmor(self):
        assert effective_larmor_frequency(0.7e-3, ROT, SENSOR) == pytest.approx(10.71e6 * 0.7e-3 + 3750.0)

    def test_operating_point_revival(self):
        tau = revival_time(0.7e-3, ROT, SENSOR)
        assert tau == pytest.approx(177.8e-6, rel=1e-3)
        assert tau == pytest.approx(180e-6, rel=0.02)

    def test_subtractive_rotation_revival(self):
        tau = revival_time(2.68e-3, RotationState.from_speed_hz(-3750.0), SENSOR)
        assert tau == pytest.approx(80.2e-6, rel=2e-3)

    def test_doubling_field_halves_tau(self):
        still = RotationState(omega_rot=0.0)
        assert revival_time(2e-3, still, SENSOR) == pytest.approx(revival_time(1e-3, still, SENSOR) / 2, rel=1e-14)

    def test_higher_revivals_scale(self):
        assert revival_time(1e-3, ROT, SENSOR, n_c=3) == pytest.approx(3 * revival_time(1e-3, ROT, SENSOR), rel=1e-14)

    def test_non_positive_effective_field(self):
        with pytest.raises(NonPositiveEffectiveField):
            revival_time(-0.5e-3, ROT, SENSOR)

    @pytest.mark.parametrize("n_c", [0, -1, 1.5])
    def test_revival_index_must_be_positive_integer(self, n_c):
        with pytest.raises(InvalidParameter):
            revival_time(1e-3, ROT, SENSOR, n_c=n_c)

    def test_bias_field_inverts_operating_point(self):
        tau = revival_time(0.7e-3, ROT, SENSOR)
        assert bias_field_for_tau(tau, ROT, SENSOR) == pytest.approx(0.7e-3, rel=1e-12)

    def test_round_trip_grid(self):
        for b_z in np.linspace(0.1e-3, 10e-3, 25):
            for n_c in (1, 2, 3, 4):
                for rot in (ROT, RotationState.from_speed_hz(-500.0)):
                    tau = revival_time(b_z, rot, SENSOR, n_c)
                    assert bias_field_for_tau(tau, rot, SENSOR, n_c) == pytest.approx(b_z, rel=1e-12)

    def test_long_tau_needs_negative_bias(self):
        with pytest.raises(NegativeBiasField):
            bias_field_for_tau(1.0, ROT, SENSOR)

#!/usr/bin/env python3
"""
Core Model
Configuration types for the rotating-diamond sensor and the up-conversion,
pseudo-field and 13C revival relations built on them.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from src.core import constants
from src.core.errors import InvalidParameter, NegativeBiasField, NonPositiveEffectiveField

logger = logging.getLogger(__name__)


def _require(condition, message):
    if not condition:
        raise InvalidParameter(message)


@dataclass(frozen=True)
class ReadoutModel:
    """Photon readout: count rate, optical contrast, integration window, optional fixed C"""

    count_rate: float = constants.COUNT_RATE
    contrast_eps: float = constants.CONTRAST_EPS
    t_laser: float = constants.T_LASER
    c_override: Optional[float] = constants.C_WORKING

    def __post_init__(self):
        _require(self.count_rate > 0, f"count_rate must be positive, got {self.count_rate}")
        _require(0 < self.contrast_eps < 1, f"contrast_eps must lie in (0, 1), got {self.contrast_eps}")
        _require(self.t_laser > 0, f"t_laser must be positive, got {self.t_laser}")
        if self.c_override is not None:
            _require(0 < self.c_override <= 1, f"c_override must lie in (0, 1], got {self.c_override}")


@dataclass(frozen=True)
class SensorConfig:
    """NV orientation, gyromagnetic ratios, coherence times and readout of one sensor"""

    theta_nv: float = constants.THETA_NV
    gamma_e: float = constants.GAMMA_E
    gamma_c13: float = constants.GAMMA_C13
    d_zfs: float = constants.D_ZFS
    t2: float = constants.T2
    t2_star: float = constants.T2_STAR
    n_exp: float = constants.N_EXP
    ramsey_exp: float = constants.RAMSEY_EXP
    readout: ReadoutModel = field(default_factory=ReadoutModel)

    def __post_init__(self):
        _require(0 <= self.theta_nv <= math.pi / 2, f"theta_nv must lie in [0, pi/2], got {self.theta_nv}")
        _require(self.t2_star > 0, f"t2_star must be positive, got {self.t2_star}")
        _require(self.t2 > self.t2_star, f"t2 ({self.t2}) must exceed t2_star ({self.t2_star})")
        _require(self.n_exp > 0, f"n_exp must be positive, got {self.n_exp}")
        _require(self.ramsey_exp > 0, f"ramsey_exp must be positive, got {self.ramsey_exp}")
        _require(self.gamma_e > 0, f"gamma_e must be positive, got {self.gamma_e}")
        _require(self.gamma_c13 > 0, f"gamma_c13 must be positive, got {self.gamma_c13}")

    @property
    def sin_theta(self):
        return math.sin(self.theta_nv)

    def echo_envelope(self, tau):
        """Spin-echo decay exp(-(tau/T2)^n)"""
        return np.exp(-((np.asarray(tau) / self.t2) ** self.n_exp))


@dataclass(frozen=True)
class RotationState:
    """Signed rotation rate (positive adds to the 13C Larmor precession) and initial phase"""

    omega_rot: float = constants.OMEGA_ROT
    phi0: float = math.pi / 2

    def __post_init__(self):
        _require(math.isfinite(self.omega_rot), f"omega_rot must be finite, got {self.omega_rot}")
        _require(math.isfinite(self.phi0), f"phi0 must be finite, got {self.phi0}")

    @classmethod
    def from_speed_hz(cls, speed_hz, phi0=math.pi / 2):
        return cls(omega_rot=2 * math.pi * speed_hz, phi0=phi0)

    @property
    def speed_hz(self):
        return self.omega_rot / (2 * math.pi)

    @property
    def t_rot(self):
        if self.omega_rot == 0:
            raise InvalidParameter("rotation period is undefined for omega_rot = 0")
        return 2 * math.pi / abs(self.omega_rot)


@dataclass(frozen=True)
class FieldConfig:
    """Axial bias field, transverse test fields and their nulling offsets (T)"""

    b_z: float = constants.B_Z
    b_x: float = 0.0
    b_y: float = 0.0
    b_x0: float = 0.0
    b_y0: float = 0.0

    def __post_init__(self):
        for name in ("b_z", "b_x", "b_y", "b_x0", "b_y0"):
            value = getattr(self, name)
            _require(math.isfinite(value), f"{name} must be finite, got {value}")
        b_perp = math.hypot(*transverse_field(self))
        if b_perp > 0 and b_perp > constants.WEAK_FIELD_RATIO * abs(self.b_z):
            logger.warning(
                f"⚠️ Transverse field {fmt_field(b_perp)} exceeds 10% of B_z = {fmt_field(self.b_z)}; "
                "weak-field approximation may not hold"
            )


def transverse_field(fields):
    """Net transverse field (B_x - B_x0, B_y - B_y0) after nulling"""
    return fields.b_x - fields.b_x0, fields.b_y - fields.b_y0


def up_converted_shift(t, sensor, rot, fields):
    """Time-dependent Zeeman shift of the m_S = -1 transition in the rotating frame (rad/s).

    The lab-frame transverse field appears at the rotation frequency:
    gamma_e sin(theta_NV) [B_x cos(w t - phi0) + B_y sin(w t - phi0)].
    """
    b_x, b_y = transverse_field(fields)
    angle = rot.omega_rot * np.asarray(t) - rot.phi0
    return sensor.gamma_e * sensor.sin_theta * (b_x * np.cos(angle) + b_y * np.sin(angle))


def pseudo_field(rot, sensor):
    """Rotational pseudo-field B_omega = (omega_rot / 2pi) / gamma_13, signed (T)"""
    return rot.speed_hz / sensor.gamma_c13


def effective_larmor_frequency(b_z, rot, sensor):
    """13C Larmor frequency gamma_13 (B_z + B_omega) in Hz"""
    return sensor.gamma_c13 * (b_z + pseudo_field(rot, sensor))


def revival_time(b_z, rot, sensor, n_c=1):
    """Echo time of the n_c-th 13C revival; n_c = 1 is twice the effective Larmor period"""
    if n_c < 1 or int(n_c) != n_c:
        raise InvalidParameter(f"n_c must be a positive integer, got {n_c}")
    larmor = effective_larmor_frequency(b_z, rot, sensor)
    if larmor <= 0:
        raise NonPositiveEffectiveField(
            f"B_z + B_omega = {fmt_field(b_z + pseudo_field(rot, sensor))} is not positive"
        )
    return 2 * n_c / larmor


def bias_field_for_tau(tau, rot, sensor, n_c=1):
    """Bias field B_z that puts the n_c-th revival at tau (inverse of revival_time)"""
    if tau <= 0:
        raise InvalidParameter(f"tau must be positive, got {tau}")
    if n_c < 1 or int(n_c) != n_c:
        raise InvalidParameter(f"n_c must be a positive integer, got {n_c}")
    b_z = 2 * n_c / (sensor.gamma_c13 * tau) - pseudo_field(rot, sensor)
    if b_z <= 0:
        raise NegativeBiasField(
            f"tau = {fmt_time(tau)} needs B_z = {fmt_field(b_z)}; the pseudo-field "
            f"{fmt_field(pseudo_field(rot, sensor))} alone exceeds the required Larmor rate"
        )
    return b_z


# Display helpers, logs only

def fmt_field(b):
    return f"{b * 1e6:.4g} µT"


def fmt_freq(hz):
    return f"{hz / 1e3:.4g} kHz"


def fmt_time(t):
    return f"{t * 1e6:.4g} µs"

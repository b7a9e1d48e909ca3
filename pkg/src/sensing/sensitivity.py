#!/usr/bin/env python3
"""
Sensitivity
Analytic DRUM and Ramsey sensitivities, the DRUM/Ramsey gain and the
operational sensitivity of a repeated contrast series.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from src.core.errors import DegenerateSeries, InsufficientSamples, InvalidParameter, ZeroSlope
from src.sensing.readout_noise import readout_efficiency

logger = logging.getLogger(__name__)

VARIANTS = ('fixed', 'pre_penalty', 'normalized')


@dataclass(frozen=True)
class SensitivityReport:
    """Slope and sensitivities at one operating point (T Hz^-1/2 throughout)"""

    slope: float
    shot_noise_limit: float
    amplitude: float = 1.0
    variant: str = 'fixed'
    readout_efficiency: float = 0.0
    ramsey_operational: Optional[float] = None
    ideal_ramsey: Optional[float] = None
    gain_ratio: Optional[float] = None
    coherence_ratio: Optional[float] = None
    operational: Optional[float] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.slope < 0:
            raise InvalidParameter(f"slope must be non-negative, got {self.slope}")
        for name in ('shot_noise_limit', 'ramsey_operational', 'ideal_ramsey', 'operational'):
            value = getattr(self, name)
            if value is not None and not (value > 0 and math.isfinite(value)):
                raise InvalidParameter(f"{name} must be positive and finite, got {value}")

    def to_dict(self):
        report = asdict(self)
        if self.operational is None:
            del report['operational']
        return report


def _efficiency(sensor, efficiency):
    return readout_efficiency(sensor.readout) if efficiency is None else efficiency


def drum_slope(tau, rot, sensor, amplitude=1.0):
    """Mid-fringe slope dS/dB (contrast per T): (4A gamma_e sin(theta)/w) e^{-(tau/T2)^n} sin^2(w tau/4)"""
    if not tau > 0:
        raise InvalidParameter(f"tau must be positive, got {tau}")
    omega = abs(rot.omega_rot)
    if omega == 0:
        raise InvalidParameter("DRUM slope needs a non-zero rotation rate")
    trig = math.sin(omega * tau / 4) ** 2
    return 4 * amplitude * sensor.gamma_e * sensor.sin_theta / omega * float(sensor.echo_envelope(tau)) * trig


def drum_shot_noise_sensitivity(tau, rot, sensor, variant='fixed', efficiency=None):
    """Shot-noise limited DRUM sensitivity.

    'fixed' has numerator pi*e, 'pre_penalty' pi*e^{(tau/T2)^n} and
    'normalized' twice the pre-penalty value.
    """
    t_rot = rot.t_rot
    if not 0 < tau <= t_rot:
        raise InvalidParameter(f"tau must lie in (0, t_rot = {t_rot:.6g} s], got {tau}")
    if variant not in VARIANTS:
        raise InvalidParameter(f"unknown sensitivity variant {variant!r}")

    c = _efficiency(sensor, efficiency)
    if variant == 'fixed':
        numerator = math.pi * math.e
    else:
        numerator = math.pi * math.exp((tau / sensor.t2) ** sensor.n_exp)
        if variant == 'normalized':
            numerator *= 2
    trig = math.sin(math.pi * tau / (2 * t_rot)) ** 2
    return numerator / (4 * c * sensor.gamma_e * sensor.sin_theta * trig * math.sqrt(t_rot))


def ramsey_sensitivity(tau, sensor, t_dead, efficiency=None):
    """Ramsey sensitivity with dead time: e^{tau/T2*}/(gamma_e C) sqrt(tau + t_D)/tau"""
    if not tau > 0:
        raise InvalidParameter(f"tau must be positive, got {tau}")
    if t_dead < 0:
        raise InvalidParameter(f"t_dead must be non-negative, got {t_dead}")
    c = _efficiency(sensor, efficiency)
    return math.exp(tau / sensor.t2_star) / (sensor.gamma_e * c) * math.sqrt(tau + t_dead) / tau


def ideal_ramsey_sensitivity(sensor, efficiency=None):
    """Zero-dead-time Ramsey limit e/(2 gamma_e C sqrt(T2*))"""
    c = _efficiency(sensor, efficiency)
    return math.e / (2 * sensor.gamma_e * c * math.sqrt(sensor.t2_star))


def coherence_ratio(sensor):
    return math.sqrt(sensor.t2 / sensor.t2_star)


def gain_ratio(sensor):
    """delta_B DRUM / delta_B Ramsey = (pi/4) sqrt(T2*/T2); below 1 DRUM wins"""
    return math.pi / 4 / coherence_ratio(sensor)


def operational_sensitivity(samples, slope, t_per_sample):
    """Sample std over slope, scaled by sqrt(t_per_sample)"""
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        raise InsufficientSamples(f"need at least 2 samples, got {samples.size}")
    if slope == 0:
        raise ZeroSlope("operational sensitivity needs a non-zero slope")
    if slope < 0:
        raise InvalidParameter(f"slope must be positive, got {slope}")
    if not t_per_sample > 0:
        raise InvalidParameter(f"t_per_sample must be positive, got {t_per_sample}")
    if np.all(samples == samples[0]):
        if samples.size < 10:
            raise DegenerateSeries(f"all {samples.size} samples are identical")
        return 0.0
    return float(np.std(samples, ddof=1)) * math.sqrt(t_per_sample) / slope


def build_report(seq, sensor, rot, amplitude=1.0, variant='fixed', operational=None, efficiency=None):
    """Assemble a SensitivityReport at the sequence's tau"""
    c = _efficiency(sensor, efficiency)
    report = SensitivityReport(
        slope=drum_slope(seq.tau, rot, sensor, amplitude),
        shot_noise_limit=drum_shot_noise_sensitivity(seq.tau, rot, sensor, variant, c),
        amplitude=amplitude,
        variant=variant,
        readout_efficiency=c,
        ramsey_operational=ramsey_sensitivity(sensor.t2_star, sensor, seq.t_dead, c),
        ideal_ramsey=ideal_ramsey_sensitivity(sensor, c),
        gain_ratio=gain_ratio(sensor),
        coherence_ratio=coherence_ratio(sensor),
        operational=operational,
        params={
            'tau': seq.tau,
            'omega_rot': rot.omega_rot,
            'readout_efficiency': c,
            't2': sensor.t2,
            'n_exp': sensor.n_exp,
            'theta_nv': sensor.theta_nv,
        },
    )
    logger.info(
        f"DRUM {report.shot_noise_limit * 1e9:.3g} nT/√Hz vs ideal Ramsey "
        f"{report.ideal_ramsey * 1e9:.3g} nT/√Hz (gain ratio {report.gain_ratio:.3g})"
    )
    return report

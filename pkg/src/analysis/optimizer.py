#!/usr/bin/env python3
"""
Optimizer
Sensing time that maximizes the DRUM slope, the matching bias field, and
sensitivity sweeps over rotation speed.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace

import numpy as np

from src.core.errors import DrumError, InvalidParameter, ProfileRangeError, UnreachableGain
from src.core.model import RotationState, bias_field_for_tau, fmt_freq, fmt_time
from src.sensing.sensitivity import drum_shot_noise_sensitivity, drum_slope

logger = logging.getLogger(__name__)

GRID_POINTS = 256
GOLDEN = (math.sqrt(5) - 1) / 2

# Default T2 profile: 250 us at 3.75 kHz, falling 12 ns per Hz of rotation speed
DEFAULT_PROFILE_SPEEDS = (1000.0, 6000.0)
DEFAULT_PROFILE_T2 = (283e-6, 223e-6)


@dataclass(frozen=True)
class T2Profile:
    """T2 versus rotation speed |omega_rot| / 2pi (Hz -> s)"""

    speeds_hz: tuple
    t2_values: tuple
    mode: str = 'linear'
    extrapolate: bool = False

    def __post_init__(self):
        if self.mode not in ('linear', 'constant'):
            raise InvalidParameter(f"unknown T2 profile mode {self.mode!r}")
        if len(self.speeds_hz) != len(self.t2_values):
            raise InvalidParameter("T2 profile speeds and values differ in length")
        if not self.t2_values or any(not t2 > 0 for t2 in self.t2_values):
            raise InvalidParameter("T2 profile values must be positive")
        if self.mode == 'linear':
            if len(self.speeds_hz) < 2:
                raise InvalidParameter("linear T2 profile needs at least two points")
            if np.any(np.diff(self.speeds_hz) <= 0):
                raise InvalidParameter("T2 profile speeds must be strictly increasing")

    @classmethod
    def constant(cls, t2):
        return cls(speeds_hz=(0.0,), t2_values=(t2,), mode='constant')

    @classmethod
    def default(cls):
        return cls(DEFAULT_PROFILE_SPEEDS, DEFAULT_PROFILE_T2)

    @classmethod
    def from_csv(cls, path, extrapolate=False):
        from src.utils.file_io import read_t2_profile

        speeds, t2_values = read_t2_profile(path)
        return cls(tuple(speeds), tuple(t2_values), extrapolate=extrapolate)

    def t2_at(self, speed_hz):
        if self.mode == 'constant':
            return self.t2_values[0]
        speed = abs(speed_hz)
        low, high = self.speeds_hz[0], self.speeds_hz[-1]
        if low <= speed <= high:
            return float(np.interp(speed, self.speeds_hz, self.t2_values))
        if not self.extrapolate:
            raise ProfileRangeError(
                f"{fmt_freq(speed)} lies outside the T2 profile [{fmt_freq(low)}, {fmt_freq(high)}]"
            )
        i = (0, 1) if speed < low else (-2, -1)
        s0, s1 = self.speeds_hz[i[0]], self.speeds_hz[i[1]]
        t0, t1 = self.t2_values[i[0]], self.t2_values[i[1]]
        t2 = t0 + (t1 - t0) * (speed - s0) / (s1 - s0)
        if not t2 > 0:
            raise ProfileRangeError(f"extrapolated T2 at {fmt_freq(speed)} is not positive")
        logger.warning(f"⚠️ Extrapolating T2 profile to {fmt_freq(speed)}: {fmt_time(t2)}")
        return t2


@dataclass(frozen=True)
class OperatingPoint:
    omega_rot: float
    tau_opt: float
    b_z: float
    slope_at_opt: float
    sensitivity_at_opt: float
    t2: float = 0.0

    def __post_init__(self):
        t_rot = 2 * math.pi / abs(self.omega_rot)
        if not 0 < self.tau_opt <= t_rot * (1 + 1e-12):
            raise InvalidParameter(f"tau_opt {self.tau_opt} outside (0, t_rot]")
        if not self.slope_at_opt > 0:
            raise InvalidParameter(f"slope at optimum must be positive, got {self.slope_at_opt}")

    @property
    def speed_hz(self):
        return self.omega_rot / (2 * math.pi)


@dataclass(frozen=True)
class SweepResult:
    points: tuple
    failures: tuple = field(default_factory=tuple)

    def sensitivity_spread(self):
        """Ratio of worst to best sensitivity across the sweep"""
        values = [p.sensitivity_at_opt for p in self.points]
        return max(values) / min(values)


def golden_section_max(f, a, b, tol=1e-12):
    """Maximum of a unimodal f on [a, b]; returns (x, f(x))"""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol * max(abs(a), abs(b), 1.0):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


def optimal_tau(rot, sensor, amplitude=1.0, variant='fixed', grid_points=GRID_POINTS):
    """Global maximum of the DRUM slope over tau in (0, t_rot].

    A uniform coarse grid brackets the peak, golden-section search refines it.
    The bias field places the first 13C revival at tau_opt.
    """
    t_rot = rot.t_rot

    def objective(tau):
        return drum_slope(tau, rot, sensor, amplitude)

    grid = t_rot * np.arange(1, grid_points + 1) / grid_points
    values = [objective(tau) for tau in grid]
    i = int(np.argmax(values))
    low = grid[i - 1] if i > 0 else grid[0] * 1e-6
    high = grid[i + 1] if i + 1 < grid_points else t_rot
    tau, slope = golden_section_max(objective, low, high)
    if values[i] >= slope:
        tau, slope = float(grid[i]), values[i]

    point = OperatingPoint(
        omega_rot=rot.omega_rot,
        tau_opt=float(tau),
        b_z=bias_field_for_tau(tau, rot, sensor, n_c=1),
        slope_at_opt=slope,
        sensitivity_at_opt=drum_shot_noise_sensitivity(tau, rot, sensor, variant),
        t2=sensor.t2,
    )
    logger.debug(f"{fmt_freq(rot.speed_hz)}: tau_opt = {fmt_time(point.tau_opt)}")
    return point


def speed_sweep(speeds, profile, sensor, model=None, variant='fixed', max_workers=4):
    """Optimal operating point per rotation speed (Hz), sorted by speed.

    Failing speeds are collected in SweepResult.failures and the sweep continues.
    """
    speeds = sorted(set(float(s) for s in speeds))
    if not speeds:
        raise InvalidParameter("speed sweep needs at least one speed")
    if model is not None:
        sensor = replace(sensor, readout=model)

    def evaluate(speed):
        t2 = profile.t2_at(speed)
        return optimal_tau(RotationState.from_speed_hz(speed), replace(sensor, t2=t2), variant=variant)

    results = {}
    failures = {}
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        future_to_speed = {executor.submit(evaluate, speed): speed for speed in speeds}
        for future in as_completed(future_to_speed):
            speed = future_to_speed[future]
            try:
                results[speed] = future.result()
            except DrumError as e:
                logger.warning(f"⚠️ Speed {fmt_freq(speed)} failed: {e}")
                failures[speed] = str(e)

    return SweepResult(
        points=tuple(results[s] for s in speeds if s in results),
        failures=tuple((s, failures[s]) for s in speeds if s in failures),
    )


def required_t2_for_gain(target_gain, sensor):
    """T2 at which DRUM beats Ramsey by target_gain: T2* (pi g / 4)^2"""
    if not target_gain > 0:
        raise InvalidParameter(f"target_gain must be positive, got {target_gain}")
    t2 = sensor.t2_star * (math.pi * target_gain / 4) ** 2
    if t2 <= sensor.t2_star:
        raise UnreachableGain(
            f"gain {target_gain} needs T2 = {fmt_time(t2)}, not above T2* = {fmt_time(sensor.t2_star)}"
        )
    return t2

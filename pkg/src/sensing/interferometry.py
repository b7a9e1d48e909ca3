#!/usr/bin/env python3
"""
Interferometry
Echo phase accumulated under the up-converted field, echo and Ramsey contrast,
fringe synthesis, delay-controlled vector response and asynchronous averaging.
"""

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.integrate import quad
from scipy.special import j0

from src.core import constants
from src.core.errors import InvalidParameter, QuadratureFailure
from src.core.model import FieldConfig, up_converted_shift

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-12
PHASE_TOLERANCE = 1e-10


@dataclass(frozen=True)
class SequenceParams:
    """Spin-echo / Ramsey timing (s).

    t_del delays the sequence after the rotation trigger, shifting the
    effective rotation phase to phi0 + w t_del. The pi-pulse (t_pi) sits at
    the echo centre and must fit inside tau.
    """

    tau: float = constants.TAU
    t_del: float = 0.0
    t_dead: float = constants.RAMSEY_DEAD_TIME
    t_pi: float = constants.T_PI

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidParameter(f"tau must be positive, got {self.tau}")
        if self.t_dead < 0:
            raise InvalidParameter(f"t_dead must be non-negative, got {self.t_dead}")
        if self.t_pi < 0:
            raise InvalidParameter(f"t_pi must be non-negative, got {self.t_pi}")
        if self.t_pi >= self.tau:
            raise InvalidParameter(f"t_pi = {self.t_pi:.6g} s does not fit inside tau = {self.tau:.6g} s")
        if self.t_del < 0:
            raise InvalidParameter(f"t_del must be non-negative, got {self.t_del}")

    def check_fits(self, rot):
        """One DRUM sequence per rotation period: tau + t_dead <= t_rot"""
        if self.tau + self.t_dead > rot.t_rot:
            raise InvalidParameter(
                f"tau + t_dead = {self.tau + self.t_dead:.6g} s exceeds the rotation period {rot.t_rot:.6g} s"
            )


@dataclass(frozen=True)
class FringeScan:
    """Contrast as a function of applied field, with the settings that produced it"""

    field_values: tuple
    contrast_values: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.field_values) != len(self.contrast_values):
            raise InvalidParameter(
                f"field/contrast lengths differ: {len(self.field_values)} vs {len(self.contrast_values)}"
            )
        if len(self.field_values) == 0:
            raise InvalidParameter("fringe scan is empty")
        steps = np.diff(np.asarray(self.field_values, dtype=float))
        if len(steps) and not (np.all(steps > 0) or np.all(steps < 0)):
            raise InvalidParameter("field values must be strictly monotonic")

    def __len__(self):
        return len(self.field_values)

    def to_dict(self):
        return {
            'metadata': self.metadata,
            'field_T': [float(b) for b in self.field_values],
            'contrast': [float(s) for s in self.contrast_values],
        }


def _effective_rotation(rot, phi0, t_del=0.0):
    if rot.omega_rot == 0:
        raise InvalidParameter("DRUM phase needs a non-zero rotation rate")
    if phi0 is None and t_del == 0:
        return rot
    base = rot.phi0 if phi0 is None else float(phi0)
    return replace(rot, phi0=base + rot.omega_rot * t_del)


def _initial_phase(rot, phi0, t_del=0.0):
    """phi0 override (scalar or array) or the rotation's own phase, advanced by the trigger delay"""
    if rot.omega_rot == 0:
        raise InvalidParameter("DRUM phase needs a non-zero rotation rate")
    phase = np.asarray(rot.phi0 if phi0 is None else phi0, dtype=float)
    return phase + rot.omega_rot * t_del if t_del else phase


def _phase_amplitude(seq, sensor, omega):
    """4 gamma_e sin(theta) sin^2(w tau / 4) / w, the signed rad/T scale of the echo phase"""
    return 4 * sensor.gamma_e * sensor.sin_theta / omega * math.sin(omega * seq.tau / 4) ** 2


def echo_phase_numeric(b_x, seq, sensor, rot, phi0=None, b_z=constants.B_Z):
    """Echo phase by adaptive Gauss-Kronrod quadrature of the up-converted shift.

    Phi = int_{-tau/2}^{0} E dt - int_{0}^{tau/2} E dt, with the pi-pulse at t = 0.
    b_z is the axial field the weak-field check compares b_x against.
    Serves as the oracle for echo_phase_analytic.
    """
    rot = _effective_rotation(rot, phi0, seq.t_del)
    if b_x == 0 or sensor.sin_theta == 0:
        return 0.0
    fields = FieldConfig(b_z=b_z, b_x=b_x)

    def shift(t):
        return float(up_converted_shift(t, sensor, rot, fields))

    half = seq.tau / 2
    before = quad(shift, -half, 0.0, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200, full_output=1)
    after = quad(shift, 0.0, half, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200, full_output=1)
    for part in (before, after):
        if len(part) > 3:
            raise QuadratureFailure(f"echo phase quadrature did not converge: {part[3]}")

    phase = before[0] - after[0]
    error = before[1] + after[1]
    scale = sensor.gamma_e * abs(b_x) * sensor.sin_theta * seq.tau
    if error > max(PHASE_TOLERANCE, 1e-13 * scale):
        raise QuadratureFailure(f"echo phase error estimate {error:.3g} rad above tolerance")
    return phase


def echo_phase_analytic(b_x, seq, sensor, rot, phi0=None):
    """Closed-form echo phase -(4 gamma_e B_x sin(theta)/w) sin(phi0) sin^2(w tau / 4)"""
    phi = _initial_phase(rot, phi0, seq.t_del)
    return -_phase_amplitude(seq, sensor, rot.omega_rot) * np.asarray(b_x) * np.sin(phi)


def phase_per_tesla(seq, sensor, rot, phi0=None):
    """dPhi/dB_x of the echo phase (rad/T)"""
    return float(echo_phase_analytic(1.0, seq, sensor, rot, phi0))


def fringe_period(seq, sensor, rot, phi0=None):
    """Field period of the DRUM fringes (T)"""
    k = abs(phase_per_tesla(seq, sensor, rot, phi0))
    return math.inf if k == 0 else 2 * math.pi / k


def transverse_phase(b_x, b_y, seq, sensor, rot, phi0=None):
    """Echo phase from both transverse components; B_y enters a quarter turn later"""
    phi = _initial_phase(rot, phi0, seq.t_del)
    amplitude = _phase_amplitude(seq, sensor, rot.omega_rot)
    return -amplitude * (np.asarray(b_x) * np.sin(phi) + np.asarray(b_y) * np.cos(phi))


def echo_contrast(phase, seq, sensor, mid_fringe=False):
    """Normalised +/- pi/2 echo contrast exp(-(tau/T2)^n) cos(Phi).

    mid_fringe offsets the phase by pi/2 so the signal is linear in Phi around zero.
    """
    offset = math.pi / 2 if mid_fringe else 0.0
    return sensor.echo_envelope(seq.tau) * np.cos(np.asarray(phase) + offset)


def ramsey_contrast(detuning, tau, sensor):
    """Ramsey contrast exp(-(tau/T2*)^p) cos(detuning tau)"""
    if not tau > 0:
        raise InvalidParameter(f"tau must be positive, got {tau}")
    envelope = math.exp(-((tau / sensor.t2_star) ** sensor.ramsey_exp))
    return envelope * np.cos(np.asarray(detuning) * tau)


def _scan_metadata(kind, **parts):
    metadata = {'kind': kind}
    for name, value in parts.items():
        metadata[name] = asdict(value) if hasattr(value, '__dataclass_fields__') else value
    return metadata


def synthesize_fringes(b_range, seq, sensor, rot, phi0=None, mid_fringe=False, fields=None):
    """Noiseless DRUM fringe scan S(B_x) over applied B_x.

    fields carries the nulling offsets and a static B_y; the phase follows
    the net field (B_x - B_x0, B_y - B_y0).
    """
    rot = _effective_rotation(rot, phi0)
    fields = fields or FieldConfig()
    applied = np.atleast_1d(np.asarray(b_range, dtype=float))
    phase = transverse_phase(applied - fields.b_x0, fields.b_y - fields.b_y0, seq, sensor, rot)
    contrast = echo_contrast(phase, seq, sensor, mid_fringe)
    return FringeScan(
        field_values=tuple(applied.tolist()),
        contrast_values=tuple(np.atleast_1d(contrast).tolist()),
        metadata=_scan_metadata('drum', sequence=seq, rotation=rot, fields=fields, mid_fringe=mid_fringe),
    )


def synthesize_ramsey_fringes(b_range, tau, sensor):
    """Noiseless Ramsey fringe scan for a field along the NV axis (detuning gamma_e B)"""
    fields = np.atleast_1d(np.asarray(b_range, dtype=float))
    contrast = ramsey_contrast(sensor.gamma_e * fields, tau, sensor)
    return FringeScan(
        field_values=tuple(fields.tolist()),
        contrast_values=tuple(np.atleast_1d(contrast).tolist()),
        metadata=_scan_metadata('ramsey', tau=tau),
    )


def delay_scan(t_del_range, b_axis, seq, sensor, rot, axis_skew=0.0):
    """Signed fringe slope dPhi/dB (rad/T) versus trigger delay for an x or y test field.

    A delay t_del shifts the effective phase to phi0 + w t_del; x responds as
    sin(phi), y as cos(phi). axis_skew rotates the y coil away from orthogonal.
    Each scanned delay stands in for seq.t_del.
    """
    if b_axis not in ('x', 'y'):
        raise InvalidParameter(f"b_axis must be 'x' or 'y', got {b_axis!r}")
    _initial_phase(rot, None)
    quarter = 0.0 if b_axis == 'x' else math.pi / 2 + axis_skew
    k = _phase_amplitude(seq, sensor, rot.omega_rot)
    scan = []
    for t_del in t_del_range:
        phi = rot.phi0 + rot.omega_rot * t_del + quarter
        scan.append((float(t_del), -k * math.sin(phi)))
    return scan


def quadrature_angle(x_scan, y_scan, omega_rot):
    """Phase lag (degrees) of the y delay response behind the x response"""

    def response_phase(scan):
        t, r = np.asarray(scan, dtype=float).T
        design = np.column_stack([np.cos(omega_rot * t), np.sin(omega_rot * t), np.ones_like(t)])
        (a, b, _), *_ = np.linalg.lstsq(design, r, rcond=None)
        return math.atan2(a, b)

    diff = math.degrees(response_phase(y_scan) - response_phase(x_scan))
    return (diff + 180.0) % 360.0 - 180.0


def async_contrast(b_x, b_y, seq, sensor, rot):
    """Echo contrast averaged over a uniformly random rotation phase.

    <cos(a sin phi)> = J0(a), so the average depends on B_perp only and peaks at B_perp = 0.
    """
    _initial_phase(rot, None)
    k_max = abs(_phase_amplitude(seq, sensor, rot.omega_rot))
    b_perp = np.hypot(b_x, b_y)
    return sensor.echo_envelope(seq.tau) * j0(k_max * b_perp)


def async_contrast_bruteforce(b_x, b_y, seq, sensor, rot, n_phase=1024):
    """Direct average of the echo contrast over an n_phase-point phi0 grid"""
    phases = 2 * math.pi * np.arange(n_phase) / n_phase
    phase = transverse_phase(b_x, b_y, seq, sensor, rot, phi0=phases)
    return float(np.mean(echo_contrast(phase, seq, sensor)))


def async_contrast_map(bx_values, by_values, seq, sensor, rot, fields=None):
    """Asynchronous contrast over a grid of applied fields, rows indexed by B_y"""
    fields = fields or FieldConfig()
    bx = np.asarray(bx_values, dtype=float) - fields.b_x0
    by = np.asarray(by_values, dtype=float) - fields.b_y0
    grid_x, grid_y = np.meshgrid(bx, by)
    return async_contrast(grid_x, grid_y, seq, sensor, rot)


def locate_nulling_fields(bx_values, by_values, contrast_map):
    """Applied (B_x0, B_y0) at the maximum of an asynchronous contrast map"""
    contrast_map = np.asarray(contrast_map)
    iy, ix = np.unravel_index(np.argmax(contrast_map), contrast_map.shape)
    return float(np.asarray(bx_values)[ix]), float(np.asarray(by_values)[iy])

#!/usr/bin/env python3
"""
Stability
Allan-deviation pipeline: polled contrast to frequency, cumulative phase,
overlapped and naive Allan deviation, synthetic noise and regime labels.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import allantools
import numpy as np

from src.core.errors import InsufficientData, InvalidParameter, ZeroSlope

logger = logging.getLogger(__name__)

# |S_n| above which the mid-fringe response is no longer linear in field
LINEAR_WINDOW = 0.25
MIN_SYNTH_SAMPLES = 16
NOISE_KINDS = ('white_frequency', 'random_walk_frequency', 'drift')
# allantools drops single-term estimates
MIN_TERMS = 2
# relative size of double-precision error in a second difference of the phase
ROUNDING_FLOOR = 64 * np.finfo(float).eps

# (nominal log-log slope, label)
REGIME_LABELS = (
    (-0.5, 'white-frequency'),
    (0.0, 'flicker'),
    (0.5, 'random-walk'),
    (1.0, 'linear-drift'),
)
LABEL_BAND = 0.15


@dataclass(frozen=True)
class ContrastSeries:
    """Mid-fringe contrast polled every poll_interval seconds"""

    samples: tuple
    poll_interval: float
    start_time: float = 0.0

    def __post_init__(self):
        if not self.poll_interval > 0:
            raise InvalidParameter(f"poll_interval must be positive, got {self.poll_interval}")
        if not np.all(np.isfinite(np.asarray(self.samples, dtype=float))):
            raise InvalidParameter("contrast samples must be finite")

    def __len__(self):
        return len(self.samples)

    @property
    def times(self):
        return self.start_time + self.poll_interval * np.arange(len(self.samples))


@dataclass(frozen=True)
class AdevCurve:
    m_values: tuple
    averaging_times: tuple
    deviations: tuple
    sample_counts: tuple
    skipped: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if np.any(np.diff(self.averaging_times) <= 0):
            raise InvalidParameter("averaging times must be strictly increasing")
        if any(d < 0 for d in self.deviations):
            raise InvalidParameter("Allan deviations must be non-negative")

    def __len__(self):
        return len(self.m_values)

    def deviations_tesla(self, gamma_e):
        """Magnetic Allan deviation (T) from the rad/s curve"""
        return tuple(d / gamma_e for d in self.deviations)


@dataclass(frozen=True)
class Regime:
    t_start: float
    t_end: float
    slope: Optional[float]
    label: str


def contrast_to_frequency(series, slope, sensor):
    """omega_n = gamma_e S_n / (dS/dB), in rad/s"""
    if slope == 0:
        raise ZeroSlope("cannot convert contrast to frequency with a zero slope")
    samples = np.asarray(series.samples, dtype=float)
    outside = int(np.count_nonzero(np.abs(samples) > LINEAR_WINDOW))
    if outside:
        logger.warning(
            f"⚠️ {outside} of {len(samples)} samples exceed |S| = {LINEAR_WINDOW}; "
            "mid-fringe response may be nonlinear"
        )
    return sensor.gamma_e * samples / slope


def cumulative_phase(frequencies, poll_interval):
    return np.cumsum(np.asarray(frequencies, dtype=float)) * poll_interval


def default_m_values(n):
    """Octaves 1, 2, 4, ... up to n/3"""
    values = []
    m = 1
    while m <= n / 3:
        values.append(m)
        m *= 2
    return values


def overlapped_adev(phase, poll_interval, m_values=None):
    """Overlapped Allan deviation of a phase record via allantools.oadev.

    sigma^2(m dT) = sum (phi_{i+2m} - 2 phi_{i+m} + phi_i)^2 / (2 (m dT)^2 (N - 2m)).
    m values leaving fewer than MIN_TERMS terms are skipped and listed on the
    curve. Deviations at or below the rounding floor of the record are 0.
    """
    phase = np.asarray(phase, dtype=float)
    n = len(phase)
    if n < 3:
        raise InsufficientData(f"Allan deviation needs at least 3 phase samples, got {n}")
    if m_values is None:
        m_values = default_m_values(n)

    fitting, skipped = [], []
    for m in sorted(set(int(v) for v in m_values)):
        terms = n - 2 * m
        if m < 1 or terms < MIN_TERMS:
            skipped.append((m, f"N - 2m = {terms} leaves fewer than {MIN_TERMS} terms"))
        else:
            fitting.append(m)

    if skipped:
        logger.warning(f"⚠️ Skipped {len(skipped)} averaging factors: {[m for m, _ in skipped]}")
    if not fitting:
        raise InsufficientData(f"no averaging factor fits a series of {n} samples")

    # integer taus at unit rate keep every m exact; seconds are applied after
    taus, devs, _, ns = allantools.oadev(phase, rate=1.0, data_type='phase', taus=np.asarray(fitting, dtype=float))
    kept = [int(round(t)) for t in taus]
    missing = sorted(set(fitting) - set(kept))
    if missing:
        skipped = sorted(skipped + [(m, "dropped by the estimator") for m in missing])

    times = np.asarray(kept, dtype=float) * poll_interval
    deviations = np.asarray(devs, dtype=float) / poll_interval
    floor = ROUNDING_FLOOR * float(np.max(np.abs(phase))) / times
    deviations = np.where(deviations <= floor, 0.0, deviations)
    return AdevCurve(
        tuple(kept),
        tuple(times.tolist()),
        tuple(deviations.tolist()),
        tuple(int(c) for c in ns),
        tuple(skipped),
    )


def non_overlapped_adev(phase, poll_interval, m):
    """Allan deviation from phase decimated by m (allantools.adev)"""
    phase = np.asarray(phase, dtype=float)
    terms = len(phase[2 * m::m])
    if terms < MIN_TERMS:
        raise InsufficientData(
            f"m = {m} leaves {len(phase[::m])} decimated samples, need {MIN_TERMS + 2}"
        )
    _, devs, _, _ = allantools.adev(phase, rate=1.0, data_type='phase', taus=[float(m)])
    return float(devs[0]) / poll_interval


def synthesize_noise(kind, magnitude, n_samples, poll_interval, rng_seed):
    """Seeded synthetic contrast series.

    white_frequency: iid N(0, magnitude^2); random_walk_frequency: cumulative
    sum of such steps; drift: linear ramp of magnitude per sample.
    """
    if kind not in NOISE_KINDS:
        raise InvalidParameter(f"unknown noise kind {kind!r}; expected one of {NOISE_KINDS}")
    if n_samples < MIN_SYNTH_SAMPLES:
        raise InvalidParameter(f"n_samples must be at least {MIN_SYNTH_SAMPLES}, got {n_samples}")
    if magnitude < 0:
        raise InvalidParameter(f"magnitude must be non-negative, got {magnitude}")

    rng = np.random.default_rng(rng_seed)
    if kind == 'drift':
        samples = magnitude * np.arange(n_samples, dtype=float)
    else:
        samples = rng.normal(0.0, 1.0, n_samples) * magnitude
        if kind == 'random_walk_frequency':
            samples = np.cumsum(samples)
    return ContrastSeries(tuple(samples.tolist()), poll_interval)


def _select(curve, m_min=None, m_max=None):
    m = np.asarray(curve.m_values, dtype=float)
    keep = np.asarray(curve.deviations) > 0
    if m_min is not None:
        keep &= m >= m_min
    if m_max is not None:
        keep &= m <= m_max
    return keep


def fit_slope(curve, m_min=None, m_max=None):
    """Log-log slope of sigma versus averaging time, weighted by sqrt((N - 2m)/m)"""
    keep = _select(curve, m_min, m_max)
    if np.count_nonzero(keep) < 2:
        raise InsufficientData("need at least 2 non-zero points to fit a slope")
    m = np.asarray(curve.m_values, dtype=float)[keep]
    weights = np.sqrt(np.asarray(curve.sample_counts, dtype=float)[keep] / m)
    x = np.log(np.asarray(curve.averaging_times)[keep])
    y = np.log(np.asarray(curve.deviations)[keep])
    return float(np.polyfit(x, y, 1, w=weights)[0])


def label_for_slope(slope):
    for nominal, label in REGIME_LABELS:
        if abs(slope - nominal) <= LABEL_BAND:
            return label
    return 'unlabeled'


def _line_fit(x, y):
    coeffs, residuals, *_ = np.polyfit(x, y, 1, full=True)
    sse = float(residuals[0]) if len(residuals) else 0.0
    return float(coeffs[0]), sse


def classify_regimes(curve, min_points=5):
    """Split the curve into one or two log-log linear regimes and label each.

    Octave points weigh equally. A second regime is reported only when it
    cuts the residual by 4x and the two slopes differ by more than 0.3.

    Labels by slope: -1/2 'white-frequency', 0 'flicker', +1/2 'random-walk'
    (random-walk frequency noise or drift that wanders), +1 'linear-drift'
    (a steady frequency ramp). Points with zero deviation carry no slope; a
    curve without enough of the rest is one 'unlabeled' regime.
    """
    keep = _select(curve)
    times = np.asarray(curve.averaging_times)[keep]
    if len(times) < min_points:
        all_times = curve.averaging_times
        slope = fit_slope(curve) if len(times) >= 2 else None
        return [Regime(all_times[0], all_times[-1], slope, 'unlabeled')]

    x = np.log(times)
    y = np.log(np.asarray(curve.deviations)[keep])
    slope, single_sse = _line_fit(x, y)

    best = None
    for k in range(min_points, len(x) - min_points + 1):
        left_slope, left_sse = _line_fit(x[:k], y[:k])
        right_slope, right_sse = _line_fit(x[k:], y[k:])
        if best is None or left_sse + right_sse < best[0]:
            best = (left_sse + right_sse, k, left_slope, right_slope)

    if best is not None:
        sse, k, left_slope, right_slope = best
        if sse < 0.25 * single_sse and abs(left_slope - right_slope) > 0.3:
            return [
                Regime(float(times[0]), float(times[k - 1]), left_slope, label_for_slope(left_slope)),
                Regime(float(times[k]), float(times[-1]), right_slope, label_for_slope(right_slope)),
            ]
    return [Regime(float(times[0]), float(times[-1]), slope, label_for_slope(slope))]

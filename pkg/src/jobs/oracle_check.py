#!/usr/bin/env python3
"""
Oracle Check
Compares each closed form against an independent reference: echo phase vs
quadrature, asynchronous contrast vs brute-force averaging, the overlapped
Allan estimator vs a direct loop, and Monte Carlo vs analytic sensitivity.
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from src.analysis.stability import non_overlapped_adev, overlapped_adev
from src.core.errors import OracleMismatch, UsageError
from src.core.model import RotationState
from src.jobs.drum_jobs import DrumJob
from src.sensing.interferometry import (
    SequenceParams,
    async_contrast,
    async_contrast_bruteforce,
    echo_phase_analytic,
    echo_phase_numeric,
    fringe_period,
    phase_per_tesla,
)
from src.sensing.readout_noise import matched_efficiency, mc_sensitivity, photons_per_readout
from src.sensing.sensitivity import drum_shot_noise_sensitivity

PHASE_TOLERANCE = 1e-9
ASYNC_TOLERANCE = 1e-6
ADEV_TOLERANCE = 1e-12
ASYNC_GRID = 41
MC_PERIODS = 4000


@dataclass(frozen=True)
class OracleResult:
    name: str
    max_error: float
    tolerance: float

    @property
    def passed(self):
        return self.max_error <= self.tolerance

    def row(self):
        return self.name, self.max_error, self.tolerance, self.passed


def check_echo_phase(n_tuples, rng, sensor, analytic=echo_phase_analytic, numeric=echo_phase_numeric):
    """Closed-form echo phase vs quadrature, error relative to the fringe amplitude"""
    worst = 0.0
    for _ in range(n_tuples):
        b_x = 10e-6 * rng.random()
        speed = 1000.0 + 5000.0 * rng.random()
        phi0 = 2 * math.pi * rng.random()
        rot = RotationState.from_speed_hz(speed)
        seq = SequenceParams(tau=rot.t_rot * (1.0 - 0.99 * rng.random()))

        scale = abs(phase_per_tesla(seq, sensor, rot, phi0=math.pi / 2)) * b_x
        if scale == 0:
            continue
        expected = numeric(b_x, seq, sensor, rot, phi0=phi0)
        actual = float(analytic(b_x, seq, sensor, rot, phi0=phi0))
        worst = max(worst, abs(actual - expected) / scale)
    return OracleResult('echo_phase', worst, PHASE_TOLERANCE)


def check_async_contrast(seq, sensor, rot, contrast=async_contrast, grid=ASYNC_GRID):
    """Bessel average vs a 1024-point phase average, and the peak at zero transverse field"""
    half_span = 1.5 * fringe_period(seq, sensor, rot)
    axis = np.linspace(-half_span, half_span, grid)
    bx, by = np.meshgrid(axis, axis)
    closed = np.asarray(contrast(bx, by, seq, sensor, rot), dtype=float)

    worst = 0.0
    for i in range(grid):
        for j in range(grid):
            brute = async_contrast_bruteforce(bx[i, j], by[i, j], seq, sensor, rot)
            worst = max(worst, abs(closed[i, j] - brute))

    center = grid // 2
    peak_excess = float(closed.max() - closed[center, center])
    return [
        OracleResult('async_bruteforce', worst, ASYNC_TOLERANCE),
        OracleResult('async_peak', peak_excess, 0.0),
    ]


def naive_overlapped_adev(phase, poll_interval, m):
    """Direct loop over the overlapped estimator's terms"""
    n = len(phase)
    total = 0.0
    for i in range(n - 2 * m):
        total += (phase[i + 2 * m] - 2 * phase[i + m] + phase[i]) ** 2
    return math.sqrt(total / (2 * (m * poll_interval) ** 2 * (n - 2 * m)))


def check_allan(rng, n=64, poll_interval=1.0, estimator=overlapped_adev):
    """Overlapped estimator vs direct loop, m = 1 vs decimated estimator, and a zero ramp"""
    phase = np.cumsum(rng.normal(size=n))
    m_values = list(range(1, n // 3 + 1))
    curve = estimator(phase, poll_interval, m_values)

    worst = 0.0
    for m, sigma in zip(curve.m_values, curve.deviations):
        reference = naive_overlapped_adev(phase, poll_interval, m)
        worst = max(worst, abs(sigma - reference) / reference)
    decimated = non_overlapped_adev(phase, poll_interval, 1)
    worst = max(worst, abs(curve.deviations[0] - decimated) / decimated)

    ramp = 0.5 * np.arange(n) + 3.0
    ramp_curve = estimator(ramp, poll_interval, m_values)
    return [
        OracleResult('adev_naive', worst, ADEV_TOLERANCE),
        OracleResult('adev_ramp', max(ramp_curve.deviations), 0.0),
    ]


def check_monte_carlo(seq, sensor, rot, rng_seed, periods=MC_PERIODS, simulate=mc_sensitivity):
    """Calibrated Monte Carlo vs pre-penalty analytic sensitivity at the matched efficiency.

    Tolerance is 3 standard errors of a sample standard deviation, including
    the excess kurtosis of the photon-count difference.
    """
    model = sensor.readout
    mc = simulate(seq, sensor, rot, model, t_total=periods * rot.t_rot, rng_seed=rng_seed)
    analytic = drum_shot_noise_sensitivity(seq.tau, rot, sensor, 'pre_penalty', matched_efficiency(model))

    n_samples = periods // 2
    count_variance = photons_per_readout(model) * (2 - model.contrast_eps)
    excess_kurtosis = 1.0 / count_variance
    relative_std = 0.5 * math.sqrt((2.0 + excess_kurtosis) / n_samples)
    return OracleResult('monte_carlo', abs(mc / analytic - 1.0), 3 * relative_std)


def run_oracles(seq, sensor, rot, grid_size, rng_seed):
    rng = np.random.default_rng(rng_seed)
    rot = replace(rot, phi0=math.pi / 2)
    results = [check_echo_phase(grid_size, rng, sensor)]
    results += check_async_contrast(seq, sensor, rot)
    results += check_allan(rng)
    results.append(check_monte_carlo(seq, sensor, rot, rng_seed))
    return results


class OracleCheckJob(DrumJob):
    """Runs every oracle suite and fails if any exceeds its tolerance"""

    command = 'oracle-check'

    def __init__(self, config, grid_size=1000, **kwargs):
        super().__init__(config, **kwargs)
        if grid_size < 1:
            raise UsageError(f"--grid-size must be at least 1, got {grid_size}")
        self.grid_size = grid_size

    def options(self):
        return {'grid_size': self.grid_size}

    def execute(self):
        seq = self.config.sequence()
        sensor = self.config.sensor()
        rot = self.config.rotation()

        logging.info(f"🔍 Running oracle suites ({self.grid_size} echo-phase tuples)...")
        results = run_oracles(seq, sensor, rot, self.grid_size, self.config.rng_seed)
        for result in results:
            mark = '✅' if result.passed else '❌'
            logging.info(f"{mark} {result.name}: max error {result.max_error:.3g} (tolerance {result.tolerance:.3g})")

        payload = {'oracles': [dict(zip(('oracle', 'max_error', 'tolerance', 'passed'), r.row())) for r in results]}
        self.write_table('oracles', [r.row() for r in results], payload)

        failed = [r.name for r in results if not r.passed]
        if failed:
            raise OracleMismatch(f"oracle(s) out of tolerance: {', '.join(failed)}")
        return {'oracles': len(results), 'passed': len(results)}

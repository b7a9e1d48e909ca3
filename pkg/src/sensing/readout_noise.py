#!/usr/bin/env python3
"""
Readout Noise
Photon-shot-noise readout: efficiency C, Poisson sampling of the +/- pi/2
normalised measurement and Monte Carlo operational sensitivity.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, replace

import numpy as np

from src.core.errors import InsufficientSamples, InvalidParameter

logger = logging.getLogger(__name__)

# Records drawn per random stream in batched Monte Carlo
BATCH_SIZE = 4096
MIN_PERIODS = 100
# Mean tail-reference photons per self-normalised sample
MIN_REFERENCE_PHOTONS = 100


@dataclass(frozen=True)
class ShotRecord:
    """Photon counts of n_periods +/- pi/2 sequence pairs and their tail references"""

    photons_plus: int
    photons_minus: int
    reference_plus: int
    reference_minus: int
    duration: float
    n_periods: int = 1

    def __post_init__(self):
        for name in ('photons_plus', 'photons_minus', 'reference_plus', 'reference_minus'):
            if getattr(self, name) < 0:
                raise InvalidParameter(f"{name} must be non-negative, got {getattr(self, name)}")
        if not self.duration > 0:
            raise InvalidParameter(f"duration must be positive, got {self.duration}")

    @property
    def reference(self):
        return self.reference_plus + self.reference_minus

    def estimate(self, model):
        """Unbiased contrast: count difference over the calibrated mean photon number"""
        expected = photons_per_readout(model) * self.n_periods
        return (self.photons_plus - self.photons_minus) / (model.contrast_eps * expected)

    def normalized_estimate(self, model):
        """Contrast with each sequence normalised to its own tail reference"""
        if self.reference_plus == 0 or self.reference_minus == 0:
            return math.nan
        ratio = self.photons_plus / self.reference_plus - self.photons_minus / self.reference_minus
        return ratio / model.contrast_eps


@dataclass(frozen=True)
class ShotBatch:
    """Vectorised run of ShotRecords sharing one n_periods"""

    photons_plus: np.ndarray
    photons_minus: np.ndarray
    reference_plus: np.ndarray
    reference_minus: np.ndarray
    duration: float
    n_periods: int

    def __len__(self):
        return len(self.photons_plus)

    def records(self):
        for i in range(len(self)):
            yield ShotRecord(
                int(self.photons_plus[i]), int(self.photons_minus[i]),
                int(self.reference_plus[i]), int(self.reference_minus[i]),
                self.duration, self.n_periods,
            )

    def estimates(self, model):
        expected = photons_per_readout(model) * self.n_periods
        return (self.photons_plus - self.photons_minus) / (model.contrast_eps * expected)

    def normalized_estimates(self, model):
        with np.errstate(divide='ignore', invalid='ignore'):
            ratio = self.photons_plus / self.reference_plus - self.photons_minus / self.reference_minus
        ratio = np.where((self.reference_plus > 0) & (self.reference_minus > 0), ratio, np.nan)
        return ratio / model.contrast_eps

    def rows(self):
        """CSV rows: period_index, photons_plus, photons_minus, reference"""
        reference = self.reference_plus + self.reference_minus
        for i in range(len(self)):
            yield i, int(self.photons_plus[i]), int(self.photons_minus[i]), int(reference[i])

    @classmethod
    def concatenate(cls, batches):
        first = batches[0]
        return cls(
            np.concatenate([b.photons_plus for b in batches]),
            np.concatenate([b.photons_minus for b in batches]),
            np.concatenate([b.reference_plus for b in batches]),
            np.concatenate([b.reference_minus for b in batches]),
            first.duration, first.n_periods,
        )


def readout_efficiency(model, form='reciprocal'):
    """Readout efficiency C.

    'reciprocal' is (1 + 4/(eps^2 N t_L))^-1; 'root' is the square-root
    form (1 + 4/(eps^2 N t_L))^-1/2. An explicit c_override always wins.
    """
    if model.c_override is not None:
        return model.c_override
    x = 4.0 / (model.contrast_eps ** 2 * model.count_rate * model.t_laser)
    if form == 'reciprocal':
        return 1.0 / (1.0 + x)
    if form == 'root':
        return (1.0 + x) ** -0.5
    raise InvalidParameter(f"unknown readout efficiency form {form!r}")


def photons_per_readout(model):
    """Mean photons per readout window.

    N t_L from the model, or with c_override set, the photon number at which
    the square-root efficiency equals the override.
    """
    if model.c_override is None:
        return model.count_rate * model.t_laser
    c = model.c_override
    if c >= 1:
        raise InvalidParameter("c_override = 1 is a noiseless readout; no photon number reproduces it")
    return 4.0 / (model.contrast_eps ** 2 * (1.0 / c ** 2 - 1.0))


def pair_contrast_std(model):
    """Std of the calibrated contrast estimate for one +/- pair at mid-fringe"""
    n = photons_per_readout(model)
    eps = model.contrast_eps
    return math.sqrt(n * (2 - eps)) / (eps * n)


def matched_efficiency(model):
    """C for which the pre-penalty analytic sensitivity equals the calibrated Monte Carlo"""
    return 1.0 / (2 * math.sqrt(2) * pair_contrast_std(model))


def rng_streams(seed, n):
    """n independent generators split from one seed"""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _check_measurement(true_contrast, n_periods):
    if not abs(true_contrast) <= 1:
        raise InvalidParameter(f"|true_contrast| must be <= 1, got {true_contrast}")
    if n_periods < 1 or int(n_periods) != n_periods:
        raise InvalidParameter(f"n_periods must be a positive integer, got {n_periods}")


def simulate_records(true_contrast, model, n_periods, n_records, rng, cycle_time=1.0):
    """Draw n_records ShotRecords at once; counts are summed over n_periods pairs"""
    _check_measurement(true_contrast, n_periods)
    n = photons_per_readout(model) * n_periods
    eps = model.contrast_eps
    mean_plus = n * (1 - eps * (1 - true_contrast) / 2)
    mean_minus = n * (1 - eps * (1 + true_contrast) / 2)
    size = int(n_records)
    return ShotBatch(
        photons_plus=rng.poisson(mean_plus, size),
        photons_minus=rng.poisson(mean_minus, size),
        reference_plus=rng.poisson(n, size),
        reference_minus=rng.poisson(n, size),
        duration=cycle_time * n_periods,
        n_periods=int(n_periods),
    )


def simulate_measurement(true_contrast, model, n_periods, rng_seed, cycle_time=1.0):
    """One seeded ShotRecord and its calibrated contrast estimate"""
    rng = np.random.default_rng(rng_seed)
    record = next(simulate_records(true_contrast, model, n_periods, 1, rng, cycle_time).records())
    return record, record.estimate(model)


def simulate_batched(true_contrast, model, n_periods, n_records, rng_seed, cycle_time=1.0, max_workers=4):
    """Monte Carlo records split over independent streams; output order fixed by batch index"""
    n_batches = max(1, math.ceil(n_records / BATCH_SIZE))
    streams = rng_streams(rng_seed, n_batches)
    sizes = [min(BATCH_SIZE, n_records - i * BATCH_SIZE) for i in range(n_batches)]
    batches = [None] * n_batches

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        future_to_index = {
            executor.submit(simulate_records, true_contrast, model, n_periods, size, stream, cycle_time): i
            for i, (size, stream) in enumerate(zip(sizes, streams))
        }
        for future in as_completed(future_to_index):
            batches[future_to_index[future]] = future.result()

    return ShotBatch.concatenate(batches)


def simulate_fringe_scan(scan, model, n_periods, rng_seed):
    """Monte Carlo version of a noiseless fringe scan, one stream per point"""
    from src.sensing.interferometry import FringeScan

    streams = rng_streams(rng_seed, len(scan))
    estimates = []
    for contrast, stream in zip(scan.contrast_values, streams):
        batch = simulate_records(float(np.clip(contrast, -1, 1)), model, n_periods, 1, stream)
        estimates.append(float(batch.estimates(model)[0]))

    metadata = dict(scan.metadata)
    metadata['monte_carlo'] = {'n_periods': int(n_periods), 'rng_seed': rng_seed}
    return FringeScan(scan.field_values, tuple(estimates), metadata)


@dataclass(frozen=True)
class MonteCarloResult:
    sensitivity: float
    batch: ShotBatch
    pairs_per_sample: int
    normalization: str


def mc_sensitivity(seq, sensor, rot, model=None, t_total=10.0, rng_seed=0,
                   normalization='calibrated', max_workers=4):
    """Monte Carlo operational sensitivity at the mid-fringe point (T Hz^-1/2).

    Repeated +/- pi/2 pairs are simulated, the contrast spread is divided by the
    analytic slope and scaled by the square root of the time per sample.
    'calibrated' estimates each pair against the known photon number;
    'self' normalises each sequence to its own tail reference.
    """
    return mc_run(seq, sensor, rot, model, t_total, rng_seed, normalization, max_workers).sensitivity


def mc_run(seq, sensor, rot, model=None, t_total=10.0, rng_seed=0,
           normalization='calibrated', max_workers=4):
    """mc_sensitivity keeping the simulated shot records"""
    from src.sensing.interferometry import echo_contrast
    from src.sensing.sensitivity import drum_slope, operational_sensitivity

    model = model or sensor.readout
    sensor = replace(sensor, readout=model)
    t_rot = rot.t_rot
    n_periods = int(t_total // t_rot)
    if n_periods < MIN_PERIODS:
        raise InsufficientSamples(
            f"only {n_periods} rotation periods fit in {t_total} s; need at least {MIN_PERIODS}"
        )

    pairs = n_periods // 2
    if normalization == 'calibrated':
        pairs_per_sample = 1
    elif normalization == 'self':
        pairs_per_sample = max(50, math.ceil(MIN_REFERENCE_PHOTONS / photons_per_readout(model)))
    else:
        raise InvalidParameter(f"unknown normalization {normalization!r}")
    n_samples = pairs // pairs_per_sample
    if n_samples < 2:
        raise InsufficientSamples(f"{pairs} pairs give fewer than 2 samples of {pairs_per_sample} pairs")

    true_contrast = float(echo_contrast(0.0, seq, sensor, mid_fringe=True))
    batch = simulate_batched(true_contrast, model, pairs_per_sample, n_samples, rng_seed,
                             cycle_time=2 * t_rot, max_workers=max_workers)
    if normalization == 'calibrated':
        samples = batch.estimates(model)
    else:
        samples = batch.normalized_estimates(model)
        dropped = int(np.count_nonzero(np.isnan(samples)))
        if dropped:
            logger.warning(f"⚠️ Dropped {dropped} samples with an empty tail reference")
            samples = samples[~np.isnan(samples)]

    slope = drum_slope(seq.tau, rot, sensor)
    sensitivity = operational_sensitivity(samples, slope, 2 * t_rot * pairs_per_sample)
    return MonteCarloResult(sensitivity, batch, pairs_per_sample, normalization)

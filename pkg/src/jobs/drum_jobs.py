#!/usr/bin/env python3
"""
DRUM Jobs
One job per CLI subcommand: fringe scans, sensitivity report, Allan deviation
and rotation-speed optimization. Each job writes deterministic outputs and a
run summary.
"""

import hashlib
import json
import logging
import math
import os
import time
from datetime import datetime

import numpy as np

from src.analysis.optimizer import T2Profile, speed_sweep
from src.analysis.stability import (
    classify_regimes,
    contrast_to_frequency,
    cumulative_phase,
    overlapped_adev,
    synthesize_noise,
)
from src.core.errors import DrumError, UsageError
from src.core.model import fmt_field, fmt_freq, fmt_time
from src.sensing.interferometry import fringe_period, synthesize_fringes, synthesize_ramsey_fringes
from src.sensing.readout_noise import mc_run, readout_efficiency, simulate_fringe_scan
from src.sensing.sensitivity import build_report, drum_slope
from src.utils.file_io import write_csv, write_json
from src.utils.file_tracker import FileTracker
from src.utils.job_logger import JobLogger

WORKERS_ENV = 'DRUM_MAX_WORKERS'


def max_workers_from_env(default=4):
    value = os.getenv(WORKERS_ENV)
    if not value:
        return default
    try:
        workers = int(value)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {value!r}")
    if workers < 1:
        raise UsageError(f"{WORKERS_ENV} must be at least 1, got {workers}")
    return workers


class DrumJob:
    """Base job: builds outputs from a RunConfig and records a run summary"""

    command = None

    def __init__(self, config, output=None, fmt=None, max_workers=None):
        self.config = config
        self.output = output or config.output
        self.format = fmt or config.format
        self.max_workers = max_workers or max_workers_from_env()
        self.job_logger = JobLogger()
        self.file_tracker = FileTracker()
        self.outputs = []
        self.reproduced = {}

    def options(self):
        """Command options that affect output bytes"""
        return {}

    def run_key(self):
        text = f"{self.command}|{json.dumps(self.options(), sort_keys=True)}|{self.config.to_ini()}"
        return hashlib.sha256(text.encode('utf-8')).hexdigest()[:16]

    def target(self, ext, suffix=''):
        base = self.output
        for known in ('.csv', '.json'):
            if base.endswith(known):
                base = base[:-len(known)]
        return f"{base}{suffix}.{ext}"

    def write_table(self, schema, rows, payload, suffix=''):
        """Write rows as CSV or payload as JSON, per the configured format"""
        ini = self.config.to_ini()
        if self.format == 'csv':
            path = write_csv(self.target('csv', suffix), schema, rows, ini)
        else:
            path = write_json(self.target('json', suffix), payload, ini)
        self._track(path)
        return path

    def write_report(self, payload, suffix=''):
        path = write_json(self.target('json', suffix), payload, self.config.to_ini())
        self._track(path)
        return path

    def _track(self, path):
        self.outputs.append(path)
        self.reproduced[path] = self.file_tracker.record_output(path, self.command, self.run_key())

    def execute(self):
        raise NotImplementedError

    def run(self):
        start_time = time.time()
        logging.info(f"🚀 Starting {self.command} job (config {self.config.source})")

        try:
            results = self.execute()
        except DrumError as e:
            logging.error(f"❌ {self.command} failed: {e}")
            raise

        duration = time.time() - start_time
        summary = {
            'command': self.command,
            'job_start': datetime.fromtimestamp(start_time).isoformat(),
            'job_end': datetime.now().isoformat(),
            'duration_seconds': round(duration, 2),
            'config_source': self.config.source,
            'outputs': self.outputs,
            'reproduced': self.reproduced,
            'results': results,
        }
        self.job_logger.save_job_summary(summary)

        logging.info(f"✅ {self.command} completed: {', '.join(self.outputs)}")
        logging.info(f"⏱️ Duration: {duration:.2f} seconds")
        return results


class FringeJob(DrumJob):
    """Noiseless and Monte Carlo DRUM/Ramsey fringe scans"""

    command = 'fringe'

    def __init__(self, config, points=201, span=None, mc_periods=0, ramsey_tau=None, **kwargs):
        super().__init__(config, **kwargs)
        if points < 1:
            raise UsageError(f"--points must be at least 1, got {points}")
        if mc_periods < 0:
            raise UsageError(f"--mc-periods must be non-negative, got {mc_periods}")
        if span is not None and not span > 0:
            raise UsageError(f"--span must be positive, got {span}")
        self.points = points
        self.span = span
        self.mc_periods = mc_periods
        self.ramsey_tau = ramsey_tau

    def options(self):
        return {'points': self.points, 'span': self.span, 'mc_periods': self.mc_periods, 'ramsey_tau': self.ramsey_tau}

    def _field_axis(self, span):
        if self.points == 1:
            return np.zeros(1)
        return np.linspace(-span / 2, span / 2, self.points)

    def execute(self):
        seq = self.config.sequence()
        sensor = self.config.sensor()
        rot = self.config.rotation()
        fields = self.config.fields()
        seq.check_fits(rot)
        ramsey_tau = self.ramsey_tau or sensor.t2_star

        period = fringe_period(seq, sensor, rot)
        logging.info(f"📡 DRUM fringe period {fmt_field(period)} at {fmt_freq(rot.speed_hz)}, tau {fmt_time(seq.tau)}")
        if fields.b_x0 or fields.b_y0:
            logging.info(f"🧲 Nulling offsets B_x0 {fmt_field(fields.b_x0)}, B_y0 {fmt_field(fields.b_y0)}")
        drum_span = self.span or 2 * period
        ramsey_span = self.span or 2 * (2 * math.pi / (sensor.gamma_e * ramsey_tau))

        scans = {
            'drum': synthesize_fringes(fields.b_x + self._field_axis(drum_span), seq, sensor, rot, fields=fields),
            'ramsey': synthesize_ramsey_fringes(self._field_axis(ramsey_span), ramsey_tau, sensor),
        }
        if self.mc_periods:
            seed = self.config.rng_seed
            scans['drum_mc'] = simulate_fringe_scan(scans['drum'], sensor.readout, self.mc_periods, [seed, 0])
            scans['ramsey_mc'] = simulate_fringe_scan(scans['ramsey'], sensor.readout, self.mc_periods, [seed, 1])

        rows = [
            (b, s, kind)
            for kind, scan in scans.items()
            for b, s in zip(scan.field_values, scan.contrast_values)
        ]
        self.write_table('fringe', rows, {'scans': {kind: scan.to_dict() for kind, scan in scans.items()}})
        return {'points': self.points, 'scans': list(scans), 'fringe_period_T': period}


class SensitivityJob(DrumJob):
    """Analytic sensitivity report with an optional Monte Carlo operational estimate"""

    command = 'sensitivity'

    def __init__(self, config, mc_seconds=0.0, shots=False, **kwargs):
        super().__init__(config, **kwargs)
        if mc_seconds < 0:
            raise UsageError(f"--mc-seconds must be non-negative, got {mc_seconds}")
        self.mc_seconds = mc_seconds
        self.shots = shots

    def options(self):
        return {'mc_seconds': self.mc_seconds, 'shots': self.shots}

    def execute(self):
        seq = self.config.sequence()
        sensor = self.config.sensor()
        rot = self.config.rotation()
        seq.check_fits(rot)
        efficiency = readout_efficiency(sensor.readout, self.config.efficiency_form)
        variant = self.config.get('run', 'variant')

        operational = None
        monte_carlo = None
        if self.mc_seconds > 0:
            normalization = self.config.get('run', 'normalization')
            logging.info(f"🎲 Monte Carlo over {self.mc_seconds} s ({normalization} estimator)...")
            monte_carlo = mc_run(seq, sensor, rot, t_total=self.mc_seconds, rng_seed=self.config.rng_seed,
                                 normalization=normalization, max_workers=self.max_workers)
            operational = monte_carlo.sensitivity

        report = build_report(seq, sensor, rot, variant=variant, operational=operational, efficiency=efficiency)
        payload = report.to_dict()
        if monte_carlo is not None:
            payload['monte_carlo'] = {
                'seconds': self.mc_seconds,
                'normalization': monte_carlo.normalization,
                'pairs_per_sample': monte_carlo.pairs_per_sample,
                'samples': len(monte_carlo.batch),
            }
        self.write_report(payload)

        if self.shots and monte_carlo is not None:
            path = write_csv(self.target('csv', '_shots'), 'shots', monte_carlo.batch.rows(), self.config.to_ini())
            self._track(path)

        results = {'shot_noise_limit': report.shot_noise_limit, 'ideal_ramsey': report.ideal_ramsey}
        if operational is not None:
            results['operational'] = operational
        return results


class AdevJob(DrumJob):
    """Allan deviation of a polled contrast series, read from CSV or synthesized"""

    command = 'adev'

    def __init__(self, config, input_path=None, synthesize=None, samples=100000, magnitude=1e-3,
                 poll=1.0, **kwargs):
        super().__init__(config, **kwargs)
        if (input_path is None) == (synthesize is None):
            raise UsageError("adev needs exactly one of --input or --synthesize")
        self.input_path = input_path
        self.synthesize = synthesize
        self.samples = samples
        self.magnitude = magnitude
        self.poll = poll

    def options(self):
        if self.input_path:
            return {'input': str(self.input_path)}
        return {'synthesize': self.synthesize, 'samples': self.samples, 'magnitude': self.magnitude, 'poll': self.poll}

    def load_series(self):
        if self.input_path:
            from src.utils.file_io import read_contrast_series

            logging.info(f"📥 Reading contrast series {self.input_path}")
            return read_contrast_series(self.input_path)
        logging.info(f"🎲 Synthesizing {self.samples} samples of {self.synthesize} noise")
        return synthesize_noise(self.synthesize, self.magnitude, self.samples, self.poll, self.config.rng_seed)

    def execute(self):
        sensor = self.config.sensor()
        seq = self.config.sequence()
        rot = self.config.rotation()
        series = self.load_series()

        slope = drum_slope(seq.tau, rot, sensor)
        frequencies = contrast_to_frequency(series, slope, sensor)
        curve = overlapped_adev(cumulative_phase(frequencies, series.poll_interval), series.poll_interval)
        regimes = classify_regimes(curve)
        for regime in regimes:
            slope_text = 'n/a' if regime.slope is None else f"{regime.slope:+.3f}"
            logging.info(f"📊 {regime.t_start:g}-{regime.t_end:g} s: slope {slope_text} ({regime.label})")

        tesla = curve.deviations_tesla(sensor.gamma_e)
        rows = zip(curve.averaging_times, curve.deviations, tesla, curve.sample_counts)
        regime_dicts = [vars(r) for r in regimes]
        payload = {
            'curve': {
                'tau_s': list(curve.averaging_times),
                'adev': list(curve.deviations),
                'adev_T': list(tesla),
                'n_terms': list(curve.sample_counts),
            },
            'regimes': regime_dicts,
            'skipped': [{'m': m, 'reason': reason} for m, reason in curve.skipped],
        }
        self.write_table('adev', rows, payload)
        return {'samples': len(series), 'points': len(curve), 'regimes': regime_dicts}


class OptimizeJob(DrumJob):
    """Optimal sensing time and sensitivity across rotation speeds"""

    command = 'optimize'

    def __init__(self, config, speeds=None, speed_range=None, profile_path=None, **kwargs):
        super().__init__(config, **kwargs)
        self.speeds = list(speeds or []) + self._expand_range(speed_range)
        if not self.speeds:
            raise UsageError("optimize needs --speeds or --speed-range")
        self.profile_path = profile_path

    @staticmethod
    def _expand_range(speed_range):
        if not speed_range:
            return []
        start, stop, step = speed_range
        if not step > 0 or stop < start:
            raise UsageError(f"--speed-range needs START <= STOP and STEP > 0, got {speed_range}")
        count = int(round((stop - start) / step)) + 1
        return [start + step * i for i in range(count)]

    def options(self):
        return {'speeds': sorted(set(self.speeds)), 'profile': str(self.profile_path) if self.profile_path else None}

    def execute(self):
        sensor = self.config.sensor()
        profile = T2Profile.from_csv(self.profile_path) if self.profile_path else T2Profile.default()
        variant = self.config.get('run', 'variant')
        logging.info(f"⚡ Optimizing {len(set(self.speeds))} speeds with {self.max_workers} parallel workers...")

        sweep = speed_sweep(self.speeds, profile, sensor, variant=variant, max_workers=self.max_workers)
        rows = [
            (p.speed_hz, p.omega_rot, p.t2, p.tau_opt, p.b_z, p.slope_at_opt, p.sensitivity_at_opt)
            for p in sweep.points
        ]
        payload = {
            'points': [dict(vars(p), speed_hz=p.speed_hz) for p in sweep.points],
            'failures': [{'speed_hz': s, 'error': e} for s, e in sweep.failures],
        }
        if sweep.points:
            self.write_table('sweep', rows, payload)
        if sweep.failures and self.format == 'csv':
            path = write_csv(self.target('csv', '_failures'), 'sweep_failures', sweep.failures, self.config.to_ini())
            self._track(path)
        if not sweep.points:
            raise DrumError(f"all {len(sweep.failures)} speeds failed")

        return {
            'points': len(sweep.points),
            'failures': len(sweep.failures),
            'sensitivity_spread': sweep.sensitivity_spread(),
        }

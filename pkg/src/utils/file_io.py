#!/usr/bin/env python3
"""
File IO
Atomic CSV/JSON output with an embedded config header, CSV schemas and the
readers for contrast series and T2 profiles.
"""

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from src.core.errors import SeriesFormatError

# Relative spread allowed between polling steps of an ingested series
POLL_TOLERANCE = 1e-6

SCHEMAS = {
    'fringe': (
        ('field_T', 'contrast', 'kind'),
        "Fringe scan: applied field (T), normalised contrast, and the scan kind "
        "(drum, drum_mc, ramsey, ramsey_mc)",
    ),
    'shots': (
        ('period_index', 'photons_plus', 'photons_minus', 'reference'),
        "Monte Carlo shot records: photon counts of the +/- pi/2 readouts and their summed tail reference",
    ),
    'adev': (
        ('tau_s', 'adev', 'adev_T', 'n_terms'),
        "Overlapped Allan deviation: averaging time (s), deviation (rad/s), deviation (T), number of terms",
    ),
    'series': (
        ('time_s', 'contrast'),
        "Contrast series input: poll time (s, uniform spacing) and mid-fringe contrast",
    ),
    't2_profile': (
        ('speed_hz', 't2_s'),
        "T2 profile input: rotation speed (Hz, increasing) and spin-echo T2 (s)",
    ),
    'sweep': (
        ('speed_hz', 'omega_rot', 't2_s', 'tau_opt_s', 'b_z_T', 'slope_per_T', 'sensitivity_T_rtHz'),
        "Speed sweep: optimal operating point and shot-noise sensitivity per rotation speed",
    ),
    'sweep_failures': (
        ('speed_hz', 'error'),
        "Speeds whose optimization failed, with the error message",
    ),
    'oracles': (
        ('oracle', 'max_error', 'tolerance', 'passed'),
        "Oracle check: largest deviation of each implementation from its reference and the bound it must meet",
    ),
}


def schema_text():
    lines = []
    for name, (columns, description) in SCHEMAS.items():
        lines.append(f"{name}: {','.join(columns)}")
        lines.append(f"    {description}")
    return "\n".join(lines) + "\n"


def fmt_cell(value):
    """Shortest round-trip text for floats, plain str otherwise"""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def atomic_write_text(path, text):
    """Write text to a temp file beside path, then rename over it"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_path = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(temp_path, path)
    except BaseException:
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise
    return str(path)


def csv_text(schema, rows, config_ini=None):
    buffer = io.StringIO()
    if config_ini:
        for line in config_ini.splitlines():
            buffer.write(f"# {line}\n" if line else "#\n")
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(SCHEMAS[schema][0])
    for row in rows:
        writer.writerow([fmt_cell(v) for v in row])
    return buffer.getvalue()


def write_csv(path, schema, rows, config_ini=None):
    return atomic_write_text(path, csv_text(schema, rows, config_ini))


def json_text(payload, config_ini=None):
    if config_ini is not None:
        payload = dict(payload, config=config_ini)
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False, default=_json_default) + "\n"


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (np.ndarray, tuple)):
        return list(value)
    raise TypeError(f"cannot serialise {type(value).__name__}")


def write_json(path, payload, config_ini=None):
    return atomic_write_text(path, json_text(payload, config_ini))


def read_config_header(path):
    """INI text embedded as '# ' lines at the top of a CSV output"""
    lines = []
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            if not line.startswith('#'):
                break
            lines.append(line[2:].rstrip('\n') if line.startswith('# ') else '')
    return "\n".join(lines)


def _read_rows(path, schema):
    """Yield (line_number, fields) for data rows; '#' lines and the header are skipped"""
    columns = SCHEMAS[schema][0]
    try:
        f = open(path, 'r', encoding='utf-8', newline='')
    except OSError as e:
        raise SeriesFormatError(f"cannot read {path}: {e}") from e
    with f:
        header_seen = False
        for number, row in enumerate(csv.reader(f), start=1):
            if not row or row[0].startswith('#'):
                continue
            if not header_seen:
                header_seen = True
                if tuple(c.strip() for c in row) == columns:
                    continue
                try:
                    float(row[0])
                except ValueError:
                    raise SeriesFormatError(f"unexpected header {row}; expected {','.join(columns)}", row=number)
            if len(row) != len(columns):
                raise SeriesFormatError(f"expected {len(columns)} columns, got {len(row)}", row=number)
            try:
                values = [float(v) for v in row]
            except ValueError:
                raise SeriesFormatError(f"non-numeric value in {row}", row=number)
            if not all(np.isfinite(values)):
                raise SeriesFormatError(f"non-finite value in {row}", row=number)
            yield number, values


def read_contrast_series(path):
    """ContrastSeries from a (time_s, contrast) CSV with uniform polling"""
    from src.analysis.stability import ContrastSeries

    times, samples, numbers = [], [], []
    for number, (t, s) in _read_rows(path, 'series'):
        times.append(t)
        samples.append(s)
        numbers.append(number)
    if len(times) < 2:
        return ContrastSeries(tuple(samples), 1.0, times[0] if times else 0.0)

    steps = np.diff(times)
    poll = float(steps[0])
    if not poll > 0:
        raise SeriesFormatError("time_s must increase", row=numbers[1])
    for i, step in enumerate(steps):
        if abs(step - poll) > POLL_TOLERANCE * poll:
            raise SeriesFormatError(f"poll step {step!r} s differs from {poll!r} s", row=numbers[i + 1])
    return ContrastSeries(tuple(samples), poll, times[0])


def read_t2_profile(path):
    speeds, t2_values = [], []
    for number, (speed, t2) in _read_rows(path, 't2_profile'):
        if speeds and speed <= speeds[-1]:
            raise SeriesFormatError("speed_hz must be strictly increasing", row=number)
        if not t2 > 0:
            raise SeriesFormatError(f"t2_s must be positive, got {t2}", row=number)
        speeds.append(speed)
        t2_values.append(t2)
    if len(speeds) < 2:
        raise SeriesFormatError("T2 profile needs at least two rows")
    return speeds, t2_values

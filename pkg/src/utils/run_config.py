#!/usr/bin/env python3
"""
Run Config
Loads the INI run configuration, applies --set overrides and builds the
sensor, rotation, field, sequence and readout types from it.
"""

import configparser
import math
import os
import re
from dataclasses import dataclass, field

from src.core import constants
from src.core.errors import ConfigError, InvalidParameter
from src.core.model import FieldConfig, ReadoutModel, RotationState, SensorConfig
from src.sensing.interferometry import SequenceParams

CONFIG_ENV = 'DRUM_CONFIG'
REQUIRED_SECTIONS = ('sensor', 'readout', 'rotation', 'fields', 'sequence')
FORMATS = ('csv', 'json')


def _optional_float(text):
    return None if text.strip().lower() in ('', 'none') else float(text)


def _choice(*options):
    def parse(text):
        value = text.strip().lower()
        if value not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return value
    return parse


def _text(value):
    return value.strip()


# section -> key -> (parser, default)
SCHEMA = {
    'sensor': {
        'theta_nv': (float, constants.THETA_NV),
        'gamma_e': (float, constants.GAMMA_E),
        'gamma_c13': (float, constants.GAMMA_C13),
        'd_zfs': (float, constants.D_ZFS),
        't2': (float, constants.T2),
        't2_star': (float, constants.T2_STAR),
        'n_exp': (float, constants.N_EXP),
        'ramsey_exp': (float, constants.RAMSEY_EXP),
    },
    'readout': {
        'count_rate': (float, constants.COUNT_RATE),
        'contrast_eps': (float, constants.CONTRAST_EPS),
        't_laser': (float, constants.T_LASER),
        'c_override': (_optional_float, constants.C_WORKING),
        'efficiency_form': (_choice('reciprocal', 'root'), 'reciprocal'),
    },
    'rotation': {
        'speed_hz': (float, constants.SPEED_HZ),
        'phi0': (float, math.pi / 2),
    },
    'fields': {
        'b_z': (float, constants.B_Z),
        'b_x': (float, 0.0),
        'b_y': (float, 0.0),
        'b_x0': (float, 0.0),
        'b_y0': (float, 0.0),
    },
    'sequence': {
        'tau': (float, constants.TAU),
        't_del': (float, 0.0),
        't_dead': (float, constants.RAMSEY_DEAD_TIME),
        't_pi': (float, constants.T_PI),
    },
    'run': {
        'rng_seed': (int, 0),
        'output': (_text, 'drum_output'),
        'format': (_choice(*FORMATS), 'csv'),
        'variant': (_choice('fixed', 'pre_penalty', 'normalized'), 'fixed'),
        'normalization': (_choice('calibrated', 'self'), 'calibrated'),
    },
}

_SECTION_LINE = re.compile(r'^\s*\[([^\]]+)\]')
_KEY_LINE = re.compile(r'^\s*([^#;=:\s][^=:]*?)\s*[=:]')


def _key_lines(text):
    """(section, key) -> 1-based line number; sections map under key None"""
    lines = {}
    section = None
    for number, line in enumerate(text.splitlines(), start=1):
        match = _SECTION_LINE.match(line)
        if match:
            section = match.group(1).strip()
            lines.setdefault((section, None), number)
            continue
        match = _KEY_LINE.match(line)
        if match and section is not None:
            lines.setdefault((section, match.group(1).strip().lower()), number)
    return lines


def _format_value(value):
    if value is None:
        return 'none'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def default_values():
    return {section: {key: default for key, (_, default) in keys.items()} for section, keys in SCHEMA.items()}


@dataclass
class RunConfig:
    """Typed run configuration, section -> key -> value, all SI"""

    values: dict = field(default_factory=default_values)
    source: str = field(default='<defaults>', compare=False)

    @classmethod
    def default(cls):
        return cls()

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, 'r', encoding='utf-8') as f:
                text = f.read()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        return cls.from_ini_text(text, source=str(path))

    @classmethod
    def from_ini_text(cls, text, source='<text>'):
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text, source=source)
        except configparser.DuplicateSectionError as e:
            raise ConfigError("duplicate section", section=e.section, line=e.lineno) from e
        except configparser.DuplicateOptionError as e:
            raise ConfigError("duplicate key", section=e.section, key=e.option, line=e.lineno) from e
        except configparser.MissingSectionHeaderError as e:
            raise ConfigError("key outside any section", line=e.lineno) from e
        except configparser.ParsingError as e:
            line = e.errors[0][0] if e.errors else None
            raise ConfigError(f"cannot parse {source}", line=line) from e

        lines = _key_lines(text)
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError("unknown section", section=section, line=lines.get((section, None)))
        missing = [s for s in REQUIRED_SECTIONS if not parser.has_section(s)]
        if missing:
            raise ConfigError(f"missing required section(s): {', '.join(missing)}")

        values = default_values()
        for section in parser.sections():
            for key, raw in parser.items(section):
                line = lines.get((section, key))
                values[section][key] = _parse_value(section, key, raw, line)

        config = cls(values=values, source=source)
        config.validate()
        return config

    def apply_overrides(self, overrides):
        """Apply 'section.key=value' strings in order"""
        for override in overrides or ():
            target, sep, raw = override.partition('=')
            section, dot, key = target.strip().partition('.')
            if not sep or not dot:
                raise ConfigError(f"override {override!r} is not of the form section.key=value")
            key = key.strip().lower()
            if section not in SCHEMA:
                raise ConfigError("unknown section", section=section)
            self.values[section][key] = _parse_value(section, key, raw, None)
        self.validate()
        return self

    def validate(self):
        if self.rng_seed < 0:
            raise ConfigError(f"rng_seed must be non-negative, got {self.rng_seed}", section='run', key='rng_seed')
        for section, build in (
            ('sensor', self.sensor),
            ('rotation', self.rotation),
            ('fields', self.fields),
            ('sequence', self.sequence),
        ):
            try:
                build()
            except InvalidParameter as e:
                raise ConfigError(str(e), section=section) from e

    def to_ini(self):
        """Canonical INI text; re-parses to an equal RunConfig"""
        out = []
        for section, keys in SCHEMA.items():
            out.append(f"[{section}]")
            for key in keys:
                out.append(f"{key} = {_format_value(self.values[section][key])}")
            out.append("")
        return "\n".join(out)

    def get(self, section, key):
        return self.values[section][key]

    def readout(self):
        r = self.values['readout']
        try:
            return ReadoutModel(r['count_rate'], r['contrast_eps'], r['t_laser'], r['c_override'])
        except InvalidParameter as e:
            raise ConfigError(str(e), section='readout') from e

    def sensor(self):
        return SensorConfig(readout=self.readout(), **self.values['sensor'])

    def rotation(self):
        r = self.values['rotation']
        return RotationState.from_speed_hz(r['speed_hz'], r['phi0'])

    def fields(self):
        return FieldConfig(**self.values['fields'])

    def sequence(self):
        return SequenceParams(**self.values['sequence'])

    @property
    def efficiency_form(self):
        return self.values['readout']['efficiency_form']

    @property
    def rng_seed(self):
        return self.values['run']['rng_seed']

    @property
    def output(self):
        return self.values['run']['output']

    @property
    def format(self):
        return self.values['run']['format']


def _parse_value(section, key, raw, line):
    keys = SCHEMA[section]
    if key not in keys:
        raise ConfigError("unknown key", section=section, key=key, line=line)
    parser, _ = keys[key]
    try:
        value = parser(raw)
    except ValueError as e:
        raise ConfigError(f"invalid value {raw.strip()!r}: {e}", section=section, key=key, line=line) from e
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(f"value must be finite, got {raw.strip()!r}", section=section, key=key, line=line)
    return value


def load_run_config(path=None, overrides=None):
    """Config from path, else $DRUM_CONFIG, else built-in defaults; then overrides"""
    path = path or os.getenv(CONFIG_ENV)
    config = RunConfig.from_file(path) if path else RunConfig.default()
    return config.apply_overrides(overrides)

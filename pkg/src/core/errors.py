#!/usr/bin/env python3
"""
Errors
Exception hierarchy shared by the library and the CLI.
"""


class DrumError(Exception):
    """Base class for all errors raised by this package"""


class ConfigError(DrumError, ValueError):
    """Run configuration is malformed, incomplete or names unknown keys"""

    def __init__(self, message, section=None, key=None, line=None):
        self.section = section
        self.key = key
        self.line = line
        where = []
        if section:
            where.append(f"[{section}]")
        if key:
            where.append(key)
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{' '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")


class UsageError(DrumError, ValueError):
    """Command-line arguments are missing, malformed or out of range"""


class InvalidParameter(DrumError, ValueError):
    """A configuration type was built with a value outside its invariants"""


class NonPositiveEffectiveField(DrumError, ValueError):
    """B_z + B_omega <= 0, so the 13C Larmor rate is not positive"""


class NegativeBiasField(DrumError, ValueError):
    """The bias field needed for a revival time would be zero or negative"""


class QuadratureFailure(DrumError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance"""


class InsufficientSamples(DrumError, ValueError):
    """Too few measurement cycles for a Monte Carlo estimate"""


class DegenerateSeries(DrumError, ValueError):
    """A sample series carries no spread to estimate noise from"""


class ZeroSlope(DrumError, ValueError):
    """A transduction slope of zero cannot convert contrast to field"""


class InsufficientData(DrumError, ValueError):
    """Series too short for the requested Allan deviation estimate"""


class UnreachableGain(DrumError, ValueError):
    """Requested DRUM/Ramsey gain would need T2 <= T2*"""


class ProfileRangeError(DrumError, ValueError):
    """Requested rotation speed lies outside a T2 profile"""


class OracleMismatch(DrumError, ArithmeticError):
    """An implementation disagrees with its reference beyond tolerance"""


class SeriesFormatError(DrumError, ValueError):
    """A CSV input row could not be parsed"""

    def __init__(self, message, row=None):
        self.row = row
        prefix = f"row {row}: " if row is not None else ""
        super().__init__(f"{prefix}{message}")

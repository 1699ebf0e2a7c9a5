"""Unit conventions and strict quantity parsing.

Canonical internal units
------------------------
length   μm
time     μs
frequency  MHz, as ordinary (cycle) frequency ν -- *not* angular.
density  μm^-3
C6       MHz·μm^6 (i.e. the number quoted as C6/2π in angular-unit sources)

Every coupling, Rabi frequency, detuning and rate in this package is an
ordinary frequency in MHz. The factor 2π enters exactly once per dynamical
engine, where equations of motion (or a propagator phase) are formed; those
sites multiply by :data:`OMEGA_PER_MHZ`. Serialized numbers are therefore
always labelled ``MHz (nu)``.

Config files state units explicitly ("5 um", "3.0 MHz", "1.2e9 cm^-3");
:func:`parse_quantity` converts to canonical units and rejects bare numbers
for dimensioned fields.
"""

from __future__ import annotations

import math
import re

from .errors import ConfigError

#: Angular frequency (rad/μs) per MHz of ordinary frequency.
OMEGA_PER_MHZ = 2.0 * math.pi

#: Unit token -> (dimension, factor to canonical unit).
_UNITS = {
    # length -> μm
    "um": ("length", 1.0),
    "μm": ("length", 1.0),
    "mm": ("length", 1.0e3),
    # time -> μs
    "us": ("time", 1.0),
    "μs": ("time", 1.0),
    "ns": ("time", 1.0e-3),
    "ms": ("time", 1.0e3),
    "s": ("time", 1.0e6),
    # frequency -> MHz (nu)
    "hz": ("frequency", 1.0e-6),
    "khz": ("frequency", 1.0e-3),
    "mhz": ("frequency", 1.0),
    "ghz": ("frequency", 1.0e3),
    # number density -> μm^-3
    "um^-3": ("density", 1.0),
    "μm^-3": ("density", 1.0),
    "cm^-3": ("density", 1.0e-12),
    "m^-3": ("density", 1.0e-18),
    # van der Waals coefficient -> MHz·μm^6
    "mhz um^6": ("c6", 1.0),
    "mhz*um^6": ("c6", 1.0),
    "mhz·μm^6": ("c6", 1.0),
    "ghz um^6": ("c6", 1.0e3),
    "ghz*um^6": ("c6", 1.0e3),
    "ghz·μm^6": ("c6", 1.0e3),
    # plain angles
    "rad": ("angle", 1.0),
    "deg": ("angle", math.pi / 180.0),
}

_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")


def parse_quantity(text: str | float | int, dimension: str) -> float:
    """Parse ``"<number> <unit>"`` into canonical units of ``dimension``.

    Dimensionless fields may be plain numbers; every dimensioned field must
    carry a unit suffix, otherwise :class:`ConfigError` is raised.
    """
    if dimension == "dimensionless":
        if isinstance(text, (int, float)):
            return float(text)
        raise ConfigError(f"expected a plain number, got {text!r}")
    if isinstance(text, (int, float)):
        raise ConfigError(
            f"value {text!r} needs an explicit unit suffix for {dimension}"
        )
    s = text.strip()
    m = _NUMBER.match(s)
    if not m:
        raise ConfigError(f"cannot parse quantity {text!r}")
    value = float(m.group(0))
    unit = s[m.end():].strip().lower()
    if not unit:
        raise ConfigError(f"missing unit on {text!r} (expected {dimension})")
    if unit not in _UNITS:
        raise ConfigError(f"unknown unit {unit!r} in {text!r}")
    dim, factor = _UNITS[unit]
    if dim != dimension:
        raise ConfigError(
            f"{text!r} has dimension {dim}, expected {dimension}"
        )
    return value * factor


def format_quantity(value: float, dimension: str) -> str:
    """Render a canonical-unit value with its unit label (for file headers)."""
    label = {
        "length": "um",
        "time": "us",
        "frequency": "MHz (nu)",
        "density": "um^-3",
        "c6": "MHz um^6 (nu)",
        "angle": "rad",
        "dimensionless": "",
    }[dimension]
    return f"{value:.12g} {label}".strip()

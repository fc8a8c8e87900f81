"""
Parsing of dimensioned values written as ``"<number> <unit>"``.

Only the units that appear in IMU data sheets are known. Every unit maps to
an SI dimension; a value is accepted only when its dimension matches the
one the caller expects, so ``"0.01 deg/h"`` cannot be read as a ppm.
"""

from __future__ import annotations

import math
import re

G0 = 9.80665
DEG = math.pi / 180.0

# unit -> (SI dimension, factor to SI)
UNITS: dict[str, tuple[str, float]] = {
    # angle
    "rad": ("rad", 1.0),
    "mrad": ("rad", 1e-3),
    "urad": ("rad", 1e-6),
    "deg": ("rad", DEG),
    "arcmin": ("rad", DEG / 60.0),
    "arcsec": ("rad", DEG / 3600.0),
    # angular rate
    "rad/s": ("rad/s", 1.0),
    "deg/s": ("rad/s", DEG),
    "deg/h": ("rad/s", DEG / 3600.0),
    # angle random walk
    "rad/sqrt(s)": ("rad/sqrt(s)", 1.0),
    "deg/sqrt(h)": ("rad/sqrt(s)", DEG / 60.0),
    "deg/h/sqrt(Hz)": ("rad/sqrt(s)", DEG / 3600.0),
    # acceleration
    "m/s^2": ("m/s^2", 1.0),
    "g": ("m/s^2", G0),
    "mg": ("m/s^2", G0 * 1e-3),
    "ug": ("m/s^2", G0 * 1e-6),
    # velocity random walk / accelerometer noise density
    "m/s/sqrt(s)": ("m/s/sqrt(s)", 1.0),
    "m/s/sqrt(h)": ("m/s/sqrt(s)", 1.0 / 60.0),
    "ug/sqrt(Hz)": ("m/s/sqrt(s)", G0 * 1e-6),
    "mg/sqrt(Hz)": ("m/s/sqrt(s)", G0 * 1e-3),
    # velocity
    "m/s": ("m/s", 1.0),
    # length
    "m": ("m", 1.0),
    "km": ("m", 1e3),
    # time
    "s": ("s", 1.0),
    "min": ("s", 60.0),
    "h": ("s", 3600.0),
    # frequency
    "Hz": ("Hz", 1.0),
    # dimensionless
    "ppm": ("1", 1e-6),
    "1": ("1", 1.0),
}

_ALIASES = {
    "μg": "ug", "µg": "ug", "°": "deg", "″": "arcsec", "′": "arcmin",
    "μg/sqrt(Hz)": "ug/sqrt(Hz)", "µg/sqrt(Hz)": "ug/sqrt(Hz)",
    "μg/√Hz": "ug/sqrt(Hz)", "µg/√Hz": "ug/sqrt(Hz)", "ug/√Hz": "ug/sqrt(Hz)",
    "deg/√h": "deg/sqrt(h)", "°/√h": "deg/sqrt(h)", "°/h": "deg/h", "°/s": "deg/s",
}  # fmt: skip
_PATTERN = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S.*?)\s*$")


class UnitError(ValueError):
    pass


def parse_quantity(text: str, dimension: str) -> float:
    """
    Convert ``"<number> <unit>"`` to SI, checking the unit's dimension.

    >>> round(parse_quantity("0.01 deg/h", "rad/s"), 11)
    4.848e-08
    """
    if not isinstance(text, str):
        raise UnitError(f"expected a string like '1.5 {dimension}', got bare {text!r}")
    m = _PATTERN.match(text)
    if m is None:
        raise UnitError(f"cannot parse {text!r}: expected '<number> <unit>'")
    number, unit = m.groups()
    unit = _ALIASES.get(unit.replace(" ", ""), unit.replace(" ", ""))
    if unit not in UNITS:
        raise UnitError(f"unknown unit {unit!r} in {text!r}")
    dim, factor = UNITS[unit]
    if dim != dimension:
        raise UnitError(f"{text!r} has dimension {dim}, expected {dimension}")
    return float(number) * factor

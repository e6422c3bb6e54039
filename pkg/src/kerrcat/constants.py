"""Physical constants (CODATA 2018 via scipy) and unit helpers."""

import math

from scipy import constants as _c

HBAR = _c.hbar
PLANCK = _c.h
ELEMENTARY_CHARGE = _c.e
FLUX_QUANTUM = _c.h / (2 * _c.e)

TWO_PI = 2 * math.pi
MHZ = 1e6
KHZ = 1e3
GHZ = 1e9
NS = 1e-9


def angular(freq_hz: float) -> float:
    """Ordinary frequency (Hz) to angular frequency (rad/s)."""
    return TWO_PI * freq_hz


def hz(omega: float) -> float:
    """Angular frequency (rad/s) to ordinary frequency (Hz)."""
    return omega / TWO_PI

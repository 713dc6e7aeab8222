"""Rotating-frame projections for three-phase signals.

The forward projection uses the amplitude-invariant 2/3 scaling so the dq
magnitude of a balanced set equals its phase peak; the inverse is the exact
matrix inverse, so round trips are lossless.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .errors import NegativeMagnitude

_DISP = 2.0 * math.pi / 3.0  # phase displacement b/c relative to a


class ThreePhase(NamedTuple):
    """Instantaneous per-phase values (volts or amperes)."""

    a: float
    b: float
    c: float


class Dq0(NamedTuple):
    """Rotating-frame components in the same unit as the source signal."""

    d: float
    q: float
    zero: float


def abc_to_dq0(x: ThreePhase, theta: float) -> Dq0:
    """Project a three-phase triple onto the frame rotated by ``theta``.

    d is the cosine-aligned axis, q the negative-sine axis, zero the common
    mode (1/3 of the phase sum).
    """
    ca, cb, cc = math.cos(theta), math.cos(theta - _DISP), math.cos(theta + _DISP)
    sa, sb, sc = math.sin(theta), math.sin(theta - _DISP), math.sin(theta + _DISP)
    d = (2.0 / 3.0) * (x.a * ca + x.b * cb + x.c * cc)
    q = -(2.0 / 3.0) * (x.a * sa + x.b * sb + x.c * sc)
    zero = (x.a + x.b + x.c) / 3.0
    return Dq0(d, q, zero)


def dq0_to_abc(x: Dq0, theta: float) -> ThreePhase:
    """Exact inverse of :func:`abc_to_dq0` at the same angle."""
    a = x.d * math.cos(theta) - x.q * math.sin(theta) + x.zero
    b = x.d * math.cos(theta - _DISP) - x.q * math.sin(theta - _DISP) + x.zero
    c = x.d * math.cos(theta + _DISP) - x.q * math.sin(theta + _DISP) + x.zero
    return ThreePhase(a, b, c)


def synthesize_reference(v_mag: float, theta: float) -> ThreePhase:
    """Balanced sine triple of amplitude ``v_mag`` at angle ``theta``."""
    if v_mag < 0.0:
        raise NegativeMagnitude(f"reference magnitude must be >= 0, got {v_mag}")
    return ThreePhase(
        v_mag * math.sin(theta),
        v_mag * math.sin(theta - _DISP),
        v_mag * math.sin(theta + _DISP),
    )

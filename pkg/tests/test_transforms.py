"""Rotating-frame projection tests.

The oracle is an explicit 3x3 matrix product built independently of the
scalar formulas in the implementation; the inverse matrix comes from
numpy's solver, not from the implementation either.
"""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vsgsim.errors import NegativeMagnitude
from vsgsim.transforms import Dq0, ThreePhase, abc_to_dq0, dq0_to_abc, synthesize_reference

DISP = 2.0 * math.pi / 3.0


def oracle_matrix(theta: float) -> np.ndarray:
    """Amplitude-invariant projection matrix, assembled row by row."""
    return np.array([
        [(2 / 3) * math.cos(theta), (2 / 3) * math.cos(theta - DISP), (2 / 3) * math.cos(theta + DISP)],
        [-(2 / 3) * math.sin(theta), -(2 / 3) * math.sin(theta - DISP), -(2 / 3) * math.sin(theta + DISP)],
        [1 / 3, 1 / 3, 1 / 3],
    ])


def oracle_forward(x: ThreePhase, theta: float) -> np.ndarray:
    return oracle_matrix(theta) @ np.array(x)


def oracle_inverse(x: Dq0, theta: float) -> np.ndarray:
    return np.linalg.solve(oracle_matrix(theta), np.array(x))


finite = st.floats(min_value=-1e4, max_value=1e4, allow_nan=False)
angles = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False)


def test_forward_zero_input():
    assert abc_to_dq0(ThreePhase(0, 0, 0), 1.234) == Dq0(0, 0, 0)


def test_forward_matches_matrix_oracle():
    rng = np.random.default_rng(7)
    for _ in range(200):
        x = ThreePhase(*rng.uniform(-100, 100, 3))
        theta = rng.uniform(-10, 10)
        got = abc_to_dq0(x, theta)
        expected = oracle_forward(x, theta)
        np.testing.assert_allclose(got, expected, atol=1e-10)


def test_forward_balanced_cosine_aligned():
    # cos-aligned balanced set of amplitude 1 at theta=0 is (1, -0.5, -0.5)
    got = abc_to_dq0(ThreePhase(1.0, -0.5, -0.5), 0.0)
    np.testing.assert_allclose(got, (1.0, 0.0, 0.0), atol=1e-12)


def test_forward_common_mode_to_zero_channel():
    got = abc_to_dq0(ThreePhase(1.0, 1.0, 1.0), 0.0)
    np.testing.assert_allclose(got, (0.0, 0.0, 1.0), atol=1e-12)


def test_inverse_zero_input():
    assert dq0_to_abc(Dq0(0, 0, 0), -3.0) == ThreePhase(0, 0, 0)


def test_inverse_matches_matrix_oracle():
    rng = np.random.default_rng(11)
    for _ in range(200):
        x = Dq0(*rng.uniform(-100, 100, 3))
        theta = rng.uniform(-10, 10)
        got = dq0_to_abc(x, theta)
        expected = oracle_inverse(x, theta)
        np.testing.assert_allclose(got, expected, atol=1e-9)


def test_inverse_of_unit_d():
    got = dq0_to_abc(Dq0(1.0, 0.0, 0.0), 0.0)
    np.testing.assert_allclose(got, (1.0, -0.5, -0.5), atol=1e-12)


@given(finite, finite, finite, angles)
def test_round_trip_identity(a, b, c, theta):
    x = ThreePhase(a, b, c)
    back = dq0_to_abc(abc_to_dq0(x, theta), theta)
    scale = max(1.0, abs(a), abs(b), abs(c))
    assert max(abs(u - v) for u, v in zip(x, back)) < 1e-9 * scale


def test_rotation_consistency():
    # A positive-sequence cosine set tracked by the transform angle maps to
    # the constant (A, 0, 0) at every instant.
    amp, omega = 17.5, 2 * math.pi * 60
    for t in np.linspace(0.0, 0.05, 400):
        theta = omega * t
        x = ThreePhase(
            amp * math.cos(theta),
            amp * math.cos(theta - DISP),
            amp * math.cos(theta + DISP),
        )
        got = abc_to_dq0(x, theta)
        np.testing.assert_allclose(got, (amp, 0.0, 0.0), atol=1e-9)


@given(finite, finite, finite, finite, angles)
def test_zero_sequence_isolation(a, b, c, offset, theta):
    base = abc_to_dq0(ThreePhase(a, b, c), theta)
    shifted = abc_to_dq0(ThreePhase(a + offset, b + offset, c + offset), theta)
    scale = max(1.0, abs(a), abs(b), abs(c), abs(offset))
    assert abs(shifted.d - base.d) < 1e-9 * scale
    assert abs(shifted.q - base.q) < 1e-9 * scale
    assert abs(shifted.zero - (base.zero + offset)) < 1e-9 * scale


def test_synthesize_zero_magnitude():
    assert synthesize_reference(0.0, 2.0) == ThreePhase(0, 0, 0)


def test_synthesize_at_theta_zero():
    got = synthesize_reference(100.0, 0.0)
    np.testing.assert_allclose(got, (0.0, -86.603, 86.603), atol=5e-4)


def test_synthesize_at_theta_half_pi():
    got = synthesize_reference(100.0, math.pi / 2)
    np.testing.assert_allclose(got, (100.0, -50.0, -50.0), atol=1e-9)


def test_synthesize_rejects_negative_magnitude():
    with pytest.raises(NegativeMagnitude):
        synthesize_reference(-1.0, 0.0)

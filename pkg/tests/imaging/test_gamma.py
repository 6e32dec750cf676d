import numpy as np
import pytest

from src.imaging import SRGB, gamma_forward, gamma_inverse


def test_known_points():
    assert gamma_forward(0.0) == 0.0
    assert gamma_forward(1.0) == pytest.approx(1.0)
    assert gamma_forward(SRGB.threshold) == SRGB.linear_slope * SRGB.threshold
    assert gamma_forward(0.5) > 0.5


def test_out_of_range_values_are_clamped():
    out = gamma_forward(np.array([-0.2, 1.7]))
    assert np.allclose(out, [0.0, 1.0], atol=1e-15)


def test_forward_is_monotone():
    y = np.linspace(0.0, 1.0, 10001)
    assert np.all(np.diff(gamma_forward(y)) >= 0)


def test_inverse_round_trip():
    y = np.concatenate([np.linspace(0.0, 1.0, 4001), np.linspace(0.0025, 0.004, 301)])
    assert np.max(np.abs(gamma_inverse(gamma_forward(y)) - y)) < 1e-9


def test_branches_meet_at_the_threshold():
    below = gamma_forward(SRGB.threshold)
    above = gamma_forward(SRGB.threshold + 1e-12)
    assert abs(above - below) < 1e-6
    assert abs(gamma_inverse(SRGB.encoded_threshold) - SRGB.threshold) < 1e-12

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dampwave.envelope import envelope_fit, power_envelope, upper_hull
from dampwave.errors import InsufficientData, InvalidArgument


def test_exact_power_law():
    x = np.arange(1.0, 101.0)
    slope, const = power_envelope(x, 3.0 * x**-1.5)
    assert slope == pytest.approx(-1.5)
    assert const == pytest.approx(3.0)


def test_hull_of_concave_points():
    x = np.linspace(0, 1, 11)
    assert upper_hull(x, -(x - 0.5) ** 2).tolist() == list(range(11))
    assert upper_hull(x, (x - 0.5) ** 2).tolist() == [0, 10]


def test_noise_does_not_flip_slope():
    # oscillating prefactor on top of k^-2
    k = np.arange(1, 401, dtype=float)
    v = k**-2.0 * (1.5 + np.sin(k) ** 2)
    slope, _ = power_envelope(k, v)
    assert slope == pytest.approx(-2.0, abs=0.05)


def test_window_needs_two_abscissae():
    with pytest.raises(InsufficientData):
        envelope_fit([0.0, 1.0, 2.0], [0.0, 0.0, 0.0], window=0.25)


def test_errors():
    with pytest.raises(InsufficientData):
        power_envelope(np.arange(1, 5.0), np.ones(4))
    with pytest.raises(InvalidArgument):
        power_envelope(np.arange(1, 30.0), -np.ones(29))
    with pytest.raises(InvalidArgument):
        envelope_fit([0.0, 1.0], [0.0, np.nan])


@given(arrays(float, st.integers(3, 60), elements=st.floats(-50, 50)),
       st.floats(0.1, 1.0))
def test_line_dominates_every_point(y, window):
    assume(window * (len(y) - 1) >= 1)
    x = np.arange(len(y), dtype=float)
    env = envelope_fit(x, y, window=window)
    assert np.all(y <= env.intercept + env.slope * x + 1e-9 * (1 + np.abs(y).max()))
    i = env.support[0]
    assert y[i] == pytest.approx(env.intercept + env.slope * x[i], abs=1e-9 * (1 + np.abs(y).max()))


@given(st.floats(-3, 3), st.floats(-5, 5), st.integers(20, 200))
def test_recovers_lines(slope, intercept, n):
    x = np.log(np.arange(1, n + 1, dtype=float))
    env = envelope_fit(x, intercept + slope * x)
    assert env.slope == pytest.approx(slope, abs=1e-9)
    assert env.intercept == pytest.approx(intercept, abs=1e-9)

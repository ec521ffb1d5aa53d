import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from phasecal.metrics import aggregate, error_stats, gain_error_db, wrapped_phase_error

angles = st.floats(-20.0, 20.0, allow_nan=False)


@pytest.mark.parametrize("a,b,expected", [
    (0.1, 2 * math.pi + 0.05, 0.05),
    (math.pi - 0.01, -math.pi + 0.01, 0.02),
    (0.0, math.pi, math.pi),
])
def test_wrapped_phase_error(a, b, expected):
    assert wrapped_phase_error(a, b) == pytest.approx(expected, abs=1e-12)


@given(angles, angles)
def test_wrapped_error_symmetric_and_bounded(a, b):
    e = wrapped_phase_error(a, b)
    assert 0 <= e <= math.pi
    assert e == pytest.approx(wrapped_phase_error(b, a), abs=1e-12)


@given(angles, angles, angles)
def test_wrapped_error_triangle(a, b, c):
    assert wrapped_phase_error(a, c) <= wrapped_phase_error(a, b) + wrapped_phase_error(b, c) + 1e-12


@pytest.mark.parametrize("b,bh,expected", [
    (1.0, 1.0, 0.0),
    (1.0, 0.9, 20 * math.log10(1.1)),
    (1.0, 1.1, 20 * math.log10(1.1)),
])
def test_gain_error_db(b, bh, expected):
    assert gain_error_db(b, bh) == pytest.approx(expected, abs=1e-12)
    assert round(20 * math.log10(1.1), 4) == 0.8279


@given(st.floats(0.1, 10), st.floats(0.0, 10))
def test_gain_error_zero_iff_equal(b, bh):
    e = gain_error_db(b, bh)
    assert e >= 0
    assert (e == 0) == (b == bh)


def test_gain_error_domain():
    with pytest.raises(ValueError):
        gain_error_db(0.0, 1.0)


def test_aggregate_examples():
    assert aggregate([np.array([0.1, 0.3])]) == pytest.approx((0.3, 0.2))
    assert aggregate([np.array([0.3, 0.1]), np.array([0.5, 0.2])])[0] == pytest.approx(0.4)
    assert aggregate([np.zeros((4, 8))] * 3, exclude_reference=True) == (0.0, 0.0)


def test_aggregate_excludes_reference():
    e = np.zeros((2, 2))
    e[0, 0] = 5.0
    e[1, 1] = 1.0
    assert aggregate([e], exclude_reference=True) == pytest.approx((1.0, 1 / 3))
    assert aggregate([e]) == pytest.approx((5.0, 1.5))


def test_aggregate_empty():
    with pytest.raises(ValueError):
        aggregate([])


def test_aggregate_permutation_invariant():
    rng = np.random.default_rng(0)
    errs = [rng.random((4, 8)) for _ in range(10)]
    a = aggregate(errs, True)
    b = aggregate(errs[::-1], True)
    assert a == pytest.approx(b, rel=1e-14)


def test_error_stats_ordering():
    rng = np.random.default_rng(1)
    s = error_stats([rng.random((4, 8)) for _ in range(5)], [rng.random((4, 8)) for _ in range(5)])
    assert s.err_max_rad >= s.err_avg_rad >= 0
    assert s.gain_err_max_db >= s.gain_err_avg_db >= 0

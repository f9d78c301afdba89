import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import sig
from gaitcut.distance import average_pair, merge_and_interpolate, signal_distance
from gaitcut.errors import EmptySignal
from gaitcut.signal_core import Signal

A = sig([0.0, 2.0], positions=[0, 2])
B = sig([0.0], positions=[1])


def random_signal(rng, n_max=40):
    n = int(rng.integers(1, n_max))
    pos = np.sort(rng.uniform(-5, 50, n))
    return Signal(pos, rng.normal(0, 1, n))


def as_pairs(s):
    return list(zip(s.positions.tolist(), s.values.tolist()))


@st.composite
def signals(draw):
    n = draw(st.integers(1, 25))
    pos = sorted(draw(st.lists(st.floats(-100, 100), min_size=n, max_size=n)))
    vals = draw(st.lists(st.floats(-100, 100), min_size=n, max_size=n))
    return Signal(np.array(pos), np.array(vals))


def test_worked_merge():
    g = merge_and_interpolate(A, B)
    assert list(g.z) == [0, 1, 2]
    assert list(g.a_on_z) == [0, 1, 2]
    assert list(g.b_on_z) == [0, 0, 0]


def test_constant_extension_both_sides():
    g = merge_and_interpolate(sig([5.0], [0]), sig([7.0], [3]))
    assert list(g.z) == [0, 3]
    assert list(g.a_on_z) == [5, 5]
    assert list(g.b_on_z) == [7, 7]


def test_duplicates_kept():
    g = merge_and_interpolate(sig([1.0, 2.0], [0, 1]), sig([1.0, 2.0], [0, 1]))
    assert list(g.z) == [0, 0, 1, 1]
    np.testing.assert_array_equal(g.a_on_z, g.b_on_z)


def test_worked_distance():
    assert signal_distance(A, B) == pytest.approx(math.sqrt(5), abs=1e-12)


def test_worked_average():
    avg = average_pair(A, B)
    assert list(avg.positions) == [0, 1, 2]
    assert list(avg.values) == [0, 0.5, 1]


def test_empty():
    empty = Signal(np.empty(0), np.empty(0))
    with pytest.raises(EmptySignal):
        signal_distance(empty, A)


def test_matches_oracle(rng):
    for _ in range(200):
        a, b = random_signal(rng), random_signal(rng)
        assert signal_distance(a, b) == pytest.approx(oracles.distance(as_pairs(a), as_pairs(b)), rel=1e-9, abs=1e-9)
        avg = average_pair(a, b)
        want = oracles.average(as_pairs(a), as_pairs(b))
        np.testing.assert_allclose(avg.positions, [p for p, _ in want])
        np.testing.assert_allclose(avg.values, [v for _, v in want], atol=1e-12)


def test_identity_and_symmetry(rng):
    for _ in range(100):
        a, b = random_signal(rng), random_signal(rng)
        assert signal_distance(a, a) == 0.0
        assert signal_distance(a, b) == signal_distance(b, a)


def test_average_is_closer(rng):
    for _ in range(100):
        a, b = random_signal(rng), random_signal(rng)
        assert signal_distance(average_pair(a, b), a) <= signal_distance(a, b) + 1e-9


def test_average_of_self_duplicates_grid(rng):
    a = random_signal(rng)
    avg = average_pair(a, a)
    np.testing.assert_array_equal(avg.positions, np.repeat(a.positions, 2))
    np.testing.assert_array_equal(avg.values, np.repeat(a.values, 2))


def test_channel_kept_only_when_shared():
    a = sig([1.0, 2.0], channel="acc_x")
    assert average_pair(a, a).channel == "acc_x"
    assert average_pair(a, sig([1.0, 2.0], channel="acc_y")).channel is None


@settings(max_examples=200, deadline=None)
@given(signals(), signals())
def test_properties(a, b):
    d = signal_distance(a, b)
    assert d >= 0
    assert d == signal_distance(b, a)
    assert signal_distance(a, a) == 0
    g = merge_and_interpolate(a, b)
    assert len(g) == len(a) + len(b)
    assert np.all(np.diff(g.z) >= 0)

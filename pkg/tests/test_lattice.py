import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wienerapprox.errors import CountOverflow, WienerError
from wienerapprox.lattice import (
    BallCounter, ball_count, counter, enumerate_shell, fits, inverse_count, lr_norm, optimal_set,
    shell_index, vol_constant,
)

from conftest import R_VALUES, cube_count


@pytest.mark.parametrize("k, r, expected", [
    ((3, 4), 2, 5.0),
    ((1, -2, 3), 1, 6.0),
    ((5, -7), math.inf, 7.0),
])
def test_lr_norm_examples(k, r, expected):
    assert lr_norm(k, r) == expected


def test_lr_norm_quasi_norm():
    assert lr_norm((1, 1), 0.5) == pytest.approx(4.0)


@pytest.mark.parametrize("bad", [0, -1, float("nan")])
def test_bad_r_rejected(bad):
    with pytest.raises(WienerError):
        lr_norm((1, 2), bad)


@pytest.mark.parametrize("s, r, d, expected", [
    (1, math.inf, 2, 9),
    (1, 1, 2, 5),
    (3, 2, 1, 7),
    (0, 0.5, 3, 1),
])
def test_ball_count_examples(s, r, d, expected):
    assert ball_count(s, r, d) == expected


@pytest.mark.parametrize("m, r, d, expected", [
    (4, math.inf, 1, 2),
    (9, math.inf, 2, 1),
    (10, math.inf, 2, 2),
    (1, 2, 3, 0),
])
def test_inverse_count_examples(m, r, d, expected):
    assert inverse_count(m, r, d) == expected


@pytest.mark.parametrize("r, d, expected", [
    (math.inf, 2, 4.0),
    (1, 2, 2.0),
    (2, 2, math.pi),
    (2, 3, 4 * math.pi / 3),
    (1, 3, 8 / 6),
])
def test_vol_constant_examples(r, d, expected):
    assert vol_constant(r, d) == pytest.approx(expected, rel=1e-14)


def test_enumerate_shell_examples():
    assert enumerate_shell(0, 2, 2) == [(0, 0)]
    assert enumerate_shell(1, 1, 2) == [(-1, 0), (0, -1), (0, 1), (1, 0)]
    assert enumerate_shell(1, math.inf, 1) == [(-1,), (1,)]


@pytest.mark.parametrize("r", R_VALUES)
@pytest.mark.parametrize("d", [1, 2, 3])
def test_counts_match_cube_scan(r, d):
    top = {1: 30, 2: 14, 3: 6}[d]
    bc = BallCounter(r, d)
    for s in range(top + 1):
        assert bc.V(s) == cube_count(s, r, d)


@pytest.mark.parametrize("r", R_VALUES)
@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_sandwich_bounds(r, d):
    bc = counter(r, d)
    for s in range(31):
        lo, hi = bc.sandwich(s)
        assert lo <= bc.V(s) <= hi


@pytest.mark.parametrize("r", R_VALUES)
@pytest.mark.parametrize("d", [2, 3])
def test_shells_partition_the_ball(r, d):
    bc = counter(r, d)
    seen = set()
    for s in range(6):
        shell = enumerate_shell(s, r, d)
        assert shell == sorted(shell)
        assert len(shell) == bc.nu(s)
        assert seen.isdisjoint(shell)
        assert all(shell_index(k, r) == s for k in shell)
        seen.update(shell)
    assert len(seen) == bc.V(5)


@pytest.mark.parametrize("r, d", [(2, 2), (1, 3), (0.5, 2), (math.inf, 3)])
def test_shell_growth_window(r, d):
    # nu_s / s^(d-1) stays in a fixed window; record it loosely
    bc = counter(r, d)
    ratios = np.array([bc.nu(s) / s ** (d - 1) for s in range(2, 80)])
    assert ratios.min() > 0
    assert ratios.max() / ratios.min() < 8


def test_array_counts_agree_with_scalar():
    bc = BallCounter(2, 2)
    arr = bc.V_array(60, 90)
    assert list(arr) == [bc.V(s) for s in range(60, 91)]
    assert list(bc.nu_array(1, 10)) == [bc.nu(s) for s in range(1, 11)]


def test_count_overflow_guard():
    with pytest.raises(CountOverflow):
        counter(math.inf, 4).V_array(0, 10**5)


def test_optimal_set_is_shell_greedy():
    bc = counter(1, 2)
    assert optimal_set(bc, 3) == [(0, 0), (-1, 0), (0, -1)]
    assert len(optimal_set(bc, bc.V(4))) == bc.V(4)


@given(st.integers(1, 3000), st.sampled_from(R_VALUES), st.integers(1, 3))
def test_inverse_count_brackets(m, r, d):
    bc = counter(r, d)
    n = bc.inverse(m)
    assert bc.V(n) >= m
    assert n == 0 or bc.V(n - 1) < m


@given(st.lists(st.integers(-40, 40), min_size=1, max_size=4), st.sampled_from(R_VALUES))
def test_shell_index_is_smallest_radius(k, r):
    s = shell_index(k, r)
    a = [abs(x) for x in k]
    assert fits(a, s, r)
    assert s == 0 or not fits(a, s - 1, r)
    assert s == math.ceil(lr_norm(k, r) - 1e-9) or abs(lr_norm(k, r) - round(lr_norm(k, r))) < 1e-9


def test_fits_boundary_exact_for_fractional_r():
    # 4^0.5 + 0 = 2 exactly on the boundary
    assert fits([4, 0], 4, 0.5)
    assert fits([1, 1], 4, 0.5)
    assert not fits([1, 2], 4, 0.5)

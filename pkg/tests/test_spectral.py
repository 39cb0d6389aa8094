import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wienerapprox.errors import GuardExceeded, WienerError
from wienerapprox.exact_values import ClassParams, rearrangement
from wienerapprox.lattice import counter, optimal_set
from wienerapprox.spectral import (
    CoefficientField, Space, class_norm, extremal, extremal_radius, greedy_approximant, greedy_order,
    greedy_residual, grid_values, lp_grid_norm, lp_grid_norm_checked, sp_norm,
)
from wienerapprox.weights import geometric, power

INF = math.inf


def line(**coeffs):
    return CoefficientField({(int(k),): v for k, v in coeffs.items()}, 1)


F = CoefficientField({(0,): 1, (1,): 0.5, (-1,): 0.5, (2,): 0.25})


@pytest.mark.parametrize("p, expected", [(2, 5.0), (1, 7.0), (INF, 4.0)])
def test_sp_norm_examples(p, expected):
    f = CoefficientField({(0,): 3, (1,): 4j})
    assert sp_norm(f, p) == pytest.approx(expected, rel=1e-15)


def test_sp_quasi_norm():
    f = CoefficientField({(0,): 1, (1,): 1})
    assert sp_norm(f, 0.5) == pytest.approx(4.0)


def test_class_norm_examples():
    params = ClassParams(1, 2, INF, 2)
    w = power(2)
    single = CoefficientField({(2, -1): float(w(2.0))})
    assert class_norm(single, w, params) == pytest.approx(1.0, rel=1e-15)
    assert class_norm(CoefficientField({}, 2), w, params) == 0.0


def test_greedy_residual_examples():
    assert greedy_residual(F, 1, Space("S", 1)) == pytest.approx(1.25)
    for space in (Space("S", 1), Space("S", INF), Space("L", 2), Space("L", 4)):
        assert greedy_residual(F, 4, space) == 0.0
    e = CoefficientField({(3,): 1})
    for p in (1, 2, 3.5, INF):
        assert greedy_residual(e, 0, Space("L", p)) == pytest.approx(1.0, rel=1e-12)


def test_greedy_tie_break():
    f = CoefficientField({(2,): 1, (-1,): 1, (1,): 1, (0,): 0.5})
    assert [k for k, _ in greedy_order(f)] == [(-1,), (1,), (2,), (0,)]
    assert set(greedy_approximant(f, 2).entries) == {(-1,), (1,)}


def test_lp_grid_norm_examples():
    assert lp_grid_norm(CoefficientField({(0,): 2 - 1j}), 3) == pytest.approx(math.sqrt(5), rel=1e-14)
    f = CoefficientField({(0,): 1, (1,): 1})
    assert lp_grid_norm(f, 2) == pytest.approx(math.sqrt(2), rel=1e-14)
    assert lp_grid_norm(f, INF, 4096) == pytest.approx(2.0, abs=1e-5)
    with pytest.raises(WienerError):
        lp_grid_norm(f, 0.5)


def test_grid_values_match_direct_sum():
    f = CoefficientField({(1, -2): 0.3 + 1j, (0, 3): -2, (-4, 0): 0.5j}, 2)
    N = 12
    vals = grid_values(f, N)
    x = 2 * np.pi * np.arange(N) / N
    X, Y = np.meshgrid(x, x, indexing="ij")
    direct = sum(c * np.exp(1j * (k[0] * X + k[1] * Y)) for k, c in f.entries.items())
    assert np.allclose(vals, direct, atol=1e-12)


def test_grid_guards():
    f = CoefficientField({(9,): 1})
    with pytest.raises(WienerError):
        grid_values(f, 10)
    with pytest.raises(GuardExceeded):
        grid_values(CoefficientField({(1, 1, 1): 1}), 1000)


def test_grid_refinement_check():
    f = CoefficientField({(k,): 1 / (1 + k * k) for k in range(-20, 21)})
    value, change = lp_grid_norm_checked(f, 3)
    assert change < 1e-6
    assert value > 0


def test_json_round_trip():
    f = CoefficientField({(1, -2): 0.25 - 1j, (0, 0): 3}, 2)
    g = CoefficientField.from_json(f.to_json())
    assert g.entries == f.entries and g.d == 2
    bare = CoefficientField.from_json(json.dumps([[[1], 1.0, 0.0], [[-2], 0.0, 2.0]]))
    assert bare.entries == {(1,): 1, (-2,): 2j}


def test_extremal_examples():
    w = power(1)
    params = ClassParams(2, 1, INF, 1)
    h2 = extremal("h2", params, w, 2)
    assert len(h2) == 3
    assert np.allclose(h2.moduli(), 1 / 3)
    assert class_norm(h2, w, params) == pytest.approx(1.0, abs=1e-10)
    # h4: a single term carrying the first unused step value
    p2 = ClassParams(1, 2, INF, 2)
    h4 = extremal("h4", p2, w, 5)
    (k, c), = h4.entries.items()
    assert abs(c) == pytest.approx(rearrangement(p2, w).value(6))
    assert k not in optimal_set(counter(INF, 2), 5)


def test_h1_on_l1_ball():
    params = ClassParams(2, 2, 1, 2)
    w = geometric(2)
    m = 1
    assert extremal_radius(params, m) == 1
    h1 = extremal("h1", params, w, m)
    assert sorted(h1.entries) == sorted(optimal_set(counter(1, 2), 5))
    assert np.ptp(h1.moduli()) == 0
    assert class_norm(h1, w, params) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("kind", ["h1", "h2"])
@pytest.mark.parametrize("q", [0.5, 1, 2, INF])
def test_extremal_in_class(kind, q):
    params = ClassParams(2, q, 2, 2)
    w = power(1.5)
    for m in (1, 4, 11):
        for phase in ("flat", "chirp"):
            h = extremal(kind, params, w, m, phase=phase)
            assert class_norm(h, w, params) == pytest.approx(1.0, abs=1e-10)


def test_h3_only_on_line():
    with pytest.raises(WienerError):
        extremal("h3", ClassParams(1, 1, INF, 2), power(1), 2)
    with pytest.raises(WienerError):
        extremal("h7", ClassParams(1, 1), power(1), 2)


coeff = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)
fields = st.dictionaries(st.tuples(st.integers(-6, 6)), coeff, min_size=1, max_size=12)


@given(fields)
def test_parseval(entries):
    f = CoefficientField(entries, 1)
    if len(f):
        assert abs(lp_grid_norm(f, 2) - sp_norm(f, 2)) <= 1e-8 * max(1.0, sp_norm(f, 2))


@given(fields, st.floats(0.3, 8), st.floats(0.3, 8))
def test_sp_norm_monotone_in_p(entries, p1, p2):
    f = CoefficientField(entries, 1)
    if len(f):
        lo, hi = sorted((p1, p2))
        assert sp_norm(f, hi) <= sp_norm(f, lo) * (1 + 1e-12)


@given(fields, coeff, st.integers(0, 12))
def test_greedy_scale_invariance(entries, c, m):
    f = CoefficientField(entries, 1)
    if len(f) and abs(c) > 1e-3:
        assert [k for k, _ in greedy_order(f)] == [k for k, _ in greedy_order(f.scaled(c))]


@given(fields, st.integers(0, 5), st.sampled_from([1.0, 2.0, 4.0]))
def test_greedy_bounds_any_subset_in_l2(entries, m, p):
    # in L_2 the greedy residual is the best over all m-subsets; in L_p it is one admissible choice
    f = CoefficientField(entries, 1)
    if len(f) <= m:
        return
    g = greedy_residual(f, m, Space("L", 2))
    keys = sorted(f.entries)
    other = f.without(keys[:m])
    assert g <= lp_grid_norm(other, 2) * (1 + 1e-9)

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wienerapprox.errors import DivergentSeries, WienerError
from wienerapprox.exact_values import (
    ClassParams, best_by_set, evaluate_sigma, find_lm, masked_rearranged, rearrangement, sigma_case,
    sigma_m, sup_scan, widths,
)
from wienerapprox.lattice import counter, optimal_set
from wienerapprox.oracle import brute_width, sorted_log_weights, sup_scan_audit
from wienerapprox.weights import constant, expo, geometric, power

INF = math.inf


def test_params_validation():
    assert ClassParams("inf", 2).p == INF
    for bad in [dict(p=0, q=1), dict(p=1, q=-2), dict(p=1, q=1, r=0), dict(p=1, q=1, d=0), dict(p=1, q=1, d=1.5)]:
        with pytest.raises(WienerError):
            ClassParams(**bad)


@pytest.mark.parametrize("p, q, case", [(1, 1, "i"), (2, 1, "i"), (1, 2, "ii"), (INF, 1, "iii"),
                                        (1, INF, "iv"), (INF, INF, "v")])
def test_sigma_case_routing(p, q, case):
    assert sigma_case(p, q) == case


def test_masked_rearranged_examples():
    sr = rearrangement(ClassParams(1, 1), power(1))
    assert masked_rearranged(sr, [(0,)], 1) == 1.0
    assert masked_rearranged(sr, [(0,), (1,), (-1,)], 1) == 0.5
    assert [masked_rearranged(sr, [], j) for j in range(1, 8)] == [sr.value(j) for j in range(1, 8)]
    with pytest.raises(WienerError):
        masked_rearranged(sr, [(1,), (1,)], 1)


def test_best_by_set_examples():
    w = geometric(2)
    g3 = optimal_set(counter(INF, 1), 3)
    assert best_by_set(ClassParams(2, 1), power(1), g3) == 0.5
    assert best_by_set(ClassParams(1, INF), w, g3) == pytest.approx(1.0, rel=1e-12)
    assert best_by_set(ClassParams(1, 2), w, g3) == pytest.approx(math.sqrt(1 / 6), rel=1e-12)


def test_width_examples():
    wd = widths(ClassParams(2, 1), power(1), 4)
    assert wd.basis == wd.projection == 0.5
    assert wd.gamma_star == ((0,), (-1,), (1,), (-2,))
    assert widths(ClassParams(1, 2), geometric(2), 3).basis == pytest.approx(math.sqrt(1 / 6), rel=1e-12)
    # empty set: the whole class norm
    assert widths(ClassParams(2, 1), power(1), 0).basis == 1.0
    # the origin carries psi(1) = 1/2, then 2 * (1/2 + 1/4 + ...)
    assert widths(ClassParams(1, INF), geometric(2), 0).basis == pytest.approx(2.5, rel=1e-12)


def test_find_lm_examples():
    sr = rearrangement(ClassParams(1, 2), geometric(2))
    assert find_lm(sr, 2, 1) == 3
    assert find_lm(rearrangement(ClassParams(1, 2), constant(1.0)), 2, 4) is None


def scan_lm(values, q, m):
    inv = np.asarray(values) ** -q
    S = np.cumsum(inv)
    for l in range(m + 1, len(values)):
        avg = S[l - 1] / (l - m)
        if inv[l - 1] <= avg * (1 + 1e-13) and avg < inv[l]:
            return l
    return None


@pytest.mark.parametrize("w, q, m", [(power(1), 1, 0), (power(1), 2, 3), (geometric(2), 1.5, 4),
                                     (power(2), 0.5, 7)])
def test_find_lm_matches_direct_scan(w, q, m):
    vals = np.exp(sorted_log_weights(w, INF, 1, 400))
    assert find_lm(rearrangement(ClassParams(1, q), w), q, m) == scan_lm(vals, q, m)


def test_sigma_examples():
    assert sigma_m(ClassParams(INF, INF), power(1), 3) == 0.5
    assert sigma_m(ClassParams(INF, 1), power(1), 2) == pytest.approx(1 / 3, rel=1e-15)
    res = evaluate_sigma(ClassParams(1, 2), geometric(2), 1)
    assert res.l_star == 3
    assert res.value == pytest.approx(math.sqrt(4 / 12 + 1 / 6), rel=1e-12)


def test_sigma_divergent_combination():
    with pytest.raises(DivergentSeries):
        sigma_m(ClassParams(1, INF), power(1), 2)


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("w", [power(1), geometric(2), power(2)])
@pytest.mark.parametrize("p, q", [(1, 1), (2, 1), (3, 0.5)])
def test_sup_case_matches_scan_oracle(d, w, p, q):
    params = ClassParams(p, q, INF, d)
    sr = rearrangement(params, w)
    for m in (0, 1, 4, 9, 17, 30):
        audit = sup_scan_audit(sr, params, m, L_cap=4000)
        if audit.certified:
            assert sigma_m(params, w, m) == pytest.approx(audit.value, rel=1e-12)


def test_sup_scan_limit_for_constant_weight():
    sr = rearrangement(ClassParams(1, 1), constant(1.0))
    res = sup_scan(sr, 1, 1, 3)
    assert res.l_star is None and res.certified
    assert math.exp(res.log_value) == 1.0


@pytest.mark.parametrize("p, q", [(1, 1), (2, 1), (1, 2), (INF, 1), (1, INF), (INF, INF), (0.5, 3)])
@pytest.mark.parametrize("w", [power(1), geometric(2)])
def test_truncated_widths_match_exhaustive_search(p, q, w):
    params = ClassParams(p, q, INF, 1)
    for m in range(0, 5):
        wd = widths(params, w, m, max_shell=7)
        gamma, ref = brute_width(params, w, m, 7)
        assert wd.basis == pytest.approx(ref, rel=1e-12)
        # the minimizer found by brute force only uses innermost shells
        shells = sorted(max(abs(x) for x in k) for k in gamma)
        assert shells == sorted(max(abs(x) for x in k) for k in wd.gamma_star)


@pytest.mark.parametrize("r, d", [(INF, 1), (INF, 2), (2, 2), (1, 3)])
@pytest.mark.parametrize("w", [power(1.5), geometric(2), expo(1, 2)])
def test_projection_width_is_next_step_when_q_le_p(r, d, w):
    params = ClassParams(2, 1, r, d)
    bc = counter(r, d)
    for m in range(0, 40, 3):
        assert widths(params, w, m, include_set=False).log_value == float(w.log(max(bc.inverse(m + 1), 1)))


PAIRS = [(1, 1), (2, 1), (1, 2), (INF, 1), (2, INF), (INF, INF), (1, 3)]


@given(st.sampled_from(PAIRS), st.integers(0, 12), st.data())
def test_ordering_chain(pq, m, data):
    p, q = pq
    params = ClassParams(p, q, INF, 2)
    w = geometric(2)
    s = sigma_m(params, w, m)
    D = widths(params, w, m, include_set=False).basis
    assert s <= D * (1 + 1e-12)
    pool = [k for k in itertools.product(range(-4, 5), repeat=2)]
    gamma = data.draw(st.lists(st.sampled_from(pool), min_size=m, max_size=m, unique=True))
    assert D <= best_by_set(params, w, gamma) * (1 + 1e-12)


@pytest.mark.parametrize("p, q", PAIRS)
def test_monotone_in_m(p, q):
    params = ClassParams(p, q, 2, 2)
    w = power(3)
    sig = [sigma_m(params, w, m, rel_tol=1e-4) for m in range(0, 30)]
    wid = [widths(params, w, m, rel_tol=1e-4, include_set=False).basis for m in range(0, 30)]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(sig, sig[1:]))
    assert all(b <= a * (1 + 1e-9) for a, b in zip(wid, wid[1:]))


def test_far_underflow_stays_in_log_space():
    res = evaluate_sigma(ClassParams(2, 1), expo(1, 2), 400)
    assert res.value == 0.0
    assert -1e6 < res.log_value < -1000

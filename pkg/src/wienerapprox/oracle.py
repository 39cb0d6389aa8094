"""Brute-force cross-checks for the closed forms on small instances.

Nothing here reuses the shell machinery of the exact evaluators: weights are
listed point by point from a cube scan and sorted directly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import mpmath
import numpy as np

from .errors import GuardExceeded, WienerError
from .exact_values import ClassParams, scan_tail_bound
from .lattice import check_r, fits
from .spectral import CoefficientField, sp_norm
from .weights import StepRearrangement, WeightFunction

CUBE_LIMIT = 4_000_000


class TruncatedUniverse:
    """All k with |k|_r <= S_max, ordered by (shell, coordinates)."""

    def __init__(self, S_max: int, r: float, d: int):
        self.S_max = int(S_max)
        self.r = check_r(r)
        self.d = int(d)
        if (2 * S_max + 1) ** d > CUBE_LIMIT:
            raise GuardExceeded(f"cube scan of side {2 * S_max + 1} in d={d} is too large")
        rng = np.arange(-self.S_max, self.S_max + 1)
        cube = np.stack(np.meshgrid(*([rng] * self.d), indexing="ij"), axis=-1).reshape(-1, self.d)
        if math.isinf(self.r):
            shells = np.abs(cube).max(axis=1)
        else:
            shells = np.array([self._shell(a) for a in np.abs(cube).tolist()])
        keep = shells <= self.S_max
        pts = sorted(zip(shells[keep].tolist(), map(tuple, cube[keep].tolist())))
        self.shells = [s for s, _ in pts]
        self.keys = [k for _, k in pts]

    def _shell(self, a) -> int:
        s = min(self.S_max + 1, max(0, math.ceil(math.fsum(x**self.r for x in a if x) ** (1.0 / self.r)) - 1))
        while s > 0 and fits(a, s - 1, self.r):
            s -= 1
        while s <= self.S_max and not fits(a, s, self.r):
            s += 1
        return s

    def __len__(self) -> int:
        return len(self.keys)

    def log_weights(self, w: WeightFunction) -> np.ndarray:
        return w.log(np.maximum(np.array(self.shells, dtype=float), 1.0))


@lru_cache(maxsize=32)
def _universe_shells(S: int, r: float, d: int) -> np.ndarray:
    if d == 1:
        # the line needs no scan: shell s holds +-s
        return np.concatenate([[0], np.repeat(np.arange(1, S + 1), 2)])
    return np.array(TruncatedUniverse(S, r, d).shells)


def sorted_log_weights(w: WeightFunction, r: float, d: int, length: int) -> np.ndarray:
    """First ``length`` weights in decreasing order, from a cube scan."""
    S = 1
    while True:
        shells = _universe_shells(S, float(r), int(d))
        if len(shells) > length:
            lw = w.log(np.maximum(shells.astype(float), 1.0))
            return np.sort(lw)[::-1][:length]
        S *= 2


def brute_best_subset(f: CoefficientField, m: int, p: float) -> tuple[tuple, float]:
    """Exhaustive minimum of the S^p residual over all m-subsets of the support."""
    keys = sorted(f.entries)
    if len(keys) > 14 or m > 6:
        raise GuardExceeded("brute_best_subset needs at most 14 terms and m <= 6")
    if m >= len(keys):
        return tuple(keys), 0.0
    best, arg = math.inf, ()
    for gamma in itertools.combinations(keys, m):
        v = sp_norm(f.without(gamma), p)
        if v < best:
            best, arg = v, gamma
    return arg, best


def _set_error(logs: np.ndarray, p: float, q: float) -> float:
    if len(logs) == 0:
        return 0.0
    if q <= p:
        return float(np.exp(logs.max()))
    sigma = p if math.isinf(q) else p * q / (q - p)
    return float(np.sum(np.exp(sigma * logs)) ** (1.0 / sigma))


def brute_width(params: ClassParams, w: WeightFunction, m: int, S_max: int) -> tuple[tuple, float]:
    """Minimum over all m-subsets gamma of the truncated universe of E_gamma."""
    U = TruncatedUniverse(S_max, params.r, params.d)
    if len(U) > 20 or m > 5:
        raise GuardExceeded("brute_width needs V_{S_max} <= 20 and m <= 5")
    logs = U.log_weights(w)
    idx = range(len(U))
    best, arg = math.inf, ()
    for gamma in itertools.combinations(idx, m):
        mask = np.ones(len(U), dtype=bool)
        mask[list(gamma)] = False
        v = _set_error(logs[mask], params.p, params.q)
        if math.isinf(best) or v < best * (1 - 1e-15):
            best, arg = v, tuple(U.keys[i] for i in gamma)
    return arg, best


@dataclass(frozen=True)
class ScanAudit:
    l_star: int
    value: float
    certified: bool


def sup_scan_audit(sr: StepRearrangement, params: ClassParams, m: int, L_cap: int = 10**5) -> ScanAudit:
    """Linear scan of sup_{m < l <= L_cap} (l-m)^(1/p) / S_l^(1/q).

    ``certified`` says whether the closed-form bound on l > L_cap rules out
    anything larger (the limit value counts for p = q and a positive limit).
    """
    p, q = params.p, params.q
    if q > p or math.isinf(p):
        raise WienerError("sup scan needs q <= p < inf")
    lw = sorted_log_weights(sr.weight, sr.counter.r, sr.counter.d, L_cap + 1)
    neg = -q * lw
    logS = np.logaddexp.accumulate(neg)
    l = np.arange(m + 1, L_cap + 1)
    obj = (np.log(l - m) / p) - logS[m:L_cap] / q
    i = int(np.argmax(obj))
    best = float(obj[i])
    rho = p / q
    bound = scan_tail_bound(float(logS[L_cap - 1]), float(neg[L_cap]), L_cap, m, rho) / p
    limit = math.log(sr.weight.limit) if rho == 1 and sr.weight.limit > 0 else -math.inf
    if limit > best:
        return ScanAudit(0, math.exp(limit), bound <= limit + 1e-13)
    return ScanAudit(int(l[i]), math.exp(best), bound <= best + 1e-13 * max(1.0, abs(best)))


def brute_sigma(params: ClassParams, w: WeightFunction, m: int, length: int,
                tail: Callable[[float], float] | None = None) -> float:
    """sigma_m by direct loops over the first ``length`` sorted weights.

    ``tail(sigma)`` may supply sum_{j > length} value_j^sigma for the cases
    that need a tail; without it the universe is treated as truncated.
    """
    p, q = params.p, params.q
    b = np.exp(sorted_log_weights(w, params.r, params.d, length).astype(float))
    extra = tail or (lambda sigma: 0.0)
    if math.isinf(p) and math.isinf(q):
        return float(b[m])
    if math.isinf(p):
        return float(np.sum(b[: m + 1] ** -q) ** (-1.0 / q))
    if math.isinf(q):
        return float((np.sum(b[m:] ** p) + extra(p)) ** (1.0 / p))
    S = np.cumsum(b ** -q)
    if q <= p:
        l = np.arange(m + 1, length + 1)
        return float(np.max((l - m) ** (1.0 / p) / S[m:] ** (1.0 / q)))
    for l in range(m + 1, length):
        avg = S[l - 1] / (l - m)
        if b[l - 1] ** -q <= avg * (1 + 1e-13) and avg < b[l] ** -q:
            break
    else:
        raise WienerError("no balance point inside the scanned prefix")
    sigma = p * q / (q - p)
    head = (l - m) ** (q / (q - p)) * S[l - 1] ** (p / (p - q))
    return float((head + np.sum(b[l:] ** sigma) + extra(sigma)) ** (1.0 / sigma))


def power_tail_line(s: float, S_max: int) -> Callable[[float], float]:
    """Tail sum over shells > S_max of psi = t^-s on the line: 2 zeta(sigma s, S_max + 1)."""
    def tail(sigma: float) -> float:
        return float(2 * mpmath.zeta(sigma * s, S_max + 1))

    return tail


# certification suite --------------------------------------------------------

SUITE_PAIRS = ((1.0, 1.0), (2.0, 1.0), (1.0, 2.0), (math.inf, 1.0), (1.0, math.inf), (math.inf, math.inf))


@dataclass(frozen=True)
class Certificate:
    check: str
    d: int
    psi: str
    p: float
    q: float
    m: int
    value: float
    reference: float
    rel_err: float
    ok: bool


def _prefix_length(w: WeightFunction, d: int) -> int:
    if w.family.value == "B":
        return 2 * 2000 + 1 if d == 1 else 4000
    return 400 if d == 1 else 20000


def _certify(check, params, w, m, value, reference, tol, certified=True) -> Certificate:
    if reference == value:
        err = 0.0
    else:
        err = abs(value - reference) / abs(reference)
    return Certificate(check, params.d, w.name, params.p, params.q, m, value, reference, err, certified and err <= tol)


def certification_suite(weights, dims=(1, 2), pairs=SUITE_PAIRS, m_max: int = 5,
                        tol: float = 1e-10) -> list[Certificate]:
    """sigma_m and D_m against the brute-force oracles on small instances.

    Pairs whose tail series diverges for a weight are skipped. sigma_m in
    the sup case is compared with the linear scan, elsewhere with the direct
    loops; D_m is compared with the exhaustive subset search in a truncated
    universe of at most 20 vectors.
    """
    from .exact_values import evaluate_sigma, rearrangement, widths
    from .errors import DivergentSeries

    out = []
    for w in weights:
        for d in dims:
            for p, q in pairs:
                params = ClassParams(p, q, math.inf, d)
                for m in range(1, m_max + 1):
                    try:
                        value = evaluate_sigma(params, w, m).value
                    except DivergentSeries:
                        break
                    certified = True
                    if q <= p < math.inf:
                        audit = sup_scan_audit(rearrangement(params, w), params, m, L_cap=2000)
                        ref, certified = audit.value, audit.certified
                    else:
                        length = _prefix_length(w, d)
                        tail = None
                        if w.family.value == "B" and d == 1 and "s" in w.params:
                            tail = power_tail_line(w.params["s"], (length - 1) // 2)
                        ref = brute_sigma(params, w, m, length, tail)
                    out.append(_certify("sigma", params, w, m, value, ref, tol, certified))
                S = 9 if d == 1 else 1
                for m in range(1, min(m_max, 5) + 1):
                    value = widths(params, w, m, include_set=False, max_shell=S).basis
                    ref = brute_width(params, w, m, S)[1]
                    out.append(_certify("width", params, w, m, value, ref, tol))
    return out

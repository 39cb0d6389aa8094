"""Exact best-by-set errors, widths and best m-term errors of a weighted
Wiener class measured in S^p.

All evaluators work on the stepwise rearrangement of the weights and return
logs internally (``log_*`` functions); the plain functions exponentiate.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DivergentSeries, ScanCapExceeded, WienerError
from .lattice import counter, optimal_set, shell_index
from .weights import StepRearrangement, WeightFunction

INF = math.inf
DEFAULT_REL_TOL = 1e-12
DEFAULT_SHELL_CAP = 10**6


def _ext(x, name: str) -> float:
    v = float(x)
    if math.isnan(v) or v <= 0:
        raise WienerError(f"{name} must lie in (0, inf], got {x!r}")
    return v


@dataclass(frozen=True)
class ClassParams:
    """Target space S^p, class exponent q, lattice norm r, dimension d."""

    p: float
    q: float
    r: float = INF
    d: int = 1

    def __post_init__(self):
        object.__setattr__(self, "p", _ext(self.p, "p"))
        object.__setattr__(self, "q", _ext(self.q, "q"))
        object.__setattr__(self, "r", _ext(self.r, "r"))
        if int(self.d) != self.d or self.d < 1:
            raise WienerError(f"d must be a positive integer, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))

    def with_p(self, p: float) -> "ClassParams":
        return ClassParams(p, self.q, self.r, self.d)


def rearrangement(params: ClassParams, w: WeightFunction, max_shell: int | None = None) -> StepRearrangement:
    return StepRearrangement(counter(params.r, params.d), w, max_shell)


def sigma_case(p: float, q: float) -> str:
    """Which closed form applies: 'i'..'v'."""
    if math.isinf(p) and math.isinf(q):
        return "v"
    if math.isinf(p):
        return "iii"
    if math.isinf(q):
        return "iv"
    return "i" if q <= p else "ii"


def _exp(x: float) -> float:
    return math.exp(x) if x > -745.0 else 0.0


# masked rearrangement -------------------------------------------------------

class MaskedRearrangement:
    """Rearrangement of the weights with the vectors of gamma removed."""

    def __init__(self, sr: StepRearrangement, gamma: Iterable[Sequence[int]]):
        self.sr = sr
        members = [tuple(int(x) for x in k) for k in gamma]
        if len(set(members)) != len(members):
            raise WienerError("index set has repeated vectors")
        d = sr.counter.d
        if any(len(k) != d for k in members):
            raise WienerError(f"index set vectors must have {d} coordinates")
        self.hits = Counter(shell_index(k, sr.counter.r) for k in members)
        self.top = max(self.hits, default=-1)
        if sr.max_shell is not None and self.top > sr.max_shell:
            raise WienerError("index set leaves the truncated universe")

    def log_value(self, j: int) -> float:
        if j < 1:
            raise WienerError("rearrangement index starts at 1")
        bc = self.sr.counter
        for s in range(self.top + 1):
            avail = bc.nu(s) - self.hits.get(s, 0)
            if j <= avail:
                return self.sr.log_step(s)
            j -= avail
        return self.sr.log_value(j + bc.V(self.top))

    def log_power_sum(self, sigma: float, rel_tol: float = DEFAULT_REL_TOL) -> tuple[float, float]:
        """log of the sum of all remaining values^sigma, and its relative error."""
        bc = self.sr.counter
        parts = [math.log(bc.nu(s) - self.hits.get(s, 0)) + sigma * self.sr.log_step(s)
                 for s in range(self.top + 1) if bc.nu(s) > self.hits.get(s, 0)]
        tail = self.sr.log_tail_sum(sigma, bc.V(self.top), rel_tol)
        parts.append(tail.log_value)
        total = float(np.logaddexp.reduce(parts))
        err = tail.rel_error * _exp(tail.log_value - total) if total > -math.inf else 0.0
        return total, err


def masked_rearranged(sr: StepRearrangement, gamma, j: int) -> float:
    return _exp(MaskedRearrangement(sr, gamma).log_value(j))


def log_best_by_set(params: ClassParams, w: WeightFunction, gamma, rel_tol: float = DEFAULT_REL_TOL,
                    max_shell: int | None = None) -> float:
    """log of the error of the best approximation from span{e_k : k in gamma}."""
    mr = MaskedRearrangement(rearrangement(params, w, max_shell), gamma)
    p, q = params.p, params.q
    if q <= p:
        return mr.log_value(1)
    sigma = p if math.isinf(q) else p * q / (q - p)
    total, _ = mr.log_power_sum(sigma, rel_tol)
    return total / sigma


def best_by_set(params: ClassParams, w: WeightFunction, gamma, rel_tol: float = DEFAULT_REL_TOL,
                max_shell: int | None = None) -> float:
    return _exp(log_best_by_set(params, w, gamma, rel_tol, max_shell))


# widths ---------------------------------------------------------------------

@dataclass(frozen=True)
class Widths:
    log_value: float
    gamma_star: tuple | None

    @property
    def basis(self) -> float:
        return _exp(self.log_value)

    @property
    def projection(self) -> float:
        return _exp(self.log_value)


def log_width(params: ClassParams, w: WeightFunction, m: int, rel_tol: float = DEFAULT_REL_TOL,
              max_shell: int | None = None) -> float:
    """log D_m (= log of the projection width) in S^p."""
    if m < 0:
        raise WienerError("m must be >= 0")
    sr = rearrangement(params, w, max_shell)
    p, q = params.p, params.q
    if q <= p:
        return sr.log_value(m + 1)
    sigma = p if math.isinf(q) else p * q / (q - p)
    return sr.log_tail_sum(sigma, m, rel_tol).log_value / sigma


def widths(params: ClassParams, w: WeightFunction, m: int, rel_tol: float = DEFAULT_REL_TOL,
           include_set: bool = True, max_shell: int | None = None) -> Widths:
    lv = log_width(params, w, m, rel_tol, max_shell)
    gamma = tuple(optimal_set(counter(params.r, params.d), m)) if include_set else None
    return Widths(lv, gamma)


# best m-term approximation --------------------------------------------------

@dataclass(frozen=True)
class SupResult:
    l_star: int | None  # None when the supremum is only reached in the limit
    log_value: float  # log of the sup of (l-m)/S_l^(p/q), i.e. p * log sigma
    certified: bool


def _neg_step(sr: StepRearrangement, q: float, s: int) -> float:
    """log of value^-q on shell s (+inf past a truncated universe)."""
    if sr.max_shell is not None and s > sr.max_shell:
        return math.inf
    return -q * sr.log_step(s)


def scan_tail_bound(logS: float, loga_next: float, l_prime: int, m: int, rho: float) -> float:
    """Upper bound on log[(l-m)/S_l^rho] over all l > l_prime >= m.

    Uses S_l >= S_l' + (l - l') a' where a' = exp(loga_next) is a lower
    bound on every later increment; the one-variable bound is maximized in
    closed form.
    """
    b = _exp(logS - loga_next) - (l_prime - m)
    y0 = l_prime + 1 - m
    if rho == 1:
        return -loga_next if b > 0 else math.log(y0) - math.log(b + y0) - loga_next
    y = max(b / (rho - 1.0), y0) if b > 0 else y0
    return math.log(y) - rho * math.log(b + y) - rho * loga_next


def sup_scan(sr: StepRearrangement, p: float, q: float, m: int,
             shell_cap: int = DEFAULT_SHELL_CAP, raise_on_cap: bool = True) -> SupResult:
    """Maximize (l-m)/S_l^(p/q) over l > m, S_l = sum_{j<=l} value_j^-q.

    Within one shell the objective is unimodal in l, so only the shell ends
    and the integers next to the stationary point are evaluated.  After each
    shell the rest of the sequence is bounded using S_l >= S_l' + (l-l') a'
    (a' the next increment) and the scan stops once that bound cannot beat
    the best value found.
    """
    rho = p / q
    if rho < 1:
        raise WienerError("sup form needs q <= p")
    bc = sr.counter
    w = sr.weight
    limit = -math.inf
    if rho == 1 and w.limit > 0 and sr.max_shell is None:
        limit = q * math.log(w.limit)
    best, l_best = -math.inf, None
    logS = -math.inf
    last = sr.max_shell if sr.max_shell is not None else shell_cap
    for s in range(0, last + 1):
        l0, l1 = bc.V(s - 1), bc.V(s)
        loga = _neg_step(sr, q, s)
        if l1 > m:
            lo = max(l0, m) + 1
            cands = {lo, l1}
            if rho > 1:
                ratio = _exp(logS - loga) if l0 > 0 else 0.0
                root = (rho * m + ratio - l0) / (rho - 1.0)
                for c in (math.floor(root), math.ceil(root)):
                    if lo <= c <= l1:
                        cands.add(int(c))
            for l in sorted(cands):
                logSl = float(np.logaddexp(logS, math.log(l - l0) + loga))
                val = math.log(l - m) - rho * logSl
                if val > best:
                    best, l_best = val, l
        logS = float(np.logaddexp(logS, math.log(l1 - l0) + loga))
        if l1 < m:
            continue
        loga_next = _neg_step(sr, q, s + 1)
        if math.isinf(loga_next):
            return SupResult(l_best, best, True)
        bound = scan_tail_bound(logS, loga_next, l1, m, rho)
        top = max(best, limit)
        if bound <= top + 1e-13 * max(1.0, abs(top)):
            if limit > best:
                return SupResult(None, limit, True)
            return SupResult(l_best, best, True)
    if sr.max_shell is not None:
        return SupResult(l_best, best, True)
    if raise_on_cap:
        raise ScanCapExceeded(f"sup scan for m={m} not certified within {shell_cap} shells")
    return SupResult(l_best, max(best, limit), False)


def find_lm(sr: StepRearrangement, q: float, m: int, shell_cap: int = DEFAULT_SHELL_CAP) -> int | None:
    """Balance point l_m (smallest l > m with value_l^-q <= S_l/(l-m) < value_{l+1}^-q).

    Returns None when no finite l exists (weights constant from some shell on).
    """
    if math.isinf(q):
        raise WienerError("find_lm needs q < inf")
    if m < 0:
        raise WienerError("m must be >= 0")
    bc = sr.counter
    w = sr.weight
    s = bc.inverse(m + 1)
    logS = sr.log_head_sum(-q, bc.V(s))
    flat = math.log(w.limit) if w.limit > 0 else None
    while s <= shell_cap:
        l = bc.V(s)
        cur, nxt = _neg_step(sr, q, s), _neg_step(sr, q, s + 1)
        mid = logS - math.log(l - m)
        if cur <= mid + 1e-13 * max(1.0, abs(mid)) and mid < nxt:
            return l
        if sr.max_shell is not None and s >= sr.max_shell:
            return l
        if flat is not None and sr.log_step(s) == flat and sr.max_shell is None:
            return None
        s += 1
        logS = float(np.logaddexp(logS, math.log(bc.nu(s)) + _neg_step(sr, q, s)))
    raise ScanCapExceeded(f"no balance point for m={m} within {shell_cap} shells")


@dataclass(frozen=True)
class SigmaResult:
    log_value: float
    case: str
    l_star: int | None = None
    rel_error: float = 0.0

    @property
    def value(self) -> float:
        return _exp(self.log_value)


def evaluate_sigma(params: ClassParams, w: WeightFunction, m: int, rel_tol: float = DEFAULT_REL_TOL,
                   max_shell: int | None = None, shell_cap: int = DEFAULT_SHELL_CAP) -> SigmaResult:
    """sigma_m of the class in S^p together with the case used and the optimizing l."""
    if m < 0:
        raise WienerError("m must be >= 0")
    sr = rearrangement(params, w, max_shell)
    p, q = params.p, params.q
    case = sigma_case(p, q)
    if m + 1 > sr.size:
        return SigmaResult(-math.inf, case)
    if case == "v":
        return SigmaResult(sr.log_value(m + 1), case, m + 1)
    if case == "iii":
        return SigmaResult(-sr.log_head_sum(-q, m + 1) / q, case, m + 1)
    if case == "iv":
        t = sr.log_tail_sum(p, m, rel_tol)
        return SigmaResult(t.log_value / p, case, None, t.rel_error / p)
    if case == "i":
        res = sup_scan(sr, p, q, m, shell_cap)
        return SigmaResult(res.log_value / p, case, res.l_star)
    lm = find_lm(sr, q, m, shell_cap)
    if lm is None:
        raise DivergentSeries(f"{w.name}: no balance point, the tail sum diverges")
    logS = sr.log_head_sum(-q, lm)
    head = q / (q - p) * math.log(lm - m) + p / (p - q) * logS
    sigma = p * q / (q - p)
    t = sr.log_tail_sum(sigma, lm, rel_tol)
    total = float(np.logaddexp(head, t.log_value))
    err = t.rel_error * _exp(t.log_value - total)
    return SigmaResult(total / sigma, case, lm, err / sigma)


def log_sigma_m(params: ClassParams, w: WeightFunction, m: int, rel_tol: float = DEFAULT_REL_TOL,
                max_shell: int | None = None) -> float:
    return evaluate_sigma(params, w, m, rel_tol, max_shell).log_value


def sigma_m(params: ClassParams, w: WeightFunction, m: int, rel_tol: float = DEFAULT_REL_TOL,
            max_shell: int | None = None) -> float:
    """Best m-term approximation error of the class in S^p."""
    return _exp(log_sigma_m(params, w, m, rel_tol, max_shell))

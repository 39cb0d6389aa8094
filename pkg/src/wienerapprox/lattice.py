"""Lattice points of Z^d inside l_r balls: norms, exact counts, shells.

Shell s is the set of integer vectors with s-1 < |k|_r <= s (shell 0 is the
origin).  Counts V_s are exact.  For integer r the ball test is done in
integer arithmetic; for other r a floating comparison with a guard band is
used and near-boundary cases are re-checked with mpmath.
"""

from __future__ import annotations

import math
import threading
from functools import lru_cache
from typing import Iterator, Sequence

import mpmath
import numpy as np

from .errors import CountOverflow, WienerError

_GUARD = 1e-12
_INT64_LIMIT = 2**62


def check_r(r: float) -> float:
    r = float(r)
    if not r > 0 or math.isnan(r):
        raise WienerError(f"r must lie in (0, inf], got {r}")
    return r


def _int_exponent(r: float) -> int | None:
    if math.isinf(r):
        return None
    return int(r) if float(r).is_integer() else None


def lr_norm(k: Sequence[int], r: float) -> float:
    """l_r norm of an integer vector (max norm for r = inf)."""
    r = check_r(r)
    if len(k) == 0:
        raise WienerError("lattice vector must have at least one coordinate")
    a = [abs(int(x)) for x in k]
    if math.isinf(r):
        return float(max(a))
    ri = _int_exponent(r)
    if ri is not None:
        return float(sum(x**ri for x in a)) ** (1.0 / ri)
    return math.fsum(x**r for x in a if x) ** (1.0 / r)


def fits(abs_coords: Sequence[int], s: int, r: float) -> bool:
    """Exact test of |k|_r <= s for a vector given by its absolute coordinates."""
    if s < 0:
        return False
    if math.isinf(r):
        return max(abs_coords, default=0) <= s
    ri = _int_exponent(r)
    if ri is not None:
        return sum(x**ri for x in abs_coords) <= s**ri
    lhs = math.fsum(x**r for x in abs_coords if x)
    rhs = float(s) ** r
    gap = lhs - rhs
    scale = max(rhs, 1.0)
    if gap < -_GUARD * scale:
        return True
    if gap > _GUARD * scale:
        return False
    # too close to call in doubles
    with mpmath.workdps(60):
        rr = mpmath.mpf(r)
        diff = mpmath.fsum(mpmath.mpf(x) ** rr for x in abs_coords if x) - mpmath.mpf(s) ** rr
        return diff <= mpmath.mpf(10) ** -40 * scale


def shell_index(k: Sequence[int], r: float) -> int:
    """Smallest integer s >= 0 with |k|_r <= s."""
    r = check_r(r)
    a = [abs(int(x)) for x in k]
    s = max(0, math.ceil(lr_norm(a, r) - 1e-9))
    while s > 0 and fits(a, s - 1, r):
        s -= 1
    while not fits(a, s, r):
        s += 1
    return s


def vol_constant(r: float, d: int) -> float:
    """Volume of the unit l_r ball in R^d."""
    r = check_r(r)
    if d < 1:
        raise WienerError("d must be >= 1")
    if math.isinf(r):
        return float(2**d)
    return math.exp(d * math.log(2.0) + d * math.lgamma(1.0 + 1.0 / r) - math.lgamma(1.0 + d / r))


def sandwich_constant(r: float, d: int) -> float:
    """Shift c with M((s-c)_+)^d <= V_s <= M(s+c)^d."""
    r = check_r(r)
    if math.isinf(r):
        return 0.5
    return d ** (1.0 / r) / 2.0


def _iroot(n: int, k: int) -> int:
    """floor(n ** (1/k)) for n >= 0."""
    if n < 0:
        return -1
    if k == 1:
        return n
    if k == 2:
        return math.isqrt(n)
    x = int(round(n ** (1.0 / k)))
    while x**k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


class BallCounter:
    """Cached exact counts V_s of lattice points in the l_r ball of radius s."""

    def __init__(self, r: float, d: int):
        self.r = check_r(r)
        if int(d) != d or d < 1:
            raise WienerError(f"d must be a positive integer, got {d}")
        self.d = int(d)
        self._rint = _int_exponent(self.r)
        self._V: list[int] = []
        self._lock = threading.Lock()
        self._memo: dict = {}

    def __repr__(self) -> str:
        return f"BallCounter(r={self.r}, d={self.d})"

    @property
    def M(self) -> float:
        return vol_constant(self.r, self.d)

    @property
    def c(self) -> float:
        return sandwich_constant(self.r, self.d)

    @property
    def closed_form(self) -> bool:
        """True when V_s is a polynomial in s (cube or line)."""
        return math.isinf(self.r) or self.d == 1

    @property
    def cheap(self) -> bool:
        """True when V_s has a closed formula (otherwise each count costs O(s) or more)."""
        return self._closed(1) is not None

    def _closed(self, s: int) -> int | None:
        if math.isinf(self.r) or self.d == 1:
            return (2 * s + 1) ** self.d
        if self._rint == 1:
            return sum(2**i * math.comb(self.d, i) * math.comb(s, i) for i in range(self.d + 1))
        return None

    def _count_int(self, dim: int, budget: int) -> int:
        # vectors in Z^dim with sum |k_i|^r <= budget, r integer
        if budget < 0:
            return 0
        if dim == 1:
            return 2 * _iroot(budget, self._rint) + 1
        key = (dim, budget)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        ri = self._rint
        total = self._count_int(dim - 1, budget)
        t = 1
        while t**ri <= budget:
            total += 2 * self._count_int(dim - 1, budget - t**ri)
            t += 1
        self._memo[key] = total
        return total

    def _last_axis_max(self, used: tuple, s: int) -> int:
        # largest t >= 0 with used + (t,) inside the ball, or -1
        if not fits(used, s, self.r):
            return -1
        rest = float(s) ** self.r - math.fsum(x**self.r for x in used if x)
        t = max(0, int(max(rest, 0.0) ** (1.0 / self.r)))
        t = min(t, s)
        while t > 0 and not fits(used + (t,), s, self.r):
            t -= 1
        while t < s and fits(used + (t + 1,), s, self.r):
            t += 1
        return t

    def _count_generic(self, dim: int, used: tuple, s: int) -> int:
        if dim == 1:
            return 2 * self._last_axis_max(used, s) + 1
        key = (dim, used, s)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        total = 0
        t = 0
        while t <= s:
            nxt = tuple(sorted(used + (t,)))
            if not fits(nxt, s, self.r):
                break
            total += (1 if t == 0 else 2) * self._count_generic(dim - 1, nxt, s)
            t += 1
        self._memo[key] = total
        return total

    def _compute(self, s: int) -> int:
        v = self._closed(s)
        if v is not None:
            return v
        if self._rint is not None:
            return self._count_int(self.d, s**self._rint)
        return self._count_generic(self.d, (), s)

    def V(self, s: int) -> int:
        """Number of lattice vectors with |k|_r <= s; V_{-1} = 0."""
        s = int(s)
        if s < 0:
            return 0
        v = self._closed(s)
        if v is not None:
            return v
        if s < len(self._V):
            return self._V[s]
        with self._lock:
            if self.d == 2 and self._rint == 2 and s > len(self._V) + 64:
                self._V.extend(int(x) for x in self._disc_counts(len(self._V), s))
            while len(self._V) <= s:
                self._V.append(self._compute(len(self._V)))
            return self._V[s]

    def nu(self, s: int) -> int:
        """Shell size V_s - V_{s-1}."""
        return self.V(s) - self.V(s - 1)

    def V_array(self, lo: int, hi: int) -> np.ndarray:
        """Counts V_lo..V_hi (inclusive) as an int64 array."""
        if (2 * hi + 1) ** self.d >= _INT64_LIMIT:
            raise CountOverflow(f"V_{hi} exceeds the int64 count range for d={self.d}")
        s = np.arange(lo, hi + 1, dtype=np.int64)
        if math.isinf(self.r) or self.d == 1:
            out = (2 * s + 1) ** self.d
            out[s < 0] = 0
            return out
        if self.d == 2 and self._rint == 2 and hi > 64:
            return self._disc_counts(lo, hi)
        return np.array([self.V(int(x)) for x in s], dtype=np.int64)

    def _disc_counts(self, lo: int, hi: int) -> np.ndarray:
        out = np.empty(hi - lo + 1, dtype=np.int64)
        for i, s in enumerate(range(lo, hi + 1)):
            if s < 0:
                out[i] = 0
                continue
            if s < len(self._V):
                out[i] = self._V[s]
                continue
            k = np.arange(-s, s + 1, dtype=np.int64)
            rest = s * s - k * k
            t = np.floor(np.sqrt(rest.astype(np.float64))).astype(np.int64)
            t -= (t * t > rest)
            t += ((t + 1) * (t + 1) <= rest)
            out[i] = int(np.sum(2 * t + 1))
        return out

    def nu_array(self, lo: int, hi: int) -> np.ndarray:
        v = self.V_array(lo - 1, hi)
        return np.diff(v)

    def inverse(self, m: int) -> int:
        """n_m: smallest s with V_s >= m."""
        m = int(m)
        if m < 1:
            raise WienerError(f"inverse_count needs m >= 1, got {m}")
        if self.V(0) >= m:
            return 0
        guess = max(1, int((m / self.M) ** (1.0 / self.d) - self.c) - 1)
        hi = guess
        while self.V(hi) < m:
            hi *= 2
        lo = 0
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.V(mid) >= m:
                hi = mid
            else:
                lo = mid
        return hi

    def sandwich(self, s: int) -> tuple[float, float]:
        M, c, d = self.M, self.c, self.d
        return M * max(s - c, 0.0) ** d, M * (s + c) ** d

    def shell(self, s: int) -> Iterator[tuple[int, ...]]:
        """Vectors of shell s in lexicographic order."""
        s = int(s)
        if s < 0:
            return
        yield from self._shell_rec((), s)

    def _shell_rec(self, prefix: tuple, s: int) -> Iterator[tuple[int, ...]]:
        used = tuple(abs(x) for x in prefix)
        if len(prefix) == self.d - 1:
            top = self._last_axis_max(used, s)
            if top < 0:
                return
            inner = self._last_axis_max(used, s - 1) if s > 0 else -1
            for t in range(-top, top + 1):
                if abs(t) > inner:
                    yield prefix + (t,)
            return
        top = self._last_axis_max(used, s)
        for t in range(-top, top + 1):
            yield from self._shell_rec(prefix + (t,), s)


@lru_cache(maxsize=None)
def counter(r: float, d: int) -> BallCounter:
    """Shared counter per (r, d)."""
    return BallCounter(r, d)


def ball_count(s: int, r: float, d: int) -> int:
    if s < 0:
        raise WienerError("s must be >= 0")
    return counter(check_r(r), int(d)).V(s)


def inverse_count(m: int, r: float, d: int) -> int:
    return counter(check_r(r), int(d)).inverse(m)


def enumerate_shell(s: int, r: float, d: int) -> list[tuple[int, ...]]:
    return list(counter(check_r(r), int(d)).shell(s))


def optimal_set(bc: BallCounter, m: int) -> list[tuple[int, ...]]:
    """First m vectors in (shell, lexicographic) order."""
    out: list[tuple[int, ...]] = []
    s = 0
    while len(out) < m:
        need = m - len(out)
        if bc.nu(s) <= need:
            out.extend(bc.shell(s))
        else:
            for k in bc.shell(s):
                out.append(k)
                if len(out) == m:
                    break
        s += 1
    return out

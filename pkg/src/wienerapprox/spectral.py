"""Trigonometric polynomials given by their Fourier coefficients.

Norms in S^p (coefficient side) and L_p (grid quadrature), greedy m-term
approximation, and the flat extremal functions of the lower-bound
constructions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import GuardExceeded, WienerError
from .exact_values import ClassParams, rearrangement
from .lattice import counter, optimal_set, shell_index
from .weights import WeightFunction

GRID_LIMIT = 2**26


class CoefficientField:
    """Finite map k -> f_hat(k); zero coefficients are dropped."""

    def __init__(self, entries: Mapping[Sequence[int], complex], d: int | None = None):
        items = {}
        for k, c in entries.items():
            key = tuple(int(x) for x in k)
            c = complex(c)
            if c != 0:
                items[key] = c
        if d is None:
            if not items:
                raise WienerError("dimension needed for an empty coefficient field")
            d = len(next(iter(items)))
        if any(len(k) != d for k in items):
            raise WienerError(f"all lattice vectors must have {d} coordinates")
        self.d = int(d)
        self.entries = items

    def __len__(self) -> int:
        return len(self.entries)

    def __repr__(self) -> str:
        return f"CoefficientField(d={self.d}, terms={len(self)})"

    def scaled(self, c: complex) -> "CoefficientField":
        return CoefficientField({k: c * v for k, v in self.entries.items()}, self.d)

    def without(self, keys: Iterable[Sequence[int]]) -> "CoefficientField":
        drop = {tuple(k) for k in keys}
        return CoefficientField({k: v for k, v in self.entries.items() if k not in drop}, self.d)

    def moduli(self) -> np.ndarray:
        return np.abs(np.fromiter(self.entries.values(), dtype=complex, count=len(self)))

    def to_json(self) -> str:
        rows = [[list(k), v.real, v.imag] for k, v in sorted(self.entries.items())]
        return json.dumps({"d": self.d, "terms": rows})

    @classmethod
    def from_json(cls, text: str) -> "CoefficientField":
        data = json.loads(text)
        if isinstance(data, dict):
            d, rows = data.get("d"), data["terms"]
        else:
            d, rows = None, data
        return cls({tuple(k): complex(re, im) for k, re, im in rows}, d)


def sp_norm(f: CoefficientField, p: float) -> float:
    """l_p (quasi-)norm of the coefficient moduli."""
    a = f.moduli()
    if len(a) == 0:
        return 0.0
    if math.isinf(p):
        return float(a.max())
    top = a.max()
    return float(top * np.sum((a / top) ** p) ** (1.0 / p))


def log_class_weight(k: Sequence[int], w: WeightFunction, r: float) -> float:
    """log psi at the shell radius of k (psi(1) at the origin)."""
    return float(w.log(max(shell_index(k, r), 1)))


def class_norm(f: CoefficientField, w: WeightFunction, params: ClassParams) -> float:
    """l_q norm of f_hat(k) / Psi_k; f is in the class iff this is <= 1."""
    if len(f) == 0:
        return 0.0
    logs = np.array([math.log(abs(c)) - log_class_weight(k, w, params.r) for k, c in f.entries.items()])
    q = params.q
    if math.isinf(q):
        return float(np.exp(logs.max()))
    return float(np.exp(logsumexp(q * logs) / q))


# greedy ---------------------------------------------------------------------

def greedy_order(f: CoefficientField, r: float = math.inf) -> list[tuple[tuple[int, ...], float]]:
    """Terms by decreasing modulus; ties broken by shell index then coordinates."""
    ranked = sorted(f.entries.items(), key=lambda kv: (-abs(kv[1]), shell_index(kv[0], r), kv[0]))
    return [(k, abs(c)) for k, c in ranked]


def greedy_approximant(f: CoefficientField, m: int, r: float = math.inf) -> CoefficientField:
    keep = [k for k, _ in greedy_order(f, r)[:m]]
    return CoefficientField({k: f.entries[k] for k in keep}, f.d)


@dataclass(frozen=True)
class Space:
    """S^p (kind 'S') or L_p on an N^d grid (kind 'L')."""

    kind: str
    p: float
    N: int | None = None

    def norm(self, f: CoefficientField) -> float:
        if self.kind == "S":
            return sp_norm(f, self.p)
        if self.kind == "L":
            return lp_grid_norm(f, self.p, self.N)
        raise WienerError(f"unknown space kind {self.kind!r}")


def greedy_residual(f: CoefficientField, m: int, space: Space, r: float = math.inf) -> float:
    """Norm of f minus its greedy m-term approximant."""
    if m < 0:
        raise WienerError("m must be >= 0")
    drop = [k for k, _ in greedy_order(f, r)[:m]]
    return space.norm(f.without(drop))


# grid L_p norms -------------------------------------------------------------

def nyquist(f: CoefficientField) -> int:
    if len(f) == 0:
        return 1
    return 2 * max(abs(x) for k in f.entries for x in k) + 1


def grid_values(f: CoefficientField, N: int) -> np.ndarray:
    """f on the uniform grid x_j = 2 pi j / N, j in [0, N)^d."""
    if N ** f.d > GRID_LIMIT:
        raise GuardExceeded(f"grid {N}^{f.d} exceeds {GRID_LIMIT} points")
    if N < nyquist(f):
        raise WienerError(f"grid size {N} below the alias-free bound {nyquist(f)}")
    arr = np.zeros((N,) * f.d, dtype=complex)
    for k, c in f.entries.items():
        arr[tuple(x % N for x in k)] += c
    # the inverse FFT is exactly the direct sum sum_k c_k e^{i k.x} at grid points
    return np.fft.ifftn(arr) * N ** f.d


def lp_grid_norm(f: CoefficientField, p: float, N: int | None = None) -> float:
    """Rectangle-rule L_p norm with normalized measure (grid max for p = inf)."""
    if p < 1:
        raise WienerError("grid L_p norms need p >= 1")
    if len(f) == 0:
        return 0.0
    if N is None:
        N = default_grid(f)
    a = np.abs(grid_values(f, N))
    if math.isinf(p):
        return float(a.max())
    top = a.max()
    if top == 0:
        return 0.0
    return float(top * np.mean((a / top) ** p) ** (1.0 / p))


def default_grid(f: CoefficientField) -> int:
    N = 8 * nyquist(f)
    while N ** f.d > GRID_LIMIT and N > nyquist(f):
        N //= 2
    return max(N, nyquist(f))


def lp_grid_norm_checked(f: CoefficientField, p: float, N: int | None = None) -> tuple[float, float]:
    """Grid norm and its relative change when N is doubled once."""
    N = default_grid(f) if N is None else N
    a = lp_grid_norm(f, p, N)
    if (2 * N) ** f.d > GRID_LIMIT:
        return a, math.nan
    b = lp_grid_norm(f, p, 2 * N)
    return b, abs(b - a) / b if b else 0.0


# extremal functions ---------------------------------------------------------

def _flat(keys: list, log_weights: np.ndarray, q: float, d: int, phase: str) -> CoefficientField:
    if math.isinf(q):
        logh = float(log_weights.min())
    else:
        logh = -float(logsumexp(-q * log_weights)) / q
    h = math.exp(logh)
    if phase == "flat":
        return CoefficientField({k: h for k in keys}, d)
    if phase == "chirp":
        K = 2 * max(abs(x) for k in keys for x in k) + 1
        return CoefficientField({k: h * np.exp(1j * math.pi * sum(x * x for x in k) / K) for k in keys}, d)
    raise WienerError(f"unknown phase pattern {phase!r}")


def extremal_radius(params: ClassParams, m: int) -> int:
    """n_m = floor((2m / M)^(1/d)) used by the h1 construction."""
    M = counter(params.r, params.d).M
    return int(math.floor((2 * m / M) ** (1.0 / params.d) + 1e-12))


def extremal(kind: str, params: ClassParams, w: WeightFunction, m: int, gamma=None,
             phase: str = "flat") -> CoefficientField:
    """Extremal function h1..h4 of the class; class_norm of the result is <= 1.

    ``phase='chirp'`` keeps the moduli (so class membership is unchanged)
    but spreads the function over the torus, which makes L_p norms with
    p < 2 comparable to the L_2 norm.
    """
    bc = counter(params.r, params.d)
    if m < 0:
        raise WienerError("m must be >= 0")
    if kind == "h1":
        n = extremal_radius(params, m)
        keys = [k for s in range(n + 1) for k in bc.shell(s)]
    elif kind in ("h2", "h3"):
        if kind == "h3" and params.d != 1:
            raise WienerError("h3 is defined for d = 1 only")
        keys = optimal_set(bc, m + 1)
    elif kind == "h4":
        return _single_peak(params, w, m, gamma)
    else:
        raise WienerError(f"unknown extremal kind {kind!r}")
    logs = np.array([log_class_weight(k, w, params.r) for k in keys])
    return _flat(keys, logs, params.q, params.d, phase)


def _single_peak(params: ClassParams, w: WeightFunction, m: int, gamma) -> CoefficientField:
    bc = counter(params.r, params.d)
    taken = {tuple(k) for k in (optimal_set(bc, m) if gamma is None else gamma)}
    sr = rearrangement(params, w)
    s = 0
    while all(k in taken for k in bc.shell(s)):
        s += 1
    top = sr.log_step(s)
    cands = []
    t = s
    while sr.log_step(t) == top:
        cands.extend(k for k in bc.shell(t) if k not in taken)
        t += 1
        if t > s + 2:
            break
    k0 = min(cands)
    return CoefficientField({k0: math.exp(top)}, params.d)

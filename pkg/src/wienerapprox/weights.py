"""Weight functions psi, family checks, and the stepwise rearrangement.

Everything is evaluated in log space: super-exponential weights such as
exp(-t^2) underflow doubles long before the shell radii used in audits.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq
from scipy.special import logsumexp

from .errors import DivergentSeries, FamilyError, NonConvergence, WienerError
from .lattice import BallCounter


class Family(str, enum.Enum):
    B = "B"
    M_PRIME = "M_prime_inf"
    M_C = "M_c_inf"
    M_DPRIME = "M_dprime_inf"
    GENERIC = "GenericMonotone"


FAST_DECAY = (Family.M_PRIME, Family.M_C, Family.M_DPRIME)


@dataclass(frozen=True)
class WeightFunction:
    """A positive non-increasing psi on [1, inf) given through log psi.

    ``dlog`` is the right derivative of log psi; ``beta`` is the power-type
    decay rate of B-family members (liminf of t|psi'|/psi).
    """

    name: str
    log_psi: Callable
    dlog: Callable | None = None
    family: Family = Family.GENERIC
    params: dict = field(default_factory=dict)
    beta: float | None = None
    limit: float = 0.0

    def log(self, t):
        return self.log_psi(np.asarray(t, dtype=float) if np.ndim(t) else float(t))

    def __call__(self, t):
        return np.exp(self.log(t))

    def eval(self, t):
        return self(t)

    def dlog_at(self, t: float) -> float:
        if self.dlog is not None:
            return float(self.dlog(float(t)))
        h = max(1e-6, 1e-8 * t)
        lo = max(t - h, 1.0)
        return (float(self.log_psi(t + h)) - float(self.log_psi(lo))) / (t + h - lo)

    def deriv(self, t: float) -> float:
        """Right derivative psi'(t+)."""
        return float(self(t)) * self.dlog_at(t)

    def tail_converges(self, sigma: float, d: int) -> bool | None:
        """Whether sum over Z^d of psi^sigma(|k|) converges (None if unknown)."""
        if sigma <= 0:
            return False
        if self.family in FAST_DECAY:
            return True
        if self.limit > 0:
            return False
        if self.beta is not None:
            return sigma * self.beta > d
        return None


def _power(s):
    return (lambda t: -s * np.log(t)), (lambda t: -s / t)


def power(s: float) -> WeightFunction:
    """psi(t) = t^(-s)."""
    lp, dl = _power(s)
    return _verified(WeightFunction(f"pow:s={s!r}", lp, dl, Family.B, {"s": s}, beta=float(s)))


def powlog(s: float, eps: float) -> WeightFunction:
    """psi(t) = t^(-s) * ln^eps(t + e)."""

    def lp(t):
        return -s * np.log(t) + eps * np.log(np.log(t + math.e))

    def dl(t):
        return -s / t + eps / ((t + math.e) * np.log(t + math.e))

    w = WeightFunction(f"powlog:s={s!r},eps={eps!r}", lp, dl, Family.B, {"s": s, "eps": eps}, beta=float(s))
    return _verified(w)


def expo(a: float = 1.0, s: float = 1.0) -> WeightFunction:
    """psi(t) = exp(-a t^s); family set by s (<1, =1, >1)."""
    if a <= 0 or s <= 0:
        raise WienerError("exp weight needs a > 0 and s > 0")
    fam = Family.M_PRIME if s < 1 else Family.M_C if s == 1 else Family.M_DPRIME

    def lp(t):
        return -a * np.power(t, s)

    def dl(t):
        return -a * s * np.power(t, s - 1.0)

    return _verified(WeightFunction(f"exp:a={a!r},s={s!r}", lp, dl, fam, {"a": a, "s": s}))


def geometric(base: float = 2.0) -> WeightFunction:
    """psi(t) = base^(-t)."""
    if base <= 1:
        raise WienerError("geom weight needs base > 1")
    lb = math.log(base)

    def lp(t):
        return -lb * np.asarray(t, dtype=float) if np.ndim(t) else -lb * t

    def dl(t):
        return -lb

    return _verified(WeightFunction(f"geom:base={base!r}", lp, dl, Family.M_C, {"base": base}))


def constant(c: float = 1.0) -> WeightFunction:
    if c <= 0:
        raise WienerError("const weight needs c > 0")
    lc = math.log(c)

    def lp(t):
        return np.full(np.shape(t), lc) if np.ndim(t) else lc

    def dl(t):
        return 0.0

    return _verified(WeightFunction(f"const:c={c!r}", lp, dl, Family.B, {"c": c}, beta=0.0, limit=c))


def tabulated(values) -> WeightFunction:
    """Piecewise log-linear psi through values at t = 1, 2, ..., held flat afterwards."""
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 1 or len(vals) < 2 or np.any(vals <= 0) or np.any(np.diff(vals) > 0):
        raise FamilyError("tabulated weights must be positive and non-increasing")
    nodes = np.arange(1, len(vals) + 1, dtype=float)
    logs = np.log(vals)

    def lp(t):
        return np.interp(t, nodes, logs)

    return _verified(WeightFunction("tab", lp, None, Family.GENERIC, {"n": len(vals)}, limit=float(vals[-1])))


# family verification --------------------------------------------------------

def _grid(w: WeightFunction, T: float) -> np.ndarray:
    t = np.arange(1.0, T + 0.25, 0.5)
    lg = w.log(t)
    return t[np.isfinite(lg) & (lg > -700.0)]


def verify_family(w: WeightFunction, T: float = 64.0, K3: float = 1e6, K45: float = 1e3) -> None:
    """Check the declared family on a sampled grid; raise FamilyError on failure."""
    t = _grid(w, T)
    if len(t) < 8:
        raise FamilyError(f"{w.name}: too few representable grid points")
    lg = w.log(t)
    tol = 1e-9
    if np.any(np.diff(lg) > tol * np.maximum(1.0, np.abs(lg[1:]))):
        raise FamilyError(f"{w.name}: psi is not non-increasing")
    if w.family == Family.GENERIC:
        return
    if w.family == Family.B:
        half = t[t <= T / 2]
        ratio = w.log(half) - w.log(2 * half)
        if np.any(ratio < -tol) or np.any(ratio > math.log(K3)):
            raise FamilyError(f"{w.name}: doubling ratio outside [1, K3]")
        if ratio[-1] - ratio[len(ratio) // 8] > 1.0:
            raise FamilyError(f"{w.name}: doubling ratio keeps growing")
        return
    # convex families: psi(t-h) + psi(t+h) >= 2 psi(t), checked relative to psi(t)
    c = np.exp(lg[:-2] - lg[1:-1]) + np.exp(lg[2:] - lg[1:-1])
    if np.any(c < 2.0 - 1e-9):
        raise FamilyError(f"{w.name}: psi is not convex")
    slope = np.array([abs(w.dlog_at(x)) for x in t])
    if np.any(slope <= 0):
        raise FamilyError(f"{w.name}: derivative vanishes")
    inv = 1.0 / slope
    alpha = inv / t
    if w.family in (Family.M_PRIME, Family.M_C):
        if np.any(np.diff(alpha) > tol * alpha[1:]) or not alpha[-1] < alpha[0]:
            raise FamilyError(f"{w.name}: alpha is not decreasing")
    if w.family == Family.M_PRIME:
        if np.any(np.diff(inv) < -tol * inv[1:]) or not inv[-1] > inv[0]:
            raise FamilyError(f"{w.name}: psi/|psi'| is not increasing")
    elif w.family == Family.M_C:
        if inv.max() / inv.min() > K45:
            raise FamilyError(f"{w.name}: psi/|psi'| not bounded within K45")
    elif w.family == Family.M_DPRIME:
        if np.any(np.diff(inv) > tol * inv[1:]) or not inv[-1] < inv[0]:
            raise FamilyError(f"{w.name}: psi/|psi'| is not decreasing")


def _verified(w: WeightFunction) -> WeightFunction:
    verify_family(w)
    return w


# derived quantities ---------------------------------------------------------

def alpha(w: WeightFunction, t: float) -> float:
    """psi(t) / (t |psi'(t)|)."""
    g = w.dlog_at(t)
    if g == 0:
        raise WienerError(f"{w.name}: psi' vanishes at t={t}, alpha undefined")
    return 1.0 / (t * abs(g))


def eta_mu(w: WeightFunction, t: float, t_max: float = 1e12) -> tuple[float, float]:
    """eta(t) with psi(eta) = psi(t)/2, and mu(t) = t / (eta - t)."""
    target = float(w.log(t)) - math.log(2.0)

    def f(x):
        return float(w.log(x)) - target

    hi = 2.0 * t
    while f(hi) > 0:
        hi *= 2.0
        if hi > t_max:
            raise WienerError(f"{w.name}: psi does not halve below t_max={t_max}")
    eta = brentq(f, t, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=500)
    return eta, t / (eta - t)


@dataclass(frozen=True)
class DecayVerdict:
    passed: bool
    witness: float | None
    trace: list  # (t, g(t), |psi'|/psi - beta ln t)


def check_decay_condition(w: WeightFunction, beta: float, T: float = 1e3, points: int = 64) -> DecayVerdict:
    """Test t^beta psi(t+1)/psi(t) -> 0 on a geometric grid up to T."""
    if T < 10:
        raise WienerError("horizon T must be >= 10")
    t = np.geomspace(1.0, T, points)
    logg = beta * np.log(t) + w.log(t + 1.0) - w.log(t)
    g = np.exp(logg)
    slope_gap = [abs(w.dlog_at(x)) - beta * math.log(x) for x in t]
    trace = [(float(a), float(b), float(c)) for a, b, c in zip(t, g, slope_gap)]
    tailpart = logg[points // 2:]
    rising = np.nonzero(np.diff(tailpart) >= 0)[0]
    if len(rising):
        return DecayVerdict(False, float(t[points // 2 + rising[0] + 1]), trace)
    if g[-1] >= 1e-6:
        return DecayVerdict(False, float(t[-1]), trace)
    return DecayVerdict(True, None, trace)


# weight DSL -----------------------------------------------------------------

_DSL = {
    "pow": (power, ("s",)),
    "powlog": (powlog, ("s", "eps")),
    "exp": (expo, ("a", "s")),
    "geom": (geometric, ("base",)),
    "const": (constant, ("c",)),
}


def parse_weight(text: str) -> WeightFunction:
    """Parse ``name:key=value,...`` (pow, powlog, exp, geom, const)."""
    name, _, rest = text.strip().partition(":")
    if name not in _DSL:
        raise WienerError(f"unknown weight family {name!r} in {text!r}")
    ctor, keys = _DSL[name]
    kwargs = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        key = key.strip()
        if not eq or key not in keys:
            raise WienerError(f"bad weight parameter {item!r} for {name}")
        try:
            kwargs[key] = float(val)
        except ValueError:
            raise WienerError(f"weight parameter {key} is not a number: {val!r}") from None
    return ctor(**kwargs)


# stepwise rearrangement -----------------------------------------------------

@dataclass(frozen=True)
class TailSum:
    log_value: float
    rel_error: float
    last_shell: int

    @property
    def value(self) -> float:
        return math.exp(self.log_value) if self.log_value > -745 else 0.0

    @property
    def error(self) -> float:
        return self.value * self.rel_error


SLOW_COUNT_CAP = 2**13


class StepRearrangement:
    """Non-increasing rearrangement: value psi(max(s,1)) repeated nu_s times on shell s.

    With ``max_shell`` set, the universe is cut at that shell and every
    sum becomes finite.
    """

    def __init__(self, bc: BallCounter, weight: WeightFunction, max_shell: int | None = None):
        self.counter = bc
        self.weight = weight
        self.max_shell = max_shell

    @property
    def size(self) -> float:
        return math.inf if self.max_shell is None else self.counter.V(self.max_shell)

    def log_step(self, s: int) -> float:
        return float(self.weight.log(max(int(s), 1)))

    def log_steps(self, lo: int, hi: int) -> np.ndarray:
        s = np.arange(lo, hi + 1, dtype=float)
        return self.weight.log(np.maximum(s, 1.0))

    def shell_of(self, j: int) -> int:
        return self.counter.inverse(j)

    def log_value(self, j: int) -> float:
        if j < 1:
            raise WienerError("rearrangement index starts at 1")
        if j > self.size:
            return -math.inf
        return self.log_step(self.shell_of(j))

    def value(self, j: int) -> float:
        return math.exp(self.log_value(j))

    def log_head_sum(self, sigma: float, l: int) -> float:
        """log of sum_{j<=l} value_j^sigma."""
        if l < 1:
            raise WienerError("head sum needs l >= 1")
        if l > self.size:
            raise WienerError("head sum runs past the truncated universe")
        n = self.shell_of(l)
        part = math.log(l - self.counter.V(n - 1)) + sigma * self.log_step(n)
        if n == 0:
            return part
        terms = np.log(self.counter.nu_array(0, n - 1).astype(float)) + sigma * self.log_steps(0, n - 1)
        return float(np.logaddexp(logsumexp(terms), part))

    def head_sum(self, sigma: float, l: int) -> float:
        return math.exp(self.log_head_sum(sigma, l))

    def _chunk(self, sigma: float, lo: int, hi: int) -> float:
        nu = self.counter.nu_array(lo, hi).astype(float)
        return float(logsumexp(np.log(nu) + sigma * self.log_steps(lo, hi)))

    def log_tail_sum(self, sigma: float, l: int, rel_tol: float = 1e-12, shell_cap: int = 2**22) -> TailSum:
        """sum_{j>l} value_j^sigma with a certified relative error bound."""
        if sigma <= 0:
            raise WienerError("tail sums need a positive exponent")
        if l < 0:
            raise WienerError("tail sum needs l >= 0")
        bc = self.counter
        if self.max_shell is not None and l >= self.size:
            return TailSum(-math.inf, 0.0, self.max_shell)
        n = bc.inverse(l + 1)
        logP = math.log(bc.V(n) - l) + sigma * self.log_step(n)
        if self.max_shell is not None:
            if self.max_shell > n:
                logP = float(np.logaddexp(logP, self._chunk(sigma, n + 1, self.max_shell)))
            return TailSum(logP, 0.0, self.max_shell)
        ok = self.weight.tail_converges(sigma, bc.d)
        if ok is False:
            raise DivergentSeries(f"sum of {self.weight.name}^{sigma} over Z^{bc.d} diverges")
        if not bc.cheap:
            shell_cap = min(shell_cap, SLOW_COUNT_CAP)
        S = n
        history: list[float] = []
        while True:
            S_new = max(2 * S, n + 64)
            if S_new > shell_cap:
                raise NonConvergence(f"tail of {self.weight.name}^{sigma} needs more than {shell_cap} shells")
            logP = float(np.logaddexp(logP, self._chunk(sigma, S + 1, S_new)))
            S = S_new
            lo_rel, hi_rel = self._remainder(sigma, S)
            logg = sigma * self.log_step(S + 1)
            lo = 1.0 + math.exp(min(logg + math.log(lo_rel) - logP, 700.0))
            hi = 1.0 + math.exp(min(logg + math.log(hi_rel) - logP, 700.0))
            mid = 0.5 * (lo + hi)
            err = (hi - lo) / (2.0 * mid) + 4e-16 * math.log2(S)
            if err <= rel_tol:
                return TailSum(logP + math.log(mid), err, S)
            history.append(err)
            if len(history) >= 4 and history[-1] >= 0.999 * history[-4]:
                raise NonConvergence(f"remainder bound for {self.weight.name}^{sigma} is not shrinking")
            if len(history) >= 3 and history[-1] < history[-2]:
                # extrapolate the per-doubling gain; give up early if the cap is out of reach
                gain = history[-2] / history[-1]
                need = math.log(err / rel_tol) / math.log(gain)
                if S * 2.0 ** need > shell_cap:
                    raise NonConvergence(f"tail of {self.weight.name}^{sigma} reaches only about {err:.1e} "
                                         f"relative error within {shell_cap} shells")

    def tail_sum(self, sigma: float, l: int, rel_tol: float = 1e-12) -> TailSum:
        return self.log_tail_sum(sigma, l, rel_tol)

    # remainder bracket for shells > S, in units of psi(S+1)^sigma
    def _remainder(self, sigma: float, S: int) -> tuple[float, float]:
        bc = self.counter
        d = bc.d
        a = S + 1
        if bc.closed_form:
            def U(t):
                return (2 * t + 1) ** d

            def dU(t):
                return 2 * d * (2 * t + 1) ** (d - 1)

            L, dL = U, dU
            kappa = ((2 * a - 1) / (2 * a + 1)) ** (d - 1)
        else:
            M, c = bc.M, bc.c

            def U(t):
                return M * (t + c) ** d

            def dU(t):
                return M * d * (t + c) ** (d - 1)

            def L(t):
                return M * max(t - c, 0.0) ** d

            def dL(t):
                return M * d * max(t - c, 0.0) ** (d - 1)

            kappa = (max(a - c, 0.0) / (a + 1 - c)) ** (d - 1)
        VS = float(bc.V(S))
        ref = self.log_step(a)
        i_hi, e_hi = _scaled_integral(dU, self.weight, sigma, ref, a)
        i_lo, e_lo = _scaled_integral(dL, self.weight, sigma, ref, a + 1)
        hi = U(a) - VS + i_hi + e_hi
        lo = max(float(bc.nu(a)), L(a) - VS + kappa * max(i_lo - e_lo, 0.0))
        if self.weight.family == Family.M_DPRIME:
            hi = min(hi, self._geometric_bound(sigma, a, U, L))
        return lo, max(hi, lo)

    def _geometric_bound(self, sigma, a, U, L) -> float:
        # log psi is concave here, so psi(t+1)/psi(t) only shrinks past a
        x = math.exp(sigma * (self.log_step(a + 1) - self.log_step(a)))
        if x >= 1.0:
            return math.inf
        total, j, xj = 0.0, 0, 1.0
        while True:
            term = (U(a + j) - L(a + j - 1)) * xj
            total += term
            if term < 1e-18 * total or j > 10000:
                break
            j += 1
            xj *= x
        return total * (1 + 1e-12) if j <= 10000 else math.inf


def _scaled_integral(dpoly, w: WeightFunction, sigma: float, ref: float, start: float) -> tuple[float, float]:
    """int_start^inf dpoly(t) * (psi(t)/psi(a))^sigma dt, with an error estimate."""

    def f(t):
        return dpoly(t) * math.exp(sigma * (float(w.log(t)) - ref))

    total, err = 0.0, 0.0
    lo, width = float(start), max(float(start), 1.0)
    for _ in range(40):
        v, e = quad(f, lo, lo + width, epsabs=0.0, epsrel=1e-12, limit=200)
        total += v
        err += e
        lo += width
        width *= 2.0
        if v <= 1e-18 * total:
            break
    with warnings.catch_warnings():
        # the far piece is usually negligible and quad complains about it
        warnings.simplefilter("ignore", IntegrationWarning)
        v, e = quad(f, lo, math.inf, epsabs=1e-300, epsrel=1e-12, limit=200)
    return total + v, err + e + 1e-14 * (total + v)

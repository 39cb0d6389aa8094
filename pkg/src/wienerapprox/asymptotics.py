"""Order predictors for the approximation characteristics and ratio audits.

A predictor maps m to log of the predicted order (or to a two-sided window).
An audit compares computed values with a predictor on an m-grid: the ratio
must stay inside a bounded spread and show no systematic drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import RegimeMismatch, WienerError
from .exact_values import ClassParams, log_sigma_m
from .lattice import counter
from .spectral import Space, extremal, greedy_residual
from .weights import Family, WeightFunction, alpha, check_decay_condition

SP_QUANTITIES = ("sigma", "width")
LP_QUANTITIES = ("sigma", "sigma_perp", "greedy", "width_perp")


class Interval(NamedTuple):
    lo: float
    hi: float


def _inv(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


def conjugate(p: float) -> float:
    """Hoelder conjugate p' = p/(p-1) (1 -> inf, inf -> 1)."""
    if p < 1:
        raise WienerError(f"conjugate exponent needs p >= 1, got {p}")
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True)
class OrderPredictor:
    """Predicted order of one quantity; ``log_upper`` is set for windows."""

    regime: str
    quantity: str
    log_formula: Callable[[int], float]
    log_upper: Callable[[int], float] | None = None
    validity: dict = field(default_factory=dict)
    m0: int = 1

    @property
    def is_window(self) -> bool:
        return self.log_upper is not None

    def log_bounds(self, m: int) -> tuple[float, float]:
        lo = float(self.log_formula(m))
        hi = float(self.log_upper(m)) if self.log_upper else lo
        return lo, hi

    def __call__(self, m: int):
        lo, hi = self.log_bounds(m)
        if self.log_upper is None:
            return math.exp(lo)
        return Interval(math.exp(lo), math.exp(hi))


# validity checks ------------------------------------------------------------

def power_rate(w: WeightFunction, T: float = 1e4) -> float:
    """Lower estimate of t|psi'(t)|/psi(t) for large t."""
    if w.beta is not None:
        return float(w.beta)
    t = np.geomspace(T / 10, T, 16)
    return float(min(t_ * abs(w.dlog_at(t_)) for t_ in t))


def _need_rate(w: WeightFunction, beta: float, what: str) -> None:
    rate = power_rate(w)
    if not rate > beta:
        raise RegimeMismatch(f"{w.name}: {what} needs decay rate above {beta:g}, found {rate:g}")


def _need_decay(w: WeightFunction, beta: float) -> None:
    if beta > 0 and not check_decay_condition(w, beta).passed:
        raise RegimeMismatch(f"{w.name}: t^{beta:g} psi(t+1)/psi(t) does not tend to 0")


def _need_family(w: WeightFunction, allowed, regime: str) -> None:
    if w.family not in allowed:
        names = ", ".join(f.value for f in allowed)
        raise RegimeMismatch(f"{regime} needs psi in {names}; {w.name} is {w.family.value}")


def _check_quantity(quantity: str, allowed) -> None:
    if quantity not in allowed:
        raise WienerError(f"unknown quantity {quantity!r}; expected one of {allowed}")


# shell bookkeeping ----------------------------------------------------------

def shell_position(params: ClassParams, m: int) -> tuple[int, int, int]:
    """(s, V_{s-1}, V_s) with V_{s-1} <= m < V_s, i.e. s = n_{m+1}."""
    bc = counter(params.r, params.d)
    s = bc.inverse(m + 1)
    return s, bc.V(s - 1), bc.V(s)


def sparse_regime_switch(params: ClassParams, m: int) -> bool:
    """True when the shell-start formula applies: m = V_{s-1} or p(V_s - m) >= q nu_s."""
    s, lo, hi = shell_position(params, m)
    return m == lo or params.p * (hi - m) >= params.q * (hi - lo)


# S^p predictors -------------------------------------------------------------

def _power_law(params: ClassParams, w: WeightFunction, quantity: str) -> OrderPredictor:
    p, q, d = params.p, params.q, params.d
    gap = _inv(p) - _inv(q)
    if p < q:
        _need_rate(w, d * gap, "power-type prediction with p < q")
    exponent = gap if (quantity == "sigma" or p < q) else 0.0

    def f(m):
        return float(w.log(max(m, 1) ** (1.0 / d))) + exponent * math.log(m)

    return OrderPredictor("power", quantity, f, validity={"family": "B", "beta_min": d * max(gap, 0.0)})


def _fast_moderate(params: ClassParams, w: WeightFunction, quantity: str) -> OrderPredictor:
    p, q, d = params.p, params.q, params.d
    M = counter(params.r, d).M
    gap = _inv(p) - _inv(q)
    exponent = gap if (quantity == "sigma" or p < q) else 0.0

    def f(m):
        n = max((m / M) ** (1.0 / d), 1.0)
        out = float(w.log(n))
        if exponent:
            out += exponent * math.log(m * alpha(w, n))
        return out

    return OrderPredictor("fast-moderate", quantity, f, validity={"family": w.family.value})


def _line_fast(w: WeightFunction, quantity: str, tag: str = "line") -> OrderPredictor:
    def f(m):
        return float(w.log(max((m + 1) // 2, 1)))

    return OrderPredictor(tag, quantity, f, validity={"d": 1})


def _fast_steep(params: ClassParams, w: WeightFunction, quantity: str) -> OrderPredictor:
    p, q, d = params.p, params.q, params.d
    ip, iq = _inv(p), _inv(q)
    if quantity == "width":
        beta = 0.0 if q <= p else (d - 1) * (ip - iq)
    elif p < q:
        beta = (d - 1) * ip
    else:
        beta = (d - 1) * iq
    _need_decay(w, beta)

    def spread_form(m, s, lo, hi):
        return ip * math.log(hi - m) - (d - 1) * iq / d * math.log(m)

    def f(m):
        s, lo, hi = shell_position(params, m)
        base = float(w.log(max(s, 1)))
        if quantity == "width":
            return base if q <= p else base + (ip - iq) * math.log(hi - m)
        if math.isinf(p) and math.isinf(q):
            return base
        if math.isinf(p):
            return base - iq * math.log(m + 1 - lo)
        if p < q:
            return base + spread_form(m, s, lo, hi)
        if m == lo or p * (hi - m) >= q * (hi - lo):
            return base - (iq - ip) * math.log(m + 1 - lo)
        return base + spread_form(m, s, lo, hi)

    return OrderPredictor("fast-steep", quantity, f, validity={"family": "M_dprime_inf", "beta": beta}, m0=2)


def sp_predictor(params: ClassParams, w: WeightFunction, quantity: str = "sigma",
                 regime: str | None = None) -> OrderPredictor:
    """Order predictor for sigma_m or D_m of the class in S^p.

    Regimes: 'power' (psi in B), 'fast-moderate' (the two slower fast-decay
    families), 'fast-steep' (the steepest family, shell-resolved), 'line'
    (steepest family on the line) and 'exact' (D_m for q <= p, which is
    psi(n_{m+1}) for any non-increasing psi). Without ``regime`` it is
    chosen from the weight's family.
    """
    _check_quantity(quantity, SP_QUANTITIES)
    if regime is None:
        if quantity == "width" and params.q <= params.p and w.family not in (Family.B,):
            regime = "exact"
        elif w.family == Family.B:
            regime = "power"
        elif w.family in (Family.M_PRIME, Family.M_C):
            regime = "fast-moderate"
        elif w.family == Family.M_DPRIME:
            regime = "line" if params.d == 1 else "fast-steep"
        else:
            raise RegimeMismatch(f"{w.name}: no order estimate for an unclassified weight")
    if regime == "power":
        _need_family(w, (Family.B,), regime)
        return _power_law(params, w, quantity)
    if regime == "fast-moderate":
        _need_family(w, (Family.M_PRIME, Family.M_C), regime)
        return _fast_moderate(params, w, quantity)
    if regime == "fast-steep":
        _need_family(w, (Family.M_DPRIME,), regime)
        return _fast_steep(params, w, quantity)
    if regime == "line":
        _need_family(w, (Family.M_DPRIME,), regime)
        if params.d != 1:
            raise RegimeMismatch("the line regime needs d = 1")
        return _line_fast(w, quantity)
    if regime == "exact":
        if quantity != "width" or params.q > params.p:
            raise RegimeMismatch("the exact regime gives D_m for q <= p only")

        def f(m):
            return float(w.log(max(shell_position(params, m)[0], 1)))

        return OrderPredictor("exact", quantity, f)
    if regime in ("shell-end", "shell-middle"):
        return shell_sequence_predictor(params, w, quantity, regime)
    raise WienerError(f"unknown regime {regime!r}")


def shell_sequence_predictor(params: ClassParams, w: WeightFunction, quantity: str,
                             kind: str) -> OrderPredictor:
    """Closed forms along the subsequences m = V_s - 1 ('shell-end') and
    m = V_{s-1} + ceil(nu_s / 2) ('shell-middle'), steepest family, d > 1."""
    _need_family(w, (Family.M_DPRIME,), kind)
    p, q, d = params.p, params.q, params.d
    ip, iq = _inv(p), _inv(q)
    if d == 1:
        raise RegimeMismatch("shell subsequences are for d > 1")
    if kind == "shell-end":
        _need_decay(w, (d - 1) * (ip if p < q else iq))

        def f(m):
            s = shell_position(params, m)[0]
            if quantity == "width" or (math.isinf(p) and math.isinf(q)):
                return float(w.log(s))
            return float(w.log(s)) - (d - 1) * iq / d * math.log(m)
    else:
        if not p < q:
            raise RegimeMismatch("the shell-middle order needs p < q")
        _need_decay(w, (d - 1) * ip)

        def f(m):
            s = shell_position(params, m)[0]
            return float(w.log(s)) + (d - 1) / d * (ip - iq) * math.log(m)

    return OrderPredictor(kind, quantity, f, validity={"family": "M_dprime_inf", "d>": 1})


def shell_sequence(params: ClassParams, s_values: Sequence[int], kind: str) -> list[int]:
    """The m(s) grid used by the shell subsequence predictors."""
    bc = counter(params.r, params.d)
    out = []
    for s in s_values:
        if kind == "shell-end":
            out.append(bc.V(s) - 1)
        elif kind == "shell-middle":
            out.append(bc.V(s - 1) + math.ceil(bc.nu(s) / 2))
        else:
            raise WienerError(f"unknown shell sequence {kind!r}")
    return out


def log_predict_sp(params: ClassParams, w: WeightFunction, m: int, quantity: str = "sigma",
                   regime: str | None = None) -> float:
    if m < 1:
        raise WienerError("order predictions need m >= 1")
    return sp_predictor(params, w, quantity, regime).log_formula(m)


def predict_sp(params: ClassParams, w: WeightFunction, m: int, quantity: str = "sigma",
               regime: str | None = None) -> float:
    """Predicted order of sigma_m or D_m in S^p (constants dropped)."""
    return math.exp(log_predict_sp(params, w, m, quantity, regime))


# L_p predictors -------------------------------------------------------------

def lp_predictor(params: ClassParams, w: WeightFunction, quantity: str = "sigma_perp",
                 shell_offset: int = 2) -> OrderPredictor:
    """Order predictor in L_p, 1 <= p < inf (p = inf only for sigma).

    ``shell_offset`` bounds the distance from a shell end that the steepest
    family regimes accept.
    """
    _check_quantity(quantity, LP_QUANTITIES)
    p, q, d = params.p, params.q, params.d
    if p < 1:
        raise RegimeMismatch("L_p predictions need p >= 1")
    if math.isinf(p) and quantity != "sigma":
        raise RegimeMismatch("only sigma_m has an order estimate in L_inf")
    pc = conjugate(p)

    if quantity == "width_perp" and q <= pc:
        def exact(m):
            return float(w.log(max(shell_position(params, m)[0], 1)))

        return OrderPredictor("exact", quantity, exact)

    if w.family == Family.B:
        return _lp_power(params, w, quantity, pc)

    if w.family == Family.M_C and d == 1:
        def half(m):
            return float(w.log(max(m / 2, 1.0)))

        return OrderPredictor("line-moderate", quantity, half, validity={"d": 1})

    if w.family == Family.M_DPRIME and quantity != "sigma":
        if d == 1:
            return _line_fast(w, quantity)
        if quantity == "width_perp":
            return _lp_steep_width(params, w, pc, shell_offset)
        return _lp_steep(params, w, quantity, pc, shell_offset)
    raise RegimeMismatch(f"{w.name} ({w.family.value}) has no L_{p:g} estimate for {quantity}")


def _lp_power(params: ClassParams, w: WeightFunction, quantity: str, pc: float) -> OrderPredictor:
    p, q, d = params.p, params.q, params.d
    iq = _inv(q)
    low_exp = 0.5 - iq
    high_exp = 1.0 - _inv(p) - iq

    def base(m):
        return float(w.log(max(m, 1) ** (1.0 / d)))

    def with_exp(e):
        return lambda m: base(m) + e * math.log(m)

    if quantity == "sigma" and p > 2:
        if params.r >= 1 and not math.isinf(q) and power_rate(w) > d * max(1.0 - iq, 0.0):
            return OrderPredictor("power-lp-high", quantity, with_exp(low_exp))
        if math.isinf(p):
            raise RegimeMismatch("sigma_m in L_inf needs r >= 1, q < inf and a faster decay")
        if q > pc:
            _need_rate(w, d * high_exp, "the two-sided window")
        return OrderPredictor("power-lp-window", quantity, with_exp(low_exp), with_exp(high_exp))

    if q > pc:
        _need_rate(w, d * (low_exp if p <= 2 else high_exp), "power-type L_p prediction with q > p'")
    if quantity == "width_perp":
        # q <= p' was answered exactly above
        return OrderPredictor("power-lp", quantity, with_exp(low_exp if p < 2 else high_exp))
    return OrderPredictor("power-lp", quantity, with_exp(low_exp if p <= 2 else high_exp))


def _lp_steep(params: ClassParams, w: WeightFunction, quantity: str, pc: float, offset: int) -> OrderPredictor:
    q, d = params.q, params.d
    iq = _inv(q)
    _need_decay(w, max((d - 1) / pc, (d - 1) * iq))

    def f(m):
        s, lo, hi = shell_position(params, m)
        base = float(w.log(max(s, 1)))
        if hi - m <= offset:
            return base - (d - 1) * iq / d * math.log(m)
        if (m - lo <= offset and q < pc) or (m == lo and q == pc):
            return base
        raise RegimeMismatch(f"m={m} is not within {offset} of a shell end (V_{s - 1}={lo}, V_{s}={hi})")

    return OrderPredictor("steep-lp", quantity, f, validity={"shell_offset": offset})


def _lp_steep_width(params: ClassParams, w: WeightFunction, pc: float, offset: int) -> OrderPredictor:
    q, d = params.q, params.d
    _need_decay(w, (d - 1) * (1.0 / pc - _inv(q)))

    def f(m):
        s, lo, hi = shell_position(params, m)
        if hi - m > offset:
            raise RegimeMismatch(f"m={m} is not within {offset} of the shell end V_{s}={hi}")
        return float(w.log(max(s, 1)))

    return OrderPredictor("steep-lp", "width_perp", f, validity={"shell_offset": offset})


def predict_lp(params: ClassParams, w: WeightFunction, m: int, quantity: str = "sigma_perp"):
    """Predicted L_p order; a two-sided ``Interval`` where only a window is known."""
    if m < 1:
        raise WienerError("order predictions need m >= 1")
    return lp_predictor(params, w, quantity)(m)


def upper_chain_lp(params: ClassParams, w: WeightFunction, m: int) -> float:
    """Computable upper bound for sigma_m^perp and G_m of the class in L_p.

    For p <= 2 the L_p norm is at most the L_2 norm, which is the S^2 norm;
    for p >= 2 the Hausdorff-Young inequality bounds it by the S^{p'} norm.
    Either way the greedy residual is then bounded by sigma_m in that
    coefficient space.
    """
    p = params.p
    if not 1 <= p < math.inf:
        raise WienerError("upper_chain_lp needs 1 <= p < inf")
    target = 2.0 if p <= 2 else conjugate(p)
    return math.exp(log_sigma_m(params.with_p(target), w, m))


def lp_sandwich(params: ClassParams, w: WeightFunction, m: int, kind: str = "h1",
                phase: str | None = None, N: int | None = None) -> tuple[float, float]:
    """(lower, upper) for G_m of the class in L_p.

    The lower value is the grid L_p norm of h - G_m(h) for an extremal class
    member h; chirped phases are used for p < 2 unless ``phase`` says
    otherwise.
    """
    if phase is None:
        phase = "chirp" if params.p < 2 else "flat"
    h = extremal(kind, params, w, m, phase=phase)
    lower = greedy_residual(h, m, Space("L", params.p, N), params.r)
    return lower, upper_chain_lp(params, w, m)


# audits ---------------------------------------------------------------------

@dataclass(frozen=True)
class OrderAudit:
    m_grid: tuple
    values: tuple
    predictor: OrderPredictor
    ratio_min: float
    ratio_max: float
    slope_low: float
    slope_high: float
    spread_bound: float
    slope_tol: float
    log_values: bool = False

    @property
    def spread(self) -> float:
        return self.ratio_max / self.ratio_min

    @property
    def ratios(self) -> list[float]:
        out = []
        for m, v in zip(self.m_grid, self.values):
            lo, hi = self.predictor.log_bounds(m)
            out.append(math.exp((v if self.log_values else math.log(v)) - (lo + hi) / 2))
        return out

    @property
    def passed(self) -> bool:
        if self.spread > self.spread_bound:
            return False
        if self.predictor.is_window:
            # the values may move inside the window but not leave it
            return self.slope_high <= self.slope_tol and self.slope_low >= -self.slope_tol
        return abs(self.slope_low) <= self.slope_tol

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def _slope(x: np.ndarray, y: np.ndarray) -> float:
    if len(x) < 2 or np.ptp(x) == 0:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


def ratio_audit(series: Sequence[tuple[int, float]], predictor: OrderPredictor, spread: float = 32.0,
                slope_tol: float = 0.05, log_values: bool = False) -> OrderAudit:
    """Bounded-ratio test of computed values against a predictor.

    Slopes are least-squares fits of the log ratio against log10 m. For a
    window predictor the lower end is matched with the value/lower ratio and
    the upper end with value/upper. With ``log_values`` the series holds
    log values, for orders far below the double range.
    """
    if spread <= 1 or slope_tol <= 0:
        raise WienerError("spread bound must exceed 1 and the slope tolerance must be positive")
    ms = [int(m) for m, _ in series]
    vs = [float(v) for _, v in series]
    if not ms:
        raise WienerError("empty series")
    if any(b <= a for a, b in zip(ms, ms[1:])):
        raise WienerError("m-grid must be strictly increasing")
    if log_values:
        if not all(math.isfinite(v) for v in vs):
            raise WienerError("ratio audit needs finite log values")
        lv = np.array(vs)
    elif any(not v > 0 or math.isinf(v) for v in vs):
        raise WienerError("ratio audit needs finite positive values")
    else:
        lv = np.log(vs)
    bounds = np.array([predictor.log_bounds(m) for m in ms])
    if not np.all(np.isfinite(bounds)):
        raise WienerError("ratio audit needs finite positive predictions")
    r_low = lv - bounds[:, 0]
    r_high = lv - bounds[:, 1]
    x = np.log10(ms)
    return OrderAudit(tuple(ms), tuple(vs), predictor, float(np.exp(r_low.min())), float(np.exp(r_high.max())),
                      _slope(x, r_low), _slope(x, r_high), spread, slope_tol, log_values)


def geometric_grid(start: int, stop: int, factor: float) -> list[int]:
    """Distinct integers round(start * factor^k) up to stop."""
    if start < 1 or stop < start or factor <= 1:
        raise WienerError("m-grid needs 1 <= start <= stop and factor > 1")
    out, x = [], float(start)
    while x <= stop * (1 + 1e-12):
        m = int(round(x))
        if not out or m > out[-1]:
            out.append(m)
        x *= factor
    return out

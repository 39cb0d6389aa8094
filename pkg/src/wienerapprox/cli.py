"""Batch front-end: tables of exact values, order audits and oracle runs.

Usage:
    wienerapprox exact --psi pow:s=1 --p inf --q inf --m 3
    wienerapprox order-audit --psi pow:s=2 --p 2 --q 2 --m 8:4096:2
    wienerapprox lp-audit --psi pow:s=2 --p 4 --q 2 --m 8:512:2
    wienerapprox greedy --input f.json --space L --p 4 --m 1:16:2
    wienerapprox oracle --psi pow:s=1 --psi geom:base=2
    wienerapprox lattice --r 2 --d 3 --s 0:10

Weights: pow:s=, powlog:s=,eps=, exp:a=,s= (exp(-a t^s)), geom:base=, const:c=.
m-grids: a single integer, a comma list, lo:hi, or start:stop:factor (geometric).
Every subcommand writes CSV (default) or JSON to --out or stdout.
Exit status: 0 success, 1 usage or parameter error, 2 audit failure.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import math
import sys

import click

from .asymptotics import geometric_grid, lp_predictor, lp_sandwich, ratio_audit, sp_predictor
from .errors import WienerError
from .exact_values import ClassParams, evaluate_sigma, log_width
from .lattice import counter
from .oracle import certification_suite
from .spectral import CoefficientField, Space, greedy_residual
from .weights import parse_weight

EXIT_FAIL = 2
EXIT_USAGE = 1


def _num(x):
    """Shortest round-trip text for floats; ints and strings unchanged."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return _num(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def render(columns, rows, config, verdict, fmt: str) -> str:
    if fmt == "json":
        doc = {"config": config, "rows": [dict(zip(columns, r)) for r in rows], "verdict": verdict}
        return json.dumps(_jsonable(doc), indent=2) + "\n"
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(columns)
    for r in rows:
        out.writerow([_num(v) for v in r])
    return buf.getvalue()


def emit(ctx, columns, rows, verdict=None) -> None:
    opts = ctx.obj
    text = render(columns, rows, opts["config"], verdict, opts["fmt"])
    if opts["out"]:
        with open(opts["out"], "w", newline="") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


class Extended(click.ParamType):
    """Positive real or the literal inf."""

    name = "real|inf"

    def convert(self, value, param, ctx):
        if isinstance(value, float):
            return value
        try:
            x = float(value)
        except ValueError:
            self.fail(f"{value!r} is not a number or 'inf'", param, ctx)
        if math.isnan(x) or x <= 0:
            self.fail(f"{value!r} must be positive", param, ctx)
        return x


class Grid(click.ParamType):
    """m-grid: N, a,b,c, lo:hi (every integer) or start:stop:factor."""

    name = "grid"

    def convert(self, value, param, ctx):
        if isinstance(value, list):
            return value
        text = str(value).strip()
        try:
            if ":" in text:
                parts = text.split(":")
                if len(parts) == 2:
                    grid = list(range(int(parts[0]), int(parts[1]) + 1))
                elif len(parts) == 3:
                    grid = geometric_grid(int(parts[0]), int(parts[1]), float(parts[2]))
                else:
                    raise ValueError
            else:
                grid = [int(x) for x in text.split(",")]
        except (ValueError, WienerError):
            self.fail(f"{value!r} is not N, a,b,c or start:stop:factor", param, ctx)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            self.fail(f"{value!r} is not strictly increasing", param, ctx)
        if grid[0] < 0:
            self.fail("grid entries must be >= 0", param, ctx)
        return grid


EXT = Extended()
GRID = Grid()


def class_options(f):
    f = click.option("--d", type=click.IntRange(min=1), default=1, show_default=True)(f)
    f = click.option("--r", type=EXT, default="inf", show_default=True)(f)
    f = click.option("--q", type=EXT, required=True)(f)
    f = click.option("--p", type=EXT, required=True)(f)
    return f


def weight_option(f):
    return click.option("--psi", required=True, help="weight, e.g. pow:s=2 or exp:a=1,s=2")(f)


def _weight(text):
    try:
        return parse_weight(text)
    except WienerError as e:
        raise click.BadParameter(str(e), param_hint="--psi")


def _config(ctx, **extra):
    cfg = {"subcommand": ctx.info_name}
    cfg.update(extra)
    ctx.obj["config"] = cfg


def output_options(f):
    @click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
    @click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None,
                  help="write here instead of stdout")
    @functools.wraps(f)
    def wrapper(*args, fmt, out, **kwargs):
        click.get_current_context().obj = {"fmt": fmt, "out": out}
        return f(*args, **kwargs)

    return wrapper


@click.group()
def cli():
    """Approximation characteristics of weighted Wiener classes."""


@cli.command()
@class_options
@weight_option
@click.option("--m", "grid", type=GRID, required=True)
@click.option("--rel-tol", type=click.FloatRange(min=0, min_open=True), default=1e-12, show_default=True)
@output_options
@click.pass_context
def exact(ctx, p, q, r, d, psi, grid, rel_tol):
    """sigma_m and D_m of the class in S^p over an m-grid."""
    w = _weight(psi)
    params = ClassParams(p, q, r, d)
    _config(ctx, p=p, q=q, r=r, d=d, psi=psi, m=grid, rel_tol=rel_tol)
    rows = []
    for m in grid:
        res = evaluate_sigma(params, w, m, rel_tol)
        lw = log_width(params, w, m, rel_tol)
        rows.append([m, res.value, math.exp(lw), res.log_value, lw, res.case,
                     -1 if res.l_star is None else res.l_star])
    emit(ctx, ["m", "sigma", "width", "log_sigma", "log_width", "case", "l_star"], rows)


@cli.command("order-audit")
@class_options
@weight_option
@click.option("--m", "grid", type=GRID, required=True)
@click.option("--quantity", type=click.Choice(["sigma", "width"]), default="sigma", show_default=True)
@click.option("--regime", default=None, help="override the regime chosen from the weight family")
@click.option("--spread", type=click.FloatRange(min=1, min_open=True), default=32.0, show_default=True)
@click.option("--slope-tol", type=click.FloatRange(min=0, min_open=True), default=0.05, show_default=True)
@output_options
@click.pass_context
def order_audit(ctx, p, q, r, d, psi, grid, quantity, regime, spread, slope_tol):
    """Computed values against the predicted order; exit 2 on FAIL."""
    w = _weight(psi)
    params = ClassParams(p, q, r, d)
    _config(ctx, p=p, q=q, r=r, d=d, psi=psi, m=grid, quantity=quantity, regime=regime,
            spread=spread, slope_tol=slope_tol)
    if grid[0] < 1:
        raise click.BadParameter("audit grids start at m >= 1", param_hint="--m")
    pred = sp_predictor(params, w, quantity, regime)
    logs = []
    for m in grid:
        logs.append(evaluate_sigma(params, w, m).log_value if quantity == "sigma" else log_width(params, w, m))
    audit = ratio_audit(list(zip(grid, logs)), pred, spread, slope_tol, log_values=True)
    rows = []
    for m, lv, ratio in zip(grid, logs, audit.ratios):
        lp = pred.log_formula(m)
        rows.append([m, math.exp(lv), math.exp(lp), ratio, lv, lp])
    ctx.obj["config"]["regime"] = pred.regime
    verdict = {"result": audit.verdict, "ratio_min": audit.ratio_min, "ratio_max": audit.ratio_max,
               "spread": audit.spread, "slope": audit.slope_low}
    emit(ctx, ["m", "value", "prediction", "ratio", "log_value", "log_prediction"], rows, verdict)
    return 0 if audit.passed else EXIT_FAIL


@cli.command("lp-audit")
@class_options
@weight_option
@click.option("--m", "grid", type=GRID, required=True)
@click.option("--kind", type=click.Choice(["h1", "h2"]), default="h1", show_default=True)
@click.option("--phase", type=click.Choice(["auto", "flat", "chirp"]), default="auto", show_default=True)
@click.option("--N", "N", type=click.IntRange(min=1), default=None, help="grid size per axis")
@click.option("--spread", type=click.FloatRange(min=1, min_open=True), default=64.0, show_default=True)
@click.option("--slope-tol", type=click.FloatRange(min=0, min_open=True), default=0.05, show_default=True)
@output_options
@click.pass_context
def lp_audit(ctx, p, q, r, d, psi, grid, kind, phase, N, spread, slope_tol):
    """Extremal lower values and the upper chain for G_m in L_p."""
    w = _weight(psi)
    params = ClassParams(p, q, r, d)
    _config(ctx, p=p, q=q, r=r, d=d, psi=psi, m=grid, kind=kind, phase=phase, N=N,
            spread=spread, slope_tol=slope_tol)
    if grid[0] < 1:
        raise click.BadParameter("audit grids start at m >= 1", param_hint="--m")
    pred = lp_predictor(params, w, "sigma_perp")
    pairs = [lp_sandwich(params, w, m, kind, None if phase == "auto" else phase, N) for m in grid]
    lows = [a for a, _ in pairs]
    ups = [b for _, b in pairs]
    lo_audit = ratio_audit(list(zip(grid, lows)), pred, spread, slope_tol)
    up_audit = ratio_audit(list(zip(grid, ups)), pred, spread, slope_tol)
    ordered = all(a <= b * (1 + 1e-9) for a, b in pairs)
    rows = []
    for m, a, b in zip(grid, lows, ups):
        rows.append([m, a, b, pred(m), b / a])
    ok = ordered and lo_audit.passed and up_audit.passed
    verdict = {"result": "PASS" if ok else "FAIL", "ordered": ordered,
               "lower": lo_audit.verdict, "lower_spread": lo_audit.spread,
               "upper": up_audit.verdict, "upper_spread": up_audit.spread}
    emit(ctx, ["m", "lower", "upper", "prediction", "gap"], rows, verdict)
    return 0 if ok else EXIT_FAIL


@cli.command()
@click.option("--input", "path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="coefficient field as JSON: [[k, re, im], ...] or {d, terms}")
@click.option("--space", type=click.Choice(["S", "L"]), default="S", show_default=True)
@click.option("--p", type=EXT, required=True)
@click.option("--r", type=EXT, default="inf", show_default=True)
@click.option("--m", "grid", type=GRID, required=True)
@click.option("--N", "N", type=click.IntRange(min=1), default=None)
@output_options
@click.pass_context
def greedy(ctx, path, space, p, r, grid, N):
    """Residual of the greedy m-term approximant of one function."""
    with open(path) as fh:
        text = fh.read()
    try:
        f = CoefficientField.from_json(text)
    except (ValueError, KeyError, TypeError) as e:
        raise click.BadParameter(f"cannot read coefficients: {e}", param_hint="--input")
    _config(ctx, input=path, space=space, p=p, r=r, m=grid, N=N)
    sp = Space(space, p, N)
    rows = [[m, greedy_residual(f, m, sp, r)] for m in grid]
    emit(ctx, ["m", "residual"], rows)


@cli.command()
@click.option("--psi", "psis", multiple=True, default=("pow:s=1", "geom:base=2"), show_default=True)
@click.option("--d", "dims", type=click.IntRange(1, 2), multiple=True, default=(1, 2), show_default=True)
@click.option("--m-max", type=click.IntRange(1, 5), default=5, show_default=True)
@click.option("--tol", type=click.FloatRange(min=0, min_open=True), default=1e-10, show_default=True)
@output_options
@click.pass_context
def oracle(ctx, psis, dims, m_max, tol):
    """Small-instance certification of sigma_m and D_m against brute force."""
    weights = [_weight(t) for t in psis]
    _config(ctx, psi=list(psis), d=list(dims), m_max=m_max, tol=tol)
    certs = certification_suite(weights, tuple(dims), m_max=m_max, tol=tol)
    rows = [[c.check, c.d, c.psi, c.p, c.q, c.m, c.value, c.reference, c.rel_err, c.ok] for c in certs]
    ok = all(c.ok for c in certs)
    verdict = {"result": "PASS" if ok else "FAIL", "checks": len(certs),
               "failed": sum(not c.ok for c in certs)}
    emit(ctx, ["check", "d", "psi", "p", "q", "m", "value", "reference", "rel_err", "ok"], rows, verdict)
    return 0 if ok else EXIT_FAIL


@cli.command()
@click.option("--r", type=EXT, default="inf", show_default=True)
@click.option("--d", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--s", "grid", type=GRID, required=True, help="radius, list, lo:hi or start:stop:factor")
@output_options
@click.pass_context
def lattice(ctx, r, d, grid):
    """Lattice counts V_s and shell sizes nu_s."""
    _config(ctx, r=r, d=d, s=grid)
    bc = counter(r, d)
    rows = [[s, bc.V(s), bc.nu(s)] for s in grid]
    emit(ctx, ["s", "V", "nu"], rows)


def main(argv=None) -> None:
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        rv = cli.main(args, prog_name="wienerapprox", standalone_mode=False)
    except click.exceptions.Exit as e:
        sys.exit(e.exit_code)
    except click.Abort:
        sys.exit(EXIT_USAGE)
    except click.ClickException as e:
        e.show()
        sys.exit(EXIT_USAGE)
    except WienerError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_USAGE)
    sys.exit(rv if isinstance(rv, int) else 0)


if __name__ == "__main__":
    main()

"""Batch front-end: every module exposed as a subcommand with table output.

Output contract
---------------
* Tables go to stdout (or ``--output PATH``); CSV has a header row, ``.``
  decimals, scientific notation with explicit exponent.  JSON payloads
  emit real numbers as strings whenever the working precision exceeds
  binary64 (``--digits`` > 17), so nothing is silently rounded.
* Diagnostics are JSON lines on stderr.
* Exit code 0 iff every requested residual check passed its tolerance;
  usage errors exit 2; computation alarms (and failed checks) exit 1.
* Identical invocations produce byte-identical output: evaluation order is
  fixed and all formatting depends only on the requested digits.

The default working precision is 60 decimal digits, overridable per call
with ``--digits`` or globally with the ``LUEMAX_DIGITS`` environment
variable.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from mpmath import mp

from . import chazy as chazy_mod
from . import frobenius as frob_mod
from . import gue as gue_mod
from . import sampler as sampler_mod
from . import softedge as softedge_mod
from . import wavefn as wavefn_mod
from .context import ComputationAlarm, DegenerateStateError, PrecisionContext
from .identities import default_tolerance, full_residual_battery
from .lue import largest_eigenvalue_cdf

ENV_DIGITS = "LUEMAX_DIGITS"
DEFAULT_DIGITS = 60
KS_COEFF = 1.36 * 1.5  # headroom factor on the 5% Kolmogorov critical value


class UsageError(ValueError):
    """Parameter combination violates a subcommand precondition."""


# ---------------------------------------------------------------------------
# Argument parsing helpers
# ---------------------------------------------------------------------------


def parse_orders(text: str) -> List[int]:
    """Integer list syntax: ``a..b`` inclusive range or comma list."""
    text = text.strip()
    try:
        if ".." in text:
            lo_s, hi_s = text.split("..", 1)
            lo, hi = int(lo_s), int(hi_s)
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise UsageError(f"cannot parse integer list {text!r} (use a..b or comma list)")


def parse_reals(text: str) -> List[str]:
    """Comma list of reals, kept as strings for exact re-parsing at any dps."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            float(part)
        except ValueError:
            raise UsageError(f"cannot parse real number {part!r}")
        out.append(part)
    if not out:
        raise UsageError("empty real-number list")
    return out


def _format_real(value, digits: int) -> str:
    """Deterministic scientific notation with explicit exponent."""
    if isinstance(value, float) or digits <= 17:
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.16e" % v
    with mp.workdps(digits + 10):
        x = mp.mpf(value)
        if mp.isnan(x):
            return "nan"
        if mp.isinf(x):
            return "inf" if x > 0 else "-inf"
        if x == 0:
            return "0." + "0" * (digits - 1) + "e+0"
        sign = "-" if x < 0 else ""
        ax = abs(x)
        e = int(mp.floor(mp.log10(ax)))
        mant = ax / mp.power(10, e)
        if mant >= 10:
            e += 1
            mant /= 10
        elif mant < 1:
            e -= 1
            mant *= 10
        ms = mp.nstr(mant, digits, strip_zeros=False)
        if ms.startswith("10"):
            e += 1
            ms = mp.nstr(mp.mpf(ms) / 10, digits, strip_zeros=False)
        return f"{sign}{ms}e{e:+d}"


def _jreal(value, digits: int):
    """JSON representation: number at binary64 precision, string beyond."""
    if digits <= 17:
        return float(value)
    return _format_real(value, digits)


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Validated invocation: subcommand plus its parameter map."""

    subcommand: str
    params: Dict
    digits: int
    tolerance: Optional[float]
    fmt: str
    output: Optional[str]
    threads: int = 1

    @property
    def ctx(self) -> PrecisionContext:
        return PrecisionContext(decimal_digits=self.digits)


def _default_digits() -> int:
    raw = os.environ.get(ENV_DIGITS)
    if raw is None:
        return DEFAULT_DIGITS
    try:
        val = int(raw)
        if val < 10:
            raise ValueError
        return val
    except ValueError:
        raise UsageError(f"{ENV_DIGITS} must be an integer >= 10, got {raw!r}")


# ---------------------------------------------------------------------------
# Report table rendering
# ---------------------------------------------------------------------------


def _report_table(reports, digits: int, tol) -> Tuple[List[str], bool, Dict]:
    lines = ["identity_id,n,alpha,t,residual,scale,relative,pass"]
    ok = True
    worst_rel = None
    worst_id = ""
    failed = 0
    for rep in reports:
        passed = rep.passes(tol)
        if not passed:
            ok = False
            failed += 1
        rel = rep.relative
        if worst_rel is None or rel > worst_rel:
            worst_rel, worst_id = rel, rep.identity_id
        lines.append(",".join([
            rep.identity_id,
            str(rep.n),
            _format_real(rep.alpha, digits),
            _format_real(rep.t, digits),
            _format_real(rep.residual, digits),
            _format_real(rep.scale, digits),
            _format_real(rep.relative, digits),
            "1" if passed else "0",
        ]))
    diag = {
        "checked": len(reports),
        "failed": failed,
        "worst_identity": worst_id,
        "worst_relative": _format_real(worst_rel, digits) if worst_rel is not None else "nan",
        "tolerance": _format_real(tol, 17),
    }
    return lines, ok, diag


def _reports_json(reports, digits: int, tol) -> Tuple[Dict, bool]:
    rows = []
    ok = True
    for rep in reports:
        passed = rep.passes(tol)
        ok = ok and passed
        rows.append({
            "identity_id": rep.identity_id,
            "n": int(rep.n),
            "alpha": _jreal(rep.alpha, digits),
            "t": _jreal(rep.t, digits),
            "residual": _jreal(rep.residual, digits),
            "scale": _jreal(rep.scale, digits),
            "relative": _jreal(rep.relative, digits),
            "pass": passed,
        })
    return {"reports": rows, "pass": ok}, ok


def _render_reports(cfg: RunConfig, reports, tol) -> Tuple[str, bool, List[Dict]]:
    lines, ok, diag = _report_table(reports, cfg.digits, tol)
    if cfg.fmt == "json":
        payload, ok = _reports_json(reports, cfg.digits, tol)
        payload["subcommand"] = cfg.subcommand
        payload["digits"] = cfg.digits
        payload["tolerance"] = _format_real(tol, 17)
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        text = "\n".join(lines) + "\n"
    diags: List[Dict] = []
    if not ok:
        diags.append({"kind": "tolerance", "subcommand": cfg.subcommand, **diag})
    return text, ok, diags


# ---------------------------------------------------------------------------
# Subcommand handlers: each returns (text, ok, diagnostics)
# ---------------------------------------------------------------------------


def _cmd_cdf(cfg: RunConfig):
    p = cfg.params
    ctx = cfg.ctx
    rows = []
    for n in p["n"]:
        if n < 1:
            raise UsageError("n must be >= 1")
        for t_s in p["t"]:
            with ctx.working():
                t = mp.mpf(t_s)
                alpha = mp.mpf(p["alpha"])
                if t <= 0:
                    raise UsageError("t must be positive for the cutoff Laguerre weight")
                if alpha <= -1:
                    raise UsageError("alpha must exceed -1")
                val = largest_eigenvalue_cdf(n, alpha, t, ctx)
            rows.append((n, p["alpha"], t_s, val))
    if cfg.fmt == "json":
        payload = {
            "subcommand": "cdf",
            "digits": cfg.digits,
            "pass": True,
            "rows": [
                {"n": n, "alpha": _jreal(mp.mpf(a), cfg.digits),
                 "t": _jreal(mp.mpf(t), cfg.digits), "P": _jreal(v, cfg.digits)}
                for (n, a, t, v) in rows
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n", True, []
    lines = ["n,alpha,t,P"]
    for (n, a, t, v) in rows:
        lines.append(",".join([
            str(n), _format_real(mp.mpf(a), cfg.digits),
            _format_real(mp.mpf(t), cfg.digits), _format_real(v, cfg.digits),
        ]))
    return "\n".join(lines) + "\n", True, []


def _cmd_identities(cfg: RunConfig):
    p = cfg.params
    ctx = cfg.ctx
    tol = cfg.tolerance if cfg.tolerance is not None else float(default_tolerance(ctx))
    reports = []
    for a_s in p["alpha"]:
        for t_s in p["t"]:
            with ctx.working():
                alpha = mp.mpf(a_s)
                t = mp.mpf(t_s)
                if alpha <= -1:
                    raise UsageError("alpha must exceed -1")
                if t <= 0:
                    raise UsageError("t must be positive")
            reports.extend(full_residual_battery(alpha, t, p["n"], ctx))
    return _render_reports(cfg, reports, tol)


def _cmd_gue_identities(cfg: RunConfig):
    p = cfg.params
    ctx = cfg.ctx
    tol = cfg.tolerance if cfg.tolerance is not None else float(default_tolerance(ctx))
    top = max(p["n"])
    if min(p["n"]) < 1:
        raise UsageError("n must be >= 1")
    reports = []
    for t_s in p["t"]:
        with ctx.working():
            t = mp.mpf(t_s)
        chain = gue_mod.gue_chain(t, top + 1, ctx)
        for n in sorted(set(p["n"])):
            reports.extend(gue_mod.residual_gue_identities(chain, n, ctx))
            reports.append(gue_mod.residual_gue_alphan_ode(chain, n, ctx))
            reports.append(gue_mod.residual_sigma_piv(chain, n, ctx))
    return _render_reports(cfg, reports, tol)


def _cmd_softedge(cfg: RunConfig):
    p = cfg.params
    if p["smin"] > -8 or p["smax"] < 8:
        raise UsageError("domain must cover [-8, 8] (smin <= -8, smax >= 8)")
    if p["grid"] < 101:
        raise UsageError("grid must have at least 101 points")
    solver_tol = p["tol"]
    grid = softedge_mod.solve_sigma_pii(p["smin"], p["smax"], p["grid"], solver_tol)
    softedge_mod.hastings_mcleod(grid)
    softedge_mod.tw_cdf(grid)
    P = np.exp(np.asarray(grid.logP))
    monotone = bool(np.all(np.diff(P) >= -1e-15))
    diags = []
    if not monotone:
        diags.append({"kind": "tolerance", "subcommand": "softedge",
                      "message": "P column is not monotone"})
    if cfg.fmt == "json":
        payload = {
            "subcommand": "softedge",
            "pass": monotone,
            "tol": solver_tol,
            "rows": [
                {"s": float(grid.s[i]), "sigma": float(grid.sigma[i]),
                 "d_sigma": float(grid.d_sigma[i]), "w": float(grid.w[i]),
                 "logP": float(grid.logP[i]), "P": float(P[i])}
                for i in range(len(grid.s))
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n", monotone, diags
    return softedge_mod.grid_to_csv(grid), monotone, diags


def _cmd_tails(cfg: RunConfig):
    p = cfg.params
    rows = []
    for s_s in p["s"]:
        s = float(mp.mpf(s_s))
        if s <= -4:
            side = "Left"
        elif s >= 4:
            side = "Right"
        else:
            raise UsageError("tail series need |s| >= 4 (left: s <= -4, right: s >= 4)")
        ev = softedge_mod.tail_eval(side, s)
        rows.append((s, side, ev))
    if cfg.fmt == "json":
        payload = {
            "subcommand": "tails",
            "pass": True,
            "rows": [
                {"s": s, "side": side, "sigma": ev.sigma, "cdf": ev.cdf,
                 "survival": ev.survival, "sigma_error": ev.sigma_error,
                 "cdf_error": ev.cdf_error}
                for (s, side, ev) in rows
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n", True, []
    lines = ["s,side,sigma,cdf,survival,sigma_error,cdf_error"]
    for (s, side, ev) in rows:
        lines.append(",".join([
            "%.16e" % s, side, "%.16e" % ev.sigma, "%.16e" % ev.cdf,
            "%.16e" % ev.survival, "%.16e" % ev.sigma_error,
            "%.16e" % ev.cdf_error,
        ]))
    return "\n".join(lines) + "\n", True, []


def _cmd_converge(cfg: RunConfig):
    p = cfg.params
    n_list = sorted(set(p["n"]))
    if len(n_list) < 2:
        raise UsageError("need at least two matrix orders to compare")
    s_grid = [float(mp.mpf(v)) for v in p["s"]]
    ctx = PrecisionContext(decimal_digits=cfg.digits)
    regimes = p["regimes"]
    rows = softedge_mod.convergence_experiment(n_list, float(mp.mpf(p["alpha"])),
                                               s_grid, ctx, regimes=regimes)
    # strict decrease of all five deviations along n, per (regime, s)
    ok = True
    violations = []
    for regime in regimes:
        for s in s_grid:
            seq = [r for r in rows if r.regime == regime and r.s == s]
            seq.sort(key=lambda r: r.n)
            for q in range(5):
                devs = [r.deviations[q] for r in seq]
                if any(devs[i + 1] >= devs[i] for i in range(len(devs) - 1)):
                    ok = False
                    violations.append({"regime": regime, "s": s, "quantity": q})
    diags = []
    if not ok:
        diags.append({"kind": "tolerance", "subcommand": "converge",
                      "violations": violations})
    if cfg.fmt == "json":
        payload = {
            "subcommand": "converge", "pass": ok,
            "rows": [
                {"n": r.n, "alpha": r.alpha, "s": r.s, "regime": r.regime,
                 "t": r.t, "sigma_scaled": r.sigma_scaled,
                 "r_scaled": r.r_scaled, "beta_scaled": r.beta_scaled,
                 "R_scaled": r.R_scaled, "alpha_scaled": r.alpha_scaled,
                 "limit_sigma": r.limit_sigma, "limit_r": r.limit_r}
                for r in rows
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n", ok, diags
    return softedge_mod.convergence_to_csv(rows), ok, diags


def _cmd_wavefn(cfg: RunConfig):
    p = cfg.params
    ctx = cfg.ctx
    tol = cfg.tolerance if cfg.tolerance is not None else 1e-25
    reports = []
    for t_s in p["t"]:
        with ctx.working():
            t = mp.mpf(t_s)
        if p["ensemble"] == "lue":
            with ctx.working():
                alpha = mp.mpf(p["alpha"])
            if t <= 0:
                raise UsageError("t must be positive for the Laguerre-type weight")
            reports.extend(wavefn_mod.phi_ode_residual_lue(
                p["n_single"], alpha, t, p["z"], ctx))
        else:
            reports.extend(wavefn_mod.phi_ode_residual_gue(
                p["n_single"], t, p["z"], ctx))
    return _render_reports(cfg, reports, tol)


def _cmd_frobenius(cfg: RunConfig):
    p = cfg.params
    ctx = cfg.ctx
    mode = p["mode"]
    if cfg.tolerance is not None:
        tol = cfg.tolerance
    else:
        tol = 1e-20 if mode == "series" else 1e-8
    grid = softedge_mod.solve_sigma_pii()
    idx = int(np.argmin(np.abs(np.asarray(grid.s) - p["s"])))
    coeffs = wavefn_mod.limit_ode_coeffs(float(grid.s[idx]),
                                         float(grid.d_sigma[idx]),
                                         float(grid.dd_sigma[idx]))
    if mode == "series":
        s0 = frob_mod.series_zero(coeffs, 0, p["order"], with_log=True, ctx=ctx)
        s1 = frob_mod.series_one(coeffs, p["lam"], p["order"], with_log=True, ctx=ctx)
        reports = []
        for x_s in p["x"]:
            off = float(mp.mpf(x_s))
            if not 0 < off < 0.5:
                raise UsageError("series offsets must satisfy 0 < x < 0.5 "
                                 "(distance from each expansion point)")
            reports.append(frob_mod.equation_residual(s0, coeffs, off, ctx,
                                                      solution="power"))
            reports.append(frob_mod.equation_residual(s0, coeffs, off, ctx,
                                                      solution="companion"))
            reports.append(frob_mod.equation_residual(s1, coeffs, 1.0 - off, ctx,
                                                      solution="power"))
            reports.append(frob_mod.equation_residual(s1, coeffs, 1.0 - off, ctx,
                                                      solution="companion"))
        return _render_reports(cfg, reports, tol)
    if mode == "connect":
        out_rows = []
        ok = True
        for x_s in p["x"]:
            x = float(mp.mpf(x_s))
            rep = frob_mod.crosscheck_integration(coeffs, x, N=p["order"], ctx=ctx,
                                                  tol=tol)
            passed = rep.check_error <= tol and rep.integrator_agreement <= max(tol, 1e-12)
            ok = ok and passed
            out_rows.append((x, rep, passed))
        if cfg.fmt == "json":
            payload = {
                "subcommand": "frobenius", "mode": "connect", "pass": ok,
                "rows": [
                    {"x": x, "check_error": r.check_error,
                     "integrator_agreement": r.integrator_agreement,
                     "truncation_estimate": r.truncation_estimate,
                     "matrix": [[r.matrix[0][0], r.matrix[0][1]],
                                [r.matrix[1][0], r.matrix[1][1]]],
                     "warned": r.warned, "pass": passed}
                    for (x, r, passed) in out_rows
                ],
            }
            text = json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n"
        else:
            lines = ["x,check_error,integrator_agreement,truncation_estimate,"
                     "m00,m01,m10,m11,pass"]
            for (x, r, passed) in out_rows:
                lines.append(",".join([
                    "%.16e" % x, "%.16e" % r.check_error,
                    "%.16e" % r.integrator_agreement,
                    "%.16e" % r.truncation_estimate,
                    "%.16e" % float(r.matrix[0][0]), "%.16e" % float(r.matrix[0][1]),
                    "%.16e" % float(r.matrix[1][0]), "%.16e" % float(r.matrix[1][1]),
                    "1" if passed else "0",
                ]))
            text = "\n".join(lines) + "\n"
        diags = [] if ok else [{"kind": "tolerance", "subcommand": "frobenius",
                                "mode": "connect"}]
        return text, ok, diags
    # mode == "tails": decay-exponent fit of the residual tail
    order = max(p["order"], 220)
    window = (50, 200)
    lmax = 6
    results = []
    s0 = frob_mod.series_zero(coeffs, 0, order, with_log=True, ctx=ctx)
    t0 = frob_mod.tail_zero(coeffs, 0, lmax, ctx=ctx)
    results.extend(frob_mod.tail_match(s0, t0, window, ctx=ctx))
    s1 = frob_mod.series_one(coeffs, p["lam"], order, with_log=True, ctx=ctx)
    t1 = frob_mod.tail_one(coeffs, p["lam"], lmax, ctx=ctx)
    results.extend(frob_mod.tail_match(s1, t1, window, ctx=ctx))
    ok = all(abs(r.exponent - (r.lmax + 1)) <= 0.5 for r in results)
    if cfg.fmt == "json":
        payload = {
            "subcommand": "frobenius", "mode": "tails", "pass": ok,
            "rows": [
                {"point": r.point, "target": r.target,
                 "window": list(r.window), "lmax": r.lmax,
                 "exponent": r.exponent,
                 "amplitudes": [float(a) for a in r.amplitudes],
                 "pass": abs(r.exponent - (r.lmax + 1)) <= 0.5}
                for r in results
            ],
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        lines = ["point,target,window_lo,window_hi,lmax,exponent,pass"]
        for r in results:
            lines.append(",".join([
                r.point, r.target, str(r.window[0]), str(r.window[1]),
                str(r.lmax), "%.16e" % r.exponent,
                "1" if abs(r.exponent - (r.lmax + 1)) <= 0.5 else "0",
            ]))
        text = "\n".join(lines) + "\n"
    diags = [] if ok else [{"kind": "tolerance", "subcommand": "frobenius",
                            "mode": "tails"}]
    return text, ok, diags


def _cmd_chazy(cfg: RunConfig):
    p = cfg.params
    ctx = cfg.ctx
    tol = cfg.tolerance if cfg.tolerance is not None else 1e-25
    if p["table"]:
        if cfg.fmt == "json":
            return chazy_mod.example_table_json() + "\n", True, []
        lines = ["example_id,member,parameter,expression"]
        for spec in chazy_mod.example_table():
            for name in sorted(spec.parameters):
                lines.append(",".join([
                    spec.id, spec.member, name,
                    '"%s"' % spec.parameters[name],
                ]))
        return "\n".join(lines) + "\n", True, []
    reports = []
    for t_s in p["t"]:
        with ctx.working():
            t = mp.mpf(t_s)
        if p["ensemble"] == "lue":
            with ctx.working():
                alpha = mp.mpf(p["alpha"])
            if t <= 0:
                raise UsageError("t must be positive for the Laguerre-type weight")
            reports.extend(chazy_mod.lue_reduction_views(p["n_single"], alpha, t, ctx))
        else:
            reports.extend(chazy_mod.gue_reduction_views(p["n_single"], t, ctx))
    return _render_reports(cfg, reports, tol)


def _grid_cdf_interp(kind: str, n: int, alpha, samples: np.ndarray,
                     ctx: PrecisionContext) -> Callable:
    """Monotone-interpolated analytic CDF covering the sample range."""
    lo = float(samples[0])
    hi = float(samples[-1])
    span = hi - lo
    lo_g = lo - 0.05 * span
    hi_g = hi + 0.05 * span
    if kind == "lue":
        lo_g = max(lo_g, 1e-9)
        tg = np.linspace(lo_g, hi_g, 241)
        vals = np.array([float(largest_eigenvalue_cdf(n, alpha, mp.mpf(x), ctx))
                         for x in tg])
    else:
        tg = np.linspace(lo_g, hi_g, 241)
        vals = np.array([float(gue_mod.gue_largest_cdf(n, mp.mpf(x), ctx))
                         for x in tg])
    vals = np.clip(vals, 0.0, 1.0)
    vals = np.maximum.accumulate(vals)
    return lambda x: np.interp(x, tg, vals, left=0.0, right=1.0)


def _cmd_sample(cfg: RunConfig):
    p = cfg.params
    n = p["n_single"]
    if n < 1:
        raise UsageError("n must be >= 1")
    if p["N"] < 1000:
        raise UsageError("N must be at least 1000")
    if p["ks"] and n > 16:
        raise UsageError("--ks reference evaluation is supported for n <= 16")
    if cfg.output is None:
        raise UsageError("sample requires --output PATH for the sample dump")
    if p["ensemble"] == "lue":
        alpha = float(mp.mpf(p["alpha"]))
        ecdf = sampler_mod.sample_lue_max(n, alpha, p["N"], p["seed"],
                                          streams=p["streams"],
                                          threads=cfg.threads)
        model = sampler_mod.lue_model(n, alpha)
    else:
        ecdf = sampler_mod.sample_gue_max(n, p["N"], p["seed"],
                                          streams=p["streams"],
                                          threads=cfg.threads)
        model = sampler_mod.gue_model(n)
    sampler_mod.write_samples_csv(ecdf, cfg.output)
    ks_val = None
    ok = True
    diags: List[Dict] = []
    if p["ks"]:
        ctx = PrecisionContext(decimal_digits=min(cfg.digits, 30))
        cdf_fn = _grid_cdf_interp(p["ensemble"], n,
                                  mp.mpf(p["alpha"]) if p["ensemble"] == "lue" else None,
                                  ecdf.samples, ctx)
        ks_val = sampler_mod.ks_statistic(ecdf, cdf_fn)
        bound = KS_COEFF / math.sqrt(ecdf.N)
        ok = ks_val < bound
        if not ok:
            diags.append({"kind": "tolerance", "subcommand": "sample",
                          "ks": ks_val, "bound": bound})
    summary = sampler_mod.summary_dict(ecdf, seed=p["seed"], model=model,
                                       ks=ks_val,
                                       reference="analytic-cdf" if ks_val is not None else None)
    summary["pass"] = ok
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    return text, ok, diags


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_common(sub, digits_default: int, with_tol: bool = True):
    sub.add_argument("--digits", type=int, default=digits_default,
                     metavar="D", help="working decimal digits")
    if with_tol:
        sub.add_argument("--tol", type=float, default=None, metavar="TOL",
                         help="pass/fail tolerance on relative residuals")
    sub.add_argument("--format", choices=("csv", "json"), default="csv",
                     dest="fmt", help="output format")
    sub.add_argument("--output", default=None, metavar="PATH",
                     help="write the table to PATH instead of stdout")


def build_parser(digits_default: int) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="luemax",
        description="Configurable-precision toolkit for largest-eigenvalue "
                    "laws of unitary random-matrix ensembles with hard "
                    "cutoffs.",
        epilog=f"Default digits come from ${ENV_DIGITS} (currently "
               f"{digits_default}).")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    s = subs.add_parser("cdf", help="largest-eigenvalue CDF tables")
    s.add_argument("--n", required=True, help="orders (a..b or comma list)")
    s.add_argument("--alpha", required=True, help="weight exponent")
    s.add_argument("--t", required=True, help="cutoff points (comma list)")
    _add_common(s, digits_default, with_tol=False)

    s = subs.add_parser("identities", help="finite-n residual sweep")
    s.add_argument("--n", required=True, help="orders (a..b or comma list)")
    s.add_argument("--alpha", required=True, help="weight exponents (comma list)")
    s.add_argument("--t", required=True, help="cutoff points (comma list)")
    _add_common(s, digits_default)

    s = subs.add_parser("gue-identities", help="square-Gaussian residual sweep")
    s.add_argument("--n", required=True, help="orders (a..b or comma list)")
    s.add_argument("--t", required=True, help="cutoff points (comma list)")
    _add_common(s, digits_default)

    s = subs.add_parser("softedge", help="soft-edge limit-law grid")
    s.add_argument("--smin", type=float, default=-12.0)
    s.add_argument("--smax", type=float, default=8.0)
    s.add_argument("--grid", type=int, default=4001)
    s.add_argument("--tol", type=float, default=1e-9,
                   help="solver verification tolerance")
    s.add_argument("--digits", type=int, default=digits_default, metavar="D")
    s.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt")
    s.add_argument("--output", default=None, metavar="PATH")

    s = subs.add_parser("tails", help="tail-series evaluation")
    s.add_argument("--s", required=True, help="evaluation points (comma list)")
    _add_common(s, digits_default, with_tol=False)

    s = subs.add_parser("converge", help="finite-order scaling experiment")
    s.add_argument("--n", required=True, help="orders (a..b or comma list)")
    s.add_argument("--alpha", required=True, help="weight exponent")
    s.add_argument("--s", required=True, help="scaled locations (comma list)")
    s.add_argument("--regime", choices=("Finite", "Proportional", "both"),
                   default="both")
    _add_common(s, 30, with_tol=False)

    s = subs.add_parser("wavefn", help="wavefunction ODE residuals")
    s.add_argument("--ensemble", choices=("lue", "gue"), default="lue")
    s.add_argument("--n", type=int, required=True, help="order")
    s.add_argument("--alpha", default="0", help="weight exponent (lue)")
    s.add_argument("--t", required=True, help="cutoff points (comma list)")
    s.add_argument("--z", required=True, help="sample points (comma list)")
    _add_common(s, digits_default)

    s = subs.add_parser("frobenius", help="regular-singular-point series checks")
    s.add_argument("--s", type=float, default=-2.0,
                   help="limit-ODE parameter location")
    s.add_argument("--order", type=int, default=100, help="truncation order")
    s.add_argument("--x", default="0.5", help="evaluation points (comma list)")
    s.add_argument("--lam", type=int, choices=(0, 2), default=0,
                   help="exponent branch at the far singular point")
    s.add_argument("--mode", choices=("series", "connect", "tails"),
                   default="series")
    _add_common(s, digits_default)

    s = subs.add_parser("chazy", help="second-degree reduction checks")
    s.add_argument("--table", action="store_true",
                   help="dump the worked-example parameter catalogue")
    s.add_argument("--ensemble", choices=("lue", "gue"), default="lue")
    s.add_argument("--n", type=int, default=2, help="order")
    s.add_argument("--alpha", default="1", help="weight exponent (lue)")
    s.add_argument("--t", default="1", help="cutoff points (comma list)")
    _add_common(s, digits_default)

    s = subs.add_parser("sample", help="Monte-Carlo sampling + goodness of fit")
    s.add_argument("--ensemble", choices=("lue", "gue"), default="lue")
    s.add_argument("--n", type=int, required=True, help="order")
    s.add_argument("--alpha", default="0", help="weight exponent (lue)")
    s.add_argument("--N", type=int, required=True, help="sample count (>= 1000)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--streams", type=int, default=4,
                   help="independent generator streams (part of the result's "
                        "identity)")
    s.add_argument("--threads", type=int, default=1,
                   help="worker threads for stream evaluation")
    s.add_argument("--ks", action="store_true",
                   help="compute the KS distance to the analytic CDF")
    s.add_argument("--digits", type=int, default=digits_default, metavar="D")
    s.add_argument("--output", required=False, default=None, metavar="PATH",
                   help="sample dump destination (required)")
    return parser


_HANDLERS = {
    "cdf": _cmd_cdf,
    "identities": _cmd_identities,
    "gue-identities": _cmd_gue_identities,
    "softedge": _cmd_softedge,
    "tails": _cmd_tails,
    "converge": _cmd_converge,
    "wavefn": _cmd_wavefn,
    "frobenius": _cmd_frobenius,
    "chazy": _cmd_chazy,
    "sample": _cmd_sample,
}


def _config_from_namespace(ns: argparse.Namespace) -> RunConfig:
    sub = ns.subcommand
    params: Dict = {}
    if sub in ("cdf", "identities", "converge"):
        params["n"] = parse_orders(ns.n)
    if sub == "gue-identities":
        params["n"] = parse_orders(ns.n)
    if sub in ("wavefn", "chazy", "sample"):
        params["n_single"] = int(ns.n)
    if hasattr(ns, "alpha"):
        if sub == "identities":
            params["alpha"] = parse_reals(ns.alpha)
        else:
            params["alpha"] = parse_reals(ns.alpha)[0]
    if hasattr(ns, "t") and sub != "softedge":
        params["t"] = parse_reals(str(ns.t))
    if sub == "tails":
        params["s"] = parse_reals(ns.s)
    if sub == "converge":
        params["s"] = parse_reals(ns.s)
        params["regimes"] = (("Finite", "Proportional") if ns.regime == "both"
                             else (ns.regime,))
    if sub == "softedge":
        params.update({"smin": ns.smin, "smax": ns.smax, "grid": ns.grid,
                       "tol": ns.tol})
    if sub == "wavefn":
        params["z"] = parse_reals(ns.z)
        params["ensemble"] = ns.ensemble
    if sub == "frobenius":
        params.update({"s": ns.s, "order": ns.order, "x": parse_reals(ns.x),
                       "lam": ns.lam, "mode": ns.mode})
        if params["order"] < 8:
            raise UsageError("truncation order must be at least 8")
    if sub == "chazy":
        params["table"] = ns.table
        params["ensemble"] = ns.ensemble
    if sub == "sample":
        params.update({"ensemble": ns.ensemble, "N": ns.N, "seed": ns.seed,
                       "streams": ns.streams, "ks": ns.ks})
        if params["streams"] < 1:
            raise UsageError("streams must be >= 1")
    digits = getattr(ns, "digits", DEFAULT_DIGITS)
    if digits < 10 or digits > 400:
        raise UsageError("digits must lie in [10, 400]")
    tol = getattr(ns, "tol", None)
    if sub == "softedge":
        tol = None  # solver tolerance travels in params
    if tol is not None and not tol > 0:
        raise UsageError("tolerance must be positive")
    threads = getattr(ns, "threads", 1)
    if threads < 1:
        raise UsageError("threads must be >= 1")
    return RunConfig(subcommand=sub, params=params, digits=digits,
                     tolerance=tol, fmt=getattr(ns, "fmt", "csv"),
                     output=getattr(ns, "output", None), threads=threads)


def _emit_diag(diag: Dict) -> None:
    sys.stderr.write(json.dumps(diag, sort_keys=True, default=str) + "\n")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, execute the subcommand, return the exit code."""
    try:
        digits_default = _default_digits()
    except UsageError as exc:
        _emit_diag({"kind": "usage", "message": str(exc)})
        return 2
    parser = build_parser(digits_default)
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
        return code
    try:
        cfg = _config_from_namespace(ns)
    except UsageError as exc:
        _emit_diag({"kind": "usage", "subcommand": ns.subcommand,
                    "message": str(exc)})
        return 2
    handler = _HANDLERS[cfg.subcommand]
    try:
        text, ok, diags = handler(cfg)
    except UsageError as exc:
        _emit_diag({"kind": "usage", "subcommand": cfg.subcommand,
                    "message": str(exc)})
        return 2
    except ComputationAlarm as alarm:
        _emit_diag({"kind": alarm.kind, "subcommand": cfg.subcommand,
                    "message": str(alarm),
                    "data": {k: str(v) for k, v in alarm.data.items()}})
        return 1
    except DegenerateStateError as exc:
        _emit_diag({"kind": "degenerate", "subcommand": cfg.subcommand,
                    "message": str(exc)})
        return 1
    except ValueError as exc:
        _emit_diag({"kind": "usage", "subcommand": cfg.subcommand,
                    "message": str(exc)})
        return 2
    if cfg.output is not None and cfg.subcommand != "sample":
        with open(cfg.output, "w", encoding="ascii") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    for diag in diags:
        _emit_diag(diag)
    return 0 if ok else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

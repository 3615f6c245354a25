"""Series solutions of the compactified limit equation at its two finite
singular points, their logarithmic companions, and large-index coefficient
asymptotics.

The equation, in the polynomial form owned by :class:`~luemax.wavefn.
LimitODECoeffs`, is

    (x^2 - x) f'' - f' + (a3 x^3 + b2 x^2 + b1 x - a0) f = 0,

with a double indicial root at x = 0 (series plus logarithmic companion)
and the exponent pair {0, 2} at x = 1, where the resonance turns out to be
unobstructed, so both local solutions are log-free power series.  The
module builds the coefficient sequences by the five-term recurrences,
evaluates truncated solutions and their equation residuals, generates the
1/n tail expansions of the coefficient sequences, fits them against the
actual sequences, and cross-checks the two local solution bases through a
constant connection matrix and against the direct adaptive integrator.

Coefficient arithmetic runs at 60 decimal digits by default: the forward
recurrences admix the dominant large-index solution branch at the rounding
level, which caps usable tail-matching windows (n <= 400).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from mpmath import mp

from .context import ComputationAlarm, DegenerateStateError, PrecisionContext
from .identities import ResidualReport
from .wavefn import LimitODECoeffs, solve_limit_ode

__all__ = [
    "FrobeniusSeries",
    "TailCoeffs",
    "TailMatchReport",
    "ConnectionReport",
    "series_zero",
    "series_one",
    "solution_values",
    "equation_residual",
    "recurrence_check",
    "tau_derivative_probe",
    "tail_zero",
    "tail_one",
    "tail_one_display_discrepancies",
    "tail_match",
    "crosscheck_integration",
    "series_to_csv",
]


@dataclass(frozen=True)
class FrobeniusSeries:
    """Truncated local solution data at one singular point.

    ``point`` is ``"Zero"`` or ``"One"``; ``exponent`` the indicial
    exponent of the power branch; ``c`` its coefficients (index 0..N);
    ``d`` the companion coefficients when requested (the tau-derivative
    sequence at 0, twice the exponent-derivative sequence at 1), else
    ``None``.
    """

    point: str
    exponent: object
    c: tuple
    d: tuple
    N: int


@dataclass(frozen=True)
class TailCoeffs:
    """Large-index 1/n expansion coefficients of the local coefficient
    sequences: ``theta`` for the power branch, ``nu`` for the companion.

    Keys of both dicts are the inverse powers ell; entries run up to
    ``lmax``.
    """

    point: str
    theta: dict
    nu: dict
    lmax: int


@dataclass(frozen=True)
class TailMatchReport:
    """Outcome of fitting a tail family to an actual coefficient sequence."""

    point: str
    target: str
    window: tuple
    lmax: int
    exponent: float
    amplitudes: tuple


@dataclass(frozen=True)
class ConnectionReport:
    """Outcome of connecting the two local solution bases."""

    x_eval: float
    collocation: tuple
    matrix: tuple
    check_error: float
    truncation_estimate: float
    integrator_agreement: float
    warned: bool


# ---------------------------------------------------------------------------
# Series construction
# ---------------------------------------------------------------------------


def _abc(coeffs: LimitODECoeffs, ctx: PrecisionContext):
    return (ctx.mpf(coeffs.a0), ctx.mpf(coeffs.a1), ctx.mpf(coeffs.a2),
            ctx.mpf(coeffs.a3), ctx.mpf(coeffs.b1), ctx.mpf(coeffs.b2),
            ctx.mpf(coeffs.Acap))


def series_zero(coeffs: LimitODECoeffs, tau, N: int, with_log: bool = False,
                ctx: PrecisionContext = None) -> FrobeniusSeries:
    """Coefficients of the x = 0 Frobenius solution with exponent ``tau``
    by the five-term recurrence, plus the logarithmic-companion sequence
    (the tau-derivative at 0) when ``with_log`` is set.
    """
    if ctx is None:
        ctx = PrecisionContext(60)
    if N < 4:
        raise ValueError("truncation order N must be at least 4")
    tau_f = float(tau)
    if tau_f != 0 and abs(tau_f - round(tau_f)) < 1e-12 and round(tau_f) <= -1:
        raise DegenerateStateError(
            "indicial degeneracy: the recurrence divisor (tau+n+1)^2 "
            "vanishes at n = %d" % (-round(tau_f) - 1))
    if with_log and tau_f != 0:
        raise ValueError("the logarithmic companion is defined at tau = 0 "
                         "only")
    with ctx.working():
        a0, a1, a2, a3, b1, b2, acap = _abc(coeffs, ctx)
        tau_m = ctx.mpf(tau)
        zero = mp.mpf(0)
        c = [zero, zero, zero, mp.mpf(1)]      # padded: c[k+3] holds c_k
        for n in range(N):
            c.append((((tau_m + n - 1) * (tau_m + n) - a0) * c[n + 3]
                      + b1 * c[n + 2] + b2 * c[n + 1] + a3 * c[n])
                     / (tau_m + n + 1) ** 2)
        d_out = None
        if with_log:
            d = [zero, zero, zero, zero]
            for n in range(N):
                d.append(-(2 * (n + 1) * c[n + 4] - (2 * n - 1) * c[n + 3]
                           - (n * (n - 1) - a0) * d[n + 3] - b1 * d[n + 2]
                           - b2 * d[n + 1] - a3 * d[n]) / (n + 1) ** 2)
            d_out = tuple(d[3:])
        return FrobeniusSeries(point="Zero", exponent=tau_m,
                               c=tuple(c[3:]), d=d_out, N=N)


def series_one(coeffs: LimitODECoeffs, lam: int, N: int,
               with_log: bool = False,
               ctx: PrecisionContext = None) -> FrobeniusSeries:
    """Coefficients of the x = 1 solution with exponent ``lam`` in {0, 2}.

    The exponent-0 power branch is identically zero under the lam/2
    amplitude convention; its companion (twice the exponent-derivative at
    0) is then itself a log-free power series and is returned as ``d``.
    """
    if ctx is None:
        ctx = PrecisionContext(60)
    if N < 4:
        raise ValueError("truncation order N must be at least 4")
    if lam not in (0, 2):
        raise ValueError("the exponent at x = 1 must be 0 or 2")
    if with_log and lam != 0:
        raise ValueError("the companion sequence is defined at the "
                         "exponent-0 branch only")
    with ctx.working():
        a0, a1, a2, a3, b1, b2, acap = _abc(coeffs, ctx)
        zero = mp.mpf(0)
        if lam == 0:
            c = tuple(zero for _ in range(N + 1))
            d_out = None
            if with_log:
                d = [zero, zero, zero,
                     mp.mpf(1), a1, zero, (a1 ** 3 - acap) / 3]
                for m in range(3, N):
                    d.append((-(a1 + m * (m - 1)) * d[m + 3]
                              + a1 * a1 * d[m + 2] - acap * d[m + 1]
                              - a3 * d[m]) / (m * m - 1))
                d_out = tuple(d[3:])
            return FrobeniusSeries(point="One", exponent=mp.mpf(0),
                                   c=c, d=d_out, N=N)
        lam_m = mp.mpf(lam)
        c = [zero, zero, zero, lam_m / 2]
        c.append(-(a1 + lam_m * (lam_m - 1)) * c[3] / (lam_m ** 2 - 1))
        c.append((-(a1 + lam_m * (lam_m + 1)) * c[4] + a1 * a1 * c[3])
                 / (lam_m * (lam_m + 2)))
        c.append((-(a1 + (lam_m + 1) * (lam_m + 2)) * c[5]
                  + a1 * a1 * c[4] - acap * c[3])
                 / ((lam_m + 1) * (lam_m + 3)))
        for m in range(3, N):
            c.append((-(a1 + (lam_m + m - 1) * (lam_m + m)) * c[m + 3]
                      + a1 * a1 * c[m + 2] - acap * c[m + 1] - a3 * c[m])
                     / ((lam_m + m - 1) * (lam_m + m + 1)))
        return FrobeniusSeries(point="One", exponent=lam_m,
                               c=tuple(c[3:N + 4]), d=None, N=N)


# ---------------------------------------------------------------------------
# Evaluation and residuals
# ---------------------------------------------------------------------------


def _horner_stack(row, u):
    """(S, S', S'') of the power series with coefficient list ``row``."""
    s = s1 = s2 = mp.mpf(0)
    for cval in reversed(row):
        s2 = s2 * u + 2 * s1
        s1 = s1 * u + s
        s = s * u + cval
    return s, s1, s2


def solution_values(series: FrobeniusSeries, x, ctx: PrecisionContext,
                    solution: str = "power"):
    """(f, f', f'') of the truncated local solution at ``x``.

    ``solution`` selects the power branch or the companion
    (logarithmic at point Zero; pure power series at point One because the
    exponent-0 power branch vanishes identically there).
    """
    with ctx.working():
        x = ctx.mpf(x)
        u = x if series.point == "Zero" else x - 1
        if solution == "power":
            s, s1, s2 = _horner_stack(series.c, u)
            tau = series.exponent
            if tau == 0:
                return s, s1, s2
            if mp.isint(tau):
                k = int(tau)
                pw = u ** (k - 2)
                f = pw * u * u * s
                df = pw * u * (tau * s + u * s1)
                ddf = pw * (tau * (tau - 1) * s + 2 * tau * u * s1
                            + u * u * s2)
                return f, df, ddf
            if u <= 0:
                raise ValueError("non-integer exponent needs x on the "
                                 "positive side of the expansion point")
            pw = mp.power(u, tau)
            f = pw * s
            df = pw * (tau * s / u + s1)
            ddf = pw * (tau * (tau - 1) * s / (u * u) + 2 * tau * s1 / u
                        + s2)
            return f, df, ddf
        if solution != "companion":
            raise ValueError("solution must be 'power' or 'companion'")
        if series.d is None:
            raise ValueError("series was built without the companion")
        sd, sd1, sd2 = _horner_stack(series.d, u)
        if all(cv == 0 for cv in series.c):
            return sd, sd1, sd2
        if u <= 0:
            raise ValueError("the logarithmic companion needs x on the "
                             "positive side of the expansion point")
        s, s1, s2 = _horner_stack(series.c, u)
        lg = mp.log(u)
        f = sd + lg * s
        df = sd1 + s / u + lg * s1
        ddf = sd2 + 2 * s1 / u - s / (u * u) + lg * s2
        return f, df, ddf


def equation_residual(series: FrobeniusSeries, coeffs: LimitODECoeffs, x,
                      ctx: PrecisionContext = None,
                      solution: str = "power") -> ResidualReport:
    """Relative residual of the defining polynomial-form equation at ``x``
    for the truncated solution."""
    if ctx is None:
        ctx = PrecisionContext(60)
    with ctx.working():
        x = ctx.mpf(x)
        a0, a1, a2, a3, b1, b2, acap = _abc(coeffs, ctx)
        f, df, ddf = solution_values(series, x, ctx, solution=solution)
        if series.point == "Zero":
            lead = (x * x - x) * ddf
            poly = a3 * x ** 3 + b2 * x * x + b1 * x - a0
        else:
            u = x - 1
            lead = (u * u + u) * ddf
            poly = a3 * u ** 3 + acap * u * u - a1 * a1 * u + a1
        terms = [lead, -df, poly * f]
        if series.point == "Zero" and solution == "power" \
                and series.exponent != 0:
            # off the indicial root the recurrence builds the deformation
            # family, which solves the equation with the known indicial
            # source instead of zero
            tau = series.exponent
            terms.append(tau * tau * mp.power(x, tau - 1))
        raw = abs(sum(terms))
        scale = max(abs(v) for v in terms)
        if scale == 0:
            scale = mp.mpf(1)
        return ResidualReport(
            identity_id="frobenius_%s_%s" % (series.point.lower(), solution),
            n=series.N, alpha=series.exponent, t=coeffs.s,
            residual=raw, scale=scale, relative=raw / scale)


def recurrence_check(series: FrobeniusSeries, coeffs: LimitODECoeffs,
                     ctx: PrecisionContext = None):
    """Re-evaluate the defining recurrence of every stored coefficient in
    summed form (an independent code path from the solved-quotient
    generation) and return the maximum relative violation."""
    if ctx is None:
        ctx = PrecisionContext(60)
    with ctx.working():
        a0, a1, a2, a3, b1, b2, acap = _abc(coeffs, ctx)
        zero = mp.mpf(0)
        worst = mp.mpf(0)

        def upd(lhs_terms):
            nonlocal worst
            raw = abs(sum(lhs_terms))
            scale = max(abs(v) for v in lhs_terms)
            if scale > 0:
                worst = max(worst, raw / scale)

        def at(row, k):
            return row[k] if 0 <= k < len(row) else zero

        if series.point == "Zero":
            tau = series.exponent
            for n in range(series.N):
                upd(((tau + n + 1) ** 2 * at(series.c, n + 1),
                     -((tau + n - 1) * (tau + n) - a0) * at(series.c, n),
                     -b1 * at(series.c, n - 1), -b2 * at(series.c, n - 2),
                     -a3 * at(series.c, n - 3)))
            if series.d is not None:
                for n in range(series.N):
                    upd(((n + 1) ** 2 * at(series.d, n + 1),
                         2 * (n + 1) * at(series.c, n + 1),
                         -(2 * n - 1) * at(series.c, n),
                         -(n * (n - 1) - a0) * at(series.d, n),
                         -b1 * at(series.d, n - 1),
                         -b2 * at(series.d, n - 2),
                         -a3 * at(series.d, n - 3)))
            return worst
        lam = series.exponent
        if lam == 2:
            upd(((lam * lam - 1) * at(series.c, 1),
                 (a1 + lam * (lam - 1)) * at(series.c, 0)))
            upd((lam * (lam + 2) * at(series.c, 2),
                 (a1 + lam * (lam + 1)) * at(series.c, 1),
                 -a1 * a1 * at(series.c, 0)))
            upd(((lam + 1) * (lam + 3) * at(series.c, 3),
                 (a1 + (lam + 1) * (lam + 2)) * at(series.c, 2),
                 -a1 * a1 * at(series.c, 1), acap * at(series.c, 0)))
            for n in range(3, series.N):
                upd(((lam + n - 1) * (lam + n + 1) * at(series.c, n + 1),
                     (a1 + (lam + n - 1) * (lam + n)) * at(series.c, n),
                     -a1 * a1 * at(series.c, n - 1),
                     acap * at(series.c, n - 2), a3 * at(series.c, n - 3)))
        if series.d is not None:
            for n in range(3, series.N):
                upd(((n * n - 1) * at(series.d, n + 1),
                     (a1 + n * (n - 1)) * at(series.d, n),
                     -a1 * a1 * at(series.d, n - 1),
                     acap * at(series.d, n - 2), a3 * at(series.d, n - 3)))
        return worst


def tau_derivative_probe(coeffs: LimitODECoeffs, n_probe: int, h,
                         ctx: PrecisionContext = None):
    """CentraL finite difference (c(+h) - c(-h))/2h of the exponent-tau
    coefficient sequence at tau = 0, compared against the companion
    sequence: returns the maximum relative deviation at index
    ``n_probe``.  The deviation shrinks like h^2."""
    if ctx is None:
        ctx = PrecisionContext(60)
    with ctx.working():
        h = ctx.mpf(h)
        plus = series_zero(coeffs, h, n_probe + 1, ctx=ctx)
        minus = series_zero(coeffs, -h, n_probe + 1, ctx=ctx)
        base = series_zero(coeffs, 0, n_probe + 1, with_log=True, ctx=ctx)
        fd = (plus.c[n_probe] - minus.c[n_probe]) / (2 * h)
        ref = base.d[n_probe]
        return abs(fd - ref) / max(abs(ref), mp.mpf(1) / 10 ** 30)


# ---------------------------------------------------------------------------
# Large-index tails
# ---------------------------------------------------------------------------


def _binom(n: int, k: int):
    if k < 0 or k > n:
        return mp.mpf(0)
    return mp.mpf(math.comb(n, k))


def tail_zero(coeffs: LimitODECoeffs, tau, lmax: int,
              ctx: PrecisionContext = None) -> TailCoeffs:
    """1/n tail coefficients of the x = 0 sequences: ``theta`` for the
    exponent-tau branch (theta_3 = 1 normalization) and ``nu`` for the
    logarithmic companion (nu_4 = -3), by the displayed recurrences with
    the empty-sum convention at the first row."""
    if ctx is None:
        ctx = PrecisionContext(60)
    if lmax < 4:
        raise ValueError("lmax must be at least 4")
    with ctx.working():
        a0, a1, a2, a3, b1, b2, acap = _abc(coeffs, ctx)
        tau_m = ctx.mpf(tau)
        theta = {3: mp.mpf(1)}
        for ell in range(1, lmax - 2):
            total = (-tau_m * (1 + 2 * ell)
                     + mp.mpf(ell * (ell + 1)) / 2 - a1) * theta[ell + 2]
            for k in range(3, ell + 2):
                sign = mp.mpf((-1) ** (ell - k))
                total += ((sign * (_binom(ell + 1, k - 3)
                                   - 2 * tau_m * _binom(ell + 1, k - 2)
                                   + tau_m ** 2 * _binom(ell + 1, k - 1))
                           - (b1 + 2 ** (ell - k + 2) * b2
                              + 3 ** (ell - k + 2) * a3)
                           * _binom(ell + 1, k - 1)) * theta[k])
            theta[ell + 3] = total / ell
        if 4 in theta:
            drift = abs(theta[4] - (-3 * tau_m + 1 - a1))
            if drift > mp.mpf(10) ** (-(ctx.dps - 5)):
                raise ComputationAlarm("coefficient-inconsistency",
                                       "tail seed theta_4 drifted",
                                       drift=float(drift))
        nu = {3: mp.mpf(0)}
        theta0 = theta if tau_m == 0 else _theta_zero_at(coeffs, 0, lmax, ctx)
        for ell in range(1, lmax - 2):
            total = -(1 + 2 * ell) * theta0[ell + 2]
            for k in range(3, ell + 2):
                total += (-2 * mp.mpf((-1) ** (ell - k))
                          * _binom(ell + 1, k - 2) * theta0[k])
            total += (mp.mpf(ell * (ell + 1)) / 2 - a1) * nu[ell + 2]
            for k in range(3, ell + 2):
                total += ((mp.mpf((-1) ** (ell - k)) * _binom(ell + 1, k - 3)
                           - (b1 + 2 ** (ell - k + 2) * b2
                              + 3 ** (ell - k + 2) * a3)
                           * _binom(ell + 1, k - 1)) * nu[k])
            nu[ell + 3] = total / ell
        return TailCoeffs(point="Zero", theta=theta, nu=nu, lmax=lmax)


def _theta_zero_at(coeffs, tau, lmax, ctx):
    return tail_zero(coeffs, tau, lmax, ctx).theta


def _one_bracket(ell: int, k: int, lam_m, a1, a3, acap):
    """Summand weight of the unified x = 1 tail row."""
    sign = mp.mpf((-1) ** (ell - k))
    return (sign * (_binom(ell, k) + (1 - 2 * lam_m) * _binom(ell - 1, k)
                    + lam_m * (lam_m - 2) * _binom(ell - 1, k + 1))
            - _binom(ell - 1, k + 1)
            * (a1 * a1 + 2 ** (ell - k - 2) * acap
               - 3 ** (ell - k - 2) * a3))


def _one_tail_row(coeffs, lam_m, amp, lmax, ctx):
    """Tail coefficients of an x = 1 coefficient sequence with leading
    amplitude ``amp`` at inverse power 1, by the single unified row that
    reproduces the exact recurrence order by order."""
    a0, a1, a2, a3, b1, b2, acap = _abc(coeffs, ctx)
    th = {1: amp, 2: (a0 - lam_m) * amp}
    for ell in range(2, lmax):
        total = (a0 + mp.mpf(ell * (ell + 1)) / 2
                 - (2 * ell - 1) * lam_m - 1) * th[ell]
        for k in range(-1, ell - 2):
            total += _one_bracket(ell, k, lam_m, a1, a3, acap) * th[k + 2]
        th[ell + 1] = total / ell
    return th


def tail_one(coeffs: LimitODECoeffs, lam: int, lmax: int,
             ctx: PrecisionContext = None) -> TailCoeffs:
    """1/n tail coefficients of the x = 1 sequences (before stripping the
    (-1)^n alternation): ``theta`` for the exponent-``lam`` branch with
    the lam/2 amplitude convention, ``nu`` for the companion sequence
    (amplitude 1, hence nu_2 = a0)."""
    if ctx is None:
        ctx = PrecisionContext(60)
    if lmax < 4:
        raise ValueError("lmax must be at least 4")
    if lam not in (0, 2):
        raise ValueError("the exponent at x = 1 must be 0 or 2")
    with ctx.working():
        lam_m = mp.mpf(lam)
        theta = _one_tail_row(coeffs, lam_m, lam_m / 2, lmax, ctx)
        nu = _one_tail_row(coeffs, mp.mpf(0), mp.mpf(1), lmax, ctx)
        return TailCoeffs(point="One", theta=theta, nu=nu, lmax=lmax)


def tail_one_display_discrepancies(coeffs: LimitODECoeffs, lam: int,
                                   lmax: int,
                                   ctx: PrecisionContext = None) -> dict:
    """Exact characterization of how the classically quoted x = 1 seed
    rows differ from the true tail recurrence at the occurring exponents.

    For each checkable row the returned dict maps a label to the pair
    (discrepancy actually measured, discrepancy predicted by the
    characterization); the two agree to rounding.  The predicted defects
    are (a2/2)*theta_1 for the third-coefficient seed, (2 a2/3)*theta_2
    for the fourth, and for the general row the dropped polynomial parts
    of its two boundary bracket instances.
    """
    if ctx is None:
        ctx = PrecisionContext(60)
    if lam not in (0, 2):
        raise ValueError("the exponent at x = 1 must be 0 or 2")
    with ctx.working():
        a0, a1, a2, a3, b1, b2, acap = _abc(coeffs, ctx)
        lam_m = mp.mpf(lam)
        amp = lam_m / 2 if lam == 2 else mp.mpf(1)
        th = _one_tail_row(coeffs, lam_m, amp, max(lmax, 6), ctx)
        out = {}
        disp3 = ((a0 - 3 * lam_m + 2) * th[2]
                 - (a1 * a1 + a2 + a3) * th[1]) / 2
        out["seed3"] = (disp3 - th[3], a2 / 2 * th[1])
        disp4 = ((a0 + 5 * (1 - lam_m)) * th[3]
                 - 2 * (a1 * a1 + a2 + a3 + lam_m ** 2 - 3 * lam_m + 1)
                 * th[2]
                 - (a1 * a1 + 4 * a2 - a3) * th[1]) / 3
        out["seed4"] = (disp4 - th[4], 2 * a2 / 3 * th[2])
        for ell in range(4, min(lmax, 8)):
            disp = (a0 + mp.mpf(ell * (ell + 1)) / 2
                    - (2 * ell - 1) * lam_m - 1) * th[ell]
            for k in range(1, ell - 2):
                disp += _one_bracket(ell, k, lam_m, a1, a3, acap) * th[k + 2]
            disp -= (ell - 1) * (a1 * a1 + 2 ** (ell - 2) * acap
                                 - 3 ** (ell - 2) * a3) * th[2]
            disp -= (a1 * a1 + 2 ** (ell - 1) * acap
                     - 3 ** (ell - 1) * a3) * th[1]
            disp = disp / ell
            dropped = (mp.mpf((-1) ** ell)
                       * (2 - 2 * lam_m + (ell - 1) * lam_m * (lam_m - 2))
                       * th[2]
                       + mp.mpf((-1) ** (ell + 1)) * lam_m * (lam_m - 2)
                       * th[1]) / ell
            out["row%d" % ell] = (disp - th[ell + 1], -dropped)
        return out


# ---------------------------------------------------------------------------
# Tail matching
# ---------------------------------------------------------------------------


def _tail_value(fam: dict, lmax: int, n):
    n_m = mp.mpf(n)
    return sum(v * n_m ** (-ell) for ell, v in fam.items() if ell <= lmax)


def _least_squares(rows, rhs):
    """Solve the normal equations of a small overdetermined system in
    exact-order mpf arithmetic (Gaussian elimination with pivoting)."""
    m = len(rows[0])
    ata = [[mp.mpf(0)] * (m + 1) for _ in range(m)]
    for row, b in zip(rows, rhs):
        for i in range(m):
            ata[i][m] += row[i] * b
            for j in range(m):
                ata[i][j] += row[i] * row[j]
    for col in range(m):
        piv = max(range(col, m), key=lambda i: abs(ata[i][col]))
        if ata[piv][col] == 0:
            raise DegenerateStateError("degenerate tail-fit normal "
                                       "equations")
        ata[col], ata[piv] = ata[piv], ata[col]
        for i in range(m):
            if i == col:
                continue
            fac = ata[i][col] / ata[col][col]
            for j in range(col, m + 1):
                ata[i][j] -= fac * ata[col][j]
    return [ata[i][m] / ata[i][i] for i in range(m)]


def _match_one_target(point, label, seq, families, window, lmax, ctx):
    lo, hi = window
    step = max(1, (hi - lo) // 120)
    fit_ns = list(range(lo, hi + 1, step))
    # the two nuisance columns soak up the first omitted tail orders so
    # that the family amplitudes come out unbiased; they are not part of
    # the subtracted model
    rows = []
    rhs = []
    for n in fit_ns:
        n_m = mp.mpf(n)
        rows.append([_tail_value(fam, lmax, n) for fam in families]
                    + [n_m ** (-(lmax + 1)), n_m ** (-(lmax + 2))])
        rhs.append(seq[n])
    amps = _least_squares(rows, rhs)[:len(families)]
    xs = []
    ys = []
    for n in fit_ns:
        resid = seq[n] - sum(a * _tail_value(fam, lmax, n)
                             for a, fam in zip(amps, families))
        if resid != 0:
            xs.append(math.log(n))
            ys.append(float(mp.log(abs(resid))))
    if len(xs) < 8:
        raise DegenerateStateError("tail-match window left too few "
                                   "nonzero residuals")
    n_pts = len(xs)
    sx = sum(xs)
    sy = sum(ys)
    sxx = sum(v * v for v in xs)
    sxy = sum(u * v for u, v in zip(xs, ys))
    slope = (n_pts * sxy - sx * sy) / (n_pts * sxx - sx * sx)
    return TailMatchReport(point=point, target=label, window=(lo, hi),
                           lmax=lmax, exponent=-slope,
                           amplitudes=tuple(float(a) for a in amps))


def tail_match(series: FrobeniusSeries, tail: TailCoeffs, n_window,
               ctx: PrecisionContext = None):
    """Fit the tail families to the actual coefficient sequences over the
    given index window and report the decay exponent of what remains.

    After removing the fitted combination of tail terms through
    ``tail.lmax``, the leftover decays like n^-(lmax+1); the fitted
    exponent lands within 0.5 of lmax+1 when the window is in the
    tail-dominated regime.  Point One sequences are compared after
    stripping their (-1)^n alternation.  Returns one report for the power
    branch (when nonzero) plus one for the companion when present.
    """
    if ctx is None:
        ctx = PrecisionContext(60)
    lo, hi = int(n_window[0]), int(n_window[1])
    if series.point != tail.point:
        raise ValueError("series and tail expansions belong to different "
                         "points")
    if hi > series.N:
        raise ValueError("window exceeds the computed truncation order")
    if hi > 400:
        raise ValueError("tail-matching windows are capped at n = 400")
    if lo < 5 or hi - lo < 30:
        raise ValueError("window must start at n >= 5 and span >= 30")
    with ctx.working():
        strip = (-1 if series.point == "One" else 1)
        reports = []
        c_seq = [cv * strip ** n for n, cv in enumerate(series.c)]
        if any(cv != 0 for cv in c_seq):
            reports.append(_match_one_target(
                series.point, "c", c_seq, [tail.theta], (lo, hi),
                tail.lmax, ctx))
        if series.d is not None:
            d_seq = [dv * strip ** n for n, dv in enumerate(series.d)]
            families = [tail.nu]
            if series.point == "Zero":
                families.append(tail.theta)
            reports.append(_match_one_target(
                series.point, "d", d_seq, families, (lo, hi),
                tail.lmax, ctx))
        if not reports:
            raise DegenerateStateError("nothing to match: null power "
                                       "branch and no companion")
        return reports


# ---------------------------------------------------------------------------
# Cross-checks against the connection structure and the integrator
# ---------------------------------------------------------------------------


def _truncation_estimate(series: FrobeniusSeries, x, ctx):
    """Crude last-kept-term estimate of the truncation error at ``x``,
    relative to the solution size there."""
    u = abs(ctx.mpf(x) - (0 if series.point == "Zero" else 1))
    tails = []
    for row in (series.c, series.d):
        if row is None:
            continue
        last = max(abs(row[-1]), abs(row[-2]))
        f = _horner_stack(row, u)[0]
        tails.append(last * u ** (len(row) - 1) / max(abs(f), mp.mpf(1)))
    return max(tails)


def crosscheck_integration(coeffs: LimitODECoeffs, x_eval,
                           N: int = 200, ctx: PrecisionContext = None,
                           tol: float = 1e-8) -> ConnectionReport:
    """Verify that the solution pairs at the two singular points span the
    same space: solve for the constant 2x2 connection matrix from two
    collocation points and check it at ``x_eval``; additionally propagate
    one basis solution to ``x_eval`` with the module-independent adaptive
    integrator and compare.

    Emits a RuntimeWarning when the truncation-error estimate at the
    evaluation points exceeds the check tolerance (under-truncated
    series).
    """
    if ctx is None:
        ctx = PrecisionContext(60)
    x_eval = float(x_eval)
    if not 0.05 <= x_eval <= 0.95:
        raise ValueError("x_eval must stay away from both singular points")
    delta = min(0.1, x_eval / 2, (1 - x_eval) / 2)
    xa, xb = x_eval - delta, x_eval + delta
    with ctx.working():
        s0 = series_zero(coeffs, 0, N, with_log=True, ctx=ctx)
        s1d = series_one(coeffs, 0, N, with_log=True, ctx=ctx)
        s12 = series_one(coeffs, 2, N, ctx=ctx)

        est = max(max(_truncation_estimate(s, x, ctx)
                      for s in (s0, s1d, s12)) for x in (xa, xb, x_eval))
        warned = False
        if est > mp.mpf(tol) / 10:
            warned = True
            warnings.warn(
                "series truncation estimate %.3g at the evaluation points "
                "exceeds the connection tolerance; increase N"
                % float(est), RuntimeWarning, stacklevel=2)

        def basis0(x):
            f1 = solution_values(s0, x, ctx, "power")
            f2 = solution_values(s0, x, ctx, "companion")
            return (f1[0], f2[0])

        def basis1(x):
            g1 = solution_values(s1d, x, ctx, "companion")
            g2 = solution_values(s12, x, ctx, "power")
            return (g1[0], g2[0])

        b0a, b0b, b0c = basis0(xa), basis0(xb), basis0(x_eval)
        b1a, b1b, b1c = basis1(xa), basis1(xb), basis1(x_eval)
        det = b1a[0] * b1b[1] - b1b[0] * b1a[1]
        if abs(det) < mp.mpf(10) ** (-(ctx.dps - 10)):
            raise ComputationAlarm("degenerate-collocation",
                                   "collocation matrix nearly singular",
                                   det=float(det))
        matrix = []
        for j in (0, 1):
            rhs_a, rhs_b = b0a[j], b0b[j]
            m1 = (rhs_a * b1b[1] - rhs_b * b1a[1]) / det
            m2 = (rhs_b * b1a[0] - rhs_a * b1b[0]) / det
            matrix.append((m1, m2))
        check = mp.mpf(0)
        for j in (0, 1):
            pred = matrix[j][0] * b1c[0] + matrix[j][1] * b1c[1]
            scale = max(abs(b0c[j]), abs(pred), mp.mpf(1) / 10 ** 10)
            check = max(check, abs(b0c[j] - pred) / scale)

        f0a = solution_values(s0, xa, ctx, "power")
        sol = solve_limit_ode(coeffs, xa, xb, float(f0a[0]), float(f0a[1]),
                              tol=1e-12, checkpoints=[x_eval])
        idx = min(range(len(sol.x)), key=lambda i: abs(sol.x[i] - x_eval))
        direct = solution_values(s0, x_eval, ctx, "power")[0]
        integ = abs(sol.value[idx] - float(direct)) / max(
            abs(float(direct)), 1e-30)
        return ConnectionReport(
            x_eval=x_eval, collocation=(xa, xb),
            matrix=tuple((float(a), float(b)) for a, b in matrix),
            check_error=float(check),
            truncation_estimate=float(est),
            integrator_agreement=float(integ),
            warned=warned)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def series_to_csv(series: FrobeniusSeries, digits: int = 30) -> str:
    """CSV dump ``n,c_n,d_n`` of the stored coefficients."""
    lines = ["n,c_n,d_n"]
    for n in range(series.N + 1):
        c_txt = mp.nstr(series.c[n], digits)
        d_txt = mp.nstr(series.d[n], digits) if series.d is not None else ""
        lines.append("%d,%s,%s" % (n, c_txt, d_txt))
    return "\n".join(lines) + "\n"

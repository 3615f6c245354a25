"""Soft-edge scaling limit: the scaling map from the finite-n cutoff
ensemble to the edge variable s, the boundary-value solution of the
sigma-form of the second Painleve equation

    (sigma''(s))^2 + 4 sigma'(s) (sigma'(s)^2 - s sigma'(s) + sigma(s)) = 0,

the associated Painleve-II transcendent w(s) = sqrt(-sigma'(s)) (the
Hastings–McLeod solution), the limiting largest-eigenvalue CDF

    ln Phat(s) = - integral_s^inf sigma(x) dx,

closed-form tail expansions on both sides with exact rational
coefficients, and finite-n convergence experiments toward these limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Literal, Optional, Sequence, Tuple

import mpmath as mp
import numpy as np
from scipy.linalg import solve_banded

from .context import ComputationAlarm, PrecisionContext
from .lue import WeightSpec, ladder_state, op_chain

__all__ = [
    "ScalingMap",
    "SoftEdgeGrid",
    "TailSeries",
    "TailEval",
    "ConvergenceRow",
    "LEFT_TAIL",
    "RIGHT_TAIL",
    "scaling_map",
    "iota1",
    "iota2",
    "left_sigma",
    "left_log_cdf",
    "right_h",
    "survival_bracket",
    "right_E",
    "right_sigma",
    "right_d_sigma",
    "tail_eval",
    "solve_sigma_pii",
    "hastings_mcleod",
    "tw_cdf",
    "grid_to_csv",
    "convergence_experiment",
]


# ----------------------------------------------------------------------
# scaling map
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingMap:
    """t = c1 n + c2 n^(1/3) s with c1 = (sqrt(mu+1)+1)^2 and
    c2 = (sqrt(mu+1)+1)^(4/3) / (mu+1)^(1/6)."""

    n: int
    alpha: float
    mu: float
    c1: float
    c2: float

    def t_of_s(self, s):
        return self.c1 * self.n + self.c2 * self.n ** (1.0 / 3.0) * s


def scaling_map(n: int, alpha, regime: Literal["Proportional", "Finite"]
                ) -> ScalingMap:
    if n < 1:
        raise ValueError("n must be >= 1")
    if not float(alpha) > 0:
        raise ValueError("alpha must be > 0")
    if regime not in ("Proportional", "Finite"):
        raise ValueError("regime must be Proportional or Finite")
    mu = float(alpha) / n if regime == "Proportional" else 0.0
    root = math.sqrt(mu + 1.0) + 1.0
    c1 = root ** 2
    c2 = root ** (4.0 / 3.0) / (mu + 1.0) ** (1.0 / 6.0)
    return ScalingMap(n=n, alpha=float(alpha), mu=mu, c1=c1, c2=c2)


# ----------------------------------------------------------------------
# tail series (exact rational data)
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class TailSeries:
    """Exact tail-expansion data.

    sigma_coeffs: (power, coefficient) terms of sigma(s); powers are
    integers (Left side).  h_coeffs / correction terms carry powers as
    exact Fractions since the Right side steps in half-integers.
    cdf_prefactors: the transcendental prefactor of the CDF tail, kept
    symbolically as (description, evaluator name).
    """

    side: Literal["Left", "Right"]
    sigma_coeffs: tuple
    cdf_prefactors: tuple
    h_coeffs: tuple
    correction_coeffs: tuple


LEFT_TAIL = TailSeries(
    side="Left",
    sigma_coeffs=(
        (2, Fraction(1, 4)),
        (-1, Fraction(-1, 8)),
        (-4, Fraction(9, 64)),
        (-7, Fraction(-189, 128)),
        (-10, Fraction(21663, 512)),
    ),
    cdf_prefactors=(("iota1", "2^(1/24) * exp(zeta'(-1))"),),
    h_coeffs=(),
    # multiplicative CDF bracket, in powers of 1/s^3
    correction_coeffs=(
        (-3, Fraction(-3, 64)),
        (-6, Fraction(2025, 8192)),
        (-9, Fraction(-2470825, 524288)),
        (-12, Fraction(26389914075, 134217728)),
    ),
)

RIGHT_TAIL = TailSeries(
    side="Right",
    sigma_coeffs=(),
    cdf_prefactors=(("iota2", "1/(16*pi)"),),
    # h = f'/f for the survival probability f = 1 - Phat; the first three
    # terms are the reference truncation, the remaining three extend the
    # same expansion (used for boundary seeding).
    h_coeffs=(
        (Fraction(1, 2), Fraction(-2)),
        (Fraction(-1), Fraction(-3, 2)),
        (Fraction(-5, 2), Fraction(35, 16)),
        (Fraction(-4), Fraction(-105, 16)),
        (Fraction(-11, 2), Fraction(27685, 1024)),
        (Fraction(-7), Fraction(-8715, 64)),
    ),
    # multiplicative survival bracket, powers of 1/s^(3/2); the third
    # term is derived by exponentiating the integrated h-tail.
    correction_coeffs=(
        (Fraction(-3, 2), Fraction(-35, 24)),
        (Fraction(-3), Fraction(3745, 1152)),
        (Fraction(-9, 2), Fraction(-805805, 82944)),
    ),
)

# derived continuation of the Left sigma series (obtained by pushing the
# same expansion two more orders); used for boundary seeding and for the
# first-omitted-term error estimate of tail_eval.
_LEFT_SIGMA_EXT = (
    (-13, Fraction(-4825971, 2048)),
    (-16, Fraction(3540311739, 16384)),
)


def iota1(ctx: Optional[PrecisionContext] = None):
    """Left CDF prefactor 2^(1/24) e^{zeta'(-1)}."""
    dps = ctx.dps if ctx is not None else 30
    with mp.workdps(dps):
        zp = mp.mpf(1) / 12 - mp.log(mp.glaisher)
        return mp.mpf(2) ** (mp.mpf(1) / 24) * mp.exp(zp)


def iota2(ctx: Optional[PrecisionContext] = None):
    """Right survival prefactor 1/(16 pi)."""
    dps = ctx.dps if ctx is not None else 30
    with mp.workdps(dps):
        return 1 / (16 * mp.pi)


def left_sigma(s, extended: bool = False):
    """Left-side sigma series (s <= -4); powers of s evaluated directly
    at negative s (all powers are integers)."""
    s = float(s)
    total = sum(float(c) * s ** p for p, c in LEFT_TAIL.sigma_coeffs)
    if extended:
        total += sum(float(c) * s ** p for p, c in _LEFT_SIGMA_EXT)
    return total


def left_log_cdf(s):
    """ln Phat(s) = s^3/12 - (1/8) ln|s| + ln iota1 + ln(bracket)."""
    s = float(s)
    bracket = 1.0 + sum(float(c) * s ** p
                        for p, c in LEFT_TAIL.correction_coeffs)
    return (s ** 3 / 12.0 - math.log(-s) / 8.0
            + float(mp.log(iota1())) + math.log(bracket))


def right_h(s, terms: int = 3):
    """Logarithmic derivative h(s) = f'(s)/f(s) of the survival
    probability, truncated to the first `terms` series terms."""
    s = float(s)
    return sum(float(c) * s ** float(p)
               for p, c in RIGHT_TAIL.h_coeffs[:terms])


def survival_bracket(s, corrections: int = 1):
    """Multiplicative bracket of the survival tail: 1 plus the first
    `corrections` correction terms."""
    s = float(s)
    return 1.0 + sum(float(c) * s ** float(p)
                     for p, c in RIGHT_TAIL.correction_coeffs[:corrections])


def right_E(s, bracket_terms: int = 1):
    """Survival probability E(s) = 1 - Phat(s) =
    iota2 e^{-(4/3) s^{3/2}} s^{-3/2} (1 + corrections); bracket_terms
    counts corrections beyond the leading 1."""
    s = float(s)
    return (float(iota2()) * math.exp(-4.0 / 3.0 * s ** 1.5) * s ** -1.5
            * survival_bracket(s, bracket_terms))


def right_sigma(s, h_terms: int = 3, bracket_terms: int = 1):
    """sigma(s) = -h(s) E(s) / (1 - E(s)) on the right tail."""
    e = right_E(s, bracket_terms)
    return -right_h(s, h_terms) * e / (1.0 - e)


def right_d_sigma(s, h_terms: int = 3, bracket_terms: int = 1):
    """sigma'(s) = -(h' E + h E') / (1-E)^2 with E' = E h."""
    s = float(s)
    e = right_E(s, bracket_terms)
    h = right_h(s, h_terms)
    hp = sum(float(c) * float(p) * s ** (float(p) - 1.0)
             for p, c in RIGHT_TAIL.h_coeffs[:h_terms])
    return -(hp * e + h * e * h) / (1.0 - e) ** 2


@dataclass(frozen=True)
class TailEval:
    sigma: float
    cdf: float
    sigma_error: float
    cdf_error: float
    survival: float = 0.0


def tail_eval(side: Literal["Left", "Right"], s) -> TailEval:
    """Truncated tail values with first-omitted-term error estimates."""
    s = float(s)
    if side == "Left":
        if s > -4:
            raise ValueError("Left tail requires s <= -4")
        sigma = left_sigma(s)
        sig_err = abs(float(_LEFT_SIGMA_EXT[0][1]) * s ** -13)
        logp = left_log_cdf(s)
        cdf = math.exp(logp)
        b3 = float(LEFT_TAIL.correction_coeffs[2][1]) * s ** -9
        b4 = float(LEFT_TAIL.correction_coeffs[3][1]) * s ** -12
        cdf_err = cdf * abs(b4) * abs(b4 / b3) if b3 else 0.0
        return TailEval(sigma=sigma, cdf=cdf, sigma_error=sig_err,
                        cdf_error=cdf_err, survival=1.0 - cdf)
    if side == "Right":
        if s < 4:
            raise ValueError("Right tail requires s >= 4")
        e = right_E(s)
        sigma = right_sigma(s)
        # first omitted pieces: next h term and next bracket correction
        h_next = abs(float(RIGHT_TAIL.h_coeffs[3][1])) * s ** -4.0
        br_next = abs(float(RIGHT_TAIL.correction_coeffs[1][1])) * s ** -3.0
        rel = h_next / abs(right_h(s)) + br_next
        return TailEval(sigma=sigma, cdf=1.0 - e,
                        sigma_error=abs(sigma) * rel, cdf_error=e * br_next,
                        survival=e)
    raise ValueError("side must be Left or Right")


# ----------------------------------------------------------------------
# sigma-form boundary-value solver
# ----------------------------------------------------------------------

@dataclass
class SoftEdgeGrid:
    s: np.ndarray
    sigma: np.ndarray
    d_sigma: np.ndarray
    dd_sigma: np.ndarray
    w: Optional[np.ndarray] = None
    logP: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    tol: float = 1e-9
    clamped: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def r(self) -> np.ndarray:
        return self.d_sigma


def _initial_guess(s: np.ndarray) -> np.ndarray:
    """Positive decreasing seed: tail series where valid, log-linear
    blend in the central window."""
    lo, hi = -4.0, 3.0
    ln_lo = math.log(left_sigma(lo))
    ln_hi = math.log(right_sigma(hi, h_terms=6, bracket_terms=3))
    out = np.empty_like(s)
    for i, si in enumerate(s):
        if si <= lo:
            out[i] = left_sigma(si)
        elif si >= hi:
            out[i] = right_sigma(max(si, 4.0), h_terms=6, bracket_terms=3) \
                if si >= 4.0 else math.exp(
                    ln_hi + (math.log(right_sigma(4.0, 6, 3)) - ln_hi)
                    * (si - hi) / (4.0 - hi))
        else:
            out[i] = math.exp(ln_lo + (ln_hi - ln_lo) * (si - lo) / (hi - lo))
    return out


def _newton_residual(sig: np.ndarray, s: np.ndarray, h: float):
    sp = (sig[2:] - sig[:-2]) / (2 * h)
    second = (sig[2:] - 2 * sig[1:-1] + sig[:-2]) / (h * h)
    s_in = s[1:-1]
    sig_in = sig[1:-1]
    prod = -sp * (sp * sp - s_in * sp + sig_in)
    p_clip = np.clip(prod, 0.0, None)
    root = np.sqrt(p_clip)
    g = second - 2.0 * root
    return g, sp, sig_in, s_in, p_clip, root


def _solve_mesh(s: np.ndarray, bc_lo: float, bc_hi: float,
                init: np.ndarray, max_iter: int = 80):
    """Damped Newton on the positive-branch first-order form
    sigma'' = 2 sqrt(-sigma'(sigma'^2 - s sigma' + sigma))."""
    h = s[1] - s[0]
    eps = float(np.finfo(float).eps)
    sig = init.copy()
    sig[0], sig[-1] = bc_lo, bc_hi
    for _ in range(max_iter):
        g, sp, sig_in, s_in, p_clip, root = _newton_residual(sig, s, h)
        g_norm = float(np.max(np.abs(g)))
        # rounding floor of the discrete operator itself
        noise = 200.0 * eps * max(1.0, float(np.max(np.abs(sig)))) / (h * h)
        if g_norm <= noise:
            break
        inv_root = np.where(root > 1e-280, 1.0 / np.maximum(root, 1e-280),
                            0.0)
        dpds = -sp                       # partial P / partial sigma_i
        dpdsp = -(3 * sp * sp - 2 * s_in * sp + sig_in)
        jd = -2.0 / (h * h) - inv_root * dpds
        ju = 1.0 / (h * h) - inv_root * dpdsp / (2 * h)
        jl = 1.0 / (h * h) + inv_root * dpdsp / (2 * h)
        m = len(jd)
        ab = np.zeros((3, m))
        ab[0, 1:] = ju[:-1]
        ab[1, :] = jd
        ab[2, :-1] = jl[1:]
        delta = solve_banded((1, 1), ab, -g)
        lam = 1.0
        base = float(np.linalg.norm(g))
        accepted = False
        while lam >= 1.0 / 4096:
            trial = sig.copy()
            trial[1:-1] += lam * delta
            g_t = _newton_residual(trial, s, h)[0]
            l2 = float(np.linalg.norm(g_t))
            if l2 < (1 - lam / 4) * base or \
                    l2 <= noise * math.sqrt(len(g_t)):
                sig = trial
                accepted = True
                break
            lam /= 2
        if not accepted:
            lam = 1.0 / 4096
            sig[1:-1] += lam * delta
        if lam * float(np.max(np.abs(delta))) < \
                1e-15 * max(1.0, float(np.max(np.abs(sig)))):
            break
    g_final = _newton_residual(sig, s, h)[0]
    return sig, float(np.max(np.abs(g_final)))


def _stencil_weights(offsets: np.ndarray, at: float, order: int
                     ) -> np.ndarray:
    """Finite-difference weights (Vandermonde solve) for the derivative
    of the given order at position `at`, nodes at integer offsets."""
    m = len(offsets)
    a = np.vander(offsets - at, m, increasing=True).T
    b = np.zeros(m)
    b[order] = math.factorial(order)
    return np.linalg.solve(a, b)


def _derivative_o6(sig: np.ndarray, h: float) -> np.ndarray:
    """First derivative, sixth-order stencils including boundaries
    (the high order keeps the relative error small where the solution
    decays like exp(-(4/3) s^(3/2)))."""
    d = np.empty_like(sig)
    d[3:-3] = (-sig[:-6] + 9 * sig[1:-5] - 45 * sig[2:-4]
               + 45 * sig[4:-2] - 9 * sig[5:-1] + sig[6:]) / (60 * h)
    nodes = np.arange(7.0)
    for j in range(3):
        w_l = _stencil_weights(nodes, float(j), 1) / h
        d[j] = float(np.dot(w_l, sig[:7]))
        w_r = _stencil_weights(nodes, float(6 - j), 1) / h
        d[-(j + 1)] = float(np.dot(w_r, sig[-7:]))
    return d


def _verify_residual(s, sig, tol):
    """Independent pointwise check of the defining equation using
    fourth-order stencil derivatives; normalized by the largest term."""
    h = s[1] - s[0]
    dp = _derivative_o6(sig, h)
    dd = np.zeros_like(sig)
    dd[2:-2] = (-sig[4:] + 16 * sig[3:-1] - 30 * sig[2:-2]
                + 16 * sig[1:-3] - sig[:-4]) / (12 * h * h)
    t1 = dd ** 2
    t2 = 4 * dp ** 3
    t3 = -4 * s * dp ** 2
    t4 = 4 * dp * sig
    res = np.abs(t1 + t2 + t3 + t4)
    scale = np.maximum(1.0, np.maximum.reduce(
        [np.abs(t1), np.abs(t2), np.abs(t3), np.abs(t4)]))
    rel = res / scale
    return float(np.max(rel[2:-2]))


def solve_sigma_pii(s_min: float = -12.0, s_max: float = 8.0,
                    grid_n: int = 4001, tol: float = 1e-9,
                    ctx: Optional[PrecisionContext] = None) -> SoftEdgeGrid:
    """Boundary-value solve of the sigma-form on [s_min, s_max].

    Boundaries are seeded from the extended tail series on each side.
    The equation is solved on the requested mesh and on its two-fold
    refinement; the returned sigma is the fourth-order Richardson
    combination at the requested points.  Refinement continues until
    the independent pointwise residual passes tol.
    """
    if s_min > -8 or s_max < 8:
        raise ValueError("recommended domain requires s_min <= -8, "
                         "s_max >= 8")
    if tol < 1e-12:
        raise ValueError("tol below solver capability (>= 1e-12)")
    if grid_n < 201:
        raise ValueError("grid_n too small")

    bc_lo = left_sigma(s_min, extended=True)
    bc_hi = right_sigma(s_max, h_terms=6, bracket_terms=3)

    best = None
    n_mesh = grid_n
    for _ in range(3):
        s_c = np.linspace(s_min, s_max, n_mesh)
        s_f = np.linspace(s_min, s_max, 2 * n_mesh - 1)
        sig_c, res_c = _solve_mesh(s_c, bc_lo, bc_hi, _initial_guess(s_c))
        init_f = np.interp(s_f, s_c, sig_c)
        sig_f, res_f = _solve_mesh(s_f, bc_lo, bc_hi, init_f)
        sig_r = (4.0 * sig_f[::2] - sig_c) / 3.0
        rel_check = _verify_residual(s_c, sig_r, tol)
        delta = float(np.max(np.abs(sig_f[::2] - sig_c)
                             / np.maximum(1.0, np.abs(sig_c))))
        best = (s_c, sig_r, rel_check, delta, res_c, res_f)
        if rel_check <= tol:
            break
        n_mesh = 2 * n_mesh - 1
    else:
        raise ComputationAlarm(
            "nonconvergence",
            "sigma-form solve did not reach tolerance",
            final_residual=best[2], tol=tol)

    s_c, sig_r, rel_check, delta, res_c, res_f = best
    if np.any(sig_r <= 0):
        raise ComputationAlarm(
            "nonconvergence", "sigma lost positivity",
            min_sigma=float(np.min(sig_r)))
    h_out = s_c[1] - s_c[0]
    d_sig = _derivative_o6(sig_r, h_out)
    if np.any(d_sig > 0):
        raise ComputationAlarm(
            "branch", "sigma' > 0 detected: wrong square-root branch",
            worst=float(np.max(d_sig)))
    prod = -d_sig * (d_sig ** 2 - s_c * d_sig + sig_r)
    dd_sig = 2.0 * np.sqrt(np.clip(prod, 0.0, None))
    grid = SoftEdgeGrid(
        s=s_c, sigma=sig_r, d_sigma=d_sig, dd_sigma=dd_sig, tol=tol,
        diagnostics={"verify_relative_residual": rel_check,
                     "mesh_delta": delta,
                     "newton_residual_coarse": res_c,
                     "newton_residual_fine": res_f,
                     "mesh_points": int(len(s_c))})
    return grid


# ----------------------------------------------------------------------
# derived sequences on the grid
# ----------------------------------------------------------------------

def hastings_mcleod(grid: SoftEdgeGrid) -> np.ndarray:
    """w(s) = sqrt(-sigma'(s)); fills grid.w, grid.y and the clamp flag."""
    neg = -grid.d_sigma
    clamped = neg < 0
    w = np.sqrt(np.clip(neg, 0.0, None))
    grid.w = w
    grid.clamped = clamped
    grid.y = np.where(grid.d_sigma != 0, -1.0 / grid.d_sigma, np.inf)
    return w


def hm_residuals(grid: SoftEdgeGrid, stride: int = 25) -> dict:
    """Pointwise verification of the three equivalent second-order forms
    (w, y = 1/w^2, r = sigma') using local sixth-degree fits for the
    derivatives.  Returns max relative residuals over sampled interior
    points."""
    s, sig = grid.s, grid.sigma
    w = grid.w if grid.w is not None else hastings_mcleod(grid)
    r = grid.d_sigma
    y = grid.y
    h = s[1] - s[0]
    out = {"pii_w": 0.0, "p5_y": 0.0, "limit_r": 0.0,
           "sigma_of_r": 0.0, "sigma_of_y": 0.0}

    def fit_derivs(vals, i):
        # fifth-degree least-squares fit on 7 points in mesh units
        window = vals[i - 3:i + 4]
        u = (s[i - 3:i + 4] - s[i]) / h
        coef = np.polyfit(u, window, 5)
        return float(coef[-2] / h), float(2.0 * coef[-3] / (h * h))

    idx = range(3, len(s) - 3, stride)
    for i in idx:
        si = s[i]
        wp, wpp = fit_derivs(w, i)
        t1, t2, t3 = wpp, -2 * w[i] ** 3, -si * w[i]
        scale = max(1e-300, abs(t1), abs(t2), abs(t3))
        out["pii_w"] = max(out["pii_w"], abs(t1 + t2 + t3) / scale)

        ypv, ypp = fit_derivs(y, i)
        t1 = ypp
        t2 = -1.5 * ypv ** 2 / y[i]
        t3 = 2 * si * y[i]
        t4 = 4.0
        scale = max(1e-300, abs(t1), abs(t2), abs(t3), abs(t4))
        out["p5_y"] = max(out["p5_y"], abs(t1 + t2 + t3 + t4) / scale)

        rp, rpp = fit_derivs(r, i)
        t1 = rpp
        t2 = -0.5 * rp ** 2 / r[i]
        t3 = -2 * si * r[i]
        t4 = 4 * r[i] ** 2
        scale = max(1e-300, abs(t1), abs(t2), abs(t3), abs(t4))
        out["limit_r"] = max(out["limit_r"], abs(t1 + t2 + t3 + t4) / scale)

        # sigma expressed through r and through y
        t1, t2, t3, t4 = sig[i], rp ** 2 / (4 * r[i]), r[i] ** 2, -si * r[i]
        scale = max(1e-300, abs(t1), abs(t2), abs(t3), abs(t4))
        out["sigma_of_r"] = max(out["sigma_of_r"],
                                abs(t1 + t2 + t3 + t4) / scale)
        t1 = sig[i]
        t2 = si / y[i]
        t3 = 1.0 / y[i] ** 2
        t4 = -ypv ** 2 / (4 * y[i] ** 3)
        scale = max(1e-300, abs(t1), abs(t2), abs(t3), abs(t4))
        out["sigma_of_y"] = max(out["sigma_of_y"],
                                abs(t1 + t2 + t3 + t4) / scale)
    return out


def tw_cdf(grid: SoftEdgeGrid) -> np.ndarray:
    """ln Phat(s) = -int_s^{s_max} sigma - R_tail(s_max), by corrected
    trapezoid (Euler–Maclaurin end terms make it fourth order); the
    closed-form remainder uses the survival series at s_max."""
    s, sig, dsig = grid.s, grid.sigma, grid.d_sigma
    h = s[1] - s[0]
    n = len(s)
    e_max = right_E(s[-1], bracket_terms=3)
    log_p = np.empty(n)
    log_p[-1] = math.log1p(-e_max)
    acc = 0.0
    for i in range(n - 2, -1, -1):
        panel = h * (sig[i] + sig[i + 1]) / 2.0 \
            - h * h / 12.0 * (dsig[i + 1] - dsig[i])
        acc += panel
        log_p[i] = log_p[-1] - acc
    grid.logP = log_p
    return log_p


def grid_to_csv(grid: SoftEdgeGrid) -> str:
    """CSV with columns s, sigma, d_sigma, w, logP, P."""
    if grid.w is None:
        hastings_mcleod(grid)
    if grid.logP is None:
        tw_cdf(grid)
    lines = ["s,sigma,d_sigma,w,logP,P"]
    for i in range(len(grid.s)):
        lines.append("%.16e,%.16e,%.16e,%.16e,%.16e,%.16e" % (
            grid.s[i], grid.sigma[i], grid.d_sigma[i], grid.w[i],
            grid.logP[i], math.exp(grid.logP[i])))
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# finite-n convergence experiments
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    alpha: float
    s: float
    regime: str
    t: float
    sigma_scaled: float
    r_scaled: float
    beta_scaled: float
    R_scaled: float
    alpha_scaled: float
    limit_sigma: float
    limit_r: float

    @property
    def deviations(self) -> Tuple[float, float, float, float, float]:
        return (abs(self.sigma_scaled - self.limit_sigma),
                abs(self.r_scaled - self.limit_r),
                abs(self.beta_scaled - self.limit_r),
                abs(self.R_scaled - self.limit_r),
                abs(self.alpha_scaled - self.limit_r))


def _grid_lookup(grid: SoftEdgeGrid, s: float) -> Tuple[float, float]:
    h = grid.s[1] - grid.s[0]
    pos = (s - grid.s[0]) / h
    i = int(round(pos))
    if abs(pos - i) > 1e-9:
        raise ValueError("s value %r not on the limit grid" % (s,))
    return float(grid.sigma[i]), float(grid.d_sigma[i])


def convergence_experiment(n_list: Sequence[int], alpha, s_grid,
                           ctx: Optional[PrecisionContext] = None,
                           grid: Optional[SoftEdgeGrid] = None,
                           regimes: Sequence[str] = ("Finite",
                                                     "Proportional"),
                           ) -> List[ConvergenceRow]:
    """Scaled finite-n ladder quantities against their soft-edge limits.

    Five scaled quantities per (n, s, regime): the scaled log-derivative
    sum (limit sigma(s)) and four quantities whose common limit is
    r(s) = sigma'(s): scaled r_n, scaled beta_n - n(n+alpha), scaled
    R_n, and the scaled diagonal recurrence excess.
    """
    if max(n_list) > 120:
        raise ValueError("n above the supported experiment budget (120)")
    if sorted(n_list) != list(n_list):
        raise ValueError("n_list must be ascending")
    ctx = ctx or PrecisionContext(30)
    if grid is None:
        grid = solve_sigma_pii(-12.0, 8.0, 4001, 1e-9)
    rows: List[ConvergenceRow] = []
    for regime in regimes:
        for n in n_list:
            smap = scaling_map(n, alpha, regime)
            for s in s_grid:
                lim_sigma, lim_r = _grid_lookup(grid, float(s))
                t = smap.t_of_s(float(s))
                spec = WeightSpec("LaguerreCutoff", alpha=alpha, t=t)
                chain = op_chain(spec, n + 1, ctx, _cross_check=False)
                st = ladder_state(chain, spec, n, ctx)
                nf = float(n)
                c1, c2 = smap.c1, smap.c2
                af = float(alpha)
                with ctx.working():
                    sigma_sc = (c2 / c1) * float(st.sigma_n) / nf ** (2 / 3.0)
                    r_sc = (c2 * c2 / c1) * float(st.r_n) / nf ** (1 / 3.0)
                    beta_sc = (c2 * c2 / (c1 * c1)) \
                        * float(st.beta_n - n * (n + st.alpha)) \
                        / nf ** (4 / 3.0)
                    big_r_sc = (c1 / c2) * nf ** (2 / 3.0) * float(st.R_n)
                    alpha_sc = float(st.alpha_n - 2 * n - st.alpha) \
                        / (c2 * nf ** (1 / 3.0))
                rows.append(ConvergenceRow(
                    n=n, alpha=af, s=float(s), regime=regime, t=float(t),
                    sigma_scaled=sigma_sc, r_scaled=r_sc,
                    beta_scaled=beta_sc, R_scaled=big_r_sc,
                    alpha_scaled=alpha_sc,
                    limit_sigma=lim_sigma, limit_r=lim_r))
    return rows


def convergence_to_csv(rows: Sequence[ConvergenceRow]) -> str:
    lines = ["n,alpha,s,regime,t,sigma_scaled,r_scaled,beta_scaled,"
             "R_scaled,alpha_scaled,limit_sigma,limit_r,dev_sigma,dev_r,"
             "dev_beta,dev_R,dev_alpha"]
    for r in rows:
        devs = r.deviations
        lines.append(
            "%d,%.6g,%.6g,%s,%.10e,%.10e,%.10e,%.10e,%.10e,%.10e,%.10e,"
            "%.10e,%.3e,%.3e,%.3e,%.3e,%.3e" % (
                r.n, r.alpha, r.s, r.regime, r.t, r.sigma_scaled,
                r.r_scaled, r.beta_scaled, r.R_scaled, r.alpha_scaled,
                r.limit_sigma, r.limit_r, *devs))
    return "\n".join(lines) + "\n"

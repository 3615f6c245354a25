"""Finite-n machinery for the largest-eigenvalue law of a unitarily
invariant Laguerre-type ensemble with a hard upper cutoff.

The central objects are the moments of the cutoff weight, the Hankel
determinant they generate, the monic orthogonal-polynomial chain on (0, t)
(computed by the Stieltjes procedure with composite Gauss–Legendre
quadrature), and the boundary ladder state: the two weighted polynomial
boundary values

    R_n(t) = -P_n(t,t)^2 t^alpha e^-t / h_n
    r_n(t) = -P_n(t,t) P_{n-1}(t,t) t^alpha e^-t / h_{n-1}

together with the log-derivative sum sigma_n and every t-derivative closed
through the coupled first-order (Riccati) system these quantities satisfy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import mpmath as mp

from .context import ComputationAlarm, DegenerateStateError, PrecisionContext
from .specialfn import gauss_legendre, lower_incomplete_gamma

__all__ = [
    "WeightSpec",
    "MomentTable",
    "OPChain",
    "LadderState",
    "moments",
    "hankel_det",
    "op_chain",
    "ladder_state",
    "largest_eigenvalue_cdf",
]


@dataclass(frozen=True)
class WeightSpec:
    """Cutoff ensemble weight.

    LaguerreCutoff: w(x) = x^alpha e^-x on (0, t), potential
    v(x) = x - alpha ln x.  HermiteCutoff: w(x) = e^-(x^2) on (-inf, t);
    ``alpha`` is ignored.
    """

    kind: Literal["LaguerreCutoff", "HermiteCutoff"]
    alpha: object = 0
    t: object = 1

    def __post_init__(self):
        if self.kind not in ("LaguerreCutoff", "HermiteCutoff"):
            raise ValueError("unknown weight kind %r" % (self.kind,))
        if self.kind == "LaguerreCutoff":
            if mp.mpf(self.alpha) <= -1:
                raise ValueError("LaguerreCutoff requires alpha > -1 for "
                                 "integrable moments")
            if self.t != mp.inf and mp.mpf(self.t) <= 0:
                raise ValueError("LaguerreCutoff requires t > 0")

    def w(self, x, ctx: PrecisionContext):
        with ctx.working():
            x = mp.mpf(x)
            if self.kind == "LaguerreCutoff":
                return x ** mp.mpf(self.alpha) * mp.exp(-x)
            return mp.exp(-x * x)

    def v_prime(self, x, ctx: PrecisionContext):
        """-(ln w)'(x)."""
        with ctx.working():
            x = mp.mpf(x)
            if self.kind == "LaguerreCutoff":
                return 1 - mp.mpf(self.alpha) / x
            return 2 * x


@dataclass(frozen=True)
class MomentTable:
    """mu[k] = integral_0^t x^(alpha+k) e^-x dx = gamma(alpha+k+1, t)."""

    mu: tuple
    kmax: int
    alpha: object
    t: object


@dataclass(frozen=True)
class OPChain:
    """Monic orthogonal-polynomial chain for a cutoff weight.

    h[n] are the squared norms, alpha_rec/beta_rec the three-term
    recurrence coefficients (beta_rec[0] is unused and stored as 0),
    p1[n] the coefficient of x^(n-1) in the monic P_n (p1[0] = 0), and
    poly_coeffs[n] the full ascending coefficient row of P_n.
    """

    n_max: int
    h: tuple
    alpha_rec: tuple
    beta_rec: tuple
    p1: tuple
    poly_coeffs: tuple
    spec: WeightSpec

    def poly_value(self, n: int, x) -> mp.mpf:
        """P_n(x) by Horner evaluation of the stored coefficient row."""
        row = self.poly_coeffs[n]
        acc = mp.mpf(0)
        for c in reversed(row):
            acc = acc * x + c
        return acc

    def poly_derivative(self, n: int, x, order: int = 1) -> mp.mpf:
        """d^order/dx^order P_n(x) from the stored coefficient row."""
        row = self.poly_coeffs[n]
        acc = mp.mpf(0)
        for k in range(len(row) - 1, order - 1, -1):
            fall = mp.mpf(1)
            for j in range(order):
                fall *= k - j
            acc = acc * x + fall * row[k]
        return acc


@dataclass(frozen=True)
class LadderState:
    """Boundary quantities and Riccati-closed derivatives at one (n, t)."""

    n: int
    alpha: object
    t: object
    r_n: object
    R_n: object
    S_n: object
    sigma_n: object
    beta_n: object
    alpha_n: object
    d_r: object
    d_R: object
    d_sigma: object
    dd_sigma: object
    d_beta: object
    dd_beta: object
    dd_r: object


def moments(spec: WeightSpec, kmax: int, ctx: PrecisionContext) -> MomentTable:
    """Moment table of the cutoff Laguerre weight."""
    if spec.kind != "LaguerreCutoff":
        raise ValueError("moments requires a LaguerreCutoff spec")
    if kmax < 0:
        raise ValueError("kmax must be >= 0")
    with ctx.working():
        alpha = mp.mpf(spec.alpha)
        mu = tuple(lower_incomplete_gamma(alpha + k + 1, spec.t, ctx)
                   for k in range(kmax + 1))
    return MomentTable(mu=mu, kmax=kmax, alpha=spec.alpha, t=spec.t)


def _lu_det_with_condition(a, n):
    """Determinant by partial-pivot LU; returns (det, growth estimate)."""
    det = mp.mpf(1)
    max_entry = max(abs(a[i][j]) for i in range(n) for j in range(n))
    min_pivot = mp.inf
    for k in range(n):
        piv = max(range(k, n), key=lambda i: abs(a[i][k]))
        if a[piv][k] == 0:
            return mp.mpf(0), mp.inf
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            det = -det
        det *= a[k][k]
        min_pivot = min(min_pivot, abs(a[k][k]))
        for i in range(k + 1, n):
            f = a[i][k] / a[k][k]
            for j in range(k, n):
                a[i][j] -= f * a[k][j]
    growth = max_entry / min_pivot if min_pivot > 0 else mp.inf
    return det, growth


def hankel_det(table: MomentTable, n: int, ctx: PrecisionContext) -> mp.mpf:
    """det(mu_{i+j})_{i,j=0}^{n-1} by pivoted LU at working precision."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if table.kmax < 2 * n - 2:
        raise ValueError("moment table too short for n = %d" % n)
    with ctx.working():
        a = [[mp.mpf(table.mu[i + j]) for j in range(n)] for i in range(n)]
        det, growth = _lu_det_with_condition(a, n)
        est_rel_err = growth * n * mp.mpf(10) ** (-ctx.dps)
        if est_rel_err > mp.mpf(10) ** (-(ctx.decimal_digits // 2)):
            raise ComputationAlarm(
                "conditioning",
                "Hankel determinant conditioning too poor at n = %d" % n,
                n=n, estimated_relative_error=float(est_rel_err))
        return det


def _is_nonneg_integer(x: mp.mpf) -> bool:
    return x >= 0 and x == mp.floor(x)


def _laguerre_panels(spec: WeightSpec, n_max: int, ctx: PrecisionContext,
                     refine: int):
    """Panel boundaries for (0, t): uniform for integer alpha, dyadic
    refinement toward 0 otherwise (x^alpha has a derivative singularity
    at the origin for non-integer alpha)."""
    t = mp.mpf(spec.t)
    alpha = mp.mpf(spec.alpha)
    bounds = []
    if _is_nonneg_integer(alpha):
        pieces = max(1, int(mp.ceil(t / 4))) * (1 + refine)
        bounds = [t * i / pieces for i in range(pieces + 1)]
    else:
        # head panels [t 2^-(j+1), t 2^-j]; the residual mass below the
        # smallest boundary is negligible at working precision
        digits_needed = ctx.dps + 30 + n_max
        J = int(mp.ceil(digits_needed / (float(alpha + 1) *
                                         math.log10(2)))) + 10 * refine
        J = min(J, 4000)
        bounds = [mp.mpf(0)]
        for j in range(J, 0, -1):
            bounds.append(t * mp.mpf(2) ** (-j))
        bounds.append(t)
        # subdivide the top panel [t/2, t] if t is large, and every panel
        # once more per refinement level
        top_pieces = max(1, int(mp.ceil((t / 2) / 8)))
        if top_pieces > 1 or refine:
            last_lo = bounds[-2]
            extra = [last_lo + (t - last_lo) * i / top_pieces
                     for i in range(1, top_pieces)]
            bounds = bounds[:-1] + extra + [t]
    if refine:
        refined = [bounds[0]]
        for lo, hi in zip(bounds, bounds[1:]):
            refined.extend([(lo + hi) / 2, hi])
        bounds = refined
    return bounds


def _quad_nodes(spec: WeightSpec, n_max: int, ctx: PrecisionContext,
                refine: int):
    """Flattened quadrature nodes/weights (weight function included)."""
    order = max(64, int(1.3 * n_max) + 16)
    rule = gauss_legendre(order, ctx)
    bounds = _laguerre_panels(spec, n_max, ctx, refine)
    xs, ws = [], []
    skip_zero = not _is_nonneg_integer(mp.mpf(spec.alpha))
    for lo, hi in zip(bounds, bounds[1:]):
        if skip_zero and lo == 0:
            continue  # head mass below the first dyadic boundary: negligible
        nx, nw = rule.map_to(lo, hi)
        xs.extend(nx)
        ws.extend(nw)
    wf = [spec.w(x, ctx) for x in xs]
    return xs, [w * f for w, f in zip(ws, wf)]


def _stieltjes(xs, ws, n_max: int):
    """Monic recurrence coefficients by the Stieltjes procedure."""
    npts = len(xs)
    p_prev = [mp.mpf(0)] * npts
    p_cur = [mp.mpf(1)] * npts
    h = []
    alpha_rec = []
    beta_rec = [mp.mpf(0)]
    for k in range(n_max + 1):
        hk = mp.fsum(w * p * p for w, p in zip(ws, p_cur))
        xk = mp.fsum(w * x * p * p for w, x, p in zip(ws, xs, p_cur))
        if hk <= 0:
            raise ComputationAlarm(
                "quadrature", "nonpositive norm at degree %d" % k, degree=k)
        h.append(hk)
        ak = xk / hk
        alpha_rec.append(ak)
        if k > 0:
            beta_rec.append(h[k] / h[k - 1])
        if k == n_max:
            break
        bk = beta_rec[k] if k > 0 else mp.mpf(0)
        p_next = [(x - ak) * pc - bk * pp
                  for x, pc, pp in zip(xs, p_cur, p_prev)]
        p_prev, p_cur = p_cur, p_next
    return h, alpha_rec, beta_rec


def op_chain(spec: WeightSpec, n_max: int, ctx: PrecisionContext,
             _cross_check: bool = True) -> OPChain:
    """Orthogonal-polynomial chain on (0, t) with verified quadrature.

    The chain is computed twice on successively refined composite
    Gauss–Legendre grids; refinement continues until the squared norms
    agree to 12 digits short of working precision.  Small-n norms are
    cross-checked against the Hankel-determinant route.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if spec.kind != "LaguerreCutoff":
        raise ValueError("op_chain requires a LaguerreCutoff spec")
    with ctx.working():
        target = mp.mpf(10) ** (-(ctx.dps - 12))
        prev = None
        for level in range(4):
            xs, ws = _quad_nodes(spec, n_max, ctx, level)
            result = _stieltjes(xs, ws, n_max)
            if prev is not None:
                dev = max(abs(a / b - 1)
                          for a, b in zip(result[0], prev[0]))
                if dev < target:
                    break
            prev = result
        else:
            raise ComputationAlarm(
                "quadrature",
                "norm chain did not stabilize under panel refinement",
                n_max=n_max)
        h, alpha_rec, beta_rec = result

        # monic coefficient rows and subleading coefficients
        rows = [(mp.mpf(1),), (-alpha_rec[0], mp.mpf(1))]
        for k in range(1, n_max):
            prev_row = rows[k - 1]
            cur = rows[k]
            nxt = [mp.mpf(0)] * (k + 2)
            for i, c in enumerate(cur):
                nxt[i + 1] += c
                nxt[i] -= alpha_rec[k] * c
            for i, c in enumerate(prev_row):
                nxt[i] -= beta_rec[k] * c
            rows.append(tuple(nxt))
        p1 = [mp.mpf(0)]
        for k in range(n_max):
            p1.append(p1[k] - alpha_rec[k])

        chain = OPChain(n_max=n_max, h=tuple(h), alpha_rec=tuple(alpha_rec),
                        beta_rec=tuple(beta_rec), p1=tuple(p1),
                        poly_coeffs=tuple(rows), spec=spec)

        if _cross_check:
            ncheck = min(n_max, 4)
            table = moments(spec, 2 * ncheck + 2, ctx)
            d_prev = mp.mpf(1)
            for m in range(1, ncheck + 2):
                d_m = hankel_det(table, m, ctx)
                h_det = d_m / d_prev
                d_prev = d_m
                if abs(h_det / h[m - 1] - 1) > mp.mpf(10) ** (
                        -(ctx.decimal_digits // 2)):
                    raise ComputationAlarm(
                        "conditioning",
                        "determinant / Stieltjes norm mismatch at "
                        "degree %d" % (m - 1),
                        degree=m - 1)
        return chain


def ladder_state(chain: OPChain, spec: WeightSpec, n: int,
                 ctx: PrecisionContext) -> LadderState:
    """Boundary ladder state with Riccati-closed derivative fields."""
    if n < 1 or n > chain.n_max - 1:
        raise ValueError("need 1 <= n <= chain.n_max - 1")
    with ctx.working():
        t = mp.mpf(spec.t)
        alpha = mp.mpf(spec.alpha)
        wt = spec.w(t, ctx)
        pn = chain.poly_value(n, t)
        pn1 = chain.poly_value(n - 1, t)
        R = -pn * pn * wt / chain.h[n]
        r = -pn * pn1 * wt / chain.h[n - 1]
        tol = ctx.degenerate_tol
        if abs(R) < tol or abs(R - 1) < tol:
            raise DegenerateStateError(
                "ratio R within tolerance of a removable singularity")
        S = 1 - 1 / R
        beta_n = chain.beta_rec[n]
        sigma = n * (n + alpha) + t * r - beta_n
        d_r, d_R, dd_r = _riccati_derivatives(n, alpha, t, r, R)
        return LadderState(
            n=n, alpha=alpha, t=t, r_n=r, R_n=R, S_n=S, sigma_n=sigma,
            beta_n=beta_n, alpha_n=chain.alpha_rec[n],
            d_r=d_r, d_R=d_R, d_sigma=r, dd_sigma=d_r,
            d_beta=t * d_r, dd_beta=d_r + t * dd_r, dd_r=dd_r)


def _riccati_derivatives(n, alpha, t, r, R):
    """(r', R', r'') closed through the coupled first-order system.

    t r' = (1/R + 1/(R-1)) r^2 + (2n+alpha) R/(R-1) r + n(n+alpha) R/(R-1)
    t R' = t R^2 + (2n+alpha-t) R + 2 r

    r'' follows by differentiating the first right-hand side in (r, R)
    and substituting both closures.
    """
    two_na = 2 * n + alpha
    nna = n * (n + alpha)
    Rm1 = R - 1
    G = ((1 / R + 1 / Rm1) * r * r + two_na * (R / Rm1) * r + nna * R / Rm1)
    d_r = G / t
    d_R = (t * R * R + (two_na - t) * R + 2 * r) / t
    G_r = 2 * r * (1 / R + 1 / Rm1) + two_na * R / Rm1
    G_R = (-r * r * (1 / (R * R) + 1 / (Rm1 * Rm1))
           - (two_na * r + nna) / (Rm1 * Rm1))
    dd_r = (G_r * d_r + G_R * d_R - d_r) / t
    return d_r, d_R, dd_r


def norms_at_infinity(n: int, alpha, ctx: PrecisionContext):
    """Squared norms of the full-line (t -> inf) monic Laguerre chain:
    h_j(inf) = j! Gamma(j + alpha + 1)."""
    with ctx.working():
        alpha = mp.mpf(alpha)
        return [mp.factorial(j) * mp.gamma(j + alpha + 1) for j in range(n)]


def largest_eigenvalue_cdf(n: int, alpha, t, ctx: PrecisionContext,
                           chain: Optional[OPChain] = None) -> mp.mpf:
    """P(largest eigenvalue <= t) = D_n(t) / D_n(infinity).

    D_n telescopes into the product of squared norms, so the ratio is
    computed as prod_j h_j(t) / h_j(inf) — stable at any n; the raw
    determinant route is kept as an independent small-n cross-check in
    the test-suite invariants.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    with ctx.working():
        if t == mp.inf:
            return mp.mpf(1)
        spec = WeightSpec("LaguerreCutoff", alpha=alpha, t=t)
        if n == 1:
            table = moments(spec, 0, ctx)
            return table.mu[0] / mp.gamma(mp.mpf(alpha) + 1)
        if chain is None:
            chain = op_chain(spec, n, ctx, _cross_check=False)
        hinf = norms_at_infinity(n, alpha, ctx)
        prob = mp.mpf(1)
        for j in range(n):
            prob *= chain.h[j] / hinf[j]
        return prob

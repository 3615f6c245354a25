"""Finite-n Gaussian-ensemble analogue on (-inf, t]: the cutoff Hermite
weight e^-(x^2), its monic orthogonal-polynomial chain, the boundary
quantities r_n and Q_n, the four recurrence/derivative identities they
satisfy, the second-order ODE for the diagonal recurrence coefficient,
and the sigma-form (fourth Painleve class) for the log-derivative of the
cutoff Hankel determinant.

Conventions: squared norms hbar_n are taken directly for the weight
e^-(x^2) on (-inf, t]; r_n(t) = -P_n(t,t) P_{n-1}(t,t) e^-(t^2) /
hbar_{n-1}; Q_n(t) = P_n(t,t)^2 e^-(t^2) / hbar_n.  The probability that
the largest eigenvalue is <= t equals prod_j hbar_j(t)/hbar_j(inf).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import mpmath as mp

from .context import ComputationAlarm, DegenerateStateError, PrecisionContext
from .identities import ResidualReport, _report
from .specialfn import gauss_legendre

__all__ = [
    "GUEChain",
    "gue_chain",
    "boundary_q",
    "gue_structural_derivatives",
    "residual_gue_identities",
    "residual_gue_alphan_ode",
    "residual_sigma_piv",
    "gue_largest_cdf",
    "hermite_norms_at_infinity",
    "log_cdf_derivative",
]


@dataclass(frozen=True)
class GUEChain:
    """Monic chain for e^-(x^2) on (-inf, t] plus boundary data.

    r[0] = 0 by the empty-product convention; sum_alpha[n] holds
    sum_{j<n} alpha_j with sum_alpha[0] = 0.
    """

    n_max: int
    t: object
    h: tuple
    alpha_rec: tuple
    beta_rec: tuple
    r: tuple
    sum_alpha: tuple
    poly_coeffs: tuple

    def poly_value(self, n: int, x) -> mp.mpf:
        acc = mp.mpf(0)
        for c in reversed(self.poly_coeffs[n]):
            acc = acc * x + c
        return acc

    def poly_derivative(self, n: int, x) -> mp.mpf:
        row = self.poly_coeffs[n]
        acc = mp.mpf(0)
        for k in range(len(row) - 1, 0, -1):
            acc = acc * x + k * row[k]
        return acc


def _gue_nodes(t, n_max: int, ctx: PrecisionContext, refine: int):
    """Composite Gauss–Legendre nodes on [x_lo, t] with the Gaussian
    weight folded into the weights; x_lo chosen so the discarded tail
    is below working precision."""
    x_lo = -mp.sqrt(ctx.dps * mp.log(10) + 20)
    if t <= x_lo:
        raise ValueError("cutoff t below the truncation point")
    order = max(64, int(1.3 * n_max) + 16)
    rule = gauss_legendre(order, ctx)
    pieces = max(1, int(mp.ceil((t - x_lo)))) * (1 + refine)
    bounds = [x_lo + (t - x_lo) * i / pieces for i in range(pieces + 1)]
    xs, ws = [], []
    for lo, hi in zip(bounds, bounds[1:]):
        nx, nw = rule.map_to(lo, hi)
        xs.extend(nx)
        ws.extend(nw)
    return xs, [w * mp.exp(-x * x) for w, x in zip(ws, xs)]


def gue_chain(t, n_max: int, ctx: PrecisionContext) -> GUEChain:
    """Stieltjes chain for the cutoff Gaussian weight, verified by panel
    refinement."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    with ctx.working():
        t = mp.mpf(t)
        target = mp.mpf(10) ** (-(ctx.dps - 12))
        prev = None
        for level in range(4):
            xs, ws = _gue_nodes(t, n_max, ctx, level)
            npts = len(xs)
            p_prev = [mp.mpf(0)] * npts
            p_cur = [mp.mpf(1)] * npts
            h, alpha_rec, beta_rec = [], [], [mp.mpf(0)]
            for k in range(n_max + 1):
                hk = mp.fsum(w * p * p for w, p in zip(ws, p_cur))
                if hk <= 0:
                    raise ComputationAlarm(
                        "quadrature", "nonpositive norm at degree %d" % k,
                        degree=k)
                xk = mp.fsum(w * x * p * p
                             for w, x, p in zip(ws, xs, p_cur))
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
            if prev is not None:
                dev = max(abs(a / b - 1) for a, b in zip(h, prev[0]))
                if dev < target:
                    break
            prev = (h, alpha_rec, beta_rec)
        else:
            raise ComputationAlarm(
                "quadrature",
                "norm chain did not stabilize under panel refinement",
                n_max=n_max)

        rows = [(mp.mpf(1),), (-alpha_rec[0], mp.mpf(1))]
        for k in range(1, n_max):
            cur, prev_row = rows[k], rows[k - 1]
            nxt = [mp.mpf(0)] * (k + 2)
            for i, c in enumerate(cur):
                nxt[i + 1] += c
                nxt[i] -= alpha_rec[k] * c
            for i, c in enumerate(prev_row):
                nxt[i] -= beta_rec[k] * c
            rows.append(tuple(nxt))

        wt = mp.exp(-t * t)
        r = [mp.mpf(0)]
        for n in range(1, n_max + 1):
            pn = mp.mpf(0)
            pn1 = mp.mpf(0)
            for c in reversed(rows[n]):
                pn = pn * t + c
            for c in reversed(rows[n - 1]):
                pn1 = pn1 * t + c
            r.append(-pn * pn1 * wt / h[n - 1])
        sum_alpha = [mp.mpf(0)]
        for n in range(n_max + 1):
            sum_alpha.append(sum_alpha[n] + alpha_rec[n])
        return GUEChain(n_max=n_max, t=t, h=tuple(h),
                        alpha_rec=tuple(alpha_rec),
                        beta_rec=tuple(beta_rec), r=tuple(r),
                        sum_alpha=tuple(sum_alpha), poly_coeffs=tuple(rows))


def boundary_q(chain: GUEChain, n: int, ctx: PrecisionContext):
    """Q_n = P_n(t,t)^2 e^-(t^2) / hbar_n (the boundary norm flux)."""
    with ctx.working():
        t = mp.mpf(chain.t)
        p = chain.poly_value(n, t)
        return p * p * mp.exp(-t * t) / chain.h[n]


def _dlog_boundary(chain: GUEChain, n: int, ctx: PrecisionContext):
    t = mp.mpf(chain.t)
    wt = mp.exp(-t * t)
    pn = chain.poly_value(n, t)
    kernel = mp.fsum(chain.poly_value(k, t) ** 2 / chain.h[k]
                     for k in range(n))
    return chain.poly_derivative(n, t) / pn - wt * kernel


def gue_structural_derivatives(chain: GUEChain, n: int,
                               ctx: PrecisionContext):
    """(r_n', alpha_n') from logarithmic differentiation of the defining
    formulas — independent of the identity closures under test."""
    if n < 1 or n > chain.n_max:
        raise ValueError("need 1 <= n <= n_max")
    with ctx.working():
        t = mp.mpf(chain.t)
        q_n = boundary_q(chain, n, ctx)
        q_prev = boundary_q(chain, n - 1, ctx)
        d_alpha = (t - chain.alpha_rec[n]) * q_n + 2 * chain.r[n]
        dlog_n = _dlog_boundary(chain, n, ctx)
        dlog_n1 = _dlog_boundary(chain, n - 1, ctx)
        d_r = chain.r[n] * (dlog_n + dlog_n1 - 2 * t - q_prev)
        return d_r, d_alpha


def residual_gue_identities(chain: GUEChain, n: int, ctx: PrecisionContext
                            ) -> Tuple[ResidualReport, ...]:
    """The four boundary identities; derivative sides use the structural
    route."""
    if n < 1 or n > chain.n_max:
        raise ValueError("need 1 <= n <= n_max")
    with ctx.working():
        t = mp.mpf(chain.t)
        r = chain.r[n]
        a_n = chain.alpha_rec[n]
        a_prev = chain.alpha_rec[n - 1]
        d_r, d_alpha = gue_structural_derivatives(chain, n, ctx)
        rep1 = _report("hermite_r_product", n, 0, t, [
            r * r, -2 * (n + r) * a_n * a_prev,
        ])
        rep2 = _report("hermite_r_derivative", n, 0, t, [
            d_r, -2 * (n + r) * (a_prev - a_n),
        ])
        rep3 = _report("hermite_alpha_derivative", n, 0, t, [
            r, -a_n * (t - a_n), -d_alpha / 2,
        ])
        rep4 = _report("hermite_sum_rule", n, 0, t, [
            -2 * chain.sum_alpha[n],
            -2 * t * r,
            2 * (n + r) * (a_n + a_prev),
        ])
        return rep1, rep2, rep3, rep4


def _closure_derivatives(chain: GUEChain, n: int):
    """(r_n', alpha_n', alpha_n'') closed through the identity system."""
    t = mp.mpf(chain.t)
    r, a_n, a_prev = chain.r[n], chain.alpha_rec[n], chain.alpha_rec[n - 1]
    d_r = 2 * (n + r) * (a_prev - a_n)
    d_alpha = 2 * (r - a_n * (t - a_n))
    dd_alpha = 2 * (d_r - d_alpha * (t - a_n) - a_n * (1 - d_alpha))
    return d_r, d_alpha, dd_alpha


def residual_gue_alphan_ode(chain: GUEChain, n: int, ctx: PrecisionContext
                            ) -> ResidualReport:
    """Second-order ODE for the diagonal recurrence coefficient, with
    derivatives closed through the identity system."""
    if n < 1 or n > chain.n_max:
        raise ValueError("need 1 <= n <= n_max")
    with ctx.working():
        t = mp.mpf(chain.t)
        a = chain.alpha_rec[n]
        if abs(a) < ctx.degenerate_tol:
            raise DegenerateStateError("alpha_n within tolerance of 0")
        _, d_a, dd_a = _closure_derivatives(chain, n)
        return _report("hermite_alpha_ode", n, 0, t, [
            dd_a,
            -d_a ** 2 / (2 * a),
            -6 * a ** 3,
            8 * t * a ** 2,
            -2 * (t * t - 2 * n - 1) * a,
        ])


def residual_sigma_piv(chain: GUEChain, n: int, ctx: PrecisionContext
                       ) -> ResidualReport:
    """sigma-form (fourth Painleve class, parameters (0, 2n)) for the
    log-derivative of the cutoff Hankel determinant:
    Xi = d/dt ln D_n = -2 sum_{j<n} alpha_j, Xi' = 2 r_n."""
    if n < 1 or n > chain.n_max:
        raise ValueError("need 1 <= n <= n_max")
    with ctx.working():
        t = mp.mpf(chain.t)
        xi = -2 * chain.sum_alpha[n]
        d_xi = 2 * chain.r[n]
        d_r, _, _ = _closure_derivatives(chain, n)
        dd_xi = 2 * d_r
        nu2 = mp.mpf(2 * n)
        return _report("sigma_piv", n, 0, t, [
            dd_xi ** 2,
            -4 * (t * d_xi - xi) ** 2,
            4 * d_xi * d_xi * (d_xi + nu2),
        ])


def hermite_norms_at_infinity(n: int, ctx: PrecisionContext):
    """Full-line squared norms of monic Hermite polynomials:
    hbar_j(inf) = j! sqrt(pi) / 2^j."""
    with ctx.working():
        return [mp.factorial(j) * mp.sqrt(mp.pi) / mp.mpf(2) ** j
                for j in range(n)]


def gue_largest_cdf(n: int, t, ctx: PrecisionContext,
                    chain: GUEChain = None) -> mp.mpf:
    """P(largest eigenvalue <= t) = prod_j hbar_j(t)/hbar_j(inf)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    with ctx.working():
        if t == mp.inf:
            return mp.mpf(1)
        if chain is None:
            chain = gue_chain(t, n, ctx)
        hinf = hermite_norms_at_infinity(n, ctx)
        prob = mp.mpf(1)
        for j in range(n):
            prob *= chain.h[j] / hinf[j]
        return prob


def log_cdf_derivative(chain: GUEChain, n: int) -> mp.mpf:
    """d/dt ln P(largest <= t) = -2 sum_{j<n} alpha_j."""
    return -2 * chain.sum_alpha[n]

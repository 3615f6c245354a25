"""Residual evaluators for the closed system of differential and
difference identities satisfied by the boundary ladder quantities.

Every evaluator rewrites one identity as a signed sum of terms that must
cancel, and reports the leftover magnitude relative to the largest
constituent term (squared identities would otherwise mask digit loss).
The two first-order (Riccati-type) closures are tested against an
independent derivative route: the t-derivatives of the boundary values
are recomputed structurally from the kernel sum and the polynomial
x-derivative, never from the closures under test.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import mpmath as mp

from .context import DegenerateStateError, PrecisionContext
from .lue import LadderState, OPChain, WeightSpec, ladder_state, op_chain

__all__ = [
    "ResidualReport",
    "DiscreteMapState",
    "boundary_ratio",
    "structural_derivatives",
    "residual_riccati",
    "residual_difference",
    "residual_alpha_beta",
    "residual_betan_quartic",
    "residual_betan_ode",
    "residual_pv_Sn",
    "residual_sigma_form",
    "residual_sigma_Rn",
    "residual_rn_ode",
    "rn_ode_branches",
    "discrete_map_check",
    "second_derivative_R",
    "default_tolerance",
]


@dataclass(frozen=True)
class ResidualReport:
    identity_id: str
    n: int
    alpha: object
    t: object
    residual: object
    scale: object
    relative: object

    def passes(self, tol) -> bool:
        return self.relative <= tol


@dataclass(frozen=True)
class DiscreteMapState:
    x_seq: tuple
    y_seq: tuple


def default_tolerance(ctx: PrecisionContext):
    return mp.mpf(10) ** (-(ctx.decimal_digits - 20))


def _report(identity_id: str, state_or_n, alpha, t, terms) -> ResidualReport:
    n = state_or_n if isinstance(state_or_n, int) else state_or_n.n
    residual = abs(mp.fsum(terms))
    scale = max(abs(term) for term in terms)
    if scale == 0:
        scale = mp.mpf(1)
    return ResidualReport(identity_id=identity_id, n=n, alpha=alpha, t=t,
                          residual=residual, scale=scale,
                          relative=residual / scale)


def boundary_ratio(chain: OPChain, spec: WeightSpec, n: int,
                   ctx: PrecisionContext):
    """R_n = -P_n(t,t)^2 w(t)/h_n, valid from n = 0 upward."""
    if n < 0 or n > chain.n_max:
        raise ValueError("need 0 <= n <= chain.n_max")
    with ctx.working():
        t = mp.mpf(spec.t)
        p = chain.poly_value(n, t)
        return -p * p * spec.w(t, ctx) / chain.h[n]


def _dlog_boundary(chain: OPChain, spec: WeightSpec, n: int,
                   ctx: PrecisionContext):
    """d/dt ln P_n(t,t): the x-derivative plus the kernel-sum term coming
    from the t-dependence of the orthogonality coefficients."""
    t = mp.mpf(spec.t)
    wt = spec.w(t, ctx)
    pn = chain.poly_value(n, t)
    kernel = mp.fsum(chain.poly_value(k, t) ** 2 / chain.h[k]
                     for k in range(n))
    return chain.poly_derivative(n, t) / pn - wt * kernel


def structural_derivatives(chain: OPChain, spec: WeightSpec, n: int,
                           ctx: PrecisionContext):
    """(r_n', R_n') from logarithmic differentiation of the defining
    boundary formulas — independent of the coupled-system closures."""
    with ctx.working():
        t = mp.mpf(spec.t)
        alpha = mp.mpf(spec.alpha)
        st = ladder_state(chain, spec, n, ctx)
        dlog_n = _dlog_boundary(chain, spec, n, ctx)
        dlog_n1 = _dlog_boundary(chain, spec, n - 1, ctx)
        R_prev = boundary_ratio(chain, spec, n - 1, ctx)
        wterm = alpha / t - 1
        d_R = st.R_n * (2 * dlog_n + wterm + st.R_n)
        d_r = st.r_n * (dlog_n + dlog_n1 + wterm + R_prev)
        return d_r, d_R


def residual_riccati(chain: OPChain, spec: WeightSpec, n: int,
                     ctx: PrecisionContext
                     ) -> Tuple[ResidualReport, ResidualReport]:
    """Coupled first-order closures, with the left-hand derivatives taken
    from the structural route."""
    with ctx.working():
        st = ladder_state(chain, spec, n, ctx)
        d_r, d_R = structural_derivatives(chain, spec, n, ctx)
        t, alpha = st.t, st.alpha
        r, R = st.r_n, st.R_n
        two_na = 2 * n + alpha
        nna = n * (n + alpha)
        Rm1 = R - 1
        rep_r = _report("riccati_r", st, alpha, t, [
            t * d_r,
            -(1 / R + 1 / Rm1) * r * r,
            -two_na * (R / Rm1) * r,
            -nna * R / Rm1,
        ])
        rep_R = _report("riccati_R", st, alpha, t, [
            t * d_R, -t * R * R, -(two_na - t) * R, -2 * r,
        ])
        return rep_r, rep_R


def residual_difference(chain: OPChain, spec: WeightSpec, n: int,
                        ctx: PrecisionContext
                        ) -> Tuple[ResidualReport, ResidualReport]:
    """Index-shift identities linking neighbours n-1, n, n+1."""
    with ctx.working():
        st = ladder_state(chain, spec, n, ctx)
        st_up = ladder_state(chain, spec, n + 1, ctx)
        R_prev = boundary_ratio(chain, spec, n - 1, ctx)
        if abs(R_prev) < ctx.degenerate_tol:
            raise DegenerateStateError("R_{n-1} within tolerance of 0")
        t, alpha = st.t, st.alpha
        r, R = st.r_n, st.R_n
        rep_sum = _report("difference_sum", st, alpha, t, [
            st_up.r_n, r, -(t - 2 * n - 1 - alpha - t * R) * R,
        ])
        rep_prod = _report("difference_product", st, alpha, t, [
            r * r * (1 / (R * R_prev) - 1 / R - 1 / R_prev),
            -(2 * n + alpha) * r,
            -n * (n + alpha),
        ])
        return rep_sum, rep_prod


def residual_alpha_beta(state: LadderState, ctx: PrecisionContext
                        ) -> Tuple[ResidualReport, ResidualReport]:
    """Recurrence coefficients expressed through the boundary values."""
    with ctx.working():
        n, alpha, t = state.n, state.alpha, state.t
        r, R = state.r_n, state.R_n
        rep_a = _report("recurrence_alpha", state, alpha, t, [
            state.alpha_n, -(2 * n + 1 + alpha), -t * R,
        ])
        rep_b = _report("recurrence_beta", state, alpha, t, [
            state.beta_n,
            -((2 * n + alpha) * r + n * (n + alpha) + r * r / R) / (1 - R),
        ])
        return rep_a, rep_b


def residual_betan_quartic(state: LadderState, ctx: PrecisionContext
                           ) -> ResidualReport:
    """Quartic relation between r_n, beta_n and beta_n'."""
    with ctx.working():
        n, alpha, t = state.n, state.alpha, state.t
        r, beta, d_beta = state.r_n, state.beta_n, state.d_beta
        two_na = 2 * n + alpha
        nna = n * (n + alpha)
        return _report("beta_quartic", state, alpha, t, [
            (two_na ** 2 - 4 * beta) * r * r,
            2 * two_na * (nna - beta) * r,
            (nna - beta) ** 2,
            -d_beta ** 2,
        ])


def residual_betan_ode(state: LadderState, ctx: PrecisionContext
                       ) -> ResidualReport:
    """Second-order ODE satisfied by the off-diagonal recurrence
    coefficient (both sides enter squared)."""
    with ctx.working():
        n, alpha, t = state.n, state.alpha, state.t
        beta, db, ddb = state.beta_n, state.d_beta, state.dd_beta
        a2n = alpha + 2 * n
        nan = n * (alpha + n)
        lhs_inner = (2 * n ** 2 * (alpha + n) ** 2 * a2n ** 2
                     - 8 * n * (alpha + n)
                     * (alpha ** 2 + 3 * n ** 2 + 3 * alpha * n) * beta
                     + 6 * a2n ** 2 * beta ** 2
                     - 8 * beta ** 3
                     + 2 * (a2n ** 2 - 4 * beta) * db ** 2
                     + (a2n ** 2 - 4 * beta) ** 2 * ddb)
        rhs = ((a2n ** 4 - alpha ** 2 * a2n * t - 8 * a2n ** 2 * beta
                + 16 * beta ** 2) ** 2
               * (4 * beta * (nan - beta) ** 2
                  + (a2n ** 2 - 4 * beta) * db ** 2))
        return _report("beta_ode", state, alpha, t,
                       [t ** 2 * lhs_inner ** 2, -rhs])


def second_derivative_R(state: LadderState):
    """R_n'' by differentiating the first-order closure for R_n."""
    n, alpha, t = state.n, state.alpha, state.t
    r, R = state.r_n, state.R_n
    d_r, d_R = state.d_r, state.d_R
    return (2 * t * R * d_R + R * R - R + 2 * d_r
            + (2 * n + alpha - t - 1) * d_R) / t


def residual_pv_Sn(state: LadderState, ctx: PrecisionContext
                   ) -> ResidualReport:
    """Second-order equation for S_n = 1 - 1/R_n (fifth Painleve class,
    parameter tuple (0, -alpha^2/2, 2n+1+alpha, -1/2))."""
    with ctx.working():
        n, alpha, t = state.n, state.alpha, state.t
        R, d_R = state.R_n, state.d_R
        S = state.S_n
        dd_R = second_derivative_R(state)
        d_S = d_R / R ** 2
        dd_S = dd_R / R ** 2 - 2 * d_R ** 2 / R ** 3
        return _report("painleve5_S", state, alpha, t, [
            dd_S,
            -(1 / (2 * S) + 1 / (S - 1)) * d_S ** 2,
            d_S / t,
            ((S - 1) ** 2 / t ** 2) * (alpha ** 2 / 2) / S,
            -(2 * n + 1 + alpha) * S / t,
            S * (S + 1) / (2 * (S - 1)),
        ])


def residual_sigma_form(state: LadderState, ctx: PrecisionContext
                        ) -> ResidualReport:
    """Second-order first-degree equation for the log-derivative
    sigma_n = t (ln D_n)'."""
    with ctx.working():
        n, alpha, t = state.n, state.alpha, state.t
        sig, d_sig, dd_sig = state.sigma_n, state.d_sigma, state.dd_sigma
        return _report("sigma_form", state, alpha, t, [
            (t * dd_sig) ** 2,
            -(sig - (t - 2 * n - alpha) * d_sig) ** 2,
            -4 * d_sig ** 2 * (sig - t * d_sig - n * (n + alpha)),
        ])


def residual_sigma_Rn(state: LadderState, ctx: PrecisionContext
                      ) -> Tuple[ResidualReport, ResidualReport]:
    """sigma_n written through R_n (and through S_n)."""
    with ctx.working():
        n, alpha, t = state.n, state.alpha, state.t
        R, d_R, S = state.R_n, state.d_R, state.S_n
        d_S = d_R / R ** 2
        sig = state.sigma_n
        four_nat = 4 * n + 2 * alpha - t
        rep_R = _report("sigma_from_R", state, alpha, t, [
            sig,
            -(alpha ** 2 / 4) * R / (1 - R),
            four_nat * t * R / 4,
            t ** 2 * R ** 2 / 4,
            t ** 2 * d_R ** 2 / (4 * R * (1 - R)),
        ])
        rep_S = _report("sigma_from_S", state, alpha, t, [
            sig,
            (alpha ** 2 / 4) / S,
            -(t / 4) * four_nat / (S - 1),
            t ** 2 / (4 * (S - 1) ** 2),
            -t ** 2 * d_S ** 2 / (4 * (S - 1) ** 2 * S),
        ])
        return rep_R, rep_S


def residual_rn_ode(state: LadderState, ctx: PrecisionContext
                    ) -> ResidualReport:
    """Second-order second-degree ODE for r_n alone."""
    with ctx.working():
        n, alpha, t = state.n, state.alpha, state.t
        r, d_r, dd_r = state.r_n, state.d_r, state.dd_r
        two_na = 2 * n + alpha
        nna = n * (n + alpha)
        lhs_inner = (t * (d_r + t * dd_r) + 8 * r ** 3
                     + 6 * two_na * r ** 2 + 4 * nna * r)
        rhs = ((4 * r + two_na - t) ** 2
               * (t ** 2 * d_r ** 2 + 4 * r ** 4 + 4 * two_na * r ** 3
                  + 4 * nna * r ** 2))
        return _report("r_ode", state, alpha, t, [lhs_inner ** 2, -rhs])


def rn_ode_branches(state: LadderState, ctx: PrecisionContext):
    """The two closed-form square-root branches recovering R_n from
    (r_n, r_n'); returns (branch_plus, branch_minus, discriminant)."""
    with ctx.working():
        n, alpha, t = state.n, state.alpha, state.t
        r, d_r = state.r_n, state.d_r
        delta = (4 * n * (alpha + n) * r ** 2 + 4 * (alpha + 2 * n) * r ** 3
                 + 4 * r ** 4 + (t * d_r) ** 2)
        denom = 2 * (t * d_r - (2 * n + alpha) * r - n * (n + alpha))
        if abs(denom) < ctx.degenerate_tol:
            raise DegenerateStateError("branch denominator within "
                                       "tolerance of 0")
        root = mp.sqrt(delta)
        num = t * d_r + 2 * r ** 2
        return (num + root) / denom, (num - root) / denom, delta


def discrete_map_check(chain: OPChain, spec: WeightSpec,
                       ctx: PrecisionContext,
                       n_top: Optional[int] = None
                       ) -> Tuple[DiscreteMapState, List[ResidualReport]]:
    """Second-kind discrete recurrences for x_n = 1 - 1/R_{n-1} and
    y_n = -r_n along the whole chain (y_0 = 0 by the empty-product
    convention for r_0)."""
    with ctx.working():
        t = mp.mpf(spec.t)
        alpha = mp.mpf(spec.alpha)
        k_top = chain.n_max - 1 if n_top is None else n_top
        if k_top > chain.n_max - 1 or k_top < 2:
            raise ValueError("need 2 <= n_top <= chain.n_max - 1")
        wt = spec.w(t, ctx)
        R = [boundary_ratio(chain, spec, j, ctx) for j in range(k_top + 1)]
        r = [mp.mpf(0)]
        for j in range(1, k_top + 1):
            r.append(-chain.poly_value(j, t) * chain.poly_value(j - 1, t)
                     * wt / chain.h[j - 1])
        x_seq = tuple(1 - 1 / R[j - 1] for j in range(1, k_top + 2)
                      if j - 1 <= k_top)
        y_seq = tuple(-rv for rv in r)
        reports = []
        for nn in range(1, k_top):
            x_n = 1 - 1 / R[nn - 1]
            x_up = 1 - 1 / R[nn]
            y_n = -r[nn]
            if abs(y_n) < ctx.degenerate_tol:
                raise DegenerateStateError("y_n within tolerance of 0")
            reports.append(_report("map_x", nn, alpha, t, [
                x_up * x_n,
                -(y_n ** 2 - (2 * nn + alpha) * y_n
                  + nn * (nn + alpha)) / y_n ** 2,
            ]))
        for nn in range(1, k_top + 1):
            x_n = 1 - 1 / R[nn - 1]
            y_n, y_dn = -r[nn], -r[nn - 1]
            reports.append(_report("map_y", nn, alpha, t, [
                y_n + y_dn,
                ((-t + 2 * nn - 1 + alpha) * x_n
                 - (2 * nn - 1 + alpha)) / (x_n - 1) ** 2,
            ]))
        return DiscreteMapState(x_seq=x_seq, y_seq=y_seq), reports


def full_residual_battery(alpha, t, n_values, ctx: PrecisionContext,
                          include_discrete: bool = True
                          ) -> List[ResidualReport]:
    """Every finite-n residual for each requested matrix order.

    One polynomial chain is built per (alpha, t) and reused across orders;
    the report order is fixed (orders ascending, identities in declaration
    order, discrete-map reports last) so batch output is deterministic.
    """
    orders = sorted({int(n) for n in n_values})
    if not orders or orders[0] < 1:
        raise ValueError("matrix orders must be positive integers")
    top = orders[-1]
    spec = WeightSpec("LaguerreCutoff", alpha=alpha, t=t)
    chain = op_chain(spec, top + 2, ctx)
    reports: List[ResidualReport] = []
    for n in orders:
        state = ladder_state(chain, spec, n, ctx)
        reports.extend(residual_riccati(chain, spec, n, ctx))
        reports.extend(residual_difference(chain, spec, n, ctx))
        reports.extend(residual_alpha_beta(state, ctx))
        reports.append(residual_betan_quartic(state, ctx))
        reports.append(residual_betan_ode(state, ctx))
        reports.append(residual_pv_Sn(state, ctx))
        reports.append(residual_sigma_form(state, ctx))
        reports.extend(residual_sigma_Rn(state, ctx))
        reports.append(residual_rn_ode(state, ctx))
    if include_discrete:
        n_top = min(max(2, top + 1), chain.n_max - 1)
        _, map_reports = discrete_map_check(chain, spec, ctx, n_top=n_top)
        wanted = set(orders)
        reports.extend(rep for rep in map_reports if rep.n in wanted)
    return reports

"""Second-order linear ODEs for the weighted polynomial wavefunctions.

For the truncated-Laguerre and truncated-Hermite families the monic
orthogonal polynomial ``P_n`` multiplied by the square root of its weight
satisfies a second-order ODE whose rational coefficients are rational in
the boundary quantities carried by the ladder chain.  This module

* assembles those rational coefficients (:class:`RationalLadderCoeffs`),
* evaluates the ODE residual on exact polynomial data
  (:func:`phi_ode_residual_lue`, :func:`phi_ode_residual_gue`) together
  with the pre-substitution residual on the bare polynomial,
* builds the soft-edge limit equation in the compactified variable
  ``x`` (:class:`LimitODECoeffs`, :func:`limit_ode_coeffs`),
* integrates the limit equation with its own adaptive integrator and
  cross-checks the first-derivative form against the normal form
  ``F'' + J F = 0`` through the Liouville substitution
  (:func:`solve_limit_ode`, :func:`limit_ode_residual`),
* evaluates the three local approximants near the singular points
  0, 1 and infinity (:func:`local_asymptotic`) and verifies each against
  its truncated normal-form equation by numerical differentiation.

All finite-index computations run in extended precision; the limit-side
machinery works in binary64, matching the precision of the solved
soft-edge grid that feeds it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from mpmath import mp

from .context import ComputationAlarm, DegenerateStateError, PrecisionContext
from .gue import GUEChain, _closure_derivatives, gue_chain
from .identities import ResidualReport, default_tolerance
from .lue import LadderState, OPChain, WeightSpec, ladder_state, op_chain
from .specialfn import airy_pair, kummer_M, kummer_U

__all__ = [
    "RationalLadderCoeffs",
    "LimitODECoeffs",
    "PhiSolution",
    "pole_guard_radius",
    "lue_ladder_coeffs",
    "lue_kappa_alternate",
    "gue_ladder_coeffs",
    "gue_kappa_sum_route",
    "phi_ode_residual_lue",
    "phi_ode_residual_gue",
    "monic_ode_report_lue",
    "monic_ode_report_gue",
    "limit_ode_coeffs",
    "limit_p",
    "limit_q",
    "j_value",
    "j_truncated",
    "j_first_omitted",
    "lue_limit_pole_terms",
    "gue_limit_pole_terms",
    "hermite_laguerre_mismatch",
    "solve_limit_ode",
    "integrate_normal_form",
    "limit_ode_residual",
    "local_asymptotic",
    "local_asymptotic_residual",
]


# ---------------------------------------------------------------------------
# Finite-index rational coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RationalLadderCoeffs:
    """Rational coefficient data of the finite-index wavefunction ODE.

    ``family`` is ``"laguerre-cutoff"`` (poles ``0, t, t - t*R_n``,
    residues ``kappa1``/``kappa2``) or ``"hermite-cutoff"`` (poles
    ``t, t - alpha_n``, residues ``kappa3``/``kappa4``).  The raising /
    lowering rational functions ``A_n`` and ``B_n`` that generate the ODE
    are exposed as methods so the pre-substitution polynomial ODE can be
    evaluated from the same data.
    """

    family: str
    n: int
    t: object
    alpha: object
    poles: tuple
    kappa1: object = None
    kappa2: object = None
    kappa3: object = None
    kappa4: object = None
    R_n: object = None
    r_n: object = None
    sigma_n: object = None
    alpha_n: object = None
    sum_alpha: object = None

    # -- first-derivative coefficient p(z) and potential q(z) of the
    #    wavefunction form  phi'' + p phi' + q phi = 0
    def p_value(self, z):
        if self.family == "laguerre-cutoff":
            t = self.t
            return 1 / z + 1 / (z - t) - 1 / (z - t + t * self.R_n)
        t, a_n = self.t, self.alpha_n
        return 1 / (z - t) - 1 / (z - t + a_n)

    def q_value(self, z):
        if self.family == "laguerre-cutoff":
            t, al = self.t, self.alpha
            n = self.n
            shifted = z - t + t * self.R_n
            return (
                (-al * al / 4) / (z * z)
                + ((2 * n + al + 1) / mp.mpf(2) - self.kappa1 - self.kappa2) / z
                + self.kappa1 / (z - t)
                + self.kappa2 / shifted
                - mp.mpf(1) / 4
            )
        t, a_n, n = self.t, self.alpha_n, self.n
        return (
            self.kappa3 / (z - t)
            + self.kappa4 / (z - t + a_n)
            + 2 * n + 1 - z * z
        )

    # -- ladder rational functions and their ingredients --------------
    def ladder_A(self, z):
        if self.family == "laguerre-cutoff":
            t, R = self.t, self.R_n
            return R / (z - t) + (1 - R) / z
        return 2 * (self.alpha_n / (z - self.t) + 1)

    def ladder_d_A(self, z):
        if self.family == "laguerre-cutoff":
            t, R = self.t, self.R_n
            return -R / (z - t) ** 2 - (1 - R) / (z * z)
        return -2 * self.alpha_n / (z - self.t) ** 2

    def ladder_B(self, z):
        if self.family == "laguerre-cutoff":
            t, r = self.t, self.r_n
            return r / (z - t) - (r + self.n) / z
        return self.r_n / (z - self.t)

    def ladder_d_B(self, z):
        if self.family == "laguerre-cutoff":
            t, r = self.t, self.r_n
            return -r / (z - t) ** 2 + (r + self.n) / (z * z)
        return -self.r_n / (z - self.t) ** 2

    def ladder_A_sum(self, z):
        """``sum_{j<n} A_j(z)`` closed through the running log-derivative."""
        if self.family == "laguerre-cutoff":
            t = self.t
            s_over_t = self.sigma_n / t
            return -s_over_t / (z - t) + (self.n + s_over_t) / z
        return 2 * self.sum_alpha / (z - self.t) + 2 * self.n

    def v_prime(self, z):
        if self.family == "laguerre-cutoff":
            return 1 - self.alpha / z
        return 2 * z


def pole_guard_radius(t) -> float:
    """Minimum allowed distance between a sample point and an ODE pole."""
    return 1e-3 * max(1.0, abs(float(t)))


def _check_pole_distance(z, coeffs: RationalLadderCoeffs):
    guard = pole_guard_radius(coeffs.t)
    for pole in coeffs.poles:
        if abs(float(z - pole)) < guard:
            raise ValueError(
                "sample point %s is within the pole guard radius %g of the "
                "singular point %s" % (float(z), guard, float(pole))
            )


def lue_ladder_coeffs(state: LadderState, ctx: PrecisionContext,
                      kappa1_shift=0) -> RationalLadderCoeffs:
    """Pole residues of the truncated-Laguerre wavefunction ODE.

    ``kappa1_shift`` adds a deliberate perturbation to the first residue;
    it exists so sensitivity checks can confirm the residual degrades when
    the coefficient is wrong.
    """
    with ctx.working():
        t = mp.mpf(state.t)
        R, d_R, sigma = state.R_n, state.d_R, state.sigma_n
        kappa1 = R / 2 - d_R / (2 * R) - sigma / t + mp.mpf(kappa1_shift)
        kappa2 = d_R / (2 * R) + d_R / (2 * (1 - R))
        poles = (mp.mpf(0), t, t - t * R)
        return RationalLadderCoeffs(
            family="laguerre-cutoff", n=state.n, t=t, alpha=state.alpha,
            poles=poles, kappa1=kappa1, kappa2=kappa2,
            R_n=R, r_n=state.r_n, sigma_n=sigma)


def lue_kappa_alternate(state: LadderState, ctx: PrecisionContext):
    """Second route to the same residues, through ``r_n/R_n`` instead of
    the derivative closure; equality with :func:`lue_ladder_coeffs` is a
    transcription cross-check, the two being linked by the first-order
    relation for ``R_n``."""
    with ctx.working():
        t = mp.mpf(state.t)
        n, al = state.n, mp.mpf(state.alpha)
        r, R, sigma = state.r_n, state.R_n, state.sigma_n
        core = r / R + al / 2 + n
        kappa1 = -core / t - sigma / t + mp.mpf(1) / 2
        kappa2 = core / (t - t * R) - mp.mpf(1) / 2
        return kappa1, kappa2


def gue_ladder_coeffs(chain: GUEChain, n: int,
                      ctx: PrecisionContext) -> RationalLadderCoeffs:
    """Pole residues of the truncated-Hermite wavefunction ODE."""
    if n < 1 or n >= len(chain.alpha_rec):
        raise ValueError("index n = %d outside chain capacity" % n)
    with ctx.working():
        t = mp.mpf(chain.t)
        a_n = chain.alpha_rec[n]
        if abs(a_n) <= ctx.degenerate_tol:
            raise DegenerateStateError("recurrence coefficient within "
                                       "tolerance of 0")
        _, d_alpha, _ = _closure_derivatives(chain, n)
        kappa3 = (d_alpha * d_alpha / (4 * a_n) - d_alpha / (2 * a_n)
                  - a_n ** 3 + 2 * t * a_n ** 2
                  + (-t * t + 2 * n + 1) * a_n)
        kappa4 = d_alpha / (2 * a_n)
        return RationalLadderCoeffs(
            family="hermite-cutoff", n=n, t=t, alpha=mp.mpf(0),
            poles=(t, t - a_n), kappa3=kappa3, kappa4=kappa4,
            r_n=chain.r[n], alpha_n=a_n, sum_alpha=chain.sum_alpha[n])


def gue_kappa_sum_route(chain: GUEChain, n: int, ctx: PrecisionContext):
    """Second route to the truncated-Hermite residues, through the partial
    sum of recurrence coefficients instead of the derivative closure."""
    with ctx.working():
        t = mp.mpf(chain.t)
        a_n, r = chain.alpha_rec[n], chain.r[n]
        kappa3 = -r / a_n + t + 2 * chain.sum_alpha[n]
        kappa4 = r / a_n - t + a_n
        return kappa3, kappa4


# ---------------------------------------------------------------------------
# Finite-index residuals
# ---------------------------------------------------------------------------


def _poly_second_derivative(chain, n: int, z):
    """d^2/dz^2 of the stored monic polynomial row (family-agnostic)."""
    row = chain.poly_coeffs[n]
    acc = mp.mpf(0)
    for k in range(len(row) - 1, 1, -1):
        acc = acc * z + k * (k - 1) * row[k]
    return acc


def _phi_derivative_stack(chain, n, z, log_d1, log_d2):
    """(P, phi''/g, phi'/g, phi/g) with g the weight factor, given the
    first and second derivatives of ``ln g``."""
    P = chain.poly_value(n, z)
    if hasattr(chain, "spec"):
        dP = chain.poly_derivative(n, z, 1)
    else:
        dP = chain.poly_derivative(n, z)
    ddP = _poly_second_derivative(chain, n, z)
    phi0 = P
    phi1 = dP + P * log_d1
    phi2 = ddP + 2 * dP * log_d1 + P * (log_d1 * log_d1 + log_d2)
    return phi0, phi1, phi2


def _residual_report(identity_id, n, alpha, t, terms):
    raw = abs(sum(terms))
    scale = max(abs(term) for term in terms)
    if scale == 0:
        scale = mp.mpf(1)
    return ResidualReport(identity_id=identity_id, n=n, alpha=alpha, t=t,
                          residual=raw, scale=scale, relative=raw / scale)


def phi_ode_residual_lue(n, alpha, t, z_samples, ctx: PrecisionContext,
                         chain: OPChain = None, state: LadderState = None,
                         kappa1_shift=0):
    """Relative residual of the truncated-Laguerre wavefunction ODE at each
    sample point, using exact monic coefficients plus the weight factor.

    Sample points must be positive and keep the guard distance from all
    three poles.  Returns one :class:`ResidualReport` per sample.
    """
    spec = WeightSpec("LaguerreCutoff", alpha=alpha, t=t)
    if chain is None:
        chain = op_chain(spec, n + 1, ctx, _cross_check=False)
    if state is None:
        state = ladder_state(chain, spec, n, ctx)
    coeffs = lue_ladder_coeffs(state, ctx, kappa1_shift=kappa1_shift)
    reports = []
    with ctx.working():
        al = mp.mpf(alpha)
        for z_raw in z_samples:
            z = mp.mpf(z_raw)
            if z <= 0:
                raise ValueError("sample point must be positive for the "
                                 "Laguerre-type weight")
            _check_pole_distance(z, coeffs)
            log_d1 = al / (2 * z) - mp.mpf(1) / 2
            log_d2 = -al / (2 * z * z)
            _, phi1, phi2 = _phi_derivative_stack(chain, n, z,
                                                  log_d1, log_d2)
            phi0 = chain.poly_value(n, z)
            terms = (phi2, coeffs.p_value(z) * phi1,
                     coeffs.q_value(z) * phi0)
            reports.append(_residual_report(
                "wavefn_ode_laguerre_cutoff", n, al, mp.mpf(t), terms))
    return reports


def phi_ode_residual_gue(n, t, z_samples, ctx: PrecisionContext,
                         chain: GUEChain = None):
    """Relative residual of the truncated-Hermite wavefunction ODE at each
    sample point (any real z away from the two poles)."""
    if chain is None:
        chain = gue_chain(t, n + 1, ctx)
    coeffs = gue_ladder_coeffs(chain, n, ctx)
    reports = []
    with ctx.working():
        for z_raw in z_samples:
            z = mp.mpf(z_raw)
            _check_pole_distance(z, coeffs)
            log_d1 = -z
            log_d2 = mp.mpf(-1)
            _, phi1, phi2 = _phi_derivative_stack(chain, n, z,
                                                  log_d1, log_d2)
            phi0 = chain.poly_value(n, z)
            terms = (phi2, coeffs.p_value(z) * phi1,
                     coeffs.q_value(z) * phi0)
            reports.append(_residual_report(
                "wavefn_ode_hermite_cutoff", n, mp.mpf(0), mp.mpf(t), terms))
    return reports


def _monic_report(identity_id, chain, coeffs, n, alpha, z):
    """Residual of the pre-substitution ODE satisfied by the bare monic
    polynomial:  P'' - (A'/A + v')P' + (B' - (A'/A)B + sum_j A_j)P = 0."""
    A = coeffs.ladder_A(z)
    dA = coeffs.ladder_d_A(z)
    B = coeffs.ladder_B(z)
    dB = coeffs.ladder_d_B(z)
    ratio = dA / A
    P = chain.poly_value(n, z)
    if hasattr(chain, "spec"):
        dP = chain.poly_derivative(n, z, 1)
    else:
        dP = chain.poly_derivative(n, z)
    ddP = _poly_second_derivative(chain, n, z)
    terms = (
        ddP,
        -(ratio + coeffs.v_prime(z)) * dP,
        (dB - ratio * B + coeffs.ladder_A_sum(z)) * P,
    )
    return _residual_report(identity_id, n, alpha, coeffs.t, terms)


def monic_ode_report_lue(n, alpha, t, z, ctx: PrecisionContext,
                         chain: OPChain = None, state: LadderState = None):
    """(monic-form report, wavefunction-form report, weight factor size)
    at one sample point; the raw residuals differ by roughly the weight
    factor because the two equations are the same relation in different
    gauges."""
    spec = WeightSpec("LaguerreCutoff", alpha=alpha, t=t)
    if chain is None:
        chain = op_chain(spec, n + 1, ctx, _cross_check=False)
    if state is None:
        state = ladder_state(chain, spec, n, ctx)
    coeffs = lue_ladder_coeffs(state, ctx)
    with ctx.working():
        z = mp.mpf(z)
        _check_pole_distance(z, coeffs)
        monic = _monic_report("monic_ode_laguerre_cutoff", chain, coeffs,
                              n, mp.mpf(alpha), z)
        wave = phi_ode_residual_lue(n, alpha, t, [z], ctx,
                                    chain=chain, state=state)[0]
        weight_factor = mp.power(z, mp.mpf(alpha) / 2) * mp.exp(-z / 2)
    return monic, wave, weight_factor


def monic_ode_report_gue(n, t, z, ctx: PrecisionContext,
                         chain: GUEChain = None):
    """Truncated-Hermite analogue of :func:`monic_ode_report_lue`."""
    if chain is None:
        chain = gue_chain(t, n + 1, ctx)
    coeffs = gue_ladder_coeffs(chain, n, ctx)
    with ctx.working():
        z = mp.mpf(z)
        _check_pole_distance(z, coeffs)
        monic = _monic_report("monic_ode_hermite_cutoff", chain, coeffs,
                              n, mp.mpf(0), z)
        wave = phi_ode_residual_gue(n, t, [z], ctx, chain=chain)[0]
        weight_factor = mp.exp(-z * z / 2)
    return monic, wave, weight_factor


# ---------------------------------------------------------------------------
# Soft-edge limit equation in the compactified variable
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LimitODECoeffs:
    """Coefficients of the limiting wavefunction equation after the change
    of variable ``x = -(z* - s)/r(s)``.

    ``a0..a3`` are the potential coefficients of the first-derivative form,
    ``b1``/``b2`` the rearranged polynomial-coefficient pair, ``Acap`` the
    quadratic coefficient of the same equation recentred at ``x = 1`` and
    ``lambda_kummer`` the exponent of the Kummer approximant near 0 (NaN
    when its radicand is negative, i.e. when the exponent is not real).
    """

    s: float
    r: float
    d_r: float
    a0: float
    a1: float
    a2: float
    a3: float
    b1: float
    b2: float
    Acap: float
    lambda_kummer: float


def limit_ode_coeffs(s, r, d_r) -> LimitODECoeffs:
    """Assemble :class:`LimitODECoeffs` from the slope data ``(r, r')`` of
    the log-derivative of the limiting distribution at ``s``.

    Raises :class:`DegenerateStateError` at ``r = 0`` (the variable change
    collapses) and asserts the two linear coefficient identities that the
    assembled fields must satisfy.
    """
    s, r, d_r = float(s), float(r), float(d_r)
    if r == 0 or not math.isfinite(r):
        raise DegenerateStateError("slope r(s) = 0: the compactified "
                                   "variable is undefined")
    a0 = -d_r * d_r / 4 + d_r / 2 + s * r * r - r ** 3
    a1 = -d_r / 2
    a2 = -s * r * r
    a3 = r ** 3
    b1 = -d_r * d_r / 4 + 2 * s * r * r - r ** 3
    b2 = -s * r * r - r ** 3
    acap = -s * r * r + 2 * r ** 3
    scale = max(1.0, abs(a0), abs(a1), abs(a2), abs(a3), abs(b1), abs(b2))
    sum1 = a0 + a1 - a3 - b1 - b2
    sum2 = a0 + a1 * a1 + a1 + a2 + a3
    if abs(sum1) > 1e-12 * scale or abs(sum2) > 1e-12 * scale:
        raise ComputationAlarm(
            "coefficient-inconsistency",
            "limit ODE coefficient identities violated",
            sum1=sum1, sum2=sum2)
    radicand = -4 * a2 + 4 * a1 + 5
    lam = 0.5 * math.sqrt(radicand) if radicand >= 0 else float("nan")
    return LimitODECoeffs(s=s, r=r, d_r=d_r, a0=a0, a1=a1, a2=a2, a3=a3,
                          b1=b1, b2=b2, Acap=acap, lambda_kummer=lam)


def limit_p(x):
    """First-derivative coefficient of the compactified limit equation."""
    return 1.0 / x - 1.0 / (x - 1.0)


def limit_q(coeffs: LimitODECoeffs, x):
    """Potential of the compactified limit equation."""
    return coeffs.a0 / x + coeffs.a1 / (x - 1.0) + coeffs.a2 + coeffs.a3 * x


def j_value(coeffs: LimitODECoeffs, x):
    """Potential of the normal form ``F'' + J F = 0`` (Liouville gauge)."""
    return (0.25 / (x * x) + (coeffs.a0 - 0.5) / x
            - 0.75 / ((x - 1.0) ** 2) + (coeffs.a1 + 0.5) / (x - 1.0)
            + coeffs.a2 + coeffs.a3 * x)


def j_truncated(coeffs: LimitODECoeffs, region: str, x):
    """The displayed limiting form of J near one of the singular points."""
    if region == "Zero":
        return (0.25 / (x * x) + (coeffs.a0 - 0.5) / x
                + coeffs.a2 - coeffs.a1 - 1.25)
    if region == "One":
        u = x - 1.0
        return (-0.75 / (u * u) + (coeffs.a1 + 0.5) / u
                - coeffs.a1 ** 2 - coeffs.a1 - 0.25)
    if region == "Infinity":
        return coeffs.a2 + coeffs.a3 * x
    raise ValueError("unknown region %r" % (region,))


def j_first_omitted(coeffs: LimitODECoeffs, region: str, x):
    """Leading term of ``J - J_truncated`` in the given region; the full
    difference must approach this value as the singular point is neared."""
    if region == "Zero":
        return (coeffs.a3 - coeffs.a1 - 2.0) * x
    if region == "One":
        return (coeffs.a3 - coeffs.a0) * (x - 1.0)
    if region == "Infinity":
        return (coeffs.a0 + coeffs.a1) / x
    raise ValueError("unknown region %r" % (region,))


def lue_limit_pole_terms(s, r, d_r):
    """Residues of the two simple poles of the limiting Laguerre-side
    wavefunction equation in the original scaled variable."""
    res0 = d_r * d_r / (4 * r) - d_r / (2 * r) - s * r + r * r
    res1 = d_r / (2 * r)
    return res0, res1


def gue_limit_pole_terms(s, u, d_u):
    """Residues of the limiting Hermite-side equation, transcribed
    independently; with ``u = r`` both families give the same equation."""
    res0 = d_u * d_u / (4 * u) - d_u / (2 * u) - s * u + u * u
    res1 = d_u / (2 * u)
    return res0, res1


def hermite_laguerre_mismatch(s, r, d_r) -> float:
    """Relative mismatch of the two limiting-equation transcriptions when
    the Hermite-side slope equals the Laguerre-side slope."""
    lue0, lue1 = lue_limit_pole_terms(s, r, d_r)
    gue0, gue1 = gue_limit_pole_terms(s, r, d_r)
    scale0 = max(1e-300, abs(lue0))
    scale1 = max(1e-300, abs(lue1))
    return max(abs(lue0 - gue0) / scale0, abs(lue1 - gue1) / scale1)


# ---------------------------------------------------------------------------
# Adaptive integration of the limit equation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhiSolution:
    """Checkpointed solution of a second-order linear equation.

    ``form`` records which gauge was integrated: ``"first-order-term"``
    for f'' + p f' + q f = 0 or ``"normal-form"`` for F'' + J F = 0.
    ``x`` lists the checkpoints (both endpoints included) at which
    ``value``/``slope`` were recorded.
    """

    form: str
    x: tuple
    value: tuple
    slope: tuple
    x0: float
    f0: float
    df0: float
    tol: float
    steps: int


_SINGULAR_POINTS = (0.0, 1.0)


def _check_no_singular_crossing(x0, x1):
    lo, hi = min(x0, x1), max(x0, x1)
    margin = 1e-9 * max(1.0, abs(lo), abs(hi))
    for sp in _SINGULAR_POINTS:
        if lo - margin <= sp <= hi + margin:
            raise ValueError(
                "integration span [%g, %g] crosses the singular point %g"
                % (lo, hi, sp))


def _integrate_checkpointed(p_fun, q_fun, x0, x1, f0, df0, tol,
                            checkpoints, form):
    """Step-doubling RK4 with 5th-order extrapolated updates, landing
    exactly on every checkpoint."""
    _check_no_singular_crossing(x0, x1)
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    direction = 1.0 if x1 > x0 else -1.0
    span = abs(x1 - x0)
    if span == 0:
        raise ValueError("empty integration span")
    cps = sorted(set(float(c) for c in checkpoints) | {x0, x1},
                 reverse=(direction < 0))
    for c in cps:
        if not (min(x0, x1) - 1e-12 <= c <= max(x0, x1) + 1e-12):
            raise ValueError("checkpoint %g outside the span" % c)

    def rhs(x, f, df):
        return df, -(p_fun(x) * df if p_fun is not None else 0.0) \
            - q_fun(x) * f

    def rk4(x, f, df, h):
        k1f, k1d = rhs(x, f, df)
        k2f, k2d = rhs(x + h / 2, f + h / 2 * k1f, df + h / 2 * k1d)
        k3f, k3d = rhs(x + h / 2, f + h / 2 * k2f, df + h / 2 * k2d)
        k4f, k4d = rhs(x + h, f + h * k3f, df + h * k3d)
        return (f + h / 6 * (k1f + 2 * k2f + 2 * k3f + k4f),
                df + h / 6 * (k1d + 2 * k2d + 2 * k3d + k4d))

    xs_out, f_out, df_out = [], [], []
    x, f, df = x0, float(f0), float(df0)
    h = direction * span / 64.0
    steps = 0
    idx = 0
    # record the initial checkpoint
    xs_out.append(x), f_out.append(f), df_out.append(df)
    idx += 1
    while idx < len(cps):
        target = cps[idx]
        while direction * (target - x) > 1e-15 * max(1.0, abs(target)):
            if abs(h) < 1e-14 * span:
                raise ComputationAlarm(
                    "nonconvergence",
                    "adaptive integrator step size underflow",
                    x=x, form=form)
            if direction * (x + h - target) > 0:
                h = target - x
            f_full, df_full = rk4(x, f, df, h)
            f_half, df_half = rk4(x, f, df, h / 2)
            f_two, df_two = rk4(x + h / 2, f_half, df_half, h / 2)
            err = max(abs(f_two - f_full) / max(1.0, abs(f_two)),
                      abs(df_two - df_full) / max(1.0, abs(df_two)))
            if err <= tol:
                x = x + h
                f = f_two + (f_two - f_full) / 15.0
                df = df_two + (df_two - df_full) / 15.0
                steps += 1
                if steps > 2_000_000:
                    raise ComputationAlarm(
                        "nonconvergence",
                        "adaptive integrator exceeded its step budget",
                        form=form)
            factor = 4.0 if err == 0 else min(
                4.0, max(0.1, 0.9 * (tol / err) ** 0.2))
            h *= factor
        xs_out.append(x), f_out.append(f), df_out.append(df)
        idx += 1
    return PhiSolution(form=form, x=tuple(xs_out), value=tuple(f_out),
                       slope=tuple(df_out), x0=float(x0), f0=float(f0),
                       df0=float(df0), tol=float(tol), steps=steps)


def solve_limit_ode(coeffs: LimitODECoeffs, x0=0.1, x1=0.9, f0=1.0, df0=0.0,
                    tol=1e-12, checkpoints=None) -> PhiSolution:
    """Integrate the first-derivative form of the compactified limit
    equation from initial data at the regular point ``x0``."""
    if checkpoints is None:
        lo, hi = min(x0, x1), max(x0, x1)
        checkpoints = [lo + (hi - lo) * k / 10.0 for k in range(1, 10)]
    return _integrate_checkpointed(
        limit_p, lambda x: limit_q(coeffs, x), x0, x1, f0, df0, tol,
        checkpoints, form="first-order-term")


def integrate_normal_form(coeffs: LimitODECoeffs, x0, x1, F0, dF0,
                          tol=1e-12, checkpoints=None) -> PhiSolution:
    """Integrate ``F'' + J F = 0`` over the same kind of checkpointed
    span."""
    if checkpoints is None:
        checkpoints = []
    return _integrate_checkpointed(
        None, lambda x: j_value(coeffs, x), x0, x1, F0, dF0, tol,
        checkpoints, form="normal-form")


def _gauge_factor(x, x0):
    """exp(+1/2 int_{x0}^{x} p) for the compactified equation; real and
    positive whenever both points avoid crossing 0 and 1."""
    ratio = (x / x0) * ((x0 - 1.0) / (x - 1.0))
    return math.sqrt(ratio)


def limit_ode_residual(coeffs: LimitODECoeffs,
                       phi: PhiSolution) -> ResidualReport:
    """Cross-check of the two gauges of the limit equation.

    Re-integrates the normal form from the Liouville-transformed initial
    data of ``phi`` and compares the back-transformed values at every
    checkpoint of ``phi``; the discrepancy is reported relative to the
    solution's own size.
    """
    if phi.form != "first-order-term":
        raise ValueError("expected a first-derivative-form solution")
    x0 = phi.x0
    F0 = phi.f0
    dF0 = phi.df0 + phi.f0 * limit_p(x0) / 2.0
    normal = _integrate_checkpointed(
        None, lambda x: j_value(coeffs, x), x0, phi.x[-1], F0, dF0,
        phi.tol, list(phi.x), form="normal-form")
    if len(normal.x) != len(phi.x):
        raise ComputationAlarm("nonconvergence",
                               "checkpoint sets of the two gauges differ")
    worst = 0.0
    scale = max(abs(v) for v in phi.value)
    for xc, f_ref, F_val in zip(normal.x, phi.value, normal.value):
        f_back = F_val / _gauge_factor(xc, x0)
        worst = max(worst, abs(f_back - f_ref))
    return ResidualReport(
        identity_id="limit_ode_gauge_agreement", n=0, alpha=0.0,
        t=coeffs.s, residual=worst, scale=scale,
        relative=worst / max(scale, 1e-300))


# ---------------------------------------------------------------------------
# Local asymptotic approximants
# ---------------------------------------------------------------------------


def _approximant_mp(region: str, coeffs: LimitODECoeffs, constants, x,
                    ctx: PrecisionContext):
    c_a, c_b = constants
    x = mp.mpf(x)
    if region == "Zero":
        if x <= 0:
            raise ValueError("the x -> 0 approximant needs x > 0")
        lam = coeffs.lambda_kummer
        if math.isnan(lam):
            raise ValueError("Kummer exponent is not real for these "
                             "coefficients")
        if abs(coeffs.a0 - 0.5) <= 1e-12 * max(1.0, abs(coeffs.a0)):
            raise ValueError("degenerate approximant parameter: a0 = 1/2 "
                             "removes the simple-pole term")
        lam = mp.mpf(lam)
        mu = mp.mpf(1) / 2 - (mp.mpf(coeffs.a0) - mp.mpf(1) / 2) / (2 * lam)
        pref = mp.sqrt(2 * lam * x) * mp.exp(-lam * x)
        total = mp.mpf(0)
        if c_a:
            total += mp.mpf(c_a) * pref * kummer_M(mu, 1, 2 * lam * x, ctx)
        if c_b:
            total += mp.mpf(c_b) * pref * kummer_U(mu, 1, 2 * lam * x, ctx)
        return total
    if region == "One":
        if x <= 1:
            raise ValueError("the x -> 1 approximant needs x > 1")
        beta = mp.mpf(coeffs.a1) + mp.mpf(1) / 2
        root = mp.sqrt(x - 1)
        total = mp.mpf(0)
        if c_a:
            total += mp.mpf(c_a) * mp.exp(beta * x) / root
        if c_b:
            total += (mp.mpf(c_b) * (beta * x - mp.mpf(coeffs.a1))
                      * mp.exp(-beta * x) / root)
        return total
    if region == "Infinity":
        if coeffs.a3 == 0:
            raise ValueError("cubic coefficient vanishes: no oscillator "
                             "region")
        a3m = mp.mpf(coeffs.a3)
        cbrt = mp.sign(a3m) * mp.cbrt(abs(a3m))
        xi = -mp.mpf(coeffs.a2) / (cbrt * cbrt) - cbrt * x
        ai, bi = airy_pair(xi, ctx)
        return mp.mpf(c_a) * ai + mp.mpf(c_b) * bi
    raise ValueError("unknown region %r" % (region,))


def local_asymptotic(region: str, coeffs: LimitODECoeffs, constants,
                     x, ctx: PrecisionContext = None) -> float:
    """Evaluate the displayed local approximant of the normal-form solution.

    ``constants`` is the free coefficient pair of the region's two-branch
    basis; it is caller data and is never fitted here.
    """
    if ctx is None:
        ctx = PrecisionContext(30)
    with ctx.working():
        return float(_approximant_mp(region, coeffs, constants, x, ctx))


def local_asymptotic_residual(region: str, coeffs: LimitODECoeffs,
                              constants, x,
                              ctx: PrecisionContext = None) -> float:
    """Relative residual of ``F'' + J_truncated F`` for the approximant,
    with the second derivative taken by high-precision numerical
    differentiation."""
    if ctx is None:
        ctx = PrecisionContext(40)
    with ctx.working():
        f = lambda u: _approximant_mp(region, coeffs, constants, u, ctx)
        x_mp = mp.mpf(x)
        # 5-point central stencil with a step matched to the context
        # precision: truncation O(h^4) and rounding O(eps/h^2) balance
        # near h = 10^(-dps/6).
        h = mp.mpf(10) ** (-max(6, ctx.dps // 6))
        second = (-f(x_mp + 2 * h) + 16 * f(x_mp + h) - 30 * f(x_mp)
                  + 16 * f(x_mp - h) - f(x_mp - 2 * h)) / (12 * h * h)
        value = f(x_mp)
        j_app = mp.mpf(j_truncated(coeffs, region, float(x)))
        raw = abs(second + j_app * value)
        scale = max(abs(second), abs(j_app * value))
        if scale == 0:
            return 0.0
        return float(raw / scale)

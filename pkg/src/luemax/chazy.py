"""Quartic second-order reductions of the degree-two sigma equations.

The log-derivative of each cutoff Hankel determinant in this package
satisfies a second-order, second-degree ("sigma-form") equation.  Its
derivative ``rho`` then satisfies a quartic second-order equation, and
an exponential (fifth-Painleve class) or linear (fourth-Painleve class)
change of time maps that quartic onto one of two classical polynomial
equations -- the second and first members of the Chazy II system.  This
module provides:

* parameter maps from the sigma-form constant tuples ``nu`` to the
  Chazy parameters ``(alpha1, beta1[, gamma1])``, usable with exact
  rational arithmetic as well as floating point;
* residual checks for the two quartic rho-equations and for the two
  Chazy members along numerical trajectories;
* point-data manufacture that solves a quartic rho-equation for the
  second derivative, producing synthetic data satisfying it exactly;
* bundled "all views at once" checks along the Laguerre and Gaussian
  ensemble trajectories computed elsewhere in the package;
* a catalogue of ensemble examples carrying the parameter maps as
  exact rational strings, with a JSON export.

Fifth-Painleve class reduction
------------------------------
With ``e1, e2, e3`` the elementary symmetric functions of
``(nu1, nu2, nu3)``, a sigma-function ``Xi(t)`` satisfying

    (t Xi'')^2 = (Xi - t Xi' + 2 Xi'^2 + e1 Xi')^2
                 - 4 Xi' (Xi' + nu1)(Xi' + nu2)(Xi' + nu3)

has derivative ``rho = Xi'`` satisfying

    (t (rho' + t rho'') + 8 rho^3 + 6 e1 rho^2 + 4 e2 rho + 2 e3)^2
        = (4 rho + e1 - t)^2
          (t^2 rho'^2 + 4 rho^4 + 4 e1 rho^3 + 4 e2 rho^2 + 4 e3 rho),

and ``theta(z) = -2i rho(t) - (i/2) e1`` with ``t = 2i e^z`` satisfies
the second Chazy member

    (theta'' - 2 theta^3 - alpha1 theta - beta1)^2
        = -4 (theta - e^z)^2
             (theta'^2 - theta^4 - alpha1 theta^2 - 2 beta1 theta
              - gamma1).

Fourth-Painleve class reduction
-------------------------------
With ``e1, e2`` the elementary symmetric functions of ``(nu1, nu2)``,
a sigma-function satisfying

    (Xi'')^2 = 4 (t Xi' - Xi)^2 - 4 Xi' (Xi' + nu1)(Xi' + nu2)

has derivative ``rho = Xi'`` satisfying

    (rho'' + 6 rho^2 + 4 e1 rho + 2 e2)^2
        = 4 t^2 (rho'^2 + 4 rho^3 + 4 e1 rho^2 + 4 e2 rho),

and ``v(z) = -rho(t)/2 - e1/6`` with ``z = sqrt(2) t`` satisfies the
first Chazy member

    (v'' - 6 v^2 - alpha1)^2 = z^2 (v'^2 - 4 v^3 - 2 alpha1 v - beta1).

Complex arithmetic is confined to :func:`chazy_second_residual`, which
works with a minimal real-pair representation of the purely imaginary
quantities involved; no general complex-number surface is exposed.

Branch convention for the logarithmic map ``z = ln(t / 2i)``: for real
``t > 0`` the branch with ``Im z = -pi/2`` is used, for real ``t < 0``
the branch with ``Im z = +pi/2``; see :data:`LOG_BRANCH`.  The checked
equation depends on ``z`` only through ``e^z = -i t / 2``, which is the
same on either branch, so the recorded branch is bookkeeping for the
``z``-grid rather than a residual-affecting choice.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple

from mpmath import mp

from .context import ComputationAlarm, PrecisionContext
from .identities import ResidualReport, residual_rn_ode
from .lue import WeightSpec, ladder_state, op_chain
from . import gue as _gue

__all__ = [
    "SigmaFormPV", "SigmaFormPIV", "ChazyParams", "ExampleSpec",
    "LOG_BRANCH",
    "chazy_second_params", "chazy_first_params",
    "sigma_pv_residual", "sigma_piv_residual",
    "rho_ode_residual_pv", "rho_ode_residual_piv",
    "chazy_second_residual", "chazy_first_residual",
    "synthetic_pv_point", "synthetic_piv_point",
    "lue_rho_path", "gue_rho_path",
    "lue_reduction_views", "gue_reduction_views",
    "example_table", "example_param_check", "example_table_json",
]

#: Branch of the logarithmic time map recorded for real trajectories.
LOG_BRANCH = {"t>0": "Im z = -pi/2", "t<0": "Im z = +pi/2"}


# ----------------------------------------------------------------------
# parameter containers
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SigmaFormPV:
    """Constant tuple of the fifth-Painleve-class sigma equation."""
    nu1: object
    nu2: object
    nu3: object

    @property
    def nu(self) -> tuple:
        return (self.nu1, self.nu2, self.nu3)

    @property
    def e1(self):
        return self.nu1 + self.nu2 + self.nu3

    @property
    def e2(self):
        return self.nu1 * self.nu2 + self.nu1 * self.nu3 \
            + self.nu2 * self.nu3

    @property
    def e3(self):
        return self.nu1 * self.nu2 * self.nu3


@dataclass(frozen=True)
class SigmaFormPIV:
    """Constant pair of the fourth-Painleve-class sigma equation."""
    nu1: object
    nu2: object

    @property
    def nu(self) -> tuple:
        return (self.nu1, self.nu2)

    @property
    def e1(self):
        return self.nu1 + self.nu2

    @property
    def e2(self):
        return self.nu1 * self.nu2


@dataclass(frozen=True)
class ChazyParams:
    """Parameters of a Chazy II member.

    ``beta1`` is stored as a real pair ``(re, im)``: purely imaginary
    (``re == 0``) for the second member, purely real (``im == 0``) for
    the first.  ``gamma1`` exists only for the second member.  ``nu``
    retains the generating sigma-form tuple so trajectory checks can
    recover the elementary symmetric functions of the time transform.
    """
    member: str
    alpha1: object
    beta1: Tuple[object, object]
    gamma1: object = None
    nu: Optional[tuple] = None


@dataclass(frozen=True)
class ExampleSpec:
    """Catalogue entry tying an ensemble to its Chazy parameters.

    ``parameters`` maps parameter names to exact rational expression
    strings in the symbols ``n`` (dimension), ``a``, ``b`` (weight
    exponents) and ``l`` (linear-statistics deformation); for a second
    member the key ``beta1_im`` holds Im(beta1) since beta1 is purely
    imaginary there.  ``theta_transform`` is the pair (time-map
    constant, affine shift of the transformed variable).
    """
    id: str
    member: str
    parameters: Dict[str, str]
    nu_map: Tuple[str, ...]
    rho_def: str
    theta_transform: Tuple[str, str]


# ----------------------------------------------------------------------
# parameter maps (type generic: exact rationals or floats)
# ----------------------------------------------------------------------

def _exactify(nu):
    """Promote plain ints to Fractions so '/ 2' stays exact."""
    vals = tuple(nu)
    if all(isinstance(v, int) for v in vals):
        return tuple(Fraction(v) for v in vals)
    return vals


def chazy_second_params(nu) -> ChazyParams:
    """Second-member parameters generated by a sigma-form triple."""
    n1, n2, n3 = _exactify(nu)
    alpha1 = (3 * (n1 * n1 + n2 * n2 + n3 * n3)
              - 2 * (n1 * n2 + n1 * n3 + n2 * n3)) / 2
    beta_im = (n1 - n2 - n3) * (n1 + n2 - n3) * (n1 - n2 + n3) / 2
    gamma1 = -((n1 + n2 - 3 * n3) * (3 * n1 - n2 - n3)
               * (n1 - 3 * n2 + n3) * (n1 + n2 + n3)) / 16
    zero = n1 - n1
    return ChazyParams("Second", alpha1, (zero, beta_im), gamma1,
                       (n1, n2, n3))


def chazy_first_params(nu) -> ChazyParams:
    """First-member parameters generated by a sigma-form pair."""
    n1, n2 = _exactify(nu)
    alpha1 = (-n1 * n1 + n1 * n2 - n2 * n2) / 6
    beta_re = -((n1 - 2 * n2) * (2 * n1 - n2) * (n1 + n2)) / 54
    zero = n1 - n1
    return ChazyParams("First", alpha1, (beta_re, zero), None, (n1, n2))


# ----------------------------------------------------------------------
# residual reports
# ----------------------------------------------------------------------

def _to_mpf(value):
    if isinstance(value, Fraction):
        return mp.mpf(value.numerator) / mp.mpf(value.denominator)
    return mp.mpf(value)


def _mk_report(identity_id, n, alpha, t, lhs, rhs, scale=None
               ) -> ResidualReport:
    """Report |lhs - rhs| against a cancellation-free scale.

    ``scale`` should majorize both sides before internal cancellation
    (sum of absolute values of their building blocks); without it the
    relative measure degenerates to 1 wherever both sides vanish on a
    true solution, e.g. at the zero of a time prefactor.
    """
    residual = abs(lhs - rhs)
    if scale is None:
        scale = max(abs(lhs), abs(rhs))
    if scale == 0:
        scale = mp.mpf(1)
    return ResidualReport(identity_id=identity_id, n=n, alpha=alpha, t=t,
                          residual=residual, scale=scale,
                          relative=residual / scale)


def _sym3(nu):
    n1, n2, n3 = (_to_mpf(v) for v in nu)
    return n1 + n2 + n3, n1 * n2 + n1 * n3 + n2 * n3, n1 * n2 * n3


def _sym2(nu):
    n1, n2 = (_to_mpf(v) for v in nu)
    return n1 + n2, n1 * n2


def sigma_pv_residual(nu, xi, d_xi, dd_xi, t,
                      ctx: Optional[PrecisionContext] = None
                      ) -> ResidualReport:
    """Fifth-Painleve-class sigma equation at one point."""
    ctx = ctx or PrecisionContext()
    with ctx.working():
        e1, e2, e3 = _sym3(nu)
        n1, n2, n3 = (_to_mpf(v) for v in nu)
        xi, p, dd = mp.mpf(xi), mp.mpf(d_xi), mp.mpf(dd_xi)
        t = mp.mpf(t)
        lhs = (t * dd) ** 2
        rhs = (xi - t * p + 2 * p ** 2 + e1 * p) ** 2 \
            - 4 * p * (p + n1) * (p + n2) * (p + n3)
        scale = max(lhs,
                    (abs(xi) + abs(t * p) + 2 * p ** 2
                     + abs(e1 * p)) ** 2
                    + 4 * abs(p) * (abs(p) + abs(n1)) * (abs(p) + abs(n2))
                    * (abs(p) + abs(n3)))
        return _mk_report("sigma_pv_general", None, None, t, lhs, rhs,
                          scale)


def sigma_piv_residual(nu, xi, d_xi, dd_xi, t,
                       ctx: Optional[PrecisionContext] = None
                       ) -> ResidualReport:
    """Fourth-Painleve-class sigma equation at one point."""
    ctx = ctx or PrecisionContext()
    with ctx.working():
        n1, n2 = (_to_mpf(v) for v in nu)
        xi, p, dd = mp.mpf(xi), mp.mpf(d_xi), mp.mpf(dd_xi)
        t = mp.mpf(t)
        lhs = dd ** 2
        rhs = 4 * (t * p - xi) ** 2 - 4 * p * (p + n1) * (p + n2)
        scale = max(lhs,
                    4 * (abs(t * p) + abs(xi)) ** 2
                    + 4 * abs(p) * (abs(p) + abs(n1))
                    * (abs(p) + abs(n2)))
        return _mk_report("sigma_piv_general", None, None, t, lhs, rhs,
                          scale)


def rho_ode_residual_pv(nu, rho, d_rho, dd_rho, t,
                        ctx: Optional[PrecisionContext] = None
                        ) -> ResidualReport:
    """Quartic second-order equation for the derivative of a
    fifth-Painleve-class sigma function, at one point."""
    ctx = ctx or PrecisionContext()
    with ctx.working():
        e1, e2, e3 = _sym3(nu)
        r, p, dd = mp.mpf(rho), mp.mpf(d_rho), mp.mpf(dd_rho)
        t = mp.mpf(t)
        lhs = (t * (p + t * dd) + 8 * r ** 3 + 6 * e1 * r ** 2
               + 4 * e2 * r + 2 * e3) ** 2
        rhs = (4 * r + e1 - t) ** 2 * (
            t ** 2 * p ** 2 + 4 * r ** 4 + 4 * e1 * r ** 3
            + 4 * e2 * r ** 2 + 4 * e3 * r)
        ar = abs(r)
        scale = max(
            (abs(t) * (abs(p) + abs(t * dd)) + 8 * ar ** 3
             + 6 * abs(e1) * r ** 2 + 4 * abs(e2 * r)
             + 2 * abs(e3)) ** 2,
            (4 * ar + abs(e1) + abs(t)) ** 2 * (
                t ** 2 * p ** 2 + 4 * r ** 4 + 4 * abs(e1) * ar ** 3
                + 4 * abs(e2) * r ** 2 + 4 * abs(e3 * r)))
        return _mk_report("pv_rho_quartic", None, None, t, lhs, rhs,
                          scale)


def rho_ode_residual_piv(nu, rho, d_rho, dd_rho, t,
                         ctx: Optional[PrecisionContext] = None
                         ) -> ResidualReport:
    """Quartic second-order equation for the derivative of a
    fourth-Painleve-class sigma function, at one point."""
    ctx = ctx or PrecisionContext()
    with ctx.working():
        e1, e2 = _sym2(nu)
        r, p, dd = mp.mpf(rho), mp.mpf(d_rho), mp.mpf(dd_rho)
        t = mp.mpf(t)
        lhs = (dd + 6 * r ** 2 + 4 * e1 * r + 2 * e2) ** 2
        rhs = 4 * t ** 2 * (p ** 2 + 4 * r ** 3 + 4 * e1 * r ** 2
                            + 4 * e2 * r)
        ar = abs(r)
        scale = max(
            (abs(dd) + 6 * r ** 2 + 4 * abs(e1 * r) + 2 * abs(e2)) ** 2,
            4 * t ** 2 * (p ** 2 + 4 * ar ** 3 + 4 * abs(e1) * r ** 2
                          + 4 * abs(e2 * r)))
        return _mk_report("piv_rho_quartic", None, None, t, lhs, rhs,
                          scale)


# ----------------------------------------------------------------------
# Chazy residuals along trajectories
# ----------------------------------------------------------------------

class _Pair:
    """Minimal (real, imaginary) pair: ring operations only.

    Local to the second-member residual; supports exactly the
    operations the equation needs (+, -, unary -, *), nothing else.
    """

    __slots__ = ("re", "im")

    def __init__(self, re, im):
        self.re = re
        self.im = im

    def __add__(self, other):
        return _Pair(self.re + other.re, self.im + other.im)

    def __sub__(self, other):
        return _Pair(self.re - other.re, self.im - other.im)

    def __neg__(self):
        return _Pair(-self.re, -self.im)

    def __mul__(self, other):
        return _Pair(self.re * other.re - self.im * other.im,
                     self.re * other.im + self.im * other.re)

    def scaled(self, k):
        """Product with a real scalar."""
        return _Pair(k * self.re, k * self.im)

    def magnitude(self):
        return mp.sqrt(self.re * self.re + self.im * self.im)


def _path_guard(rho_path, identity_id):
    """Shared validation for trajectory input."""
    pts = list(rho_path)
    if not pts:
        raise ValueError("rho_path must contain at least one point")
    for p in pts:
        if len(p) != 4:
            raise ValueError("rho_path points must be "
                             "(t, rho, rho', rho'') quadruples")
    return pts


def chazy_second_residual(params: ChazyParams, rho_path,
                          ctx: Optional[PrecisionContext] = None
                          ) -> ResidualReport:
    """Second Chazy member checked along a real-time trajectory.

    ``rho_path`` is a sequence of ``(t, rho, rho', rho'')`` samples of
    the quartic-equation solution on a real ``t`` grid.  The check is
    performed in the transformed variable ``theta(z)``, purely
    imaginary for real data, via a local real-pair representation.
    The reported residual is the worst point of the path.

    Raises ``ComputationAlarm('branch')`` if the path touches ``t = 0``
    (the logarithmic time map is singular there) and warns if the path
    spans both signs of ``t`` (it then crosses the branch cut; the
    fixed branch of :data:`LOG_BRANCH` is recorded per sign).
    """
    if params.member != "Second":
        raise ValueError("params.member must be 'Second'")
    if params.nu is None:
        raise ValueError("params must carry the generating nu tuple")
    ctx = ctx or PrecisionContext()
    pts = _path_guard(rho_path, "chazy_second_member")
    with ctx.working():
        e1, _, _ = _sym3(params.nu)
        alpha1 = _to_mpf(params.alpha1)
        beta1 = _Pair(_to_mpf(params.beta1[0]), _to_mpf(params.beta1[1]))
        gamma1 = _to_mpf(params.gamma1)
        signs = {mp.sign(mp.mpf(p[0])) for p in pts}
        if 0 in signs or mp.mpf(0) in signs:
            raise ComputationAlarm(
                "branch", "logarithmic time map is singular at t = 0")
        if len(signs) > 1:
            warnings.warn(
                "trajectory spans both signs of t and so crosses the "
                "branch cut of the logarithmic time map; residuals use "
                "the fixed branch per sign (%s)" % (LOG_BRANCH,),
                RuntimeWarning)
        worst = None
        for t_raw, rho, d_rho, dd_rho in pts:
            t = mp.mpf(t_raw)
            r, p, dd = mp.mpf(rho), mp.mpf(d_rho), mp.mpf(dd_rho)
            theta = _Pair(mp.mpf(0), -2 * r - e1 / 2)
            theta_z = _Pair(mp.mpf(0), -2 * t * p)
            theta_zz = _Pair(mp.mpf(0), -2 * t * (p + t * dd))
            e_z = _Pair(mp.mpf(0), -t / 2)
            cube = theta * theta * theta
            lhs_root = theta_zz - cube.scaled(2) - theta.scaled(alpha1) \
                - beta1
            lhs = lhs_root * lhs_root
            bracket = theta_z * theta_z \
                - theta * theta * theta * theta \
                - (theta * theta).scaled(alpha1) \
                - (beta1 * theta).scaled(2) \
                - _Pair(gamma1, mp.mpf(0))
            shift = theta - e_z
            rhs = (shift * shift * bracket).scaled(-4)
            diff = lhs - rhs
            residual = diff.magnitude()
            mag_t = theta.magnitude()
            mag_l = (theta_zz.magnitude() + 2 * mag_t ** 3
                     + abs(alpha1) * mag_t + beta1.magnitude()) ** 2
            mag_r = 4 * (mag_t + e_z.magnitude()) ** 2 * (
                theta_z.magnitude() ** 2 + mag_t ** 4
                + abs(alpha1) * mag_t ** 2
                + 2 * beta1.magnitude() * mag_t + abs(gamma1))
            scale = max(mag_l, mag_r)
            if scale == 0:
                scale = mp.mpf(1)
            rel = residual / scale
            if worst is None or rel > worst[0]:
                worst = (rel, residual, scale, t)
        rel, residual, scale, t_worst = worst
        return ResidualReport(identity_id="chazy_second_member", n=None,
                              alpha=None, t=t_worst, residual=residual,
                              scale=scale, relative=rel)


def chazy_first_residual(params: ChazyParams, rho_path,
                         ctx: Optional[PrecisionContext] = None
                         ) -> ResidualReport:
    """First Chazy member checked along a real-time trajectory.

    The change of time is linear (``z = sqrt(2) t``) and the
    transformed variable ``v = -rho/2 - e1/6`` is real, so the check is
    entirely real arithmetic.  The reported residual is the worst
    point of the path.
    """
    if params.member != "First":
        raise ValueError("params.member must be 'First'")
    if params.nu is None:
        raise ValueError("params must carry the generating nu tuple")
    ctx = ctx or PrecisionContext()
    pts = _path_guard(rho_path, "chazy_first_member")
    with ctx.working():
        e1, _ = _sym2(params.nu)
        alpha1 = _to_mpf(params.alpha1)
        beta1 = _to_mpf(params.beta1[0])
        root2 = mp.sqrt(2)
        worst = None
        for t_raw, rho, d_rho, dd_rho in pts:
            t = mp.mpf(t_raw)
            r, p, dd = mp.mpf(rho), mp.mpf(d_rho), mp.mpf(dd_rho)
            z = root2 * t
            v = -r / 2 - e1 / 6
            v_z = -p / (2 * root2)
            v_zz = -dd / 4
            lhs = (v_zz - 6 * v ** 2 - alpha1) ** 2
            rhs = z ** 2 * (v_z ** 2 - 4 * v ** 3 - 2 * alpha1 * v
                            - beta1)
            residual = abs(lhs - rhs)
            scale = max(
                (abs(v_zz) + 6 * v ** 2 + abs(alpha1)) ** 2,
                z ** 2 * (v_z ** 2 + 4 * abs(v) ** 3
                          + 2 * abs(alpha1 * v) + abs(beta1)))
            if scale == 0:
                scale = mp.mpf(1)
            rel = residual / scale
            if worst is None or rel > worst[0]:
                worst = (rel, residual, scale, t)
        rel, residual, scale, t_worst = worst
        return ResidualReport(identity_id="chazy_first_member", n=None,
                              alpha=None, t=t_worst, residual=residual,
                              scale=scale, relative=rel)


# ----------------------------------------------------------------------
# synthetic point data (manufactured solutions of the quartic ODEs)
# ----------------------------------------------------------------------

def synthetic_pv_point(nu, t, rho, d_rho,
                       ctx: Optional[PrecisionContext] = None,
                       branch: int = 1) -> tuple:
    """Solve the fifth-class quartic equation for ``rho''``.

    Given generic ``(t, rho, rho')`` this returns a quadruple
    ``(t, rho, rho', rho'')`` satisfying the quartic equation exactly,
    usable as a one-point trajectory for the transform checks at
    parameter tuples with no computed ensemble trajectory.  ``branch``
    selects the sign of the square root.
    """
    ctx = ctx or PrecisionContext()
    with ctx.working():
        e1, e2, e3 = _sym3(nu)
        t = mp.mpf(t)
        if t == 0:
            raise ValueError("t = 0: the quartic equation does not "
                             "determine rho'' there")
        r, p = mp.mpf(rho), mp.mpf(d_rho)
        w = t ** 2 * p ** 2 + 4 * r ** 4 + 4 * e1 * r ** 3 \
            + 4 * e2 * r ** 2 + 4 * e3 * r
        if w < 0:
            raise ComputationAlarm(
                "branch", "square-root argument of the manufactured "
                "second derivative is negative", discriminant=float(w))
        dd = (branch * (4 * r + e1 - t) * mp.sqrt(w) - t * p
              - (8 * r ** 3 + 6 * e1 * r ** 2 + 4 * e2 * r + 2 * e3)) \
            / t ** 2
        return (t, r, p, dd)


def synthetic_piv_point(nu, t, rho, d_rho,
                        ctx: Optional[PrecisionContext] = None,
                        branch: int = 1) -> tuple:
    """Solve the fourth-class quartic equation for ``rho''``.

    Fourth-class analogue of :func:`synthetic_pv_point`.
    """
    ctx = ctx or PrecisionContext()
    with ctx.working():
        e1, e2 = _sym2(nu)
        t = mp.mpf(t)
        r, p = mp.mpf(rho), mp.mpf(d_rho)
        w = p ** 2 + 4 * r ** 3 + 4 * e1 * r ** 2 + 4 * e2 * r
        if w < 0:
            raise ComputationAlarm(
                "branch", "square-root argument of the manufactured "
                "second derivative is negative", discriminant=float(w))
        dd = branch * 2 * t * mp.sqrt(w) - 6 * r ** 2 - 4 * e1 * r \
            - 2 * e2
        return (t, r, p, dd)


# ----------------------------------------------------------------------
# ensemble trajectories
# ----------------------------------------------------------------------

def lue_rho_path(n: int, alpha, ts: Sequence,
                 ctx: Optional[PrecisionContext] = None) -> list:
    """Trajectory ``(t, rho, rho', rho'')`` with ``rho = r_n`` of the
    cutoff Laguerre ladder, sampled on the grid ``ts``."""
    ctx = ctx or PrecisionContext()
    path = []
    with ctx.working():
        for t in ts:
            spec = WeightSpec("LaguerreCutoff", alpha=mp.mpf(alpha),
                              t=mp.mpf(t))
            chain = op_chain(spec, n + 1, ctx)
            state = ladder_state(chain, spec, n, ctx)
            path.append((state.t, state.r_n, state.d_r, state.dd_r))
    return path


def gue_rho_path(n: int, ts: Sequence,
                 ctx: Optional[PrecisionContext] = None) -> list:
    """Trajectory ``(t, rho, rho', rho'')`` with ``rho = Xi' = 2 r_n``
    of the cutoff Gaussian chain, sampled on the grid ``ts``.

    ``rho''`` is closed through the chain identities:
    ``r_n'' = 2 r_n' (alpha_{n-1} - alpha_n)
    + 2 (n + r_n)(alpha_{n-1}' - alpha_n')``.
    """
    ctx = ctx or PrecisionContext()
    if n < 1:
        raise ValueError("need n >= 1")
    path = []
    with ctx.working():
        for t in ts:
            chain = _gue.gue_chain(mp.mpf(t), n + 1, ctx)
            r = chain.r[n]
            a_n, a_prev = chain.alpha_rec[n], chain.alpha_rec[n - 1]
            d_r, d_a_n, _ = _gue._closure_derivatives(chain, n)
            if n >= 2:
                _, d_a_prev, _ = _gue._closure_derivatives(chain, n - 1)
            else:
                # alpha_0' = 2 (r_0 - alpha_0 (t - alpha_0)), r_0 = 0
                d_a_prev = 2 * (chain.r[0]
                                - a_prev * (mp.mpf(t) - a_prev))
            dd_r = 2 * d_r * (a_prev - a_n) \
                + 2 * (n + r) * (d_a_prev - d_a_n)
            path.append((mp.mpf(t), 2 * r, 2 * d_r, 2 * dd_r))
    return path


def lue_reduction_views(n: int, alpha, t,
                        ctx: Optional[PrecisionContext] = None
                        ) -> Tuple[ResidualReport, ...]:
    """All four views of the Laguerre reduction at one point.

    Returns residual reports for (1) the general fifth-class sigma
    equation on ``Xi = sigma_n`` with ``nu = (0, n, n+alpha)``, (2) the
    specialized quartic equation for ``r_n``, (3) the general quartic
    equation at the same tuple on ``rho = r_n``, and (4) the second
    Chazy member along the one-point trajectory.  A solution must pass
    all four simultaneously.
    """
    ctx = ctx or PrecisionContext()
    with ctx.working():
        alpha_m = mp.mpf(alpha)
        spec = WeightSpec("LaguerreCutoff", alpha=alpha_m, t=mp.mpf(t))
        chain = op_chain(spec, n + 1, ctx)
        state = ladder_state(chain, spec, n, ctx)
        nu = (mp.mpf(0), mp.mpf(n), mp.mpf(n) + alpha_m)
        view_sigma = sigma_pv_residual(nu, state.sigma_n, state.d_sigma,
                                       state.dd_sigma, state.t, ctx)
        view_special = residual_rn_ode(state, ctx)
        view_general = rho_ode_residual_pv(nu, state.r_n, state.d_r,
                                           state.dd_r, state.t, ctx)
        params = chazy_second_params(nu)
        view_chazy = chazy_second_residual(
            params, [(state.t, state.r_n, state.d_r, state.dd_r)], ctx)
        return (view_sigma, view_special, view_general, view_chazy)


def gue_reduction_views(n: int, t,
                        ctx: Optional[PrecisionContext] = None
                        ) -> Tuple[ResidualReport, ...]:
    """All three views of the Gaussian reduction at one point.

    Returns residual reports for (1) the fourth-class sigma equation on
    the log-derivative of the cutoff Hankel determinant with
    ``nu = (0, 2n)``, (2) the quartic equation on ``rho = Xi' = 2 r_n``,
    and (3) the first Chazy member along the one-point trajectory.
    """
    ctx = ctx or PrecisionContext()
    with ctx.working():
        chain = _gue.gue_chain(mp.mpf(t), n + 1, ctx)
        view_sigma = _gue.residual_sigma_piv(chain, n, ctx)
        (point,) = gue_rho_path(n, [t], ctx)
        nu = (mp.mpf(0), mp.mpf(2 * n))
        view_general = rho_ode_residual_piv(nu, point[1], point[2],
                                            point[3], point[0], ctx)
        params = chazy_first_params(nu)
        view_chazy = chazy_first_residual(params, [point], ctx)
        return (view_sigma, view_general, view_chazy)


# ----------------------------------------------------------------------
# example catalogue
# ----------------------------------------------------------------------

def example_table() -> Tuple[ExampleSpec, ...]:
    """Catalogue of the six ensemble examples.

    The strings are exact rational expressions; evaluating the
    ``nu_map`` at exact parameter values and feeding the result to the
    parameter maps must reproduce the ``parameters`` strings exactly
    (see :func:`example_param_check`).
    """
    return (
        ExampleSpec(
            id="LUE_Largest",
            member="Second",
            parameters={
                "alpha1": "(3*a**2 + 4*n**2 + 4*a*n)/2",
                "beta1_im": "a**2*(a + 2*n)/2",
                "gamma1": "(2*n - a)*(a + 2*n)**2*(3*a + 2*n)/16",
            },
            nu_map=("0", "n", "n + a"),
            rho_def="rho(t) = Xi'(t) = r_n(t), Xi = sigma_n",
            theta_transform=("2*I", "-(I/2)*(2*n + a)"),
        ),
        ExampleSpec(
            id="MIMO_MGF",
            member="Second",
            parameters={
                "alpha1": "(4*n**2 + 4*n*a + 3*a**2 + 4*n*l + 2*a*l"
                          " + 3*l**2)/2",
                "beta1_im": "-(a - l)*(a + l)*(2*n + a + l)/2",
                "gamma1": "(2*n + a - l)*(2*n - a + l)*(2*n + 3*a + l)"
                          "*(2*n + a + 3*l)/16",
            },
            nu_map=("l", "-n", "-n - a"),
            rho_def="rho(t) = Xi'(t) = -r_n(t)",
            theta_transform=("2*I", "(I/2)*(2*n + a - l)"),
        ),
        ExampleSpec(
            id="TimeDependentJacobi",
            member="Second",
            parameters={
                "alpha1": "(4*n**2 + 4*n*a + 3*a**2 + 4*n*b + 2*a*b"
                          " + 3*b**2)/2",
                "beta1_im": "-(a - b)*(a + b)*(2*n + a + b)/2",
                "gamma1": "(2*n + a - b)*(2*n - a + b)*(2*n + 3*a + b)"
                          "*(2*n + a + 3*b)/16",
            },
            nu_map=("-a", "n", "n + b"),
            rho_def="rho(t) = Xi'(t) = -r_n(t/2)",
            theta_transform=("2*I", "-(I/2)*(2*n - a + b)"),
        ),
        ExampleSpec(
            id="PollaczekJacobi",
            member="Second",
            parameters={
                "alpha1": "(8*n**2 + 8*n*a + 3*a**2 + 8*n*b + 4*a*b"
                          " + 4*b**2)/2",
                "beta1_im": "-a*(2*n + a)*(2*n + a + 2*b)/2",
                "gamma1": "-(a - 2*b)*(a + 2*b)*(4*n + a + 2*b)"
                          "*(4*n + 3*a + 2*b)/16",
            },
            nu_map=("-(n + a + b)", "n", "-b"),
            rho_def="rho(t) = Xi'(t) = (2*n + a + b)*r_n_star(t)/t - n",
            theta_transform=("2*I", "(I/2)*(a + 2*b)"),
        ),
        ExampleSpec(
            id="GUE_Largest",
            member="First",
            parameters={
                "alpha1": "-2*n**2/3",
                "beta1": "-8*n**3/27",
            },
            nu_map=("0", "2*n"),
            rho_def="rho(t) = Xi'(t) = 2*r_n(t)",
            theta_transform=("sqrt(2)", "-n/3"),
        ),
        ExampleSpec(
            id="GUE_Gap",
            member="First",
            parameters={
                "alpha1": "-2*n**2/3",
                "beta1": "-8*n**3/27",
            },
            nu_map=("0", "2*n"),
            rho_def="r_n(t) = Xi'(t)/2 = rho(t)/2",
            theta_transform=("sqrt(2)", "-n/3"),
        ),
    )


def _eval_rational(expr: str, env: Dict[str, Fraction]) -> Fraction:
    """Evaluate an exact rational expression string."""
    value = eval(expr, {"__builtins__": {}}, dict(env))
    return Fraction(value)


def example_param_check(spec: ExampleSpec, values: Dict[str, int]
                        ) -> Dict[str, bool]:
    """Exact-rational double route through one catalogue entry.

    Evaluates the ``nu_map`` strings at the given integer/rational
    parameter values, runs the appropriate parameter map in Fraction
    arithmetic, and compares against the catalogued expression strings
    evaluated at the same values.  Equality is exact, not approximate.
    """
    env = {k: Fraction(v) for k, v in values.items()}
    nu = tuple(_eval_rational(s, env) for s in spec.nu_map)
    results = {}
    if spec.member == "Second":
        params = chazy_second_params(nu)
        results["alpha1"] = (
            params.alpha1 == _eval_rational(spec.parameters["alpha1"],
                                            env))
        results["beta1_im"] = (
            params.beta1[0] == 0
            and params.beta1[1] == _eval_rational(
                spec.parameters["beta1_im"], env))
        results["gamma1"] = (
            params.gamma1 == _eval_rational(spec.parameters["gamma1"],
                                            env))
    else:
        params = chazy_first_params(nu)
        results["alpha1"] = (
            params.alpha1 == _eval_rational(spec.parameters["alpha1"],
                                            env))
        results["beta1"] = (
            params.beta1[1] == 0
            and params.beta1[0] == _eval_rational(
                spec.parameters["beta1"], env))
    return results


def example_table_json(indent: int = 2) -> str:
    """The example catalogue as a JSON document (exact strings)."""
    payload = []
    for spec in example_table():
        payload.append({
            "id": spec.id,
            "member": spec.member,
            "parameters": dict(spec.parameters),
            "nu_map": list(spec.nu_map),
            "rho_def": spec.rho_def,
            "theta_transform": list(spec.theta_transform),
        })
    return json.dumps(payload, indent=indent)

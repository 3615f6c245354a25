"""Special functions and quadrature rules used across the package.

The incomplete gamma pair is implemented here from scratch because the rest
of the package relies on the two routes being independent: the lower tail is
summed as a power series, the upper tail as a continued fraction, and their
sum is cross-checked against the complete gamma function.  Airy and Kummer
functions are delegated to mpmath, which evaluates them at arbitrary
precision; the accuracy contracts are asserted in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import mpmath as mp

from .context import PrecisionContext

__all__ = [
    "QuadratureRule",
    "lower_incomplete_gamma",
    "upper_incomplete_gamma",
    "airy_pair",
    "kummer_M",
    "kummer_U",
    "gauss_legendre",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss–Legendre nodes/weights on (-1, 1) at a fixed precision."""

    nodes: tuple
    weights: tuple
    order: int

    def map_to(self, a, b):
        """Nodes and weights affinely mapped to the interval (a, b)."""
        half = (b - a) / 2
        mid = (b + a) / 2
        return ([mid + half * x for x in self.nodes],
                [half * w for w in self.weights])


def _gamma_series(a: mp.mpf, x: mp.mpf) -> mp.mpf:
    """Lower tail by the ascending series x^a e^-x sum x^k / (a)_{k+1}."""
    term = mp.mpf(1) / a
    total = term
    k = 0
    tol = mp.mpf(10) ** (-(mp.mp.dps + 5))
    while True:
        k += 1
        term *= x / (a + k)
        total += term
        if abs(term) < abs(total) * tol:
            break
        if k > 100000:
            raise RuntimeError("incomplete gamma series failed to converge")
    return total * mp.exp(-x + a * mp.log(x))


def _gamma_cf(a: mp.mpf, x: mp.mpf) -> mp.mpf:
    """Upper tail by the modified Lentz continued fraction."""
    tiny = mp.mpf(10) ** (-(2 * mp.mp.dps + 30))
    tol = mp.mpf(10) ** (-(mp.mp.dps + 5))
    b = x + 1 - a
    c = 1 / tiny
    d = 1 / b if b != 0 else 1 / tiny
    h = d
    for i in range(1, 200000):
        an = -i * (i - a)
        b += 2
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1 / d
        delta = d * c
        h *= delta
        if abs(delta - 1) < tol:
            break
    else:
        raise RuntimeError("incomplete gamma continued fraction stalled")
    return mp.exp(-x + a * mp.log(x)) * h


def lower_incomplete_gamma(a, x, ctx: PrecisionContext) -> mp.mpf:
    """gamma(a, x) = integral_0^x u^(a-1) e^-u du; x = +inf gives Gamma(a)."""
    with ctx.working():
        a = mp.mpf(a)
        if a <= 0:
            raise ValueError("lower_incomplete_gamma requires a > 0")
        if x == mp.inf:
            return mp.gamma(a)
        x = mp.mpf(x)
        if x < 0:
            raise ValueError("lower_incomplete_gamma requires x >= 0")
        if x == 0:
            return mp.mpf(0)
        if x < a + 1:
            return _gamma_series(a, x)
        return mp.gamma(a) - _gamma_cf(a, x)


def upper_incomplete_gamma(a, x, ctx: PrecisionContext) -> mp.mpf:
    """Gamma(a, x) = integral_x^inf u^(a-1) e^-u du (continued fraction)."""
    with ctx.working():
        a = mp.mpf(a)
        if a <= 0:
            raise ValueError("upper_incomplete_gamma requires a > 0")
        if x == mp.inf:
            return mp.mpf(0)
        x = mp.mpf(x)
        if x < 0:
            raise ValueError("upper_incomplete_gamma requires x >= 0")
        if x == 0:
            return mp.gamma(a)
        if x < a + 1:
            return mp.gamma(a) - _gamma_series(a, x)
        return _gamma_cf(a, x)


def airy_pair(x, ctx: PrecisionContext):
    """(Ai(x), Bi(x)) at working precision."""
    with ctx.working():
        x = mp.mpf(x)
        ai = mp.airyai(x)
        bi = mp.airybi(x)
        if not mp.isfinite(bi):
            raise OverflowError("Bi overflow at x = %s" % x)
        return ai, bi


def kummer_M(mu, nu, z, ctx: PrecisionContext) -> mp.mpf:
    """Confluent hypergeometric M(mu, nu, z)."""
    with ctx.working():
        nu = mp.mpf(nu)
        if nu <= 0 and mp.isint(nu):
            raise ValueError("kummer_M undefined for nonpositive integer nu")
        return mp.hyp1f1(mp.mpf(mu), nu, mp.mpf(z))


def kummer_U(mu, nu, z, ctx: PrecisionContext) -> mp.mpf:
    """Confluent hypergeometric U(mu, nu, z)."""
    with ctx.working():
        val = mp.hyperu(mp.mpf(mu), mp.mpf(nu), mp.mpf(z))
        if not mp.isfinite(val):
            raise ValueError("kummer_U parameter degeneracy (pole)")
        return val


def _legendre_and_derivative(order: int, x: mp.mpf):
    """(P_order(x), P_order'(x)) by the three-term recurrence."""
    p0, p1 = mp.mpf(1), x
    for k in range(1, order):
        p0, p1 = p1, ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
    dp = order * (x * p1 - p0) / (x * x - 1)
    return p1, dp


@lru_cache(maxsize=64)
def _gauss_legendre_cached(order: int, dps: int):
    """Newton iteration on the Legendre recurrence at dps digits."""
    if order == 1:
        with mp.workdps(dps + 10):
            return (mp.mpf(0),), (mp.mpf(2),)
    with mp.workdps(dps + 10):
        nodes = []
        weights = []
        tol = mp.mpf(10) ** (-(dps + 5))
        for i in range(order):
            x = mp.cos(mp.pi * (4 * i + 3) / (4 * order + 2))
            for _ in range(200):
                p, dp = _legendre_and_derivative(order, x)
                dx = p / dp
                x -= dx
                if abs(dx) < tol:
                    break
            _, dp = _legendre_and_derivative(order, x)
            nodes.append(x)
            weights.append(2 / ((1 - x * x) * dp * dp))
        return tuple(nodes), tuple(weights)


def gauss_legendre(order: int, ctx: PrecisionContext) -> QuadratureRule:
    """Gauss–Legendre rule with ``order`` nodes on (-1, 1)."""
    if order < 1:
        raise ValueError("order must be >= 1")
    nodes, weights = _gauss_legendre_cached(order, ctx.dps)
    return QuadratureRule(nodes=nodes, weights=weights, order=order)

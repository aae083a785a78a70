"""Rate functions and finite-``t`` diagnostics for large and moderate deviations.

``Lambda(theta) = Delta(e**theta) - Delta(1)`` is the limiting scaled CGF of
``N(t)`` at speed ``v(delta(t))``; ``Lambda*`` is its Legendre transform and
``x**2 / (2 Lambda''(0))`` the moderate-deviation rate.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .distribution import PrabhakarCoefficients, log_mean, log_series_function, term_window
from .errors import (
    BracketFailure,
    ConfigError,
    RegimeMismatch,
    SecondDerivativeUnavailable,
    TailUnderflow,
)
from .family import (
    B3Verdict,
    FamilyModelSpec,
    GrowthSpec,
    _log_a,
    check_b3_sufficient,
    family_mean,
    growth_for,
    log_partition,
)

__all__ = [
    "ModerateScaling",
    "RateModel",
    "centered_scaled_cgf",
    "closed_form_rate",
    "counterexample_quotients",
    "diag_h1",
    "diag_h2",
    "diag_h3",
    "lambda_of_theta",
    "legendre_transform",
    "md_prelimit_cgf",
    "md_rate",
    "md_target",
    "psi_counterexample",
    "psi_target",
    "rate_model_for",
    "scaled_cgf",
    "speed",
    "tail_rate_exact",
    "tail_rate_target",
]


@dataclass(frozen=True)
class RateModel:
    growth: GrowthSpec
    # Legendre brackets stop at |theta| <= theta_limit
    theta_limit: float = 700.0

    def lam(self, theta: float) -> float:
        return self.growth.Delta(math.exp(theta)) - self.growth.Delta(1.0)

    def dlam(self, theta: float) -> float:
        g = self.growth
        if g.dDelta is not None:
            u = math.exp(theta)
            return g.dDelta(u) * u
        h = 1e-6 * max(1.0, abs(theta))
        return (self.lam(theta + h) - self.lam(theta - h)) / (2.0 * h)

    def d2lam(self, theta: float) -> float:
        g = self.growth
        if g.dDelta is not None and g.d2Delta is not None:
            u = math.exp(theta)
            return g.d2Delta(u) * u * u + g.dDelta(u) * u
        h = 1e-4 * max(1.0, abs(theta))
        return (self.dlam(theta + h) - self.dlam(theta - h)) / (2.0 * h)

    @property
    def d1(self) -> float:
        """``Lambda'(0)``."""
        return self.dlam(0.0)

    @property
    def d2(self) -> float:
        """``Lambda''(0) = Delta''(1) + Delta'(1)``."""
        g = self.growth
        if g.d2Delta is None or g.dDelta is None:
            raise SecondDerivativeUnavailable("Delta''(1) was not supplied")
        return g.d2Delta(1.0) + g.dDelta(1.0)

    def d2_estimate(self) -> float:
        """``Lambda''(0)``, falling back to a second difference of ``Lambda`` with a warning."""
        try:
            return self.d2
        except SecondDerivativeUnavailable:
            warnings.warn("Lambda''(0) estimated by finite differences", RuntimeWarning, stacklevel=2)
            h = 1e-4
            return (self.lam(h) - 2.0 * self.lam(0.0) + self.lam(-h)) / (h * h)

    @property
    def boundary_at_zero(self) -> float:
        """``Lambda*(0) = Delta(1) - lim_{u->0} Delta(u)``."""
        return self.growth.Delta(1.0) - self.growth.Delta_at_zero


def rate_model_for(fam: FamilyModelSpec, growth: GrowthSpec | None = None) -> RateModel:
    coeffs = fam.tail.coeffs
    if growth is None:
        growth = growth_for(fam)
    if isinstance(coeffs, PrabhakarCoefficients):
        return RateModel(growth, 700.0 * coeffs.params.alpha)
    return RateModel(growth)


@dataclass(frozen=True)
class ModerateScaling:
    """``a(t) = v(delta(t))**(-rho)``."""

    rho: float

    def __post_init__(self) -> None:
        if not 0.0 < self.rho < 1.0:
            raise ConfigError(f"rho must lie in (0,1), got {self.rho}")

    def a(self, v: float) -> float:
        return v ** (-self.rho)


def speed(fam: FamilyModelSpec, rm: RateModel, t: float) -> float:
    """``v(delta(t))`` for the tail law."""
    return rm.growth.v(fam.tail.delta(t))


# ---------------------------------------------------------------------------
# limits and transforms


def lambda_of_theta(rm: RateModel, theta: float) -> float:
    return rm.lam(theta)


def legendre_transform(rm: RateModel, x: float, tol: float = 1e-12) -> float:
    """``sup_theta {theta x - Lambda(theta)}``.

    The maximizer solves ``Lambda'(theta) = x``; it is bracketed by doubling
    from ``[-1, 1]`` and located with Brent's method, then Newton-polished to
    ``|Lambda'(theta) - x| <= tol * max(1, |x|)``.  ``x < 0`` gives ``+inf``
    and ``x = 0`` the boundary value ``Delta(1) - Delta(0+)``.
    """
    if math.isnan(x):
        raise ConfigError("x must be a number")
    if x < 0.0:
        return math.inf
    if x == 0.0:
        return rm.boundary_at_zero

    def g(th: float) -> float:
        return rm.dlam(th) - x

    lo, hi = -1.0, 1.0
    while g(lo) > 0.0:
        lo *= 2.0
        if -lo > rm.theta_limit:
            raise BracketFailure(f"Lambda' stays above x={x} down to theta={-rm.theta_limit}")
    while g(hi) < 0.0:
        hi *= 2.0
        if hi > rm.theta_limit:
            raise BracketFailure(f"Lambda' stays below x={x} up to theta={rm.theta_limit}")
    theta = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    target = tol * max(1.0, abs(x))
    for _ in range(8):
        r = g(theta)
        if abs(r) <= target:
            break
        step = r / rm.d2lam(theta)
        if not math.isfinite(step) or not lo <= theta - step <= hi:
            break
        theta -= step
    return theta * x - rm.lam(theta)


def closed_form_rate(alpha: float, lam: float, x: float) -> float:
    """``Lambda*(x)`` for ``Delta(u) = (lam u)**(1/alpha)``."""
    if not 0.0 < alpha <= 1.0 or not lam > 0.0:
        raise ConfigError("need alpha in (0,1] and lambda > 0")
    c = lam ** (1.0 / alpha)
    if x < 0.0:
        return math.inf
    if x == 0.0:
        return c
    return alpha * x * math.log(alpha * x / c) - alpha * x + c


def md_rate(rm: RateModel, x: float) -> float:
    """``x**2 / (2 Lambda''(0))``."""
    c = rm.d2
    if c > 0.0:
        return x * x / (2.0 * c)
    return 0.0 if x == 0.0 else math.inf


def md_target(rm: RateModel, theta: float) -> float:
    return 0.5 * theta * theta * rm.d2


def psi_target(rm: RateModel, theta: float) -> float:
    return max(rm.lam(theta), 0.0)


def tail_rate_target(rm: RateModel, x: float) -> float:
    """``inf_{y >= x} Lambda*(y)``."""
    if x <= rm.d1:
        return 0.0
    return legendre_transform(rm, x)


# ---------------------------------------------------------------------------
# finite-t quantities


def scaled_cgf(fam: FamilyModelSpec, rm: RateModel, theta: float, t: float) -> float:
    """``log E[exp(theta N(t))] / v(delta(t))``."""
    if theta == 0.0:
        return 0.0
    v = speed(fam, rm, t)
    return (log_partition(fam, t, math.exp(theta)) - log_partition(fam, t)) / v


def centered_scaled_cgf(fam: FamilyModelSpec, rm: RateModel, theta: float, t: float) -> float:
    """``log E[exp(theta (N(t) - E N(t)))] / v(delta(t))``; tends to ``Lambda(theta) - theta Lambda'(0)``."""
    v = speed(fam, rm, t)
    return scaled_cgf(fam, rm, theta, t) - theta * family_mean(fam, t) / v


def md_prelimit_cgf(
    fam: FamilyModelSpec, rm: RateModel, ms: ModerateScaling, theta: float, t: float
) -> float:
    """``a(t) log E[exp(s (N(t) - E N(t)))]`` with ``s = theta / sqrt(v a)``."""
    if theta == 0.0:
        return 0.0
    v = speed(fam, rm, t)
    a = ms.a(v)
    s = theta / math.sqrt(v * a)
    log_mgf = log_partition(fam, t, math.exp(s)) - log_partition(fam, t)
    return a * (log_mgf - s * family_mean(fam, t))


def _default_u(fam: FamilyModelSpec, rm: RateModel, t: float, theta: float, rho: float) -> float:
    v = speed(fam, rm, t)
    return math.exp(theta / math.sqrt(v * ModerateScaling(rho).a(v)))


def diag_h1(
    fam: FamilyModelSpec,
    rm: RateModel,
    t: float,
    u_of_t: Callable[[float], float] | None = None,
    *,
    theta: float = 1.0,
    rho: float = 0.5,
) -> float:
    """``log[D(u delta)/D(delta)] - v (Delta(u) - Delta(1))`` for the tail law at ``u = u(t)``."""
    u = u_of_t(t) if u_of_t is not None else _default_u(fam, rm, t, theta, rho)
    if u == 1.0:
        return 0.0
    tail = fam.tail
    delta = tail.delta(t)
    v = rm.growth.v(delta)
    g = rm.growth
    log_ratio = log_series_function(tail, u * delta) - log_series_function(tail, delta)
    return log_ratio - v * (g.Delta(u) - g.Delta(1.0))


def diag_h2(fam: FamilyModelSpec, rm: RateModel, t: float) -> float:
    """``sqrt(v) (Lambda'(0) - delta D'(delta) / (v D(delta)))``."""
    v = speed(fam, rm, t)
    return math.sqrt(v) * (rm.d1 - math.exp(log_mean(fam.tail, t)) / v)


def diag_h3(fam: FamilyModelSpec, rm: RateModel, t: float) -> float:
    """``(delta D'(delta)/D(delta) - E N(t)) / sqrt(v)``; exactly 0 when ``n = 0``."""
    if fam.n == 0:
        return 0.0
    v = speed(fam, rm, t)
    return (math.exp(log_mean(fam.tail, t)) - family_mean(fam, t)) / math.sqrt(v)


def _check_counterexample(fam: FamilyModelSpec) -> None:
    if fam.n != 1:
        raise RegimeMismatch(f"counterexample needs n = 1, got n = {fam.n}")
    if check_b3_sufficient(fam)[0] is B3Verdict.SUFFICIENT:
        raise RegimeMismatch("the exponent condition holds; the family is not in the kinked regime")
    a0 = fam.prefix[0].coeffs.params.alpha
    at0 = fam.prefix[0].delta_trajectory.a_tilde
    a = fam.tail.coeffs.params.alpha
    at = fam.tail.delta_trajectory.a_tilde
    if not at / a - at0 / a0 > 0.0:
        raise RegimeMismatch("need a_tilde/alpha > a_tilde_0/alpha_0")


def psi_counterexample(fam: FamilyModelSpec, rm: RateModel, theta: float, t: float) -> float:
    """Finite-``t`` scaled CGF of a kinked family; its limit is ``psi_target``."""
    _check_counterexample(fam)
    return scaled_cgf(fam, rm, theta, t)


def counterexample_quotients(
    fam: FamilyModelSpec, rm: RateModel, t: float, h: float
) -> tuple[float, float]:
    """One-sided difference quotients of ``Psi_t`` at the origin."""
    _check_counterexample(fam)
    left = -scaled_cgf(fam, rm, -h, t) / h
    right = scaled_cgf(fam, rm, h, t) / h
    return left, right


def _log_tail_mass(fam: FamilyModelSpec, t: float, k0: int) -> float:
    """``log P(N(t) >= k0)``."""
    tail = fam.tail
    delta = tail.delta(t)
    parts = []
    if k0 < fam.n:
        parts.extend(_log_a(fam, 1.0, t)[k0:])
    win = term_window(tail, delta, k_start=max(k0, fam.n), floor=40.0)
    parts.append(win.log_total - log_series_function(tail, delta))
    return float(logsumexp(parts)) - log_partition(fam, t)


def tail_rate_exact(fam: FamilyModelSpec, rm: RateModel, x: float, t: float) -> float:
    """``-log P(N(t) >= x v) / v`` with ``v = v(delta(t))``, by exact summation."""
    if not x > 0:
        raise ConfigError(f"x must be > 0, got {x}")
    v = speed(fam, rm, t)
    k0 = math.ceil(x * v)
    lp = _log_tail_mass(fam, t, k0)
    if lp == -math.inf:
        raise TailUnderflow(f"P(N(t) >= {k0}) is zero at t={t}", math.inf)
    return -lp / v

"""Eventually-constant families of power-series laws.

For ``k < n`` the mass at ``k`` comes from prefix law ``k``; from ``n`` on
every index uses the tail law.  With

    a_k(u, t) = d_{k,k} (u delta_k(t))**k / D_k(delta_k(t))     (k < n)
    b_k(u, t) = d_k (u delta(t))**k / D(delta(t))               (all k)

the unnormalized mass is ``S(u, t) = sum_{k<n} a_k + sum_{k>=n} b_k``, so that
``P(N(t) = k) = (a_k or b_k)(1, t) / S(1, t)`` and
``S(u, t) = D(u delta)/D(delta) + R_n(u, t)``.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from ._window import log_sub_exp
from .distribution import (
    SUPPORT_FLOOR,
    PowerSeriesSpec,
    PrabhakarCoefficients,
    log_mean,
    log_series_function,
    poisson_spec,
    prabhakar_spec,
    term_window,
)
from .errors import ConfigError, NormalizerUnderflow, ZeroDenominator

__all__ = [
    "B3Verdict",
    "ConditionTrace",
    "FamilyModelSpec",
    "GrowthSpec",
    "Verdict",
    "check_b3_ratio",
    "check_b3_sufficient",
    "family_log_pmf",
    "family_mean",
    "family_window",
    "log_partition",
    "power_growth",
    "preset_p1",
    "preset_p2",
    "preset_p3",
    "preset_poisson",
    "probe_central",
    "remainder_rn",
    "trend_verdict",
]


@dataclass(frozen=True)
class FamilyModelSpec:
    prefix: tuple[PowerSeriesSpec, ...]
    tail: PowerSeriesSpec
    # skip the coefficient clause so that check_b3_ratio can report it
    allow_b3_violation: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "prefix", tuple(self.prefix))
        if self.allow_b3_violation:
            return
        for k, p in enumerate(self.prefix):
            d_kk = float(p.coeffs.log_d(np.array([k]))[0])
            d_k = float(self.tail.coeffs.log_d(np.array([k]))[0])
            if d_k == -math.inf and d_kk > -math.inf:
                # (B3) coefficient clause; check_b3_ratio reports the same case as a verdict
                raise ConfigError(f"prefix law {k} has d_{{k,k}} > 0 where the tail has d_k = 0")

    @property
    def n(self) -> int:
        return len(self.prefix)

    @classmethod
    def single(cls, spec: PowerSeriesSpec) -> FamilyModelSpec:
        return cls((), spec)


@dataclass(frozen=True)
class GrowthSpec:
    """Speed ``v`` and limit ``Delta`` with ``log D(u s) / v(s) -> Delta(u)``.

    ``dDelta`` and ``d2Delta`` are optional analytic derivatives;
    ``Delta_at_zero`` is ``lim_{u -> 0+} Delta(u)``.
    """

    v: Callable[[float], float]
    Delta: Callable[[float], float]
    dDelta: Callable[[float], float] | None = None
    d2Delta: Callable[[float], float] | None = None
    Delta_at_zero: float = 0.0
    label: str = "custom"

    @property
    def differentiable(self) -> bool:
        return self.dDelta is not None

    @property
    def second_derivative_available(self) -> bool:
        return self.d2Delta is not None

    def check(self, grid: Sequence[float] = tuple(np.geomspace(0.05, 20.0, 40))) -> None:
        dv = [self.Delta(u) for u in grid]
        if not all(b > a for a, b in zip(dv, dv[1:])):
            raise ConfigError("Delta must be increasing")
        vs = [self.v(s) for s in np.geomspace(1.0, 1e8, 30)]
        if not all(b > a for a, b in zip(vs, vs[1:])):
            raise ConfigError("v must be increasing")


def power_growth(alpha: float, lam: float = 1.0) -> GrowthSpec:
    """``v(s) = s**(1/alpha)`` and ``Delta(u) = (lam u)**(1/alpha)``."""
    r = 1.0 / alpha
    c = lam**r
    return GrowthSpec(
        v=lambda s: s**r,
        Delta=lambda u: c * u**r,
        dDelta=lambda u: c * r * u ** (r - 1.0),
        d2Delta=lambda u: c * r * (r - 1.0) * u ** (r - 2.0),
        Delta_at_zero=0.0,
        label=f"power(alpha={alpha!r}, lambda={lam!r})",
    )


def growth_for(fam: FamilyModelSpec) -> GrowthSpec:
    coeffs = fam.tail.coeffs
    if not isinstance(coeffs, PrabhakarCoefficients):
        raise ConfigError("no analytic growth for a tabulated tail; supply a GrowthSpec")
    return power_growth(coeffs.params.alpha, coeffs.params.lam)


# ---------------------------------------------------------------------------
# presets


def preset_p1(
    alpha: float = 0.5,
    beta: float = 1.0,
    gamma: float = 2.0,
    lam: float = 1.0,
    a_tilde: float = 0.5,
) -> FamilyModelSpec:
    """A single Prabhakar law (``n = 0``)."""
    return FamilyModelSpec((), prabhakar_spec(alpha, beta, gamma, lam, a_tilde))


def preset_p2(
    prefix: Sequence[tuple[float, float]] = ((0.5, 0.5),),
    alpha: float = 0.5,
    a_tilde: float = 0.15,
    lam: float = 1.0,
) -> FamilyModelSpec:
    """Mittag-Leffler laws with ``(alpha_j, a_tilde_j)`` for ``j < n`` and ``(alpha, a_tilde)`` after."""
    specs = tuple(prabhakar_spec(a_j, 1.0, 1.0, lam, at_j) for a_j, at_j in prefix)
    return FamilyModelSpec(specs, prabhakar_spec(alpha, 1.0, 1.0, lam, a_tilde))


def preset_p3(
    alpha0: float = 1.0,
    a_tilde0: float = 0.5,
    alpha: float = 1.0,
    a_tilde: float = 1.0,
    lam: float = 1.0,
) -> FamilyModelSpec:
    """One-step family whose limiting CGF has a kink at the origin."""
    return preset_p2(((alpha0, a_tilde0),), alpha, a_tilde, lam)


def preset_poisson(lam: float = 1.0) -> FamilyModelSpec:
    return FamilyModelSpec((), poisson_spec(lam))


# ---------------------------------------------------------------------------
# masses


def _log_a(fam: FamilyModelSpec, u: float, t: float) -> np.ndarray:
    out = np.empty(fam.n)
    for k, p in enumerate(fam.prefix):
        dk = p.delta(t)
        out[k] = (
            float(p.coeffs.log_d(np.array([k]))[0])
            + k * math.log(u * dk)
            - log_series_function(p, dk)
        )
    return out


def _log_b_head(fam: FamilyModelSpec, u: float, t: float, log_d_delta: float) -> np.ndarray:
    ks = np.arange(fam.n, dtype=np.int64)
    return fam.tail.coeffs.log_d(ks) + ks * math.log(u * fam.tail.delta(t)) - log_d_delta


def _log_tail_from_n(fam: FamilyModelSpec, u: float, t: float, log_d_delta: float) -> float:
    """``log sum_{k>=n} b_k(u, t)``."""
    tail = fam.tail
    ud = u * tail.delta(t)
    log_d_ud = log_series_function(tail, ud)
    if fam.n == 0:
        return log_d_ud - log_d_delta
    head = _log_b_head(fam, u, t, log_d_ud)  # head of the pmf at power u*delta
    log_q = float(logsumexp(head))
    if log_q < math.log(0.5):
        return log_d_ud - log_d_delta + math.log1p(-math.exp(log_q))
    win = term_window(tail, ud, k_start=fam.n, floor=40.0)
    return win.log_total - log_d_delta


def log_partition(fam: FamilyModelSpec, t: float, u: float = 1.0) -> float:
    """``log S(u, t)``; ``S(u, t) / S(1, t)`` is the pgf of ``N(t)``."""
    if not u > 0:
        raise ConfigError(f"u must be > 0, got {u}")
    log_d_delta = log_series_function(fam.tail, fam.tail.delta(t))
    parts = [_log_tail_from_n(fam, u, t, log_d_delta)]
    if fam.n:
        parts.extend(_log_a(fam, u, t))
    out = float(logsumexp(parts))
    if not math.isfinite(out):
        raise NormalizerUnderflow(f"every mass term underflows at t={t}")
    return out


def _log_mass(fam: FamilyModelSpec, t: float, ks: np.ndarray) -> np.ndarray:
    tail = fam.tail
    delta = tail.delta(t)
    out = tail.coeffs.log_d(ks) + ks * math.log(delta) - log_series_function(tail, delta)
    if fam.n:
        low = ks < fam.n
        if np.any(low):
            a = _log_a(fam, 1.0, t)
            out[low] = a[ks[low]]
    return out


def family_log_pmf(fam: FamilyModelSpec, t: float, k: int | np.ndarray) -> float | np.ndarray:
    ks = np.asarray(k, dtype=np.int64)
    if np.any(ks < 0):
        raise ConfigError("k must be >= 0")
    out = _log_mass(fam, t, np.atleast_1d(ks)) - log_partition(fam, t)
    return float(out[0]) if ks.ndim == 0 else out


def family_window(fam: FamilyModelSpec, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Support of ``N(t)`` down to ``SUPPORT_FLOOR`` nats below the mode, with log-pmf values."""
    tail = fam.tail
    delta = tail.delta(t)
    log_z = log_partition(fam, t)
    win = term_window(tail, delta, k_start=fam.n)
    lw = win.logw - log_series_function(tail, delta) - log_z
    ks = win.ks
    if fam.n:
        ks = np.concatenate([np.arange(fam.n, dtype=np.int64), ks])
        lw = np.concatenate([_log_a(fam, 1.0, t) - log_z, lw])
    keep = lw >= float(np.max(lw)) - SUPPORT_FLOOR
    return ks[keep], lw[keep]


def remainder_rn(fam: FamilyModelSpec, u: float, t: float) -> float:
    """``R_n(u, t) = sum_{k<n} (a_k(u, t) - b_k(u, t))``; exactly 0 for ``n = 0``."""
    if fam.n == 0:
        return 0.0
    a = _log_a(fam, u, t)
    b = _log_b_head(fam, u, t, log_series_function(fam.tail, fam.tail.delta(t)))
    return math.fsum(np.exp(a)) - math.fsum(np.exp(b))


def family_mean(fam: FamilyModelSpec, t: float) -> float:
    """``E[N(t)]`` from the tail mean and the prefix corrections."""
    log_z = log_partition(fam, t)
    lm = log_mean(fam.tail, t)
    if fam.n == 0:
        return math.exp(lm)
    ks = np.arange(1, fam.n, dtype=np.int64)
    a = _log_a(fam, 1.0, t)[1:]
    b = _log_b_head(fam, 1.0, t, log_series_function(fam.tail, fam.tail.delta(t)))[1:]
    # sum_{k>=n} k b_k = tail mean - sum_{k<n} k b_k
    if ks.size:
        tail_part = log_sub_exp(lm, float(logsumexp(b + np.log(ks))))
        return math.exp(logsumexp(np.concatenate([[tail_part], a + np.log(ks)])) - log_z)
    return math.exp(lm - log_z)


# ---------------------------------------------------------------------------
# condition checks


class Verdict(str, enum.Enum):
    DECAYING = "Decaying"
    DIVERGING = "Diverging"
    INCONCLUSIVE = "Inconclusive"
    B3_VIOLATION = "B3Violation"
    VACUOUS = "Vacuous"


class B3Verdict(str, enum.Enum):
    SUFFICIENT = "Sufficient"
    NOT_COVERED = "NotCovered"


def trend_verdict(values: Sequence[float], small: float | None = None) -> Verdict:
    """Trend of a sequence over an increasing grid, read from its last three points.

    ``Decaying`` needs a strict decrease on the last three points, a final
    value below the first and, when ``small`` is given, below ``small``.
    """
    v = list(values)
    if len(v) < 3 or not all(math.isfinite(x) for x in v[-3:]):
        return Verdict.INCONCLUSIVE
    a, b, c = v[-3:]
    if a > b > c and c < v[0] and (small is None or c < small):
        return Verdict.DECAYING
    if a < b < c and c > v[0]:
        return Verdict.DIVERGING
    return Verdict.INCONCLUSIVE


@dataclass(frozen=True)
class ConditionTrace:
    k: int
    t_grid: tuple[float, ...]
    log_ratio: tuple[float, ...]
    verdict: Verdict
    note: str = ""
    ratio: tuple[float, ...] = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "ratio", tuple(math.exp(x) if x < 709.0 else math.inf for x in self.log_ratio))


def check_b3_ratio(fam: FamilyModelSpec, k: int, t_grid: Sequence[float]) -> ConditionTrace:
    """``a_k(1, t) / b_k(1, t)`` over ``t_grid`` with a trend verdict.

    A zero tail coefficient under a positive prefix coefficient is reported as
    ``B3Violation``; both zero is ``Vacuous``.
    """
    if not 0 <= k < fam.n:
        raise ConfigError(f"k must lie in [0, n) = [0, {fam.n}), got {k}")
    grid = tuple(float(t) for t in t_grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("t_grid must be strictly increasing")
    d_kk = float(fam.prefix[k].coeffs.log_d(np.array([k]))[0])
    d_k = float(fam.tail.coeffs.log_d(np.array([k]))[0])
    if d_k == -math.inf:
        if d_kk == -math.inf:
            return ConditionTrace(k, grid, (), Verdict.VACUOUS, "d_kk = d_k = 0")
        err = ZeroDenominator(f"d_{k} = 0 while d_{{{k},{k}}} > 0")
        return ConditionTrace(k, grid, (), Verdict.B3_VIOLATION, str(err))
    lr = []
    for t in grid:
        a = _log_a(fam, 1.0, t)[k]
        b = _log_b_head(fam, 1.0, t, log_series_function(fam.tail, fam.tail.delta(t)))[k]
        lr.append(float(a - b))
    return ConditionTrace(k, grid, tuple(lr), trend_verdict(lr, small=math.log(0.1)))


def _exponents(spec: PowerSeriesSpec) -> tuple[float, float, float]:
    coeffs = spec.coeffs
    if not isinstance(coeffs, PrabhakarCoefficients):
        raise ConfigError("sufficient-condition check needs Mittag-Leffler coefficients")
    return coeffs.params.alpha, spec.delta_trajectory.a_tilde, coeffs.params.lam


def check_b3_sufficient(fam: FamilyModelSpec) -> list[B3Verdict]:
    """Per-``k`` check of the exponent conditions that force the ratio to 0.

    Sufficient when ``a_tilde/alpha < a_tilde_k/alpha_k``.  On a tie the
    exponential factors cancel only up to ``lam**(1/alpha) - lam**(1/alpha_k)``
    and the power ``t**((a_tilde_k - a_tilde) k)`` vanishes at ``k = 0``, so the
    tie counts only with ``a_tilde_k < a_tilde`` and either ``lam > 1`` or
    ``lam = 1, k >= 1``.
    """
    alpha, at, lam = _exponents(fam.tail)
    out = []
    for k, p in enumerate(fam.prefix):
        a_k, at_k, lam_k = _exponents(p)
        if lam_k != lam:
            raise ConfigError("prefix and tail must share lambda")
        lhs, rhs = at / alpha, at_k / a_k
        if lhs < rhs and not math.isclose(lhs, rhs, rel_tol=1e-12):
            out.append(B3Verdict.SUFFICIENT)
        elif math.isclose(lhs, rhs, rel_tol=1e-12) and at_k < at and (lam > 1 or (lam == 1 and k >= 1)):
            out.append(B3Verdict.SUFFICIENT)
        else:
            out.append(B3Verdict.NOT_COVERED)
    return out


def probe_central(
    spec: PowerSeriesSpec, growth: GrowthSpec, u: float, s_grid: Sequence[float]
) -> tuple[list[float], Verdict]:
    """``|log D(u s) / v(s) - Delta(u)|`` over ``s_grid`` with its trend."""
    errs = [abs(log_series_function(spec, u * s) / growth.v(s) - growth.Delta(u)) for s in s_grid]
    return errs, trend_verdict(errs)

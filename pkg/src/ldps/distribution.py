"""Single power-series laws ``P(X = k) = d_k delta**k / D(delta)``.

All quantities live on the log scale; at desk-scale ``t`` the normalizer
``D(delta(t))`` is routinely far outside the float range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from scipy.special import gammaln, logsumexp

from . import _window
from .errors import ConfigError, NonConvergence, WindowOverflow
from .special import (
    DEFAULT_REL_TOL,
    PrabhakarParams,
    _concave_from,
    _log_poch_over_factorial,
    prabhakar_derivative_log,
    prabhakar_eval,
)

__all__ = [
    "K_CAP",
    "K_MAX_TABLE",
    "SUPPORT_FLOOR",
    "CoefficientSpec",
    "DeltaTrajectory",
    "PowerSeriesSpec",
    "PrabhakarCoefficients",
    "TabulatedCoefficients",
    "log_mean",
    "log_pgf",
    "log_pmf",
    "log_series_function",
    "mean",
    "pmf_window",
    "poisson_spec",
    "prabhakar_spec",
    "weighted_poisson_log_pmf",
    "weighted_poisson_weight",
]

K_MAX_TABLE = 10**7
# largest index any adaptive window may reach
K_CAP = 10**10
# nats below the mode at which the pmf support is cut
SUPPORT_FLOOR = 60.0


class CoefficientSpec(Protocol):
    """Nonnegative coefficients ``d_k`` of a series function."""

    lam: float | None

    def log_d(self, k: np.ndarray) -> np.ndarray: ...

    def log_series(self, delta: float, rel_tol: float) -> float: ...


@dataclass(frozen=True)
class PrabhakarCoefficients:
    """``d_k = lam**k (gamma)_k / (k! Gamma(alpha k + beta))``, so ``D(x) = E(lam x)``."""

    params: PrabhakarParams

    @property
    def lam(self) -> float:
        return self.params.lam

    def log_d(self, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=np.int64)
        p = self.params
        kf = k.astype(float)
        return (
            kf * math.log(p.lam)
            + _log_poch_over_factorial(p.gamma, k)
            - gammaln(p.alpha * kf + p.beta)
        )

    def log_series(self, delta: float, rel_tol: float) -> float:
        return prabhakar_eval(self.params, delta, rel_tol).log_value

    def log_series_derivative(self, delta: float, rel_tol: float) -> float:
        return prabhakar_derivative_log(self.params, delta, rel_tol)

    @property
    def concave_from(self) -> int:
        return _concave_from(self.params.alpha, self.params.beta)


@dataclass(frozen=True)
class TabulatedCoefficients:
    """Finite table of ``log d_k`` for ``k < len(log_d_table)``; ``-inf`` marks ``d_k = 0``."""

    log_d_table: tuple[float, ...]
    lam: float | None = None
    support: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.log_d_table, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ConfigError("coefficient table must be a non-empty list")
        if arr.size > K_MAX_TABLE:
            raise ConfigError(f"coefficient table has {arr.size} entries, cap is {K_MAX_TABLE}")
        if np.any(np.isnan(arr)) or np.any(arr == np.inf):
            raise ConfigError("log coefficients must be finite or -inf")
        supp = np.flatnonzero(np.isfinite(arr))
        if supp.size == 0:
            raise ConfigError("at least one coefficient must be positive")
        if self.lam is not None and not self.lam > 0:
            raise ConfigError(f"lambda must be > 0, got {self.lam}")
        object.__setattr__(self, "log_d_table", tuple(float(x) for x in arr))
        object.__setattr__(self, "support", tuple(int(i) for i in supp))

    @classmethod
    def from_linear(cls, d: list[float], lam: float | None = None) -> TabulatedCoefficients:
        arr = np.asarray(d, dtype=float)
        if np.any(arr < 0):
            raise ConfigError("coefficients must be nonnegative")
        with np.errstate(divide="ignore"):
            return cls(tuple(np.log(arr)), lam)

    @property
    def k_max(self) -> int:
        return len(self.log_d_table) - 1

    def log_d(self, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=np.int64)
        table = np.asarray(self.log_d_table)
        out = np.full(k.shape, -np.inf)
        inside = (k >= 0) & (k < table.size)
        out[inside] = table[k[inside]]
        return out

    def log_series(self, delta: float, rel_tol: float = DEFAULT_REL_TOL) -> float:
        ks = np.asarray(self.support, dtype=np.int64)
        return float(logsumexp(self.log_d(ks) + ks * math.log(delta)))

    def log_series_derivative(self, delta: float, rel_tol: float = DEFAULT_REL_TOL) -> float:
        ks = np.asarray([k for k in self.support if k > 0], dtype=np.int64)
        if ks.size == 0:
            return -math.inf
        return float(logsumexp(self.log_d(ks) + np.log(ks) + (ks - 1) * math.log(delta)))


@dataclass(frozen=True)
class DeltaTrajectory:
    """Power parameter ``delta(t) = t**a_tilde``; ``a_tilde = 1`` is the identity."""

    a_tilde: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.a_tilde <= 1.0:
            raise ConfigError(f"a_tilde must lie in (0,1], got {self.a_tilde}")

    def __call__(self, t: float) -> float:
        if not t > 0:
            raise ConfigError(f"t must be > 0, got {t}")
        return t if self.a_tilde == 1.0 else t**self.a_tilde


@dataclass(frozen=True)
class PowerSeriesSpec:
    coeffs: PrabhakarCoefficients | TabulatedCoefficients
    delta_trajectory: DeltaTrajectory = DeltaTrajectory()

    @property
    def is_prabhakar(self) -> bool:
        return isinstance(self.coeffs, PrabhakarCoefficients)

    def delta(self, t: float) -> float:
        return self.delta_trajectory(t)


def prabhakar_spec(
    alpha: float, beta: float = 1.0, gamma: float = 1.0, lam: float = 1.0, a_tilde: float = 1.0
) -> PowerSeriesSpec:
    return PowerSeriesSpec(
        PrabhakarCoefficients(PrabhakarParams(alpha, beta, gamma, lam)), DeltaTrajectory(a_tilde)
    )


def poisson_spec(lam: float = 1.0) -> PowerSeriesSpec:
    """``alpha = beta = gamma = 1`` and ``delta(t) = t``: Poisson with mean ``lam*t``."""
    return prabhakar_spec(1.0, 1.0, 1.0, lam, 1.0)


def _check_delta(delta: float) -> None:
    if not (math.isfinite(delta) and delta > 0):
        raise ConfigError(f"delta must be a finite real > 0, got {delta}")


def log_series_function(
    spec: PowerSeriesSpec, delta: float, rel_tol: float = DEFAULT_REL_TOL
) -> float:
    """``log D(delta)``."""
    _check_delta(delta)
    return spec.coeffs.log_series(delta, rel_tol)


def log_pmf(spec: PowerSeriesSpec, t: float, k: int | np.ndarray) -> float | np.ndarray:
    """``log d_k + k log delta(t) - log D(delta(t))``; ``-inf`` where ``d_k = 0``."""
    delta = spec.delta(t)
    ks = np.asarray(k, dtype=np.int64)
    if np.any(ks < 0):
        raise ConfigError("k must be >= 0")
    out = spec.coeffs.log_d(ks) + ks * math.log(delta) - log_series_function(spec, delta)
    return float(out) if out.ndim == 0 else out


def log_pgf(spec: PowerSeriesSpec, t: float, u: float) -> float:
    """``log E[u**X] = log D(u delta) - log D(delta)``."""
    if not u > 0:
        raise ConfigError(f"u must be > 0, got {u}")
    if u == 1.0:
        return 0.0
    delta = spec.delta(t)
    return log_series_function(spec, u * delta) - log_series_function(spec, delta)


def log_mean(spec: PowerSeriesSpec, t: float) -> float:
    delta = spec.delta(t)
    # difference the two large logs before adding the small one
    ratio = spec.coeffs.log_series_derivative(delta, DEFAULT_REL_TOL) - log_series_function(
        spec, delta
    )
    return math.log(delta) + ratio


def mean(spec: PowerSeriesSpec, t: float) -> float:
    """``delta D'(delta) / D(delta)`` at ``delta = delta(t)``."""
    return math.exp(log_mean(spec, t))


def weighted_poisson_weight(spec: PowerSeriesSpec, k: int) -> float:
    """``log w(k)`` with ``w(k) = k! d_k / lam**k``."""
    lam = spec.coeffs.lam
    if lam is None:
        raise ConfigError("weighted-Poisson weights need a scale lambda on the coefficients")
    if k < 0:
        raise ConfigError(f"k must be >= 0, got {k}")
    return math.lgamma(k + 1.0) - k * math.log(lam) + float(spec.coeffs.log_d(np.array([k]))[0])


def weighted_poisson_log_pmf(spec: PowerSeriesSpec, t: float, ks: np.ndarray) -> np.ndarray:
    """Rebuild ``log P(X = k)`` from Poisson(lam*delta) masses reweighted by ``w(k)``."""
    lam = spec.coeffs.lam
    if lam is None:
        raise ConfigError("weighted-Poisson weights need a scale lambda on the coefficients")
    ks = np.asarray(ks, dtype=np.int64)
    m = lam * spec.delta(t)
    log_pois = ks * math.log(m) - m - gammaln(ks + 1.0)
    log_w = np.array([weighted_poisson_weight(spec, int(k)) for k in ks])
    # normalizer E[w(Poisson)] = exp(-m) D(delta)
    return log_pois + log_w - (log_series_function(spec, spec.delta(t)) - m)


def log_terms(spec: PowerSeriesSpec, delta: float):
    """Unnormalized log-terms ``k -> log d_k + k log delta``."""
    logd = math.log(delta)
    coeffs = spec.coeffs

    def f(k: np.ndarray) -> np.ndarray:
        return coeffs.log_d(k) + k * logd

    return f


def term_window(
    spec: PowerSeriesSpec,
    delta: float,
    *,
    k_start: int = 0,
    floor: float = SUPPORT_FLOOR,
    rel_tol: float = 1e-16,
    k_cap: int = K_CAP,
) -> _window.Window:
    """Window over ``k >= k_start`` of ``d_k delta**k`` (unnormalized)."""
    _check_delta(delta)
    f = log_terms(spec, delta)
    coeffs = spec.coeffs
    if isinstance(coeffs, TabulatedCoefficients):
        ks = np.asarray([k for k in coeffs.support if k >= k_start], dtype=np.int64)
        if ks.size == 0:
            return _window.Window(ks, np.zeros(0), -math.inf, 0.0)
        lw = f(ks)
        return _window.Window(ks, lw, float(logsumexp(lw)), 0.0)
    try:
        return _window.scan(
            f,
            k_start,
            concave_from=coeffs.concave_from,
            floor=floor,
            rel_tol=rel_tol,
            k_cap=k_cap,
        )
    except NonConvergence as exc:
        raise WindowOverflow(f"support window exceeds the K cap: {exc}") from exc


def pmf_window(spec: PowerSeriesSpec, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Indices and log-pmf values down to ``SUPPORT_FLOOR`` nats below the mode."""
    delta = spec.delta(t)
    win = term_window(spec, delta)
    logp = win.logw - log_series_function(spec, delta)
    keep = logp >= float(np.max(logp)) - SUPPORT_FLOOR
    return win.ks[keep], logp[keep]

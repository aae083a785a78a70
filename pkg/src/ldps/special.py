r"""Prabhakar (three-parameter Mittag-Leffler) function on the positive axis.

.. math::

    E_{\alpha,\beta}^{\gamma}(z) = \sum_{k\ge 0}
        \frac{(\gamma)_k\, z^k}{k!\,\Gamma(\alpha k + \beta)}

Everything is evaluated on the log scale: with ``z`` of a few hundred and
``alpha = 1/2`` the function is already around ``exp(1e5)``.

Three evaluation paths are provided.

* ``prabhakar_series`` sums the defining series over an adaptive window
  around its dominant term.
* ``prabhakar_asymptotic`` is the leading exponential term
  ``exp(w) z**((gamma - beta)/alpha) / (Gamma(gamma) alpha**gamma)`` with
  ``w = z**(1/alpha)``.  Its error estimate uses the first two
  inverse-factorial coefficients, which are available in closed form.
* ``prabhakar_reduce_integer_gamma`` rewrites ``E^{m+1}`` for integer ``m``
  as a combination of two-parameter functions ``E_{alpha, beta - j}``.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, poch, rgamma

from . import _window
from .errors import (
    BelowCrossover,
    CoefficientSolveFailed,
    ConfigError,
    InconsistentRegimes,
    NonConvergence,
)

__all__ = [
    "ASYMPTOTIC_FROM",
    "SERIES_UP_TO",
    "EvalResult",
    "Method",
    "PrabhakarParams",
    "asymptotic_coefficients",
    "log_pochhammer",
    "pochhammer",
    "prabhakar_asymptotic",
    "prabhakar_derivative_log",
    "prabhakar_eval",
    "prabhakar_reduce_integer_gamma",
    "prabhakar_series",
    "reduction_coefficients",
]

# Crossover band on w = (lambda*u)**(1/alpha).
SERIES_UP_TO = 25.0
ASYMPTOTIC_FROM = 35.0

DEFAULT_REL_TOL = 1e-14
DEFAULT_K_MAX = 10**10

_EPS = float(np.finfo(float).eps)


class Method(str, enum.Enum):
    SERIES = "Series"
    ASYMPTOTIC = "Asymptotic"
    INTEGER_GAMMA_REDUCTION = "IntegerGammaReduction"


@dataclass(frozen=True)
class PrabhakarParams:
    """Parameters of ``u -> E_{alpha,beta}^gamma(lam * u)``."""

    alpha: float
    beta: float
    gamma: float
    lam: float = 1.0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma", "lam"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"{_label(name)} must be a finite real number, got {v!r}")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in (0,1], got {self.alpha}")
        if self.beta <= 0.0:
            raise ConfigError(f"beta must be > 0, got {self.beta}")
        if self.gamma <= 0.0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma}")
        if self.lam <= 0.0:
            raise ConfigError(f"lambda must be > 0, got {self.lam}")


def _label(name: str) -> str:
    return "lambda" if name == "lam" else name


@dataclass(frozen=True)
class EvalResult:
    log_value: float
    method_used: Method
    est_rel_error: float
    # relative gap to the other evaluation path, when one was computed
    disagreement: float | None = None
    # asymptotic path only: the part of est_rel_error due to dropped terms
    truncation_error: float | None = None

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def log_pochhammer(gamma: float, k: int) -> float:
    if k < 0:
        raise ConfigError(f"k must be >= 0, got {k}")
    if k == 0:
        return 0.0
    return float(gammaln(gamma + k) - gammaln(gamma))


def pochhammer(gamma: float, k: int) -> float:
    """Rising factorial ``(gamma)_k``.

    Raises ``OverflowError`` when the value does not fit in a float; use
    :func:`log_pochhammer` in that case.
    """
    if k < 0:
        raise ConfigError(f"k must be >= 0, got {k}")
    if k <= 64:
        out = 1.0
        for i in range(k):
            out *= gamma + i
        if math.isinf(out):
            raise OverflowError(f"(gamma)_k overflows for gamma={gamma}, k={k}")
        return out
    return math.exp(log_pochhammer(gamma, k))


def _log_poch_over_factorial(gamma: float, k: np.ndarray) -> np.ndarray:
    """``log((gamma)_k / k!)`` without cancelling two huge log-gammas."""
    if gamma == 1.0:
        return np.zeros(k.shape)
    kf = k.astype(float)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        ratio = poch(kf + 1.0, gamma - 1.0)  # Gamma(k+gamma)/Gamma(k+1)
        out = np.log(ratio) - gammaln(gamma)
    bad = ~np.isfinite(out)
    if np.any(bad):
        out[bad] = gammaln(kf[bad] + gamma) - gammaln(gamma) - gammaln(kf[bad] + 1.0)
    return out


def _series_logterms(alpha: float, beta: float, gamma: float, logz: float):
    def f(k: np.ndarray) -> np.ndarray:
        kf = k.astype(float)
        return kf * logz + _log_poch_over_factorial(gamma, k) - gammaln(alpha * kf + beta)

    return f


def _concave_from(alpha: float, beta: float) -> int:
    # log-terms are concave once alpha*k dominates the (1-gamma)/k drift
    return int(math.ceil(2.0 / alpha + abs(beta) / alpha)) + 2


def _series_window(
    alpha: float,
    beta: float,
    gamma: float,
    logz: float,
    rel_tol: float,
    k_max: int,
    k_start: int = 0,
) -> _window.Window:
    return _window.scan(
        _series_logterms(alpha, beta, gamma, logz),
        k_start,
        concave_from=_concave_from(alpha, beta),
        floor=max(40.0, -math.log(rel_tol) + 5.0),
        rel_tol=rel_tol,
        k_cap=k_max,
    )


def _check_u(u: float) -> None:
    if not math.isfinite(u) or u < 0.0:
        raise ConfigError(f"u must be a finite real >= 0, got {u}")


def prabhakar_series(
    p: PrabhakarParams,
    u: float,
    rel_tol: float = DEFAULT_REL_TOL,
    *,
    k_max: int = DEFAULT_K_MAX,
) -> EvalResult:
    """Log of ``E_{alpha,beta}^gamma(lam*u)`` from the defining series.

    The sum runs over a window around the dominant term, grown until a
    ratio-test tail bound certifies ``rel_tol``.  Raises ``NonConvergence``
    when the term ratio is still above one at ``k_max``.
    """
    _check_u(u)
    if not 0.0 < rel_tol < 1.0:
        raise ConfigError(f"rel_tol must lie in (0,1), got {rel_tol}")
    if u == 0.0:
        return EvalResult(float(-gammaln(p.beta)), Method.SERIES, 0.0)
    logz = math.log(p.lam) + math.log(u)
    win = _series_window(p.alpha, p.beta, p.gamma, logz, rel_tol, k_max)
    k_hi = float(win.k_hi)
    magnitude = abs(k_hi * logz) + abs(float(gammaln(p.alpha * k_hi + p.beta))) + 1.0
    est = float(win.rel_err + _window.ACCUMULATION_EPS * magnitude)
    return EvalResult(win.log_total, Method.SERIES, est)


def _tricomi(a: float, b: float) -> tuple[float, float]:
    """First two coefficients of ``Gamma(x+a)/Gamma(x+b) ~ x**(a-b) (1 + C1/x + C2/x**2)``."""
    d = a - b
    c1 = d * (a + b - 1.0) / 2.0
    c2 = d * (d - 1.0) / 2.0 * (3.0 * (a + b - 1.0) ** 2 - (d + 1.0)) / 12.0
    return c1, c2


def asymptotic_coefficients(alpha: float, beta: float, gamma: float) -> tuple[float, float]:
    """``(c1, c2)`` of the inverse-factorial expansion, with ``c0 = 1``.

    Obtained by matching ``Gamma(s+gamma)/Gamma(s+1)`` against
    ``sum_j c_j Gamma(alpha s + beta)/Gamma(alpha s + beta - gamma + 1 + j)``
    order by order in ``1/s``; each ``j`` term contributes a two-parameter
    Mittag-Leffler function whose exponential asymptotics are exact.
    """
    l1, l2 = _tricomi(gamma, 1.0)
    c1 = alpha * l1 - _tricomi(beta, beta - gamma + 1.0)[0]
    c2 = (
        alpha**2 * l2
        - _tricomi(beta, beta - gamma + 1.0)[1]
        - c1 * _tricomi(beta, beta - gamma + 2.0)[0]
    )
    return c1, c2


def prabhakar_asymptotic(
    p: PrabhakarParams, u: float, *, w_min: float = SERIES_UP_TO
) -> EvalResult:
    """Leading exponential term of ``E_{alpha,beta}^gamma(lam*u)``.

    ``est_rel_error`` is ``|c1|/w + |c2|/w**2`` plus the algebraically small
    part and rounding; raises ``BelowCrossover`` when ``w < w_min``.
    """
    _check_u(u)
    z = p.lam * u
    w = z ** (1.0 / p.alpha) if z > 0 else 0.0
    if w < w_min:
        raise BelowCrossover(
            f"(lambda*u)**(1/alpha) = {w:.4g} is below the asymptotic threshold {w_min}"
        )
    logz = math.log(z)
    a, b, g = p.alpha, p.beta, p.gamma
    log_value = w + (g - b) / a * logz - float(gammaln(g)) - g * math.log(a)
    c1, c2 = asymptotic_coefficients(a, b, g)
    # algebraic part, sized as for gamma = 1: -sum_k z**-k / Gamma(beta - alpha k)
    alg_terms = sum(abs(float(rgamma(b - a * k))) * z ** (-k) for k in (1, 2, 3))
    log_alg = (b - g) / a * logz + float(gammaln(g)) + g * math.log(a) - w
    alg = alg_terms * math.exp(log_alg) if alg_terms > 0 else 0.0
    truncation = abs(c1) / w + abs(c2) / w**2 + alg
    est = float(truncation + _window.ACCUMULATION_EPS * (1.0 + abs(log_value)))
    return EvalResult(log_value, Method.ASYMPTOTIC, est, truncation_error=truncation)


# ---------------------------------------------------------------------------
# integer-gamma reduction


def _ml_signed_log(alpha: float, b: float, logz: float, rel_tol: float) -> tuple[float, float]:
    """``(sign, log|E_{alpha,b}(z)|)`` for any real ``b``.

    Indices with ``alpha*k + b <= 0`` carry ``1/Gamma`` of either sign (or
    zero at the poles); they are few and summed explicitly.
    """
    k0 = 0 if b > 0 else int(math.floor(-b / alpha)) + 1
    logs, signs = [], []
    for k in range(k0):
        r = float(rgamma(alpha * k + b))
        if r != 0.0:
            logs.append(k * logz + math.log(abs(r)))
            signs.append(math.copysign(1.0, r))
    f = _series_logterms(alpha, b, 1.0, logz)
    win = _window.scan(
        f,
        k0,
        concave_from=k0 + _concave_from(alpha, abs(b)),
        floor=max(40.0, -math.log(rel_tol) + 5.0),
        rel_tol=rel_tol,
    )
    logs.append(win.log_total)
    signs.append(1.0)
    return _window.signed_logsumexp(np.array(logs), np.array(signs))


def _integer_gamma(gamma: float) -> int:
    m = int(round(gamma))
    if m < 1 or abs(gamma - m) > 1e-12:
        raise ConfigError(f"integer-gamma reduction needs a positive integer gamma, got {gamma}")
    return m


@functools.lru_cache(maxsize=256)
def _reduction_solve(alpha: float, beta: float, m: int) -> tuple[tuple[float, ...], float]:
    pts = [0.5 * (i + 1) for i in range(m)]
    a = np.empty((m, m))
    rhs = np.empty(m)
    top = PrabhakarParams(alpha, beta, m + 1.0)
    scale = alpha**m * math.factorial(m)
    for i, u in enumerate(pts):
        logz = math.log(u)
        for j in range(m):
            s, lv = _ml_signed_log(alpha, beta - j, logz, 1e-16)
            a[i, j] = s * math.exp(lv)
        s_m, lv_m = _ml_signed_log(alpha, beta - m, logz, 1e-16)
        lhs = prabhakar_series(top, u, 1e-16).log_value
        rhs[i] = scale * math.exp(lhs) - s_m * math.exp(lv_m)
    cond = float(np.linalg.cond(a))
    if not math.isfinite(cond) or cond > 1e13:
        raise CoefficientSolveFailed(
            f"collocation system singular (cond={cond:.3g}) for alpha={alpha}, beta={beta}, m={m}"
        )
    d = np.linalg.solve(a, rhs)
    return (*map(float, d), 1.0), cond


def reduction_coefficients(alpha: float, beta: float, gamma: int) -> tuple[float, ...]:
    """``d_0 .. d_m`` (``d_m = 1``) with ``E^{m+1} = sum_j d_j E_{alpha,beta-j} / (alpha**m m!)``.

    ``gamma`` is the target exponent ``m + 1``.  The leading coefficient is
    pinned to one and the rest are solved by collocation at
    ``u = 0.5, 1.0, ..., m/2`` against series values.
    """
    m = _integer_gamma(gamma) - 1
    if m == 0:
        return (1.0,)
    return _reduction_solve(float(alpha), float(beta), m)[0]


def prabhakar_reduce_integer_gamma(
    p: PrabhakarParams, u: float, rel_tol: float = DEFAULT_REL_TOL
) -> EvalResult:
    _check_u(u)
    g = _integer_gamma(p.gamma)
    if g == 1:
        return prabhakar_series(p, u, rel_tol)
    if u == 0.0:
        return EvalResult(float(-gammaln(p.beta)), Method.INTEGER_GAMMA_REDUCTION, 0.0)
    m = g - 1
    d, cond = _reduction_solve(float(p.alpha), float(p.beta), m)
    logz = math.log(p.lam * u)
    logs, signs = [], []
    for j, dj in enumerate(d):
        s, lv = _ml_signed_log(p.alpha, p.beta - j, logz, rel_tol)
        if dj != 0.0 and s != 0.0:
            logs.append(lv + math.log(abs(dj)))
            signs.append(s * math.copysign(1.0, dj))
    sign, lv = _window.signed_logsumexp(np.array(logs), np.array(signs))
    if sign <= 0:
        raise CoefficientSolveFailed("reduction produced a non-positive value")
    amplification = math.exp(float(np.max(logs)) - lv)
    est = float(amplification * (cond * _EPS + rel_tol))
    log_value = lv - m * math.log(p.alpha) - math.lgamma(m + 1.0)
    return EvalResult(log_value, Method.INTEGER_GAMMA_REDUCTION, est)


# ---------------------------------------------------------------------------
# dispatcher


def _is_integer(x: float) -> bool:
    return x >= 1.0 and abs(x - round(x)) <= 1e-12


def prabhakar_eval(
    p: PrabhakarParams,
    u: float,
    rel_tol: float = DEFAULT_REL_TOL,
    *,
    cross_check: bool = False,
) -> EvalResult:
    """Pick the evaluation path for ``E_{alpha,beta}^gamma(lam*u)``.

    Series for ``w <= 25``, asymptotic for ``w >= 35`` (when its error
    estimate meets ``rel_tol``; otherwise the series), both in between.
    With ``cross_check`` and integer ``gamma >= 2`` the reduction path is also
    evaluated and its relative gap stored in ``disagreement``.
    """
    _check_u(u)
    if u == 0.0:
        return prabhakar_series(p, u, rel_tol)
    w = (p.lam * u) ** (1.0 / p.alpha)
    if w <= SERIES_UP_TO:
        res = prabhakar_series(p, u, rel_tol)
    elif w >= ASYMPTOTIC_FROM:
        res = prabhakar_asymptotic(p, u)
        # rounding of the log value is shared by both paths; only truncation decides
        if res.truncation_error > rel_tol:
            try:
                res = prabhakar_series(p, u, rel_tol)
            except NonConvergence:
                pass
    else:
        ser = prabhakar_series(p, u, rel_tol)
        asy = prabhakar_asymptotic(p, u)
        gap = abs(math.expm1(asy.log_value - ser.log_value))
        if gap > 10.0 * (ser.est_rel_error + asy.est_rel_error) + 1e-13:
            raise InconsistentRegimes(
                f"series and asymptotic differ by {gap:.3g} (estimates "
                f"{ser.est_rel_error:.3g}, {asy.est_rel_error:.3g}) at w={w:.4g}"
            )
        best = ser if ser.est_rel_error <= asy.est_rel_error else asy
        res = EvalResult(best.log_value, best.method_used, best.est_rel_error, gap)
    if cross_check and _is_integer(p.gamma) and p.gamma >= 2 and res.method_used is Method.SERIES:
        red = prabhakar_reduce_integer_gamma(p, u, rel_tol)
        gap = abs(math.expm1(red.log_value - res.log_value))
        res = EvalResult(res.log_value, res.method_used, res.est_rel_error, gap)
    return res


def prabhakar_derivative_log(
    p: PrabhakarParams, u: float, rel_tol: float = DEFAULT_REL_TOL
) -> float:
    """``log d/du E_{alpha,beta}^gamma(lam*u)``, via ``lam*gamma*E_{alpha,alpha+beta}^{gamma+1}``."""
    if not u > 0.0:
        raise ConfigError(f"u must be > 0, got {u}")
    shifted = PrabhakarParams(p.alpha, p.alpha + p.beta, p.gamma + 1.0, p.lam)
    return math.log(p.lam) + math.log(p.gamma) + prabhakar_eval(shifted, u, rel_tol).log_value

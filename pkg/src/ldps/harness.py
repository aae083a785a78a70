"""Sampling from ``N(t)`` and Monte Carlo estimates of tail rates."""

from __future__ import annotations

import functools
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .deviation import RateModel, speed, tail_rate_exact, tail_rate_target
from .errors import ConfigError, SupportTooLarge, WindowOverflow
from .family import FamilyModelSpec, family_window

__all__ = [
    "MAX_SUPPORT",
    "CumulativeTable",
    "McEstimate",
    "SamplerState",
    "cumulative_table",
    "empirical_vs_exact_report",
    "mc_tail_rate",
    "sample",
]

MAX_SUPPORT = 20_000_000
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class SamplerState:
    """Counter-based stream: Philox keyed by ``seed`` (low word) and ``stream_id`` (high word)."""

    seed: int
    stream_id: int = 0
    rng_kind: str = "philox4x64"

    def __post_init__(self) -> None:
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= v <= _U64:
                raise ConfigError(f"{name} must be a 64-bit unsigned integer, got {v!r}")

    def generator(self) -> np.random.Generator:
        key = int(self.seed) | (int(self.stream_id) << 64)
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class McEstimate:
    point: float
    std_error: float
    n_samples: int
    censored: bool = False
    hits: int = 0


@dataclass(frozen=True)
class CumulativeTable:
    ks: np.ndarray
    cdf: np.ndarray
    # log of the pmf mass outside the table, dropped by renormalization
    log_mass_lost: float

    def log_sf(self, k0: int) -> float:
        """``log P(N >= k0)`` from the renormalized table."""
        i = int(np.searchsorted(self.ks, k0, side="left"))
        if i >= self.ks.size:
            return -math.inf
        below = self.cdf[i - 1] if i > 0 else 0.0
        return math.log1p(-below) if below < 1.0 else -math.inf


@functools.lru_cache(maxsize=64)
def cumulative_table(fam: FamilyModelSpec, t: float) -> CumulativeTable:
    try:
        ks, lp = family_window(fam, t)
    except WindowOverflow as exc:
        raise SupportTooLarge(str(exc)) from exc
    if ks.size > MAX_SUPPORT:
        raise SupportTooLarge(f"support window has {ks.size} points, cap is {MAX_SUPPORT}")
    log_total = float(logsumexp(lp))
    p = np.exp(lp - log_total)
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    lost = math.log(-math.expm1(log_total)) if log_total < 0.0 else -math.inf
    return CumulativeTable(ks, cdf, lost)


def sample(fam: FamilyModelSpec, t: float, state: SamplerState, n: int) -> np.ndarray:
    """``n`` draws of ``N(t)`` by inverse CDF on the truncated, renormalized pmf."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    table = cumulative_table(fam, float(t))
    u = state.generator().random(n)
    idx = np.searchsorted(table.cdf, u, side="right")
    np.minimum(idx, table.ks.size - 1, out=idx)
    return table.ks[idx]


def _tail_estimate(draws: np.ndarray, k0: int, v: float) -> McEstimate:
    n = draws.size
    hits = int(np.count_nonzero(draws >= k0))
    if hits == 0:
        return McEstimate(math.inf, math.inf, n, True, 0)
    p = hits / n
    # delta method: sd(log p_hat) = sqrt((1 - p) / (n p))
    return McEstimate(-math.log(p) / v, math.sqrt((1.0 - p) / (n * p)) / v, n, False, hits)


def mc_tail_rate(
    fam: FamilyModelSpec, rm: RateModel, x: float, t: float, state: SamplerState, n: int
) -> McEstimate:
    """``-log(p_hat) / v`` with ``p_hat`` the frequency of ``N(t) >= x v``."""
    if not x > 0:
        raise ConfigError(f"x must be > 0, got {x}")
    if n < 1000:
        raise ConfigError(f"n must be >= 1000, got {n}")
    v = speed(fam, rm, t)
    return _tail_estimate(sample(fam, t, state, n), math.ceil(x * v), v)


@dataclass(frozen=True)
class TailRow:
    x: float
    t: float
    stream_id: int
    exact_rate: float
    mc_rate: float
    mc_stderr: float
    censored: bool
    target: float

    @property
    def within_3se(self) -> bool:
        return (not self.censored) and abs(self.mc_rate - self.exact_rate) <= 3.0 * self.mc_stderr


def empirical_vs_exact_report(
    fam: FamilyModelSpec,
    rm: RateModel,
    x_grid: Sequence[float],
    t_grid: Sequence[float],
    state: SamplerState,
    n: int,
    n_streams: int = 1,
) -> list[TailRow]:
    """One row per ``(stream, t, x)``; stream ``j`` uses ``stream_id = state.stream_id + j``."""
    if not x_grid or not t_grid:
        raise ConfigError("x_grid and t_grid must be non-empty")
    rows = []
    for j in range(n_streams):
        st = SamplerState(state.seed, state.stream_id + j)
        for t in t_grid:
            v = speed(fam, rm, t)
            draws = sample(fam, t, st, n)
            for x in x_grid:
                est = _tail_estimate(draws, math.ceil(x * v), v)
                rows.append(
                    TailRow(
                        float(x),
                        float(t),
                        st.stream_id,
                        tail_rate_exact(fam, rm, x, t),
                        est.point,
                        est.std_error,
                        est.censored,
                        tail_rate_target(rm, x),
                    )
                )
    return rows

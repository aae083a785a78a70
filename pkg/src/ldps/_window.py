"""Log-domain summation of unimodal nonnegative sequences.

Every series in the package (Prabhakar sums, pmf normalizers, tilted moment
sums) has log-terms that are concave in ``k`` beyond a short head.  We locate
the peak, then grow a contiguous window outward until both edges are far below
the peak and a geometric tail bound certifies the discarded mass.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import NonConvergence

LogTerms = Callable[[np.ndarray], np.ndarray]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Window:
    ks: np.ndarray
    logw: np.ndarray
    log_total: float
    rel_err: float

    @property
    def k_lo(self) -> int:
        return int(self.ks[0])

    @property
    def k_hi(self) -> int:
        return int(self.ks[-1])


def _f(logterm: LogTerms, k: int) -> float:
    return float(logterm(np.array([k], dtype=np.int64))[0])


def _find_peak(logterm: LogTerms, k0: int, k_cap: int) -> int:
    """Index of the maximum of a sequence that is concave on ``k >= k0``."""
    if _f(logterm, k0 + 1) <= _f(logterm, k0):
        return k0
    lo, hi = k0, max(2 * k0, k0 + 64)
    while _f(logterm, hi + 1) > _f(logterm, hi):
        lo, hi = hi, 2 * hi
        if hi > k_cap:
            raise NonConvergence(f"term ratio still >= 1 at k={hi} (k_max={k_cap})")
    # invariant: f increases at lo, does not increase at hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _f(logterm, mid + 1) > _f(logterm, mid):
            lo = mid
        else:
            hi = mid
    return hi


def scan(
    logterm: LogTerms,
    k_start: int = 0,
    *,
    concave_from: int = 0,
    floor: float = 60.0,
    rel_tol: float = 1e-16,
    k_cap: int = 10**12,
    max_terms: int = 50_000_000,
    k_end: int | None = None,
) -> Window:
    """Sum ``exp(logterm(k))`` over ``k >= k_start`` in the log domain.

    The head ``[k_start, concave_from + 64)`` is always summed in full; past
    it the log-terms must be concave.  Edges stop once they sit ``floor`` nats
    below the peak and the dropped tails are bounded by ``rel_tol`` relative
    to the total.  ``k_end`` (inclusive) truncates finite sequences.
    """
    head_end = max(k_start + 64, concave_from + 64)
    if k_end is not None:
        head_end = min(head_end, k_end + 1)
    head_ks = np.arange(k_start, head_end, dtype=np.int64)
    head_lw = logterm(head_ks)
    if k_end is not None and head_end > k_end:
        lt = float(logsumexp(head_lw))
        return Window(head_ks, head_lw, lt, 0.0)

    c = head_end
    peak = _find_peak(logterm, c, k_cap)
    if k_end is not None:
        peak = min(peak, k_end)
    f_head = float(np.max(head_lw)) if head_lw.size else -math.inf
    half = max(32, int(4.0 * math.sqrt(peak - c + 1.0)))
    lo = max(c, peak - half)
    hi = peak + half
    if k_end is not None:
        hi = min(hi, k_end)
    ks = np.arange(lo, hi + 1, dtype=np.int64)
    lw = logterm(ks)
    chunks_ks, chunks_lw = [ks], [lw]
    fmax = max(f_head, float(np.max(lw)))
    n_terms = head_ks.size + ks.size

    def total() -> float:
        return float(logsumexp(np.concatenate([head_lw, *chunks_lw])))

    # right edge
    step = half
    right_bound = 0.0
    while True:
        f_hi = float(chunks_lw[-1][-1])
        if k_end is not None and hi >= k_end:
            right_bound = 0.0
            break
        log_r = _f(logterm, hi + 1) - f_hi
        if log_r < 0.0 and f_hi < fmax - floor:
            r = math.exp(log_r)
            right_bound = math.exp(f_hi - fmax) * r / (1.0 - r)
            if right_bound <= 0.5 * rel_tol * math.exp(total() - fmax):
                break
        new = np.arange(hi + 1, hi + step + 1, dtype=np.int64)
        if k_end is not None:
            new = new[new <= k_end]
        nlw = logterm(new)
        chunks_ks.append(new)
        chunks_lw.append(nlw)
        fmax = max(fmax, float(np.max(nlw)))
        hi = int(new[-1])
        n_terms += new.size
        step *= 2
        if n_terms > max_terms or hi > k_cap:
            raise NonConvergence(f"window exceeded {max_terms} terms / k_max={k_cap}")

    # left edge; terms decrease toward the head on this side of the peak
    step = half
    left_bound = 0.0
    left_ks: list[np.ndarray] = []
    left_lw: list[np.ndarray] = []
    while lo > c:
        f_lo = float(left_lw[-1][0]) if left_lw else float(chunks_lw[0][0])
        if f_lo < fmax - floor:
            left_bound = math.exp(f_lo - fmax) * (lo - c)
            if left_bound <= 0.5 * rel_tol * math.exp(total() - fmax):
                break
        new = np.arange(max(c, lo - step), lo, dtype=np.int64)
        nlw = logterm(new)
        left_ks.append(new)
        left_lw.append(nlw)
        chunks_lw.append(nlw)
        fmax = max(fmax, float(np.max(nlw)))
        lo = int(new[0])
        n_terms += new.size
        step *= 2
        if n_terms > max_terms:
            raise NonConvergence(f"window exceeded {max_terms} terms")
    if lo <= c:
        left_bound = 0.0

    all_ks = np.concatenate([head_ks, *reversed(left_ks), *chunks_ks])
    all_lw = np.concatenate([head_lw, *reversed(left_lw), *chunks_lw[: len(chunks_ks)]])
    order = np.argsort(all_ks, kind="stable")
    all_ks, all_lw = all_ks[order], all_lw[order]
    log_total = float(logsumexp(all_lw))
    scale = math.exp(fmax - log_total)
    return Window(all_ks, all_lw, log_total, (left_bound + right_bound) * scale)


def log_sub_exp(a: float, b: float) -> float:
    """``log(exp(a) - exp(b))`` for ``a >= b``."""
    if b == -math.inf:
        return a
    if b > a:
        raise ValueError("log_sub_exp requires a >= b")
    if b == a:
        return -math.inf
    return a + math.log1p(-math.exp(b - a))


def signed_logsumexp(logs: np.ndarray, signs: np.ndarray) -> tuple[float, float]:
    """Return ``(sign, log|sum|)`` of ``sum(signs * exp(logs))``."""
    logs = np.asarray(logs, dtype=float)
    signs = np.asarray(signs, dtype=float)
    keep = (signs != 0) & np.isfinite(logs)
    if not np.any(keep):
        return 0.0, -math.inf
    m = float(np.max(logs[keep]))
    s = math.fsum(signs[keep] * np.exp(logs[keep] - m))
    if s == 0.0:
        return 0.0, -math.inf
    return math.copysign(1.0, s), m + math.log(abs(s))


ACCUMULATION_EPS = 16.0 * _EPS

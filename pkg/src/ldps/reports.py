"""Tabular reports behind the CLI commands, and their CSV encoding."""

from __future__ import annotations

import csv
import math
import os
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Any, TypeVar

import numpy as np

from . import __version__
from .config import ModelConfig
from .deviation import (
    ModerateScaling,
    closed_form_rate,
    counterexample_quotients,
    diag_h1,
    diag_h2,
    diag_h3,
    legendre_transform,
    md_prelimit_cgf,
    md_target,
    psi_counterexample,
    psi_target,
    scaled_cgf,
    speed,
    tail_rate_exact,
    tail_rate_target,
)
from .distribution import PrabhakarCoefficients
from .family import family_window, remainder_rn, trend_verdict
from .harness import SamplerState, empirical_vs_exact_report, sample

__all__ = [
    "DiagnosticsReport",
    "cgf_report",
    "counterexample_report",
    "diagnostics_report",
    "format_cell",
    "mc_report",
    "md_report",
    "pmap",
    "pmf_report",
    "psi_report",
    "rate_report",
    "sample_report",
    "tail_report",
]

T = TypeVar("T")
R = TypeVar("R")


def _threads() -> int:
    raw = os.environ.get("LDPS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def pmap(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Ordered map over at most ``LDPS_THREADS`` worker threads."""
    items = list(items)
    n = min(_threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def format_cell(x: Any) -> str:
    """Shortest round-trip text for floats, ``true``/``false`` for flags."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


@dataclass(frozen=True)
class DiagnosticsReport:
    columns: tuple[str, ...]
    rows: tuple[tuple[Any, ...], ...]
    verdicts: dict[str, str] = field(default_factory=dict)

    def column(self, name: str) -> list[Any]:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def write_csv(self, fh: IO[str], cfg: ModelConfig, command: str) -> None:
        fh.write(
            f"# ldps {__version__} config_sha256={cfg.sha256()} seed={cfg.seed} command={command}\n"
        )
        for key in sorted(self.verdicts):
            fh.write(f"# verdict {key}={self.verdicts[key]}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([format_cell(c) for c in row])


# ---------------------------------------------------------------------------


def pmf_report(cfg: ModelConfig, t_grid: Sequence[float] | None = None) -> DiagnosticsReport:
    fam = cfg.family()
    ts = list(t_grid or cfg.t_grid)
    rows = []
    for t, (ks, lp) in zip(ts, pmap(lambda t: family_window(fam, t), ts)):
        rows.extend((t, int(k), float(l), math.exp(l)) for k, l in zip(ks, lp))
    return DiagnosticsReport(("t", "k", "log_pmf", "pmf"), tuple(rows))


def cgf_report(cfg: ModelConfig) -> DiagnosticsReport:
    fam, rm = cfg.family(), cfg.rate_model()
    cells = [(th, t) for th in cfg.theta_grid for t in cfg.t_grid]
    vals = pmap(lambda c: scaled_cgf(fam, rm, c[0], c[1]), cells)
    rows = []
    errs: dict[float, list[float]] = {}
    for (th, t), s in zip(cells, vals):
        target = rm.lam(th)
        rows.append((th, t, s, target, abs(s - target)))
        errs.setdefault(th, []).append(abs(s - target))
    verdicts = {f"theta={th!r}": trend_verdict(e).value for th, e in errs.items() if th != 0.0}
    return DiagnosticsReport(("theta", "t", "scaled_cgf", "lambda_target", "abs_err"), tuple(rows), verdicts)


def rate_report(cfg: ModelConfig, x_grid: Sequence[float] | None = None) -> DiagnosticsReport:
    rm = cfg.rate_model()
    xs = x_grid if x_grid is not None else [round(0.05 * i, 10) for i in range(1, 201)]
    coeffs = cfg.family().tail.coeffs
    closed = isinstance(coeffs, PrabhakarCoefficients)
    rows = []
    for x, num in zip(xs, pmap(lambda x: legendre_transform(rm, x), xs)):
        cf = closed_form_rate(coeffs.params.alpha, coeffs.params.lam, x) if closed else None
        rows.append((x, num, cf, abs(num - cf) if cf is not None else None))
    return DiagnosticsReport(("x", "numeric_rate", "closed_form_rate", "abs_diff"), tuple(rows))


def md_report(cfg: ModelConfig) -> DiagnosticsReport:
    fam, rm = cfg.family(), cfg.rate_model()
    cells = [(rho, th, t) for rho in cfg.rho_list for th in cfg.theta_grid for t in cfg.t_grid]
    vals = pmap(lambda c: md_prelimit_cgf(fam, rm, ModerateScaling(c[0]), c[1], c[2]), cells)
    rows = []
    series: dict[tuple[float, float], list[float]] = {}
    for (rho, th, t), val in zip(cells, vals):
        target = md_target(rm, th)
        rows.append((rho, th, t, val, target, abs(val - target)))
        series.setdefault((rho, th), []).append(abs(val - target))
    verdicts = {
        f"rho={rho!r},theta={th!r}": trend_verdict(e).value for (rho, th), e in series.items() if th != 0.0
    }
    return DiagnosticsReport(
        ("rho", "theta", "t", "md_prelimit", "md_target", "abs_err"), tuple(rows), verdicts
    )


def tail_report(cfg: ModelConfig) -> DiagnosticsReport:
    fam, rm = cfg.family(), cfg.rate_model()
    cells = [(x, t) for x in cfg.effective_x_grid() for t in cfg.t_grid]
    vals = pmap(lambda c: tail_rate_exact(fam, rm, c[0], c[1]), cells)
    rows = []
    series: dict[float, list[float]] = {}
    for (x, t), r in zip(cells, vals):
        target = tail_rate_target(rm, x)
        threshold = math.ceil(x * speed(fam, rm, t))
        rows.append((x, t, threshold, r, target, abs(r - target)))
        series.setdefault(x, []).append(abs(r - target))
    verdicts = {f"x={x!r}": trend_verdict(e).value for x, e in series.items()}
    return DiagnosticsReport(
        ("x", "t", "threshold", "exact_rate", "target", "abs_err"), tuple(rows), verdicts
    )


def counterexample_report(cfg: ModelConfig, t: float, h: float) -> DiagnosticsReport:
    fam, rm = cfg.family(), cfg.rate_model()
    left, right = counterexample_quotients(fam, rm, t, h)
    right_target = rm.d1
    return DiagnosticsReport(
        ("t", "h", "left_quotient", "right_quotient", "left_target", "right_target"),
        ((t, h, left, right, 0.0, right_target),),
    )


def psi_report(cfg: ModelConfig, t: float) -> DiagnosticsReport:
    fam, rm = cfg.family(), cfg.rate_model()
    vals = pmap(lambda th: psi_counterexample(fam, rm, th, t), cfg.theta_grid)
    rows = tuple(
        (th, t, p, psi_target(rm, th), abs(p - psi_target(rm, th))) for th, p in zip(cfg.theta_grid, vals)
    )
    return DiagnosticsReport(("theta", "t", "psi", "psi_target", "abs_err"), rows)


def diagnostics_report(cfg: ModelConfig, theta: float = 1.0, rho: float = 0.5) -> DiagnosticsReport:
    """Per-``t`` scaled-CGF error, H1, H2, H3, ``R_n(1, t)`` and the moderate-deviation pre-limit."""
    fam, rm = cfg.family(), cfg.rate_model()
    ms = ModerateScaling(rho)

    def one(t: float) -> tuple[Any, ...]:
        return (
            t,
            speed(fam, rm, t),
            abs(scaled_cgf(fam, rm, theta, t) - rm.lam(theta)),
            diag_h1(fam, rm, t, theta=theta, rho=rho),
            diag_h2(fam, rm, t),
            diag_h3(fam, rm, t),
            remainder_rn(fam, 1.0, t),
            md_prelimit_cgf(fam, rm, ms, theta, t),
            md_target(rm, theta),
        )

    rows = tuple(pmap(one, cfg.t_grid))
    cols = ("t", "v", "scaled_cgf_abs_err", "H1", "H2", "H3", "R_n", "md_prelimit", "md_target")
    rep = DiagnosticsReport(cols, rows)
    verdicts = {
        name: trend_verdict([abs(x) for x in rep.column(name)]).value
        for name in ("scaled_cgf_abs_err", "H1", "H2", "H3", "R_n")
    }
    verdicts["md_prelimit"] = trend_verdict(
        [abs(a - b) for a, b in zip(rep.column("md_prelimit"), rep.column("md_target"))]
    ).value
    return DiagnosticsReport(cols, rows, verdicts)


def sample_report(cfg: ModelConfig, t: float, n: int, n_streams: int) -> DiagnosticsReport:
    fam = cfg.family()
    states = [SamplerState(cfg.seed, j) for j in range(n_streams)]
    draws = pmap(lambda st: sample(fam, t, st, n), states)
    rows = tuple(
        (st.stream_id, t, i, int(v)) for st, d in zip(states, draws) for i, v in enumerate(d)
    )
    return DiagnosticsReport(("stream_id", "t", "index", "value"), rows)


def mc_report(cfg: ModelConfig) -> DiagnosticsReport:
    fam, rm = cfg.family(), cfg.rate_model()
    rows = empirical_vs_exact_report(
        fam,
        rm,
        cfg.effective_x_grid(),
        cfg.t_grid,
        SamplerState(cfg.seed, 0),
        cfg.n_samples,
        cfg.n_streams,
    )
    cols = ("x", "t", "stream_id", "exact_rate", "mc_rate", "mc_stderr", "censored", "target", "within_3se")
    out = tuple(
        (r.x, r.t, r.stream_id, r.exact_rate, r.mc_rate, r.mc_stderr, r.censored, r.target, r.within_3se)
        for r in rows
    )
    cells: dict[tuple[float, float], list[bool]] = {}
    for r in rows:
        if not r.censored:
            cells.setdefault((r.x, r.t), []).append(r.within_3se)
    verdicts = {
        f"x={x!r},t={t!r}": f"{sum(v)}/{len(v)}" for (x, t), v in sorted(cells.items())
    }
    return DiagnosticsReport(cols, out, verdicts)

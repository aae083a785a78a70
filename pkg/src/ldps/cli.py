"""Command-line entry point: ``ldps <command> ...``.

Exit codes: 0 success, 2 invalid arguments or configuration, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import contextlib
import math
import sys
from collections.abc import Iterator, Sequence
from typing import IO

from . import __version__
from .config import ModelConfig, resolve_config
from .errors import ConfigError, NumericError
from .reports import (
    DiagnosticsReport,
    cgf_report,
    counterexample_report,
    diagnostics_report,
    mc_report,
    md_report,
    pmf_report,
    psi_report,
    rate_report,
    sample_report,
    tail_report,
)
from .special import PrabhakarParams, prabhakar_eval

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


@contextlib.contextmanager
def _open_out(path: str | None) -> Iterator[IO[str]]:
    if path is None or path == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc.strerror}") from exc
    with fh:
        yield fh


def _emit(report: DiagnosticsReport, cfg: ModelConfig, command: str, out: str | None) -> None:
    with _open_out(out) as fh:
        report.write_csv(fh, cfg, command)


def _config(args: argparse.Namespace) -> ModelConfig:
    cfg = resolve_config(args.config)
    return cfg.with_overrides(
        seed=args.seed,
        t_grid=getattr(args, "t_grid", None),
        theta_grid=getattr(args, "theta", None),
        x_grid=getattr(args, "x", None),
        rho_list=getattr(args, "rho", None),
    )


# ---------------------------------------------------------------------------
# commands


def cmd_ml_eval(args: argparse.Namespace) -> int:
    try:
        p = PrabhakarParams(args.alpha, args.beta, args.gamma, args.lam)
    except ConfigError as exc:
        raise ConfigError(str(exc)) from exc
    res = prabhakar_eval(p, args.u, args.rel_tol)
    if args.log:
        shown = res.log_value
    else:
        shown = math.exp(res.log_value) if res.log_value < 709.0 else math.inf
        if math.isinf(shown):
            print("value overflows binary64; rerun with --log", file=sys.stderr)
    print(f"{shown!r} method={res.method_used.value} est_rel_error={res.est_rel_error!r}")
    return 0


def cmd_pmf(args: argparse.Namespace) -> int:
    cfg = _config(args)
    _emit(pmf_report(cfg), cfg, "pmf", args.out)
    return 0


def cmd_cgf_converge(args: argparse.Namespace) -> int:
    cfg = _config(args)
    _emit(cgf_report(cfg), cfg, "cgf-converge", args.out)
    return 0


def cmd_rate(args: argparse.Namespace) -> int:
    cfg = _config(args)
    _emit(rate_report(cfg, args.x), cfg, "rate", args.out)
    return 0


def cmd_md_check(args: argparse.Namespace) -> int:
    cfg = _config(args)
    _emit(md_report(cfg), cfg, "md-check", args.out)
    return 0


def cmd_tail_rate(args: argparse.Namespace) -> int:
    cfg = _config(args)
    _emit(tail_report(cfg), cfg, "tail-rate", args.out)
    return 0


def cmd_diagnostics(args: argparse.Namespace) -> int:
    cfg = _config(args)
    _emit(diagnostics_report(cfg, args.theta_h, args.rho_h), cfg, "diagnostics", args.out)
    return 0


def cmd_counterexample(args: argparse.Namespace) -> int:
    cfg = _config(args)
    h = args.h if args.h is not None else cfg.h
    t = args.t if args.t is not None else cfg.t_grid[-1]
    _emit(counterexample_report(cfg, t, h), cfg, "counterexample", args.out)
    if args.psi_out:
        _emit(psi_report(cfg, t), cfg, "counterexample", args.psi_out)
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    cfg = _config(args)
    t = args.t if args.t is not None else cfg.t_grid[0]
    _emit(sample_report(cfg, t, args.n, args.streams), cfg, "sample", args.out)
    return 0


def cmd_mc_report(args: argparse.Namespace) -> int:
    cfg = _config(args)
    cfg = cfg.with_overrides(n_samples=args.n, n_streams=args.streams)
    _emit(mc_report(cfg), cfg, "mc-report", args.out)
    return 0


# ---------------------------------------------------------------------------
# parser


def _floats(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _add_common(p: argparse.ArgumentParser, *, grids: Sequence[str] = ()) -> None:
    p.add_argument("--config", required=True, help="config JSON path or preset name (p1, p2, p3, poisson)")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--seed", type=int, help="override the config seed")
    if "t" in grids:
        p.add_argument("--t-grid", type=_floats, help="comma-separated t values")
    if "theta" in grids:
        p.add_argument("--theta", type=_floats, help="comma-separated theta values")
    if "x" in grids:
        p.add_argument("--x", type=_floats, help="comma-separated x values")
    if "rho" in grids:
        p.add_argument("--rho", type=_floats, help="comma-separated rho values")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ldps", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ldps {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ml-eval", help="evaluate the Prabhakar function E^gamma_{alpha,beta}(lambda u)")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--rel-tol", type=float, default=1e-14)
    p.add_argument("--log", action="store_true", help="print the natural log of the value")
    p.set_defaults(func=cmd_ml_eval)

    p = sub.add_parser("pmf", help="pmf of N(t) over its adaptive support")
    _add_common(p, grids=("t",))
    p.set_defaults(func=cmd_pmf)

    p = sub.add_parser("cgf-converge", help="finite-t scaled CGF against its limit")
    _add_common(p, grids=("t", "theta"))
    p.set_defaults(func=cmd_cgf_converge)

    p = sub.add_parser("rate", help="numeric Legendre transform against the closed form")
    _add_common(p, grids=("x",))
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("md-check", help="moderate-deviation pre-limit CGF")
    _add_common(p, grids=("t", "theta", "rho"))
    p.set_defaults(func=cmd_md_check)

    p = sub.add_parser("tail-rate", help="exact tail rates against Lambda*")
    _add_common(p, grids=("t", "x"))
    p.set_defaults(func=cmd_tail_rate)

    p = sub.add_parser("diagnostics", help="H1, H2, H3, R_n and scaled-CGF error per t")
    _add_common(p, grids=("t",))
    p.add_argument("--theta-h", type=float, default=1.0, help="theta used for H1 and the pre-limit CGF")
    p.add_argument("--rho-h", type=float, default=0.5, help="rho used for H1 and the pre-limit CGF")
    p.set_defaults(func=cmd_diagnostics)

    p = sub.add_parser("counterexample", help="one-sided quotients of the kinked limit at 0")
    _add_common(p, grids=("theta",))
    p.add_argument("--h", type=float, help="difference step (default: config h)")
    p.add_argument("--t", type=float, help="time (default: last t in the config grid)")
    p.add_argument("--psi-out", help="also write Psi_t over the theta grid to this CSV")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("sample", help="draw N(t) by inverse CDF")
    _add_common(p)
    p.add_argument("--t", type=float, help="time (default: first t in the config grid)")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--streams", type=int, default=1)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("mc-report", help="Monte Carlo tail rates against exact summation")
    _add_common(p, grids=("t", "x"))
    p.add_argument("--n", type=int, help="draws per stream (default: config n_samples)")
    p.add_argument("--streams", type=int, help="number of streams (default: config n_streams)")
    p.set_defaults(func=cmd_mc_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("n", "streams"):
        v = getattr(args, name, None)
        if v is not None and v < 1:
            parser.error(f"--{name} must be >= 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"ldps: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"ldps: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

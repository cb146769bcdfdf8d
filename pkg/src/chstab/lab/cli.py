"""Command-line front end: ``chstab {cstar,gap-scan,simulate,decay,figure3}``.

Exit codes: 0 success, 1 usage/config/file error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from ..dynamics import NewtonDivergence, decay_fit, gamma_tilde
from ..gap import (
    EigensolverError, compute_cstar, compute_cstar_discrete, scan, write_scan_csv,
)
from ..io import read_timeseries_csv
from ..spectral import Discretization
from . import svg
from .config import ConfigError, load_config
from .experiments import resolve_output, run_experiment, run_figure3

EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_list(text: str, cast=float) -> list:
    """Parse ``"1,2,5"``, an integer range ``"1..8"`` or ``"log:1:200:10"``."""
    text = text.strip()
    try:
        if text.startswith("log:"):
            _, a, b, n = text.split(":")
            return [cast(v) for v in np.geomspace(float(a), float(b), int(n))]
        if ".." in text:
            a, b = text.split("..")
            return [cast(v) for v in range(int(a), int(b) + 1)]
        return [cast(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse list {text!r}") from None


def _int_list(text):
    return parse_list(text, int)


def _float_list(text):
    return parse_list(text, float)


def _window(text):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be 'ta,tb', got {text!r}") from None
    return a, b


def cmd_cstar(args):
    if args.nu <= 0:
        raise UsageError("--nu must be positive")
    if args.R < 0:
        raise UsageError("--R must be nonnegative")
    print(f"C* (continuous)    = {compute_cstar(args.R, args.nu):.10g}")
    print(f"C* (discrete proof) = {compute_cstar_discrete(args.R, args.nu):.10g}")


def cmd_gap_scan(args):
    if args.nu <= 0:
        raise UsageError("--nu must be positive")
    if not args.M or not args.lam:
        raise UsageError("--M and --lambda lists must be nonempty")
    disc = Discretization(args.dim, args.modes, args.grid)
    rows = scan(disc, args.nu, args.R, args.M, args.lam, workers=args.workers)
    out = resolve_output(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_scan_csv(rows, out)
    print(f"wrote {out} ({len(rows)} rows)")
    if args.svg:
        Ms = sorted(set(args.M))
        lams = sorted(set(args.lam))
        Z = np.empty((len(Ms), len(lams)))
        for r in rows:
            Z[Ms.index(r.M), lams.index(r.lam)] = r.alpha_min
        levels = args.levels if args.levels else []
        path = resolve_output(args.svg)
        svg.contour_plot(Ms, lams, Z, levels, path, highlight=rows[0].c_star,
                         title=f"alpha_min(M, lambda), nu={args.nu:g}, R={args.R:g}",
                         xlabel="M", ylabel="lambda")
        print(f"wrote {path}")
    certified = [r for r in rows if r.gamma > 0]
    print(f"C* = {rows[0].c_star:.10g}; {len(certified)} of {len(rows)} grid points have gamma > 0")


def cmd_simulate(args):
    cfg = load_config(args.config)
    result = run_experiment(cfg, out_dir=args.output_dir, base_dir=Path(args.config).parent)
    for line in result.summary_lines():
        print(line)


def cmd_decay(args):
    try:
        data = read_timeseries_csv(args.input)
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc.strerror}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    t, zz = data["t"], data["z_norm_sq"]
    window = args.window if args.window else (t[0], t[-1])
    gamma_hat, r2 = decay_fit((t, zz), window)
    print(f"gamma_hat = {gamma_hat:.10g}")
    print(f"r_squared = {r2:.10g}")
    if args.svg:
        pos = zz > 0
        series = [("log ||z||^2", t[pos], np.log(zz[pos]))]
        reference = None
        if args.gamma_cert is not None:
            tau = float(t[1] - t[0]) if len(t) > 1 else 1.0
            gt = gamma_tilde(args.gamma_cert, tau)
            reference = (f"slope -gamma_tilde = {-gt:.4g}", t, math.log(zz[0]) - gt * (t - t[0]))
        path = resolve_output(args.svg)
        svg.line_plot(series, path, title="tracking error", xlabel="t",
                      ylabel="log ||z||^2", reference=reference)
        print(f"wrote {path}")


def cmd_figure3(args):
    results = run_figure3(args.output_dir, modes=args.modes, nu=args.nu, tau=args.tau,
                          t_end=args.t_end, seed=args.seed, amplitude=args.amplitude,
                          linear_solver=args.linear_solver)
    print(f"{'M':>3} {'lambda':>8} {'|z(T)|/|z(0)|':>15} {'gamma_hat':>11}  verdict")
    for r in results:
        print(f"{r.config.M:>3} {r.config.lam:>8g} {r.ratio:>15.4e} {r.gamma_hat:>11.4g}  {r.verdict}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="chstab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("cstar", help="print the constant C*(R, nu)")
    s.add_argument("--nu", type=float, required=True)
    s.add_argument("--R", type=float, required=True)
    s.set_defaults(func=cmd_cstar)

    s = sub.add_parser("gap-scan", help="alpha_min over an (M, lambda) grid")
    s.add_argument("--nu", type=float, required=True)
    s.add_argument("--R", type=float, required=True)
    s.add_argument("--M", type=_int_list, required=True, help="e.g. 1..8 or 2,4,8")
    s.add_argument("--lambda", dest="lam", type=_float_list, required=True,
                   help="e.g. 1,10,100 or log:1:200:10")
    s.add_argument("--dim", type=int, default=2)
    s.add_argument("--modes", type=int, default=24)
    s.add_argument("--grid", type=int, default=None)
    s.add_argument("--out", default="gap_scan.csv")
    s.add_argument("--svg", default=None)
    s.add_argument("--levels", type=_float_list, default=None)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_gap_scan)

    s = sub.add_parser("simulate", help="run one experiment from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--output-dir", default=None)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("decay", help="fit the decay rate of a time-series CSV")
    s.add_argument("--input", required=True)
    s.add_argument("--window", type=_window, default=None, help="ta,tb")
    s.add_argument("--gamma-cert", type=float, default=None,
                   help="certificate rate to overlay as a reference slope")
    s.add_argument("--svg", default=None)
    s.set_defaults(func=cmd_decay)

    s = sub.add_parser("figure3", help="five-run stabilisation matrix")
    s.add_argument("--output-dir", default="figure3")
    s.add_argument("--modes", type=int, default=32)
    s.add_argument("--nu", type=float, default=0.01)
    s.add_argument("--tau", type=float, default=1e-3)
    s.add_argument("--t-end", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--amplitude", type=float, default=0.0,
                   help="random perturbation added to the tanh start")
    s.add_argument("--linear-solver", default="auto", choices=["auto", "dense", "krylov"])
    s.set_defaults(func=cmd_figure3)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NewtonDivergence, EigensolverError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())

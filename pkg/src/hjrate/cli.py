"""Command line entry point.

    hjrate radial --k 2 --tau 1 --eps-list 0.0078125,0.00390625 --out out/
    hjrate sweep --config run.ini
    hjrate mc --config run.ini
    hjrate check --suite all --config run.ini

Exit status: 0 when every check passes, 1 when a check fails, 2 on
configuration or computation errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, parse_config
from .rates import default_eps_grid
from .runner import EXIT_ERROR, RunResult, run_checks, run_experiment, run_mc


def _eps_list(text: str) -> list:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty eps list")
    return vals


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^64)")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=None, help="override the mc seed")
    common.add_argument("--threads", type=_positive_int, default=1)
    common.add_argument("--plot", action="store_true", help="also write rates.svg")
    common.add_argument("--out", default=None, help="output directory")

    parser = argparse.ArgumentParser(prog="hjrate", parents=[common],
                                     description="Vanishing viscosity rate experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("radial", parents=[common], help="radial example sweep at x = 0")
    p.add_argument("--k", type=_positive_int, required=True)
    p.add_argument("--d", type=_positive_int, default=None, help="ambient dimension (default k)")
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--eps-list", type=_eps_list, default=None)

    for name, helptext in (("sweep", "eps sweep, fit and bound checks"),
                           ("mc", "Monte Carlo control simulation")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--config", required=True)

    p = sub.add_parser("check", parents=[common], help="run check suites")
    p.add_argument("--suite", choices=("bounds", "supconv", "semiconcavity", "entropy", "all"),
                   required=True)
    p.add_argument("--config", required=True)
    return parser


def radial_config(k: int, tau: float, eps_list, d=None) -> RunConfig:
    eps_list = eps_list or default_eps_grid()
    text = "\n".join([
        "[problem]", 'g = "neg_proj_norm"', f"k = {k}", f"d = {d or k}", f"T = {tau!r}",
        "[sweep]", "eps = [" + ", ".join(repr(float(e)) for e in eps_list) + "]",
        'backend = "radial"',
    ])
    return parse_config(text)


def _load(path: str) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def _report(result: RunResult, out):
    for name, path in result.paths.items():
        print(f"wrote {name}: {path}", file=out)
    verdict = "PASS" if result.status == 0 else "FAIL"
    print(f"checks: {verdict}", file=out)


def main(argv=None, out=sys.stdout, err=sys.stderr) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "radial":
            cfg = radial_config(args.k, args.tau, args.eps_list, args.d)
        else:
            cfg = _load(args.config)
        if args.seed is not None:
            cfg.mc["seed"] = args.seed
        if args.command in ("radial", "sweep"):
            result = run_experiment(cfg, args.out, args.threads, plot=args.plot or None)
            table = result.table
            print("epsilon,gap", file=out)
            for e, g in zip(table.eps, table.gap):
                print(f"{e:.6g},{g:.10g}", file=out)
        elif args.command == "mc":
            result = run_mc(cfg, args.out, args.threads)
        else:
            result = run_checks(cfg, args.suite, args.out, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_ERROR
    except (ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_ERROR
    _report(result, out)
    return result.status


if __name__ == "__main__":
    sys.exit(main())

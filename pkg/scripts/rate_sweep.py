"""Sweep eps for the built-in test problems and print the fitted rates.

    python3 scripts/rate_sweep.py --out out/rates

Each case gets its own directory with rates.csv, fit.json, checks.json and
rates.svg. The expected column holds the small-eps asymptotic coefficients;
the two-term fit over 2^-7..2^-13 absorbs part of the O(eps^2) term, so
k = 3 and abs_norm sit a few percent off in the eps coefficient.
"""

import argparse
import math
from pathlib import Path

from hjrate.config import parse_config
from hjrate.radial import expansion_coefficients
from hjrate.runner import run_experiment

CASES = {
    "radial_k1": '[problem]\ng = "neg_proj_norm"\nk = 1\nd = 1\n',
    "radial_k2": '[problem]\ng = "neg_proj_norm"\nk = 2\nd = 2\n[grid]\nn = 81\n',
    "radial_k3": '[problem]\ng = "neg_proj_norm"\nk = 3\nd = 3\n[grid]\nn = 41\n',
    "abs_norm": '[problem]\ng = "abs_norm"\n',
    "cosine": '[problem]\ng = "cosine"\nomega = 2.0\n[sweep]\nt = 0.5\n[grid]\nlo = -5.0\nhi = 5.0\nn = 2001\n',
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/rates")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--cases", nargs="*", default=list(CASES))
    args = ap.parse_args()

    print(f"{'case':<10} {'eps log eps':>12} {'eps':>12} {'expected':>22} {'checks':>7}")
    for name in args.cases:
        cfg = parse_config(CASES[name])
        res = run_experiment(cfg, out=str(Path(args.out) / name), threads=args.threads, plot=True)
        coef = res.fit.coefficients
        k = cfg.problem["k"]
        want = ""
        if cfg.problem["g"] == "neg_proj_norm":
            e = expansion_coefficients(k)
            want = f"{e['eps_log_eps']:.3f}, {e['eps']:.4f}"
        elif cfg.problem["g"] == "abs_norm":
            want = f"-0.5, {-0.5 * math.log(2 / math.pi):.4f}"
        print(f"{name:<10} {coef['eps_log_eps']:>12.5f} {coef['eps']:>12.5f} {want:>22} "
              f"{'PASS' if res.status == 0 else 'FAIL':>7}")


if __name__ == "__main__":
    main()

"""Monte Carlo value of the optimal feedback against the quadrature value,
for a ladder of Euler step counts.

The plain estimator is dominated by sampling noise; the control-variate
column shows the O(1/M) Euler bias.
"""

import argparse

from hjrate.cole_hopf import viscous_value_point
from hjrate.fields import FnSpec, ProblemSpec
from hjrate.mc import McConfig, simulate_feedback_sde


def main():
    ap = argparse.ArgumentParser(description="MC defect vs number of Euler steps")
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--paths", type=int, default=10_000)
    ap.add_argument("--steps", type=int, nargs="*", default=[25, 50, 100, 200, 400])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    p = ProblemSpec(FnSpec.neg_proj_norm(1), FnSpec.zero(), 1.0, 1)
    ref = viscous_value_point(p, [0.0], 0.0, args.eps)
    print(f"reference {ref:.8f}")
    print(f"{'M':>5} {'value':>12} {'stderr':>10} {'defect':>10} {'cv defect':>10} {'cv stderr':>10}")
    for m in args.steps:
        cfg = McConfig((0.0,), 0.0, args.eps, args.paths, m, args.seed)
        r = simulate_feedback_sde(cfg, p, threads=args.threads)
        print(f"{m:>5} {r.value:>12.6f} {r.stderr:>10.2e} {abs(r.value - ref):>10.2e} "
              f"{abs(r.value_cv - ref):>10.2e} {r.stderr_cv:>10.2e}")


if __name__ == "__main__":
    main()

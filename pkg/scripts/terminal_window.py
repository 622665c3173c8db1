"""Gap near the terminal time against 3 L^2 eta + 2 L sqrt(eps eta)."""

import numpy as np

from hjrate.fields import FnSpec, Grid, ProblemSpec
from hjrate.rates import default_eps_grid, sweep_epsilon

line = Grid.uniform(-4.0, 4.0, 801)
eps = default_eps_grid()
problems = {
    "neg_proj_norm": ProblemSpec(FnSpec.neg_proj_norm(1), FnSpec.zero(), 1.0, 1),
    "abs_norm": ProblemSpec(FnSpec.abs_norm(), FnSpec.zero(), 1.0, 1),
    "cosine": ProblemSpec(FnSpec.cosine(2.0), FnSpec.zero(), 1.0, 1),
}

print(f"{'problem':<14} {'eta':>6} {'max |gap|':>11} {'min bound':>11}")
for name, p in problems.items():
    for eta in (0.2, 0.05, 0.01, 0.002):
        table = sweep_epsilon(p, [0.0], p.T - eta, eps, grid=line)
        bound = 3 * p.L**2 * eta + 2 * p.L * np.sqrt(table.eps * eta)
        print(f"{name:<14} {eta:>6} {np.max(np.abs(table.gap)):>11.3e} {bound.min():>11.3e}")

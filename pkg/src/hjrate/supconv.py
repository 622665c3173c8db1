"""Sup-convolution regularization of the inviscid solution and the
property report (Lipschitz bound, semiconcavity, -1/delta semiconvexity,
sandwich 0 <= phi^{0,delta} - phi^0 <= 2 L delta)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fields import (Grid, ProblemSpec, ScalarField, estimate_lipschitz,
                     estimate_second_difference_bounds)
from .hopf_lax import hopf_lax_solve, quadratic_inf_convolution


def sup_convolution(fld: ScalarField, delta: float) -> ScalarField:
    """max over grid y of fld(y) - |x - y|^2 / (2 delta).

    Computed as the negated lower envelope of -fld, so it is the exact dual of
    quadratic_inf_convolution and inherits its smaller-index tie breaking.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    return -quadratic_inf_convolution(-fld, delta)


@dataclass
class SupConvReport:
    delta: float
    t: float
    h: float
    lipschitz: Optional[float]
    max_second_diff: Optional[float]
    min_second_diff: Optional[float]
    gap_max: Optional[float]
    gap_min: Optional[float]
    bounds: dict
    clauses: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.clauses.values() if c["applicable"])

    def as_dict(self) -> dict:
        return {
            "delta": self.delta, "t": self.t, "h": self.h,
            "lipschitz": self.lipschitz,
            "max_second_diff": self.max_second_diff,
            "min_second_diff": self.min_second_diff,
            "gap_max": self.gap_max, "gap_min": self.gap_min,
            "clauses": self.clauses, "pass": self.passed,
        }


def _clause(applicable: bool, measured: float, bound: float, upper: bool = True,
            reason: str = "") -> dict:
    if not applicable:
        return {"applicable": False, "pass": True, "measured": measured, "bound": bound,
                "slack": None, "reason": reason}
    slack = bound - measured if upper else measured - bound
    return {"applicable": True, "pass": bool(slack >= 0), "measured": measured,
            "bound": bound, "slack": slack}


def supconv_report(problem: ProblemSpec, t: float, grid: Grid, delta: float,
                   tol: float = 1e-8, lip_tol: float = 1e-6) -> SupConvReport:
    """Check the sup-convolution properties inside the trusted region.

    The region is the Hopf-Lax trusted interior shrunk by a further 2 L delta,
    the largest distance a sup-convolution maximizer can travel. Curvature
    clauses carry the grid term h^2/(2 delta).
    """
    inviscid = hopf_lax_solve(problem, t, grid)
    reg = sup_convolution(inviscid.field, delta)
    L = problem.L
    margin = inviscid.trusted_margin + 2 * L * delta
    h = max(grid.h)
    lam = problem.lam
    bounds = {"L": L, "lambda": lam, "margin": margin}
    # second differences need 3 points per axis
    inside = min(max(0, m - 2 * int(math.ceil(margin / hh - 1e-9))) for m, hh in zip(grid.n, grid.h))
    region = _clause(True, float(inside), 3.0, upper=False)
    if inside < 3:
        why = "trusted region too small"
        clauses = {"trusted_region": region}
        clauses.update({name: _clause(False, None, None, reason=why) for name in
                        ("lipschitz", "semiconcave", "semiconvex", "sandwich_lower",
                         "sandwich_upper")})
        return SupConvReport(delta, t, h, None, None, None, None, None, bounds, clauses)
    phi0 = inviscid.field.trim(margin)
    phid = reg.trim(margin)
    gap = phid.values - phi0.values
    lip = estimate_lipschitz(phid)
    dd_max, dd_min = estimate_second_difference_bounds(phid)
    curv_tol = tol + h**2 / (2 * delta)
    clauses = {
        "trusted_region": region,
        "lipschitz": _clause(True, lip, L + lip_tol),
        "semiconcave": _clause(math.isfinite(lam) and grid.d == 1, dd_max, lam + curv_tol,
                               reason="g not semiconcave" if not math.isfinite(lam)
                               else "lattice second differences not resolved for d >= 2"),
        "semiconvex": _clause(True, dd_min, -1.0 / delta - curv_tol, upper=False),
        "sandwich_lower": _clause(True, float(gap.min()), -tol, upper=False),
        "sandwich_upper": _clause(True, float(gap.max()), 2 * L * delta + tol),
    }
    return SupConvReport(delta, t, h, lip, dd_max, dd_min, float(gap.max()), float(gap.min()),
                         bounds, clauses)


def subsolution_residual(problem: ProblemSpec, t: float, grid: Grid, delta: float,
                         dt: float) -> ScalarField:
    """Discrete -d_t phi^{0,delta} + |grad phi^{0,delta}|^2 / 2 - f at time t,
    with d_t from the two time levels t and t + dt and a centered gradient.

    Returned on the trusted interior of the earlier time level.
    """
    if problem.f.tag != "zero":
        raise ValueError("residual check implemented for f = zero")
    early = hopf_lax_solve(problem, t, grid)
    late = hopf_lax_solve(problem, t + dt, grid)
    a = sup_convolution(early.field, delta)
    b = sup_convolution(late.field, delta)
    dphi_dt = (b.values - a.values) / dt
    grads = np.gradient(a.values, *grid.h) if grid.d > 1 else [np.gradient(a.values, grid.h[0])]
    sq = sum(gr**2 for gr in grads)
    resid = ScalarField(grid, -dphi_dt + 0.5 * sq)
    margin = early.trusted_margin + 2 * problem.L * delta + max(grid.h)
    return resid.trim(margin)

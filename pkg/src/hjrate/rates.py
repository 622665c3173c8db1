"""Epsilon sweeps of the vanishing-viscosity gap, least-squares rate fits and
the bound checks on the gap."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cole_hopf import QuadSpec, viscous_value_point
from .fields import Grid, ProblemSpec
from .hopf_lax import hopf_lax_solve
from .radial import RadialCase, limit_value, radial_viscous_value

BASIS_NAMES = ("eps_log_eps", "eps", "sqrt_eps")
CSV_HEADER = ("epsilon", "phi_eps", "phi_zero", "gap")


def default_eps_grid() -> list:
    return [2.0**-m for m in range(7, 14)]


@dataclass
class RateTable:
    descriptor: dict
    x: tuple
    t: float
    eps: np.ndarray
    phi_eps: np.ndarray
    phi_zero: np.ndarray

    def __post_init__(self):
        self.eps = np.asarray(self.eps, dtype=float)
        self.phi_eps = np.asarray(self.phi_eps, dtype=float)
        self.phi_zero = np.asarray(self.phi_zero, dtype=float)
        if not (self.eps.shape == self.phi_eps.shape == self.phi_zero.shape):
            raise ValueError("row arrays must have equal length")
        if self.eps.size and np.any(np.diff(self.eps) >= 0):
            raise ValueError("eps must be strictly decreasing across rows")
        if not (np.all(np.isfinite(self.phi_eps)) and np.all(np.isfinite(self.phi_zero))):
            raise ValueError("table values must be finite")

    @property
    def gap(self) -> np.ndarray:
        return self.phi_eps - self.phi_zero

    def __len__(self):
        return self.eps.size

    def subset(self, mask) -> "RateTable":
        return RateTable(self.descriptor, self.x, self.t, self.eps[mask],
                         self.phi_eps[mask], self.phi_zero[mask])

    def scaled(self, s: float) -> "RateTable":
        """Same table with every gap multiplied by s (phi_zero kept)."""
        return RateTable(self.descriptor, self.x, self.t, self.eps,
                         self.phi_zero + s * self.gap, self.phi_zero)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in zip(self.eps, self.phi_eps, self.phi_zero, self.gap):
            w.writerow([f"{v:.17g}" for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, descriptor: Optional[dict] = None, x=(0.0,), t: float = 0.0):
        rows = list(csv.reader(io.StringIO(text)))
        if tuple(rows[0]) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {rows[0]}")
        data = np.array([[float(v) for v in r] for r in rows[1:] if r]).reshape(-1, 4)
        return cls(descriptor or {}, tuple(x), t, data[:, 0], data[:, 1], data[:, 2])


def _check_radial(problem: ProblemSpec, x: np.ndarray):
    if problem.g.tag != "neg_proj_norm" or problem.f.tag != "zero":
        raise ValueError("radial backend needs g = neg_proj_norm and f = zero")
    if np.any(x != 0):
        raise ValueError("radial backend only evaluates at x = 0")


def sweep_epsilon(problem: ProblemSpec, x, t: float, eps_list: Sequence[float],
                  backend: str = "grid", grid: Optional[Grid] = None,
                  quad: QuadSpec = QuadSpec(), threads: int = 1) -> RateTable:
    """Rows (eps, phi^eps, phi^0) at (t, x); eps sorted decreasing.

    backend="radial": both values from the closed-form radial oracle.
    backend="grid": phi^eps by the Cole-Hopf point evaluator and phi^0 by the
    grid Hopf-Lax solve read at x (which must be a grid node).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    eps_list = sorted((float(e) for e in eps_list), reverse=True)
    if not eps_list:
        raise ValueError("eps_list must be nonempty")
    if any(not 0 < e <= 1 for e in eps_list):
        raise ValueError("every eps must lie in (0, 1]")
    problem.check_time(t, allow_terminal=False)
    tau = problem.T - t
    if backend == "radial":
        _check_radial(problem, x)
        k = problem.g.params["k"]
        phi0 = limit_value(k, x, tau)
        rows = [radial_viscous_value(RadialCase(k, problem.d, tau, e)) for e in eps_list]
    elif backend == "grid":
        if grid is None:
            raise ValueError("grid backend needs a grid")
        if problem.f.tag != "zero":
            raise ValueError("sweeps need f = zero")
        phi0 = hopf_lax_solve(problem, t, grid).field.at(x)

        def one(e):
            return viscous_value_point(problem, x, t, e, quad)

        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                rows = list(pool.map(one, eps_list))
        else:
            rows = [one(e) for e in eps_list]
    else:
        raise ValueError(f"unknown backend {backend!r}")
    desc = {"g": problem.g.describe(), "f": problem.f.describe(), "T": problem.T,
            "d": problem.d, "backend": backend}
    n = len(eps_list)
    return RateTable(desc, tuple(x), t, eps_list, rows, [phi0] * n)


def _basis_columns(eps: np.ndarray, basis: Sequence[str]) -> np.ndarray:
    cols = {"eps_log_eps": eps * np.log(eps), "eps": eps, "sqrt_eps": np.sqrt(eps)}
    return np.stack([cols[b] for b in basis], axis=1)


class RankDeficientError(ValueError):
    pass


@dataclass
class RateFit:
    basis: tuple
    coefficients: dict
    residual_linf: float

    def to_json_obj(self) -> dict:
        out = {f"coef_{b}": self.coefficients[b] for b in self.basis}
        out["residual_linf"] = self.residual_linf
        return out

    def predict(self, eps) -> np.ndarray:
        eps = np.asarray(eps, dtype=float)
        if not self.basis:
            return np.zeros_like(eps)
        cols = _basis_columns(eps, self.basis)
        return cols @ np.array([self.coefficients[b] for b in self.basis])


def fit_rate_model(table: RateTable, basis: Sequence[str] = ("eps_log_eps", "eps")) -> RateFit:
    """Least squares of gap on the basis through explicit normal equations.

    Columns are scaled to unit norm before forming A^T A.
    """
    basis = tuple(basis)
    for b in basis:
        if b not in BASIS_NAMES:
            raise ValueError(f"unknown basis function {b!r}")
    if len(set(basis)) != len(basis):
        raise ValueError("repeated basis function")
    gap = table.gap
    if not basis:
        return RateFit((), {}, float(np.max(np.abs(gap))) if gap.size else 0.0)
    if len(table) < len(basis):
        raise RankDeficientError(f"{len(table)} rows for {len(basis)} basis functions")
    A = _basis_columns(table.eps, basis)
    norms = np.linalg.norm(A, axis=0)
    As = A / norms
    N = As.T @ As
    if np.linalg.cond(N) > 1e12:
        raise RankDeficientError("normal equations are singular")
    coef = np.linalg.solve(N, As.T @ gap) / norms
    resid = float(np.max(np.abs(A @ coef - gap)))
    return RateFit(basis, {b: float(c) for b, c in zip(basis, coef)}, resid)


def _row_check(lhs: np.ndarray, bound: np.ndarray, eps: np.ndarray) -> dict:
    slack = bound - lhs
    worst = int(np.argmin(slack))
    return {"pass": bool(np.all(slack >= 0)), "min_slack": float(slack[worst]),
            "worst_eps": float(eps[worst]),
            "violations": [float(e) for e, s in zip(eps, slack) if s < 0]}


def sqrt_rate_constant(table: RateTable) -> dict:
    """Implied constant max |gap| / sqrt(eps), and its behaviour when the
    smallest-eps row is removed (a growing constant flags a slower rate)."""
    ratio = np.abs(table.gap) / np.sqrt(table.eps)
    nz = ratio[ratio > 0]
    c_all = float(ratio.max())
    c_drop = float(ratio[:-1].max()) if len(table) > 1 else c_all
    return {
        "C": c_all,
        "C_without_smallest_eps": c_drop,
        "ratio_max_over_min": float(nz.max() / nz.min()) if nz.size else 1.0,
        "stable": bool(c_all <= 1.1 * c_drop + 1e-15),
    }


def lower_bound_constant(table: RateTable, d: int) -> float:
    """C in gap >= (d/2) eps log eps - C eps from the {eps log eps, eps} fit:
    minus the fitted eps coefficient, floored at zero."""
    if len(table) < 2:
        return max(0.0, float(np.max((0.5 * d * table.eps * np.log(table.eps) - table.gap)
                                     / table.eps)))
    fit = fit_rate_model(table, ("eps_log_eps", "eps"))
    return max(0.0, -fit.coefficients["eps"])


def _relative_change(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


def check_paper_bounds(table: RateTable, problem: ProblemSpec, t: Optional[float] = None,
                       tol: float = 1e-8) -> dict:
    """Per-row checks of the gap against the known bounds.

    a  |gap| <= C sqrt(eps), C = max ratio, stable when the smallest eps is dropped
    b  gap <= (T - t) d lambda eps / 2            (finite semiconcavity constant)
    c  gap <= -(d/2) eps log eps + (d/2) eps log T + eps (3 L_g^2 + 2 L_g)   (f = 0)
    d  gap >= (d/2) eps log eps - C_fit eps, C_fit stable (<10%) when the largest eps is dropped
    e  |gap| <= 3 L^2 eta + 2 L sqrt(eps eta), eta = T - t
    """
    t = table.t if t is None else t
    eps, gap = table.eps, table.gap
    d, T = problem.d, problem.T
    L, Lg, lam = problem.L, problem.L_g, problem.lam
    eta = T - t
    out = {}

    sq = sqrt_rate_constant(table)
    a = _row_check(np.abs(gap), sq["C"] * np.sqrt(eps) + tol, eps)
    a.update(applicable=True, **sq)
    a["pass"] = bool(a["pass"] and sq["stable"] and math.isfinite(sq["C"]))
    out["a_sqrt_rate"] = a

    if math.isfinite(lam):
        b = _row_check(gap, eta * d * lam * eps / 2 + tol, eps)
        b["applicable"] = True
    else:
        b = {"applicable": False, "pass": True, "reason": "g not semiconcave"}
    out["b_semiconcave_upper"] = b

    if problem.f.tag == "zero":
        bound = (-0.5 * d * eps * np.log(eps) + 0.5 * d * eps * math.log(T)
                 + eps * (3 * Lg**2 + 2 * Lg) + tol)
        c = _row_check(gap, bound, eps)
        c["applicable"] = True
    else:
        c = {"applicable": False, "pass": True, "reason": "f is not zero"}
    out["c_nonsemiconcave_upper"] = c

    C_fit = lower_bound_constant(table, d)
    C_drop = lower_bound_constant(table.subset(slice(1, None)), d) if len(table) > 2 else C_fit
    change = _relative_change(C_fit, C_drop)
    dd = _row_check(-gap, -(0.5 * d * eps * np.log(eps) - C_fit * eps) + tol, eps)
    dd.update(applicable=True, C_fit=C_fit, C_without_largest_eps=C_drop, relative_change=change,
              stable=bool(change < 0.1))
    dd["pass"] = bool(dd["pass"] and dd["stable"])
    out["d_lower_bound"] = dd

    e = _row_check(np.abs(gap), 3 * L**2 * eta + 2 * L * np.sqrt(eps * eta) + tol, eps)
    e.update(applicable=True, eta=eta)
    out["e_terminal_window"] = e

    out["pass"] = all(v["pass"] for v in out.values() if isinstance(v, dict))
    return out


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o)}")

"""Inviscid solver: exact grid inf-convolution with a quadratic kernel
(lower-envelope / distance-transform algorithm) and the Lax-Oleinik march."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .fields import FnSpec, Grid, ProblemSpec, ScalarField, sample_function


@numba.njit(cache=True)
def _envelope_1d(f, h, tau, out, arg):
    # Lower envelope of the parabolas f[j] + h^2 (u - j)^2 / (2 tau), evaluated
    # at integer u. Coordinates are in index units; ties go to the smaller j.
    n = f.shape[0]
    c = tau / (h * h)
    v = np.empty(n, dtype=np.int64)
    z = np.empty(n + 1)
    k = 0
    v[0] = 0
    z[0] = -np.inf
    z[1] = np.inf
    for q in range(1, n):
        s = c * (f[q] - f[v[k]]) / (q - v[k]) + 0.5 * (q + v[k])
        while s <= z[k]:
            k -= 1
            s = c * (f[q] - f[v[k]]) / (q - v[k]) + 0.5 * (q + v[k])
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = np.inf
    k = 0
    for u in range(n):
        while z[k + 1] < u:
            k += 1
        j = v[k]
        out[u] = f[j] + (u - j) * (u - j) / (2.0 * c)
        arg[u] = j


@numba.njit(cache=True)
def _envelope_lines(lines, h, tau, out, arg):
    for i in range(lines.shape[0]):
        _envelope_1d(lines[i], h, tau, out[i], arg[i])


def _inf_conv_axis(values: np.ndarray, axis: int, h: float, tau: float):
    moved = np.ascontiguousarray(np.moveaxis(values, axis, -1))
    lines = moved.reshape(-1, moved.shape[-1])
    out = np.empty_like(lines)
    arg = np.empty(lines.shape, dtype=np.int64)
    _envelope_lines(lines, h, tau, out, arg)
    out = np.moveaxis(out.reshape(moved.shape), -1, axis)
    arg = np.moveaxis(arg.reshape(moved.shape), -1, axis)
    return out, arg


def quadratic_inf_convolution(field: ScalarField, tau: float) -> ScalarField:
    """min over grid points y of field(y) + |x - y|^2 / (2 tau), separably per axis."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    vals = field.values
    for axis, h in enumerate(field.grid.h):
        vals, _ = _inf_conv_axis(vals, axis, h, tau)
    return ScalarField(field.grid, vals)


def inf_convolution_argmin_1d(field: ScalarField, tau: float) -> np.ndarray:
    """Grid argmin indices of the 1-d inf-convolution (ties to smaller index)."""
    if field.grid.d != 1:
        raise ValueError("argmin helper is 1-d only")
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    _, arg = _inf_conv_axis(field.values, 0, field.grid.h[0], tau)
    return arg


def brute_force_inf_convolution(field: ScalarField, tau: float) -> ScalarField:
    """O(N^2) reference implementation over all grid pairs."""
    pts = field.grid.points()
    vals = field.flat
    out = np.empty_like(vals)
    for i, x in enumerate(pts):
        out[i] = np.min(vals + np.sum((pts - x) ** 2, axis=1) / (2 * tau))
    return ScalarField(field.grid, out)


@dataclass(frozen=True, eq=False)
class InviscidSolution:
    problem: ProblemSpec
    t: float
    field: ScalarField
    trusted_margin: float
    dt: Optional[float] = None
    steps: Optional[int] = None

    def trusted(self, extra: float = 0.0) -> ScalarField:
        return self.field.trim(self.trusted_margin + extra)


def _trusted_margin(problem: ProblemSpec, t: float) -> float:
    return problem.L * (problem.T - t)


def hopf_lax_solve(problem: ProblemSpec, t: float, grid: Grid) -> InviscidSolution:
    if not problem.f.tag == "zero":
        raise ValueError("hopf_lax_solve requires f = zero; use lax_oleinik_time_march")
    problem.check_time(t)
    g = sample_function(problem.g, grid)
    tau = problem.T - t
    fld = g if tau == 0 else quadratic_inf_convolution(g, tau)
    return InviscidSolution(problem, t, fld, _trusted_margin(problem, t))


def lax_oleinik_time_march(problem: ProblemSpec, t: float, grid: Grid, dt: float) -> InviscidSolution:
    """Backward march phi <- infconv(phi, dt) + dt * f (Lie splitting).

    The step is shrunk so that an integer number of steps covers [t, T].
    """
    problem.check_time(t)
    horizon = problem.T - t
    if not dt > 0 or dt > horizon * (1 + 1e-12):
        raise ValueError(f"dt={dt} must lie in (0, T - t = {horizon}]")
    steps = max(1, math.ceil(horizon / dt - 1e-9))
    dt_used = horizon / steps
    phi = sample_function(problem.g, grid)
    f_vals = None if problem.f.tag == "zero" else sample_function(problem.f, grid).values
    for _ in range(steps):
        phi = quadratic_inf_convolution(phi, dt_used)
        if f_vals is not None:
            phi = ScalarField(grid, phi.values + dt_used * f_vals)
    return InviscidSolution(problem, t, phi, _trusted_margin(problem, t), dt_used, steps)


def hopf_lax_point(g: FnSpec, x, tau: float, candidates: np.ndarray) -> float:
    """min over candidate points y of g(y) + |x - y|^2 / (2 tau)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if tau == 0:
        return float(g(x[None, :])[0])
    return float(np.min(g(candidates) + np.sum((candidates - x) ** 2, axis=1) / (2 * tau)))

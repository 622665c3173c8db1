"""Viscous solver through the Cole-Hopf transform.

For f = 0 the solution is the log of a Gaussian convolution,

    phi(t, x) = (eps d / 2) log(2 pi eps tau)
                - eps log int exp(-g(y)/eps - |y - x|^2 / (2 eps tau)) dy,   tau = T - t,

evaluated here with composite Gauss-Legendre panels and log-sum-exp
accumulation. For f != 0 a grid march alternates a log-domain heat step with
the potential step.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import logsumexp

from .fields import Grid, ProblemSpec, ScalarField, sample_function
from .radial import QuadratureError, RadialCase, radial_viscous_value


@dataclass(frozen=True)
class QuadSpec:
    """Quadrature controls. ``radius``/``spacing`` of None mean the defaults
    R = tau L_g + 12 sqrt(eps tau) and node spacing
    min(sqrt(eps tau)/4, 0.05, eps/L_g).
    """

    radius: Optional[float] = None
    spacing: Optional[float] = None
    nodes_per_panel: int = 8
    tol: float = 1e-10
    max_refine: int = 4
    check: bool = True
    reduce_radial: bool = True

    def __post_init__(self):
        if self.nodes_per_panel < 1:
            raise ValueError("nodes_per_panel must be >= 1")
        if self.check and self.max_refine < 1:
            raise ValueError("the refinement check needs max_refine >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        for name in ("radius", "spacing"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True, eq=False)
class ViscousSolution:
    problem: ProblemSpec
    eps: float
    t: float
    field: Optional[ScalarField] = None
    quad: Optional[QuadSpec] = None
    dt: Optional[float] = None
    steps: Optional[int] = None
    trusted_margin: float = 0.0

    def trusted(self, extra: float = 0.0) -> ScalarField:
        return self.field.trim(self.trusted_margin + extra)


def _effective_dims(problem: ProblemSpec) -> int:
    """Leading coordinates g depends on; the rest integrate out exactly."""
    g = problem.g
    if g.tag in ("zero", "constant"):
        return 0
    if g.tag == "neg_proj_norm":
        return g.params["k"]
    if g.tag == "cosine":
        return 1
    return problem.d


def _check_args(problem: ProblemSpec, t: float, eps: float):
    if problem.f.tag != "zero":
        raise ValueError("point evaluation of the Cole-Hopf formula requires f = zero")
    problem.check_time(t)
    if not 0 < eps:
        raise ValueError(f"eps must be positive, got {eps}")


def _geometry(problem: ProblemSpec, tau: float, eps: float, quad: QuadSpec):
    sigma = math.sqrt(eps * tau)
    radius = quad.radius if quad.radius is not None else tau * problem.L_g + 12 * sigma
    if radius < tau * problem.L_g + 10 * sigma:
        raise ValueError(f"truncation radius {radius} below admissible "
                         f"{tau * problem.L_g + 10 * sigma}")
    spacing = quad.spacing
    if spacing is None:
        # exp(-g/eps) varies on the scale eps / L_g next to a kink of g
        spacing = min(0.25 * sigma, 0.05, eps / problem.L_g if problem.L_g > 0 else 0.05)
    return radius, spacing * quad.nodes_per_panel


def _axis_nodes(x: np.ndarray, radius: float, width: float, p: int):
    """Per-point panel nodes on the global lattice width*Z (so kinks at the
    origin fall on panel edges). Returns nodes (m, P*p) and log weights (P*p,)."""
    gl_x, gl_w = np.polynomial.legendre.leggauss(p)
    n_panels = int(math.ceil(2 * radius / width)) + 1
    first = np.floor((x - radius) / width)
    offsets = (np.arange(n_panels)[:, None] + 0.5 * (gl_x[None, :] + 1)).ravel()
    nodes = (first[:, None] + offsets[None, :]) * width
    logw = np.log(np.tile(gl_w, n_panels) * 0.5 * width)
    return nodes, logw


def _log_terms(problem, xs, tau, eps, radius, width, p, m):
    """Log-integrand terms for points xs (n, d) restricted to m leading dims.

    Returns (terms, rel): terms (n, K) in the log domain and relative node
    offsets rel (n, K, m).
    """
    n = xs.shape[0]
    per_axis = [_axis_nodes(xs[:, i], radius, width, p) for i in range(m)]
    if m == 1:
        y, logw = per_axis[0]
        y = y[:, :, None]
    else:
        k1 = per_axis[0][0].shape[1]
        idx = np.array(list(itertools.product(range(k1), repeat=m)))
        y = np.stack([per_axis[i][0][:, idx[:, i]] for i in range(m)], axis=-1)
        logw = sum(per_axis[i][1][idx[:, i]] for i in range(m))
    rel = y - xs[:, None, :m]
    full = y
    if m < problem.d:
        full = np.concatenate([y, np.broadcast_to(xs[:, None, m:], (n, y.shape[1], problem.d - m))],
                              axis=-1)
    terms = logw[None, :] - problem.g(full) / eps - np.sum(rel**2, axis=-1) / (2 * eps * tau)
    return terms, rel


def _evaluate(problem, xs, t, eps, quad, want_grad, width_scale=1.0):
    tau = problem.T - t
    m = _effective_dims(problem)
    radius, width = _geometry(problem, tau, eps, quad)
    width *= width_scale
    p = quad.nodes_per_panel
    if m == 0:
        vals = problem.g(xs)
        return vals, np.zeros_like(xs)
    # chunk so that the (n, K) arrays stay moderate
    k_est = (int(math.ceil(2 * radius / width)) + 1) * p
    chunk = max(1, int(4e6 // (k_est**m)))
    vals = np.empty(xs.shape[0])
    grads = np.zeros_like(xs)
    for start in range(0, xs.shape[0], chunk):
        sl = slice(start, start + chunk)
        terms, rel = _log_terms(problem, xs[sl], tau, eps, radius, width, p, m)
        lse = logsumexp(terms, axis=1)
        vals[sl] = 0.5 * eps * m * math.log(2 * math.pi * eps * tau) - eps * lse
        if want_grad:
            wts = np.exp(terms - lse[:, None])
            grads[sl, :m] = -np.einsum("nk,nkj->nj", wts, rel) / tau
    return vals, grads


def _with_refinement(problem, xs, t, eps, quad, want_grad):
    vals, grads = _evaluate(problem, xs, t, eps, quad, want_grad)
    if not quad.check or _effective_dims(problem) == 0:
        return vals, grads
    scale, err = 1.0, math.inf
    for _ in range(quad.max_refine):
        scale *= 0.5
        v2, g2 = _evaluate(problem, xs, t, eps, quad, want_grad, scale)
        err = np.max(np.abs(v2 - vals))
        if want_grad:
            err = max(err, np.max(np.abs(g2 - grads)))
        vals, grads = v2, g2
        if err <= quad.tol:
            return vals, grads
    raise QuadratureError(f"node doubling did not reach tol {quad.tol} (last change {err:.3g})")


def _radial_shortcut(problem: ProblemSpec, xs: np.ndarray, quad: QuadSpec):
    if not (quad.reduce_radial and problem.g.tag == "neg_proj_norm"):
        return None
    k = problem.g.params["k"]
    hit = np.all(xs[:, :k] == 0.0, axis=1)
    return hit if hit.any() else None


def viscous_values(problem: ProblemSpec, xs, t: float, eps: float,
                   quad: QuadSpec = QuadSpec()) -> np.ndarray:
    """Vectorized phi^eps_t at points xs of shape (n, d)."""
    _check_args(problem, t, eps)
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if t == problem.T:
        return problem.g(xs)
    _geometry(problem, problem.T - t, eps, quad)
    out = np.empty(xs.shape[0])
    hit = _radial_shortcut(problem, xs, quad)
    rest = np.ones(xs.shape[0], bool) if hit is None else ~hit
    if hit is not None:
        case = RadialCase(problem.g.params["k"], problem.d, problem.T - t, eps)
        out[hit] = radial_viscous_value(case)
    if rest.any():
        out[rest], _ = _with_refinement(problem, xs[rest], t, eps, quad, False)
    return out


def viscous_value_point(problem: ProblemSpec, x, t: float, eps: float,
                        quad: QuadSpec = QuadSpec()) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (problem.d,):
        raise ValueError(f"point must have dimension d={problem.d}")
    return float(viscous_values(problem, x[None, :], t, eps, quad)[0])


def viscous_gradients(problem: ProblemSpec, xs, t: float, eps: float,
                      quad: QuadSpec = QuadSpec()) -> np.ndarray:
    """grad phi^eps_t = (x - <y>) / tau with <y> the Gibbs mean; shape (n, d)."""
    _check_args(problem, t, eps)
    if t >= problem.T:
        raise ValueError("gradient needs t < T")
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    _, grads = _with_refinement(problem, xs, t, eps, quad, True)
    return grads


def viscous_gradient_point(problem: ProblemSpec, x, t: float, eps: float,
                           quad: QuadSpec = QuadSpec()) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return viscous_gradients(problem, x[None, :], t, eps, quad)[0]


def viscous_field(problem: ProblemSpec, t: float, grid: Grid, eps: float,
                  quad: QuadSpec = QuadSpec()) -> ViscousSolution:
    """phi^eps_t sampled pointwise on every grid node (exact up to quadrature)."""
    vals = viscous_values(problem, grid.points(), t, eps, quad)
    return ViscousSolution(problem, eps, t, ScalarField(grid, vals), quad=quad)


def _heat_step_axis(logv: np.ndarray, axis: int, log_kernel: np.ndarray) -> np.ndarray:
    half = (log_kernel.shape[0] - 1) // 2
    moved = np.moveaxis(logv, axis, -1)
    pad = [(0, 0)] * (moved.ndim - 1) + [(half, half)]
    padded = np.pad(moved, pad, constant_values=-np.inf)
    windows = sliding_window_view(padded, log_kernel.shape[0], axis=-1)
    # kernel is symmetric, so correlation == convolution
    out = logsumexp(windows + log_kernel, axis=-1)
    # renormalize by the kernel mass that falls inside the grid: constants
    # stay exact up to the boundary
    inside = np.pad(np.zeros(moved.shape[-1]), (half, half), constant_values=-np.inf)
    mass = logsumexp(sliding_window_view(inside, log_kernel.shape[0]) + log_kernel, axis=-1)
    return np.moveaxis(out - mass, -1, axis)


def _log_kernel(h: float, var: float, n: int) -> np.ndarray:
    half = int(math.ceil(8 * math.sqrt(var) / h))
    if 2 * half + 1 > n:
        raise ValueError(f"heat kernel ({2 * half + 1} points) wider than the grid ({n} points)")
    offs = h * np.arange(-half, half + 1)
    lk = -(offs**2) / (2 * var)
    return lk - logsumexp(lk)


def viscous_solve_grid(problem: ProblemSpec, t: float, grid: Grid, eps: float,
                       dt: float) -> ViscousSolution:
    """March log v = -phi/eps backward from T: heat step (Gaussian of variance
    eps dt, truncated at 8 standard deviations, normalized), then potential
    step log v -= f dt / eps.

    Near the boundary the kernel is renormalized over the nodes inside the
    grid; values there are only trusted beyond ``trusted_margin``.
    """
    problem.check_time(t)
    if not eps > 0:
        raise ValueError("eps must be positive")
    horizon = problem.T - t
    if horizon == 0:
        g = sample_function(problem.g, grid)
        return ViscousSolution(problem, eps, t, g, dt=0.0, steps=0)
    if not dt > 0 or dt > horizon * (1 + 1e-12):
        raise ValueError(f"dt={dt} must lie in (0, T - t = {horizon}]")
    steps = max(1, math.ceil(horizon / dt - 1e-9))
    dt_used = horizon / steps
    kernels = [_log_kernel(h, eps * dt_used, n) for h, n in zip(grid.h, grid.n)]
    logv = -sample_function(problem.g, grid).values / eps
    f_pot = None
    if problem.f.tag != "zero":
        f_pot = sample_function(problem.f, grid).values * dt_used / eps
    for _ in range(steps):
        for axis, lk in enumerate(kernels):
            logv = _heat_step_axis(logv, axis, lk)
        if f_pot is not None:
            logv = logv - f_pot
    margin = problem.L * horizon + 8 * math.sqrt(eps * horizon)
    return ViscousSolution(problem, eps, t, ScalarField(grid, -eps * logv), dt=dt_used,
                           steps=steps, trusted_margin=margin)

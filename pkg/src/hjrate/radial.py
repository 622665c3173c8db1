"""Closed-form oracle for the terminal cost g_k(x) = -|P_k(x)|, f = 0, at x = 0.

The viscous value reduces to a one-dimensional radial integral

    phi = -tau/2 + (k/2) eps log(2 pi eps tau) - eps log[C_k J],
    J   = int_0^inf exp(-(r - tau)^2 / (2 eps tau)) r^(k-1) dr,

with C_k = k pi^(k/2) / Gamma(k/2 + 1) the surface measure of the unit sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.special import logsumexp

_GL_NODES = {n: np.polynomial.legendre.leggauss(n) for n in (10, 20)}


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class RadialCase:
    k: int
    d: int
    tau: float
    eps: float

    def __post_init__(self):
        if not 1 <= self.k <= self.d:
            raise ValueError(f"need 1 <= k <= d, got k={self.k}, d={self.d}")
        if not (self.tau > 0 and self.eps > 0):
            raise ValueError("tau and eps must be positive")

    @property
    def sphere_measure(self) -> float:
        return sphere_measure(self.k)


def sphere_measure(k: int) -> float:
    return k * math.pi ** (k / 2) / math.gamma(k / 2 + 1)


def _log_integrand(r, k, tau, eps):
    with np.errstate(divide="ignore"):
        return -((r - tau) ** 2) / (2 * eps * tau) + (k - 1) * np.log(r)


def _gl_log(a, b, k, tau, eps, n):
    x, w = _GL_NODES[n]
    r = 0.5 * (b - a) * x + 0.5 * (b + a)
    return logsumexp(_log_integrand(r, k, tau, eps) + np.log(w)) + math.log(0.5 * (b - a))


def _adaptive_log(a, b, k, tau, eps, tol, depth, max_depth, ref):
    """log of the integral over [a, b]. Pieces whose mass is below
    tol * e^-5 of exp(ref) are accepted as is: their error cannot move the
    log of the total by more than that."""
    coarse = _gl_log(a, b, k, tau, eps, 10)
    fine = _gl_log(a, b, k, tau, eps, 20)
    if abs(fine - coarse) <= tol or fine == -math.inf or max(fine, coarse) - ref < math.log(tol) - 5:
        return fine
    if depth >= max_depth:
        raise QuadratureError(f"radial quadrature did not converge on [{a}, {b}]")
    m = 0.5 * (a + b)
    left = _adaptive_log(a, m, k, tau, eps, tol, depth + 1, max_depth, ref)
    right = _adaptive_log(m, b, k, tau, eps, tol, depth + 1, max_depth, ref)
    return float(np.logaddexp(left, right))


def log_radial_integral(k: int, tau: float, eps: float, tol: float = 1e-12,
                        max_depth: int = 30) -> float:
    """log J by adaptive Gauss-Legendre (10 vs 20 nodes) in the log domain."""
    sigma = math.sqrt(eps * tau)
    lo = max(0.0, tau - 12 * sigma)
    hi = tau + 12 * sigma
    # the peak panel alone holds mass ~ sigma * tau^(k-1): a floor for the total
    ref = float(_log_integrand(np.array(tau), k, tau, eps)) + math.log(sigma)
    # split the window into panels of width ~sigma before adapting
    panels = max(1, math.ceil((hi - lo) / sigma))
    edges = np.linspace(lo, hi, panels + 1)
    parts = [_adaptive_log(edges[i], edges[i + 1], k, tau, eps, tol, 0, max_depth, ref)
             for i in range(panels)]
    if lo > 0:
        # left remnant [0, lo], skipped when its mass is below 1e-30 of the total
        bound = float(_log_integrand(np.array(lo), k, tau, eps)) + math.log(lo)
        if bound - ref > math.log(1e-30):
            parts.append(_adaptive_log(0.0, lo, k, tau, eps, tol, 0, max_depth, ref))
    return float(logsumexp(parts))


def radial_viscous_value(case: RadialCase, tol: float = 1e-12) -> float:
    k, tau, eps = case.k, case.tau, case.eps
    log_j = log_radial_integral(k, tau, eps, tol)
    return (-tau / 2 + 0.5 * k * eps * math.log(2 * math.pi * eps * tau)
            - eps * (math.log(case.sphere_measure) + log_j))


def limit_value(k: int, x, tau: float) -> float:
    """Hopf-Lax value -|P_k(x)| - tau/2."""
    if not tau >= 0:
        raise ValueError("tau must be >= 0")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not 1 <= k <= x.shape[0]:
        raise ValueError("need 1 <= k <= d")
    return float(-np.linalg.norm(x[:k]) - tau / 2)


def expansion_constant(k: int) -> float:
    """log[k sqrt(pi) / (2^((k-1)/2) Gamma(k/2 + 1))]."""
    return math.log(k * math.sqrt(math.pi) / (2 ** ((k - 1) / 2) * math.gamma(k / 2 + 1)))


def expansion_value(case: RadialCase) -> float:
    k, tau, eps = case.k, case.tau, case.eps
    a = 0.5 * (k - 1)
    return -tau / 2 + a * eps * math.log(eps) - a * eps * math.log(tau) - eps * expansion_constant(k)


def expansion_coefficients(k: int, tau: float = 1.0) -> dict:
    """Coefficients of eps*log(eps) and eps in the small-eps gap expansion."""
    return {"eps_log_eps": 0.5 * (k - 1),
            "eps": -0.5 * (k - 1) * math.log(tau) - expansion_constant(k)}


def expansion_remainder_exact(case: RadialCase, dps: int = 40):
    """(radial value - expansion value) / eps as an mpmath number.

    Uses the substitution s = (r - tau)/sqrt(eps tau) and expands the
    polynomial factor, so the unit leading term cancels analytically and the
    exponentially small remainder is resolved at any magnitude.
    """
    k, tau, eps = case.k, case.tau, case.eps
    with mpmath.workdps(dps):
        tau_m, eps_m = mpmath.mpf(tau), mpmath.mpf(eps)
        a2 = tau_m / (2 * eps_m)  # (cutoff)^2 / 2 with cutoff sqrt(tau/eps)
        ratio = mpmath.sqrt(eps_m / tau_m)
        sqrt2pi = mpmath.sqrt(2 * mpmath.pi)
        delta = mpmath.mpf(0)
        for j in range(k):
            coef = mpmath.binomial(k - 1, j) * ratio**j
            half = mpmath.mpf(j + 1) / 2
            # int_{-inf}^{-a} s^j e^{-s^2/2} ds
            tail = (-1) ** j * 2 ** (half - 1) * mpmath.gammainc(half, a2)
            full = 0 if j % 2 else 2 ** (half - 1) * 2 * mpmath.gamma(half)
            if j == 0:
                delta -= coef * tail
            else:
                delta += coef * (full - tail)
        return -mpmath.log1p(delta / sqrt2pi)


def radial_value_exact(case: RadialCase, dps: int = 40) -> float:
    """Radial value from the exact moment formula (independent of quadrature)."""
    with mpmath.workdps(dps):
        val = mpmath.mpf(expansion_value(case)) + case.eps * expansion_remainder_exact(case, dps)
        return float(val)

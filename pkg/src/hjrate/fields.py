"""Grids, sampled scalar fields, the terminal/source function library and
discrete regularity estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

MAX_GRID_DIM = 4


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Tensor-product uniform grid; ``lo``, ``hi`` and ``n`` are per-axis."""

    lo: tuple
    hi: tuple
    n: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        if not (len(lo) == len(hi) == len(n)) or len(lo) == 0:
            raise ValueError("lo, hi and n must have the same positive length")
        if len(lo) > MAX_GRID_DIM:
            raise ValueError(f"grid dimension {len(lo)} exceeds {MAX_GRID_DIM}")
        for a, b, m in zip(lo, hi, n):
            if not (math.isfinite(a) and math.isfinite(b)) or a >= b:
                raise ValueError(f"need lo < hi on every axis, got [{a}, {b}]")
            if m < 2:
                raise ValueError(f"need at least 2 points per axis, got {m}")
        if math.prod(n) > 2**31:
            raise ValueError("grid too large")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "n", n)

    @classmethod
    def uniform(cls, lo: float, hi: float, n: int, d: int = 1) -> "Grid":
        return cls((lo,) * d, (hi,) * d, (n,) * d)

    @property
    def d(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple:
        return self.n

    @property
    def size(self) -> int:
        return math.prod(self.n)

    @property
    def h(self) -> tuple:
        return tuple((b - a) / (m - 1) for a, b, m in zip(self.lo, self.hi, self.n))

    def axes(self) -> list:
        # lo + i*h rather than linspace so that lattice-aligned points are exact
        return [a + h * np.arange(m) for a, h, m in zip(self.lo, self.h, self.n)]

    def points(self) -> np.ndarray:
        """All grid points, shape (size, d), row-major."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def index_of(self, x, atol: float = 1e-9) -> tuple:
        """Multi-index of the grid point equal to ``x``; raises if x is off-grid."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.d,):
            raise ValueError(f"point of dimension {x.shape} on a {self.d}-d grid")
        idx = []
        for xi, a, h, m in zip(x, self.lo, self.h, self.n):
            j = int(round((xi - a) / h))
            if j < 0 or j >= m or abs(a + j * h - xi) > atol * max(1.0, h):
                raise ValueError(f"point {tuple(x)} is not a grid point")
            idx.append(j)
        return tuple(idx)

    def interior(self, margin: float) -> tuple:
        """Index slices of the points at distance >= margin from every face."""
        out = []
        for a, b, h, m in zip(self.lo, self.hi, self.h, self.n):
            k = int(math.ceil(margin / h - 1e-9)) if margin > 0 else 0
            if 2 * k >= m:
                raise ValueError(f"margin {margin} leaves no interior points")
            out.append(slice(k, m - k))
        return tuple(out)

    def subgrid(self, sl: tuple) -> "Grid":
        lo, hi, n = [], [], []
        for s, a, h, m in zip(sl, self.lo, self.h, self.n):
            start, stop, _ = s.indices(m)
            lo.append(a + h * start)
            hi.append(a + h * (stop - 1))
            n.append(stop - start)
        return Grid(tuple(lo), tuple(hi), tuple(n))


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def at(self, x) -> float:
        return float(self.values[self.grid.index_of(x)])

    def trim(self, margin: float) -> "ScalarField":
        """Restriction to the sub-grid at distance >= margin from the boundary."""
        sl = self.grid.interior(margin)
        return ScalarField(self.grid.subgrid(sl), self.values[sl])

    def __add__(self, other):
        if isinstance(other, ScalarField):
            _check_same_grid(self, other)
            return ScalarField(self.grid, self.values + other.values)
        return ScalarField(self.grid, self.values + float(other))

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __sub__(self, other):
        return self + (-other)


def _check_same_grid(a: ScalarField, b: ScalarField):
    if a.grid != b.grid:
        raise GridMismatchError("fields live on different grids")


FN_TAGS = ("zero", "constant", "linear", "neg_proj_norm", "abs_norm", "cosine", "tabulated")


@dataclass(frozen=True, eq=False)
class FnSpec:
    """A terminal cost or source term together with its Lipschitz and
    semiconcavity constants (``inf`` when not semiconcave).

    Use the classmethod constructors; they fill the metadata analytically.
    """

    tag: str
    params: dict = field(default_factory=dict)
    lipschitz: float = 0.0
    semiconcavity: float = 0.0

    def __post_init__(self):
        if self.tag not in FN_TAGS:
            raise ValueError(f"unknown function tag {self.tag!r}")
        if not self.lipschitz >= 0:
            raise ValueError("Lipschitz constant must be >= 0")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def constant(cls, c: float):
        return cls("constant", {"c": float(c)})

    @classmethod
    def linear(cls, c: Sequence[float]):
        c = tuple(float(v) for v in np.atleast_1d(c))
        return cls("linear", {"c": c}, lipschitz=float(np.linalg.norm(c)))

    @classmethod
    def neg_proj_norm(cls, k: int):
        if int(k) < 1:
            raise ValueError("neg_proj_norm needs k >= 1")
        return cls("neg_proj_norm", {"k": int(k)}, lipschitz=1.0, semiconcavity=0.0)

    @classmethod
    def abs_norm(cls):
        return cls("abs_norm", {}, lipschitz=1.0, semiconcavity=math.inf)

    @classmethod
    def cosine(cls, omega: float):
        # cos(omega * x_1)
        omega = float(omega)
        return cls("cosine", {"omega": omega}, lipschitz=abs(omega), semiconcavity=omega**2)

    @classmethod
    def tabulated(cls, values: ScalarField, lipschitz: float, semiconcavity: float):
        return cls("tabulated", {"field": values}, lipschitz=float(lipschitz),
                   semiconcavity=float(semiconcavity))

    @property
    def is_zero(self) -> bool:
        return self.tag == "zero" or (self.tag == "constant" and self.params["c"] == 0.0)

    def min_dim(self) -> int:
        if self.tag == "neg_proj_norm":
            return self.params["k"]
        if self.tag == "linear":
            return len(self.params["c"])
        return 1

    def __call__(self, y) -> np.ndarray:
        """Evaluate at points ``y`` of shape (..., d)."""
        y = np.asarray(y, dtype=float)
        tag = self.tag
        if tag == "zero":
            return np.zeros(y.shape[:-1])
        if tag == "constant":
            return np.full(y.shape[:-1], self.params["c"])
        if tag == "linear":
            c = np.asarray(self.params["c"])
            if c.shape[0] != y.shape[-1]:
                raise ValueError("linear coefficient dimension mismatch")
            return y @ c
        if tag == "neg_proj_norm":
            k = self.params["k"]
            if k > y.shape[-1]:
                raise ValueError("neg_proj_norm needs k <= d")
            return -np.linalg.norm(y[..., :k], axis=-1)
        if tag == "abs_norm":
            return np.linalg.norm(y, axis=-1)
        if tag == "cosine":
            return np.cos(self.params["omega"] * y[..., 0])
        return _interpolate(self.params["field"], y)

    def describe(self) -> dict:
        out = {"tag": self.tag}
        for key, val in self.params.items():
            if key != "field":
                out[key] = list(val) if isinstance(val, tuple) else val
        return out


def _interpolate(fld: ScalarField, y: np.ndarray) -> np.ndarray:
    from scipy.interpolate import RegularGridInterpolator

    interp = RegularGridInterpolator(fld.grid.axes(), fld.values, bounds_error=True)
    flat = y.reshape(-1, y.shape[-1])
    return interp(flat).reshape(y.shape[:-1])


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    g: FnSpec
    f: FnSpec
    T: float
    d: int

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError(f"T must be a positive finite number, got {self.T}")
        if int(self.d) < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        for name, fn in (("g", self.g), ("f", self.f)):
            if fn.tag == "neg_proj_norm" and fn.params["k"] > self.d:
                raise ValueError(f"{name}: neg_proj_norm requires k <= d "
                                 f"(k={fn.params['k']}, d={self.d})")
            if fn.tag == "linear" and len(fn.params["c"]) != self.d:
                raise ValueError(f"{name}: linear coefficient must have length d={self.d}")
            if fn.tag == "tabulated" and fn.params["field"].grid.d != self.d:
                raise ValueError(f"{name}: tabulated grid dimension differs from d")

    @property
    def L_g(self) -> float:
        return self.g.lipschitz

    @property
    def L_f(self) -> float:
        return self.f.lipschitz

    @property
    def lambda_g(self) -> float:
        return self.g.semiconcavity

    @property
    def lambda_f(self) -> float:
        return self.f.semiconcavity

    @property
    def L(self) -> float:
        return self.L_g + self.T * self.L_f

    @property
    def lam(self) -> float:
        return self.lambda_g + self.T * abs(self.lambda_f)

    def check_time(self, t: float, allow_terminal: bool = True):
        if not (0.0 <= t <= self.T) or (t == self.T and not allow_terminal):
            raise ValueError(f"t={t} outside [0, {self.T}]")


def sample_function(fn: FnSpec, grid: Grid) -> ScalarField:
    if fn.tag == "tabulated":
        src = fn.params["field"]
        if src.grid != grid:
            raise GridMismatchError("tabulated function sampled on a different grid")
        return src
    vals = fn(grid.points())
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"non-finite values sampling {fn.tag}")
    return ScalarField(grid, vals)


def sup_norm_diff(a: ScalarField, b: ScalarField) -> float:
    _check_same_grid(a, b)
    return float(np.max(np.abs(a.values - b.values)))


def estimate_lipschitz(fld: ScalarField) -> float:
    best = 0.0
    for axis, h in enumerate(fld.grid.h):
        diff = np.abs(np.diff(fld.values, axis=axis)) / h
        best = max(best, float(diff.max()))
    return best


def estimate_second_difference_bounds(fld: ScalarField) -> tuple:
    """(max, min) over axes and interior points of the centered second
    difference; the max estimates semiconcavity, the min semiconvexity."""
    if min(fld.grid.n) < 3:
        raise ValueError("need at least 3 points per axis for second differences")
    hi, lo = -math.inf, math.inf
    for axis, h in enumerate(fld.grid.h):
        dd = np.diff(fld.values, n=2, axis=axis) / h**2
        hi = max(hi, float(dd.max()))
        lo = min(lo, float(dd.min()))
    return hi, lo


def grid_gradient(fld: ScalarField) -> np.ndarray:
    """Centered-difference gradient, shape grid.shape + (d,)."""
    return np.stack(np.gradient(fld.values, *fld.grid.h, edge_order=2)
                    if fld.grid.d > 1 else [np.gradient(fld.values, fld.grid.h[0], edge_order=2)],
                    axis=-1)


def field_interpolator(fld: ScalarField, values: Optional[np.ndarray] = None):
    """Multilinear interpolator over the field's grid (extrapolates linearly)."""
    from scipy.interpolate import RegularGridInterpolator

    vals = fld.values if values is None else values
    return RegularGridInterpolator(fld.grid.axes(), vals, bounds_error=False, fill_value=None)

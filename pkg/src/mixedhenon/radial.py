"""Radial meshes, piecewise-linear radial profiles and weighted norms.

A radial profile ``f(|x|)`` on R^N is stored by its values at the nodes
``0 < r_1 < ... < r_M = R``.  Between nodes it is linear, on the first cell
``[0, r_1]`` it is constant (even reflection through the origin), and it is
zero for ``r >= R``.  Integrals over R^N reduce to
``sphere_area(N) * int_0^R r^(N-1) ... dr``.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import sparse
from scipy.special import gamma as gamma_fn

from .errors import ConfigurationError, DomainError, InvalidDimensionError, WeightSingularityError

MIN_CELLS = 4
DEFAULT_ORDER = 6


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere S^(N-1); 2 for N = 1."""
    if int(N) != N or N < 1:
        raise InvalidDimensionError(f"dimension must be a positive integer, got {N!r}")
    return float(2.0 * np.pi ** (N / 2.0) / gamma_fn(N / 2.0))


def ball_volume(N: int) -> float:
    return sphere_area(N) / N


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Graded mesh ``r_i = R (i/M)^grading`` with a per-cell Gauss rule.

    Cell ``c`` is ``[edges[c], edges[c+1]]`` with ``edges[0] = 0``; node ``j``
    is ``edges[j+1]``.  Instances are immutable; derived arrays are cached.
    """

    N: int
    R: float
    M: int
    grading: float = 2.0
    order: int = DEFAULT_ORDER
    nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        i = np.arange(1, self.M + 1, dtype=float)
        nodes = self.R * (i / self.M) ** self.grading
        nodes[-1] = float(self.R)
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @cached_property
    def omega(self) -> float:
        return sphere_area(self.N)

    @cached_property
    def edges(self) -> np.ndarray:
        return np.concatenate(([0.0], self.nodes))

    @cached_property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @cached_property
    def _reference_rule(self):
        x, w = leggauss(self.order)
        return 0.5 * (x + 1.0), 0.5 * w

    @cached_property
    def points(self) -> np.ndarray:
        """Gauss points, shape (M * order,), ordered cell by cell."""
        t, _ = self._reference_rule
        return (self.edges[:-1, None] + self.widths[:, None] * t[None, :]).ravel()

    @cached_property
    def point_cell(self) -> np.ndarray:
        return np.repeat(np.arange(self.M), self.order)

    @cached_property
    def interpolation(self) -> sparse.csr_matrix:
        """Sparse map from nodal values to values at the Gauss points."""
        t, _ = self._reference_rule
        g = self.order
        rows, cols, vals = [], [], []
        base = np.arange(g)
        # cell 0: constant equal to the first nodal value
        rows.append(base)
        cols.append(np.zeros(g, dtype=int))
        vals.append(np.ones(g))
        for c in range(1, self.M):
            r = c * g + base
            rows += [r, r]
            cols += [np.full(g, c - 1), np.full(g, c)]
            vals += [1.0 - t, t]
        return sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.M * g, self.M),
        )

    def moment(self, c: int, w: float) -> float:
        """Exact ``omega * int_cell r^(N-1+w) dr`` for cell ``c``."""
        e = self.N + w
        a, b = self.edges[c], self.edges[c + 1]
        return self.omega * (b**e - a**e) / e

    def lp_weights(self, w: float = 0.0) -> np.ndarray:
        """Quadrature weights for ``omega * int r^(N-1+w) g(r) dr``.

        The first cell carries a constant, so its weights are spread evenly
        over its Gauss points and sum to the exact moment; the origin is never
        evaluated.
        """
        key = float(w)
        cache = self.__dict__.setdefault("_lp_weight_cache", {})
        if key not in cache:
            if self.N - 1 + key <= -1:
                raise WeightSingularityError(
                    f"r^{self.N - 1 + key:g} is not integrable at 0 (N={self.N}, w={key:g})"
                )
            _, wref = self._reference_rule
            x = self.points.reshape(self.M, self.order)
            wts = self.omega * self.widths[:, None] * wref[None, :] * x ** (self.N - 1 + key)
            wts[0, :] = self.moment(0, key) / self.order
            arr = wts.ravel()
            arr.flags.writeable = False
            cache[key] = arr
        return cache[key]

    @cached_property
    def slope_operator(self) -> sparse.csr_matrix:
        """Map nodal values to per-cell slopes (zero on the first cell)."""
        h = self.widths
        c = np.arange(1, self.M)
        rows = np.concatenate([c, c])
        cols = np.concatenate([c - 1, c])
        vals = np.concatenate([-1.0 / h[c], 1.0 / h[c]])
        return sparse.csr_matrix((vals, (rows, cols)), shape=(self.M, self.M))

    @cached_property
    def cell_mass(self) -> np.ndarray:
        """Exact ``omega * int_cell r^(N-1) dr`` per cell."""
        e = self.edges
        return self.omega * (e[1:] ** self.N - e[:-1] ** self.N) / self.N

    @cached_property
    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.N}|{self.R!r}|{self.M}|{self.grading!r}|{self.order}".encode())
        h.update(np.ascontiguousarray(self.nodes, dtype="<f8").tobytes())
        return h.hexdigest()

    def to_dict(self) -> dict:
        return {"R": self.R, "M": self.M, "grading": self.grading, "order": self.order}


def make_grid(N: int, R: float, M: int, grading: float = 2.0, order: int = DEFAULT_ORDER) -> RadialGrid:
    sphere_area(N)
    if not R > 0:
        raise ConfigurationError(f"truncation radius must be positive, got {R!r}")
    if int(M) != M or M < MIN_CELLS:
        raise ConfigurationError(f"need at least {MIN_CELLS} cells, got M={M!r}")
    if not grading >= 1:
        raise ConfigurationError(f"grading exponent must be >= 1, got {grading!r}")
    if order < 1:
        raise ConfigurationError("Gauss order must be positive")
    return RadialGrid(int(N), float(R), int(M), float(grading), int(order))


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """Nodal values of a radial profile on ``grid``; ``values[-1]`` is 0."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.M,):
            raise DomainError(f"expected {self.grid.M} nodal values, got shape {v.shape}")
        if v[-1] != 0.0:
            raise DomainError("value at the truncation radius must be exactly 0")
        if not np.all(np.isfinite(v)):
            raise DomainError("nodal values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: RadialGrid, fn: Callable[[np.ndarray], np.ndarray]) -> "RadialFunction":
        v = np.asarray(fn(grid.nodes), dtype=float).copy()
        v[-1] = 0.0
        return cls(grid, v)

    @classmethod
    def zeros(cls, grid: RadialGrid) -> "RadialFunction":
        return cls(grid, np.zeros(grid.M))

    def scaled(self, t: float) -> "RadialFunction":
        return RadialFunction(self.grid, t * self.values)

    def __add__(self, other: "RadialFunction") -> "RadialFunction":
        return RadialFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "RadialFunction") -> "RadialFunction":
        return RadialFunction(self.grid, self.values - other.values)

    def at_points(self) -> np.ndarray:
        return self.grid.interpolation @ self.values


def interpolate(f: RadialFunction, r):
    """Evaluate the piecewise-linear profile at radius/radii ``r``."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise DomainError("radius must be nonnegative")
    g = f.grid
    out = np.interp(arr, g.edges, np.concatenate(([f.values[0]], f.values)), right=0.0)
    return float(out) if out.ndim == 0 else out


def weighted_lp_integral(f: RadialFunction, p: float, w: float = 0.0) -> float:
    """``omega * int_0^R r^(N-1+w) |f|^p dr`` (the p-th power of the norm)."""
    if p < 1:
        raise DomainError(f"exponent must be >= 1, got {p}")
    return float(np.dot(f.grid.lp_weights(w), np.abs(f.at_points()) ** p))


def weighted_lp_norm(f: RadialFunction, p: float, w: float = 0.0) -> float:
    return weighted_lp_integral(f, p, w) ** (1.0 / p)


def gradient_integral(f: RadialFunction, p: float) -> float:
    """``||f'||_p^p``, exact for piecewise-linear profiles."""
    if p < 1:
        raise DomainError(f"exponent must be >= 1, got {p}")
    g = f.grid
    slopes = g.slope_operator @ f.values
    return float(np.dot(g.cell_mass, np.abs(slopes) ** p))


def radial_gradient_norm(f: RadialFunction, p: float) -> float:
    return gradient_integral(f, p) ** (1.0 / p)

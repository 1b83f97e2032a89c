"""Uniform grids on [0, a], complex tabulated functions, and the quadrature
primitives (cumulative trapezoid, second-order difference stencils) that the
power recursion is built from.

All integrals are anchored at x = 0, the left endpoint.  Tabulated values are
immutable after construction, so grids and functions are safe to share across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EvalError, GridError
from .exprlang import CoeffExpr, evaluate

__all__ = [
    "Grid",
    "SampledFn",
    "make_grid",
    "sample",
    "cumulative_integral",
    "derivative",
    "midpoint_values",
]

DEFAULT_N_POINTS = 10001


@dataclass(frozen=True)
class Grid:
    """Uniform nodes x_j = j*h on [0, a] with an odd point count."""

    a: float
    n_points: int
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.a > 0):
            raise GridError(f"interval length must be positive, got {self.a}")
        if self.n_points < 3:
            raise GridError(f"n_points must be at least 3, got {self.n_points}")
        if self.n_points % 2 == 0:
            raise GridError(f"n_points must be odd, got {self.n_points}")
        nodes = np.linspace(0.0, float(self.a), self.n_points)
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @property
    def h(self) -> float:
        return self.a / (self.n_points - 1)


def make_grid(a: float, n_points: int = DEFAULT_N_POINTS) -> Grid:
    return Grid(float(a), int(n_points))


@dataclass
class SampledFn:
    """A complex-valued function tabulated on a grid, one value per node."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != (self.grid.n_points,):
            raise GridError(
                f"expected {self.grid.n_points} values, got shape {vals.shape}"
            )
        bad = np.flatnonzero(~np.isfinite(vals))
        if bad.size:
            raise GridError(f"non-finite value at node {bad[0]}")
        vals = vals.copy()
        vals.flags.writeable = False
        self.values = vals

    def __len__(self) -> int:
        return self.grid.n_points

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def sample(expr: CoeffExpr, grid: Grid) -> SampledFn:
    """Tabulate an expression on the grid, pointing at the offending node on failure."""
    values = np.empty(grid.n_points, dtype=np.complex128)
    for j, x in enumerate(grid.nodes):
        try:
            values[j] = evaluate(expr, float(x))
        except EvalError as exc:
            raise EvalError(f"{exc} [node {j}, x={x}]") from exc
    return SampledFn(grid, values)


def constant(grid: Grid, value: complex) -> SampledFn:
    return SampledFn(grid, np.full(grid.n_points, complex(value)))


def cumulative_integral(f: SampledFn) -> SampledFn:
    """Running integral from 0 by the composite trapezoidal rule.

    Every node carries a valid partial integral; global error is O(h^2) for
    twice-differentiable integrands, exact for piecewise-linear ones.
    """
    v = f.values
    h = f.grid.h
    out = np.empty_like(v)
    out[0] = 0.0
    np.cumsum(0.5 * h * (v[:-1] + v[1:]), out=out[1:])
    return SampledFn(f.grid, out)


def derivative(f: SampledFn) -> SampledFn:
    """Second-order difference stencils: central inside, one-sided at the ends."""
    v = f.values
    h = f.grid.h
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return SampledFn(f.grid, out)


# Cubic (4-point) interpolation weights at a midpoint: interior stencil is
# centered, the two boundary midpoints use the off-center cubic.
_MID_INNER = np.array([-1.0, 9.0, 9.0, -1.0]) / 16.0
_MID_LEFT = np.array([5.0, 15.0, -5.0, 1.0]) / 16.0
_MID_RIGHT = _MID_LEFT[::-1].copy()


def midpoint_values(f: SampledFn) -> np.ndarray:
    """Values of f at the n-1 interval midpoints by cubic interpolation (O(h^4))."""
    v = f.values
    n = v.size
    mid = np.empty(n - 1, dtype=np.complex128)
    # centered stencil for midpoints of intervals [j, j+1], 1 <= j <= n-3
    mid[1:-1] = (
        _MID_INNER[0] * v[0 : n - 3]
        + _MID_INNER[1] * v[1 : n - 2]
        + _MID_INNER[2] * v[2 : n - 1]
        + _MID_INNER[3] * v[3:n]
    )
    mid[0] = _MID_LEFT @ v[:4]
    mid[-1] = _MID_RIGHT @ v[-4:]
    return mid

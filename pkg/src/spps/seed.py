"""Construction of the nonvanishing zero-energy solution g0 of
(p g0')' + q g0 = 0 and of the integration weights g0^2 and 1/(p g0^2)
that drive the power recursion.

The equation is integrated as the first-order system

    g' = v / p,     v' = -q g,        v = p g'

with classical fourth-order Runge-Kutta.  Coefficient values at half-steps
come from cubic interpolation of the samples unless the caller supplies them
(e.g. by evaluating coefficient expressions directly).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import SeedResidualTooLarge, SeedVanishes, SppsError
from .exprlang import CoeffExpr
from .grid import SampledFn, derivative, midpoint_values, sample

__all__ = ["Seed", "integrate_zero_energy", "build_seed"]

VANISH_REL = 1e-10
EXPLICIT_RESIDUAL_TOL = 1e-5


@dataclass
class Seed:
    """Zero-energy solution with its derivative, weights, and weight bound.

    ``weight_sq`` is g0^2 and ``weight_inv`` is 1/(p g0^2); ``bound`` is the
    sup over nodes of both weight magnitudes, which controls the growth of
    the power families and hence series truncation.
    """

    g0: SampledFn
    g0_prime: SampledFn
    weight_sq: SampledFn
    weight_inv: SampledFn
    bound: float


def _check_p(p: SampledFn, p_mid: np.ndarray) -> None:
    scale = np.max(np.abs(p.values))
    if scale == 0.0:
        raise SppsError("p is identically zero")
    bad = np.flatnonzero(np.abs(p.values) <= 1e-14 * scale)
    if bad.size:
        raise SppsError(f"p vanishes at node {bad[0]}")
    if np.any(np.abs(p_mid) <= 1e-14 * scale):
        raise SppsError("p vanishes between nodes")


def integrate_zero_energy(
    p: SampledFn,
    q: SampledFn,
    u0: complex,
    v0: complex,
    p_mid: Optional[np.ndarray] = None,
    q_mid: Optional[np.ndarray] = None,
) -> tuple[SampledFn, SampledFn]:
    """Solve (p g')' + q g = 0 with g(0)=u0, (p g')(0)=v0 by RK4.

    Returns the pair (g, v) tabulated on the grid, where v = p g'.
    """
    grid = p.grid
    if q.grid != grid:
        raise SppsError("p and q must share one grid")
    if p_mid is None:
        p_mid = midpoint_values(p)
    if q_mid is None:
        q_mid = midpoint_values(q)
    _check_p(p, p_mid)

    h = grid.h
    n = grid.n_points
    pv, qv = p.values, q.values
    g = np.empty(n, dtype=np.complex128)
    v = np.empty(n, dtype=np.complex128)
    g[0] = gj = complex(u0)
    v[0] = vj = complex(v0)
    for j in range(n - 1):
        p0, q0 = pv[j], qv[j]
        pm, qm = p_mid[j], q_mid[j]
        p1, q1 = pv[j + 1], qv[j + 1]

        k1g = vj / p0
        k1v = -q0 * gj
        k2g = (vj + 0.5 * h * k1v) / pm
        k2v = -qm * (gj + 0.5 * h * k1g)
        k3g = (vj + 0.5 * h * k2v) / pm
        k3v = -qm * (gj + 0.5 * h * k2g)
        k4g = (vj + h * k3v) / p1
        k4v = -q1 * (gj + h * k3g)

        gj = gj + (h / 6.0) * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
        vj = vj + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        g[j + 1] = gj
        v[j + 1] = vj

    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(v))):
        raise SppsError("zero-energy integration left the finite range")
    return SampledFn(grid, g), SampledFn(grid, v)


def build_seed(
    p: SampledFn,
    q: SampledFn,
    seed: Union[str, CoeffExpr, SampledFn] = "auto",
    p_mid: Optional[np.ndarray] = None,
    q_mid: Optional[np.ndarray] = None,
    vanish_rel: float = VANISH_REL,
    residual_tol: float = EXPLICIT_RESIDUAL_TOL,
) -> Seed:
    """Build the seed, either automatically or from an explicit function.

    Auto mode integrates the two solutions g1, g2 with (g(0), (p g')(0)) equal
    to (1, 0) and (0, 1) and combines them as g0 = g1 + i*g2; for real
    coefficients their zeros never coincide, so g0 is nonvanishing.  For
    complex q the combination is still formed but only checked.  Explicit
    seeds (expression or tabulated) are residual-checked against the
    zero-energy equation and differentiated with the grid stencil.
    """
    grid = p.grid
    if seed == "auto":
        g1, v1 = integrate_zero_energy(p, q, 1.0, 0.0, p_mid, q_mid)
        g2, v2 = integrate_zero_energy(p, q, 0.0, 1.0, p_mid, q_mid)
        g0 = SampledFn(grid, g1.values + 1j * g2.values)
        g0_prime = SampledFn(grid, (v1.values + 1j * v2.values) / p.values)
    else:
        if isinstance(seed, SampledFn):
            g0 = seed
        else:
            g0 = sample(seed, grid)
        g0_prime = derivative(g0)

    mag = np.abs(g0.values)
    peak = float(np.max(mag))
    if peak == 0.0:
        raise SeedVanishes("seed is identically zero")
    bad = np.flatnonzero(mag <= vanish_rel * peak)
    if bad.size:
        j = int(bad[0])
        hint = "; supply an explicit nonvanishing seed" if seed == "auto" else ""
        raise SeedVanishes(
            f"|g0| = {mag[j]:.3e} at node {j} (x={grid.nodes[j]:.6g}){hint}"
        )

    if seed != "auto":
        flux = SampledFn(grid, p.values * g0_prime.values)
        res = derivative(flux).values + q.values * g0.values
        rel = float(np.max(np.abs(res))) / peak
        if rel > residual_tol:
            raise SeedResidualTooLarge(
                f"explicit seed residual {rel:.3e} exceeds {residual_tol:.1e}"
            )

    w_sq = SampledFn(grid, g0.values**2)
    w_inv = SampledFn(grid, 1.0 / (p.values * g0.values**2))
    bound = max(w_sq.max_abs(), w_inv.max_abs())
    return Seed(g0, g0_prime, w_sq, w_inv, bound)

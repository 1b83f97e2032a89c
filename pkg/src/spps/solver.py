"""Assembly of the parameterized solutions u1, u2 for arbitrary complex
spectral parameter omega, their derivatives, residual certificates, and the
Darboux transformation.

The public convention is uniformly the divergence form

    (p u')' + q u = omega^2 u.

With a seed g0 and the power families of :mod:`spps.powers`,

    u1 = g0 * sum_{even n} omega^n/n! * first[n]
    u2 = g0 * sum_{odd n}  omega^(n-1)/n! * second[n]      (normalized form)

The normalized u2 is well defined at omega = 0 and gives the initial values
u1(0) = g0(0), u1'(0) = g0'(0), u2(0) = 0, u2'(0) = 1/(g0(0) p(0)), which
force p*(u1 u2' - u1' u2) = 1 identically.  Derivatives are evaluated by
their own series, not by differencing.

Scalar factors omega^n/n! are accumulated iteratively so that neither the
power nor the factorial is ever formed on its own.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import DegenerateInputWarning, NonUnitP, SppsError, TableTooShallow
from .exprlang import CoeffExpr, evaluate, parse
from .grid import Grid, SampledFn, derivative
from .powers import PowerTable, build_power_table, series_tail_bound, truncation_order
from .seed import Seed, build_seed

__all__ = [
    "SppsBasis",
    "SolutionPair",
    "DarbouxResult",
    "build_basis",
    "build_basis_from_exprs",
    "eval_u1",
    "eval_u2",
    "eval_derivatives",
    "general_solution",
    "solution_pair",
    "residual_norm",
    "operator_residual",
    "wronskian_defect",
    "darboux",
]

DEFAULT_TOL = 1e-12


@dataclass
class SppsBasis:
    """Coefficients, seed, and power table sharing one grid; built once per
    problem and reused for every omega."""

    p: SampledFn
    q: SampledFn
    seed: Seed
    table: PowerTable

    def __post_init__(self):
        grid = self.p.grid
        if self.q.grid != grid or self.seed.g0.grid != grid:
            raise SppsError("basis members must share one grid")
        if self.table.seed is not self.seed:
            raise SppsError("power table was built from a different seed")

    @property
    def grid(self) -> Grid:
        return self.p.grid


@dataclass
class SolutionPair:
    omega: complex
    u1: SampledFn
    u2: SampledFn
    u1_prime: SampledFn
    u2_prime: SampledFn
    trunc_n: int
    tail_bound: float


@dataclass
class DarbouxResult:
    """Transformed potential with the image pair and the seed of the new equation."""

    q_new: SampledFn
    v1: SampledFn
    v2: SampledFn
    seed_new: SampledFn


def build_basis(
    p: SampledFn,
    q: SampledFn,
    seed: Union[str, CoeffExpr, SampledFn] = "auto",
    depth: Optional[int] = None,
    omega_max: Optional[float] = None,
    tol: float = DEFAULT_TOL,
    p_mid: Optional[np.ndarray] = None,
    q_mid: Optional[np.ndarray] = None,
    extra_depth: int = 0,
) -> SppsBasis:
    """Build seed and power table sized either explicitly (``depth``) or from
    the truncation order at ``omega_max``."""
    seed_obj = build_seed(p, q, seed, p_mid=p_mid, q_mid=q_mid)
    if depth is None:
        if omega_max is None:
            raise ValueError("either depth or omega_max must be given")
        depth = truncation_order(seed_obj, p.grid.a, float(omega_max), tol) + extra_depth
    table = build_power_table(seed_obj, depth)
    return SppsBasis(p, q, seed_obj, table)


def build_basis_from_exprs(
    p_source: str,
    q_source: str,
    grid: Grid,
    seed: str = "auto",
    **kwargs,
) -> SppsBasis:
    """Convenience wrapper: parse coefficient sources, tabulate them, and feed
    the integrator exact half-step values from the expressions."""
    from .grid import sample

    p_expr = parse(p_source)
    q_expr = parse(q_source)
    mids = grid.nodes[:-1] + 0.5 * grid.h
    p_mid = np.array([evaluate(p_expr, float(x)) for x in mids])
    q_mid = np.array([evaluate(q_expr, float(x)) for x in mids])
    seed_spec: Union[str, CoeffExpr] = seed if seed == "auto" else parse(seed)
    return build_basis(
        sample(p_expr, grid),
        sample(q_expr, grid),
        seed_spec,
        p_mid=p_mid,
        q_mid=q_mid,
        **kwargs,
    )


# ----------------------------- series machinery -----------------------------


def _plan(basis: SppsBasis, omega: complex, tol: float) -> tuple[int, float]:
    """Truncation index for this omega and the certified tail bound."""
    n = truncation_order(basis.seed, basis.grid.a, abs(omega), tol)
    if n > basis.table.depth:
        raise TableTooShallow(
            f"need depth {n} for |omega|={abs(omega):.3g} at tol {tol:.1e}, "
            f"table has {basis.table.depth}"
        )
    r = basis.seed.bound * basis.grid.a * abs(omega)
    return n, series_tail_bound(r, n)


def _sum_series(
    family: list[SampledFn],
    omega: complex,
    n_top: int,
    parity: int,
    shift: int,
) -> np.ndarray:
    """sum over n <= n_top with n = parity (mod 2) of omega^(n+shift)/n! * family[n]."""
    n0 = parity
    coeff = complex(1.0)
    for _ in range(n0 + shift):
        coeff *= omega
    for k in range(2, n0 + 1):
        coeff /= k
    total = np.zeros(family[0].values.shape, dtype=np.complex128)
    n = n0
    om2 = omega * omega
    while n <= n_top:
        if coeff != 0.0:
            total += coeff * family[n].values
        coeff *= om2 / ((n + 1) * (n + 2))
        n += 2
    return total


# ------------------------------- evaluations --------------------------------


def eval_u1(basis: SppsBasis, omega: complex, tol: float = DEFAULT_TOL) -> SampledFn:
    """First solution: g0 times the even-index series of the first kind."""
    n, _ = _plan(basis, omega, tol)
    vals = basis.seed.g0.values * _sum_series(basis.table.first_kind, omega, n, 0, 0)
    return SampledFn(basis.grid, vals)


def eval_u2(
    basis: SppsBasis,
    omega: complex,
    tol: float = DEFAULT_TOL,
    normalized: bool = True,
) -> SampledFn:
    """Second solution from the odd-index series of the second kind.

    The normalized form divides out one power of omega; it is the default for
    spectral work and remains well defined at omega = 0, where it reduces to
    the reduction-of-order solution g0 * integral of 1/(p g0^2).
    """
    n, _ = _plan(basis, omega, tol)
    shift = -1 if normalized else 0
    vals = basis.seed.g0.values * _sum_series(basis.table.second_kind, omega, n, 1, shift)
    return SampledFn(basis.grid, vals)


def eval_derivatives(
    basis: SppsBasis, omega: complex, tol: float = DEFAULT_TOL
) -> tuple[SampledFn, SampledFn]:
    """(u1', u2') by their own series; u2' belongs to the normalized u2."""
    n, _ = _plan(basis, omega, tol)
    g0 = basis.seed.g0.values
    log_der = basis.seed.g0_prime.values / g0
    inv_gp = 1.0 / (g0 * basis.p.values)

    u1 = g0 * _sum_series(basis.table.first_kind, omega, n, 0, 0)
    u2 = g0 * _sum_series(basis.table.second_kind, omega, n, 1, -1)
    u1p = log_der * u1 + inv_gp * _sum_series(basis.table.first_kind, omega, n - 1, 1, 1)
    u2p = log_der * u2 + inv_gp * _sum_series(basis.table.second_kind, omega, n, 0, 0)
    return SampledFn(basis.grid, u1p), SampledFn(basis.grid, u2p)


def solution_pair(
    basis: SppsBasis, omega: complex, tol: float = DEFAULT_TOL
) -> SolutionPair:
    """u1, u2 (normalized) and their derivatives with the truncation certificate."""
    n, tail = _plan(basis, omega, tol)
    g0 = basis.seed.g0.values
    log_der = basis.seed.g0_prime.values / g0
    inv_gp = 1.0 / (g0 * basis.p.values)
    grid = basis.grid

    u1 = g0 * _sum_series(basis.table.first_kind, omega, n, 0, 0)
    u2 = g0 * _sum_series(basis.table.second_kind, omega, n, 1, -1)
    u1p = log_der * u1 + inv_gp * _sum_series(basis.table.first_kind, omega, n - 1, 1, 1)
    u2p = log_der * u2 + inv_gp * _sum_series(basis.table.second_kind, omega, n, 0, 0)
    return SolutionPair(
        omega=complex(omega),
        u1=SampledFn(grid, u1),
        u2=SampledFn(grid, u2),
        u1_prime=SampledFn(grid, u1p),
        u2_prime=SampledFn(grid, u2p),
        trunc_n=n,
        tail_bound=tail,
    )


def general_solution(
    basis: SppsBasis,
    omega: complex,
    c1: complex,
    c2: complex,
    tol: float = DEFAULT_TOL,
) -> SampledFn:
    """c1*u1 + c2*u2 with the normalized u2."""
    u1 = eval_u1(basis, omega, tol)
    u2 = eval_u2(basis, omega, tol, normalized=True)
    return SampledFn(basis.grid, c1 * u1.values + c2 * u2.values)


# ------------------------------- certificates -------------------------------

_TRIM = 3  # interior nodes only: difference stencils contaminate the ends


def operator_residual(
    p: SampledFn, q: SampledFn, omega: complex, u: SampledFn
) -> float:
    """sup over interior nodes of |(p u')' + q u - omega^2 u| / sup |u|."""
    if u.grid != p.grid:
        raise SppsError("u must be tabulated on the coefficient grid")
    scale = u.max_abs()
    if scale == 0.0:
        warnings.warn(
            "residual of the zero function requested", DegenerateInputWarning
        )
        return 0.0
    flux = SampledFn(u.grid, p.values * derivative(u).values)
    res = derivative(flux).values + q.values * u.values - (omega * omega) * u.values
    return float(np.max(np.abs(res[_TRIM:-_TRIM]))) / scale


def residual_norm(basis: SppsBasis, omega: complex, u: SampledFn) -> float:
    """Residual certificate of u against the basis problem."""
    return operator_residual(basis.p, basis.q, omega, u)


def wronskian_defect(basis: SppsBasis, pair: SolutionPair) -> float:
    """sup over nodes of |p*(u1 u2' - u1' u2) - 1|; zero in exact arithmetic."""
    w = basis.p.values * (
        pair.u1.values * pair.u2_prime.values - pair.u1_prime.values * pair.u2.values
    )
    return float(np.max(np.abs(w - 1.0)))


# --------------------------- Darboux transformation -------------------------


def darboux(basis: SppsBasis, omega: complex, tol: float = DEFAULT_TOL) -> DarbouxResult:
    """Image of the solution pair under u -> u' - (g0'/g0) u, for p = 1.

    The images solve v'' + q_new v = omega^2 v with the divergence-form
    potential q_new = -q - 2 (g0'/g0)^2 (in Schroedinger-form terms, potential
    r = 2 (g0'/g0)^2 - q_m with q_m = -q), whose own zero-energy seed is 1/g0.
    v1 is the image of u1 and vanishes identically at omega = 0; v2 is the
    image of the normalized u2 and reduces to 1/g0 there.
    """
    if float(np.max(np.abs(basis.p.values - 1.0))) > 1e-12:
        raise NonUnitP("Darboux transformation requires p identically 1")
    n, _ = _plan(basis, omega, tol)
    grid = basis.grid
    g0 = basis.seed.g0.values
    log_der = basis.seed.g0_prime.values / g0

    v1 = _sum_series(basis.table.first_kind, omega, n - 1, 1, 1) / g0
    v2 = _sum_series(basis.table.second_kind, omega, n, 0, 0) / g0
    q_new = -basis.q.values - 2.0 * log_der**2
    return DarbouxResult(
        q_new=SampledFn(grid, q_new),
        v1=SampledFn(grid, v1),
        v2=SampledFn(grid, v2),
        seed_new=SampledFn(grid, 1.0 / g0),
    )

"""The two recursive families of iterated integrals that parameterize every
solution, plus truncation sizing from their growth bound.

Starting from the constant function 1, each index n multiplies by n and
integrates the previous entry against one of the two seed weights, with the
weights alternating between steps:

    first kind   odd n: weight g0^2      even n: weight 1/(p g0^2)
    second kind  odd n: weight 1/(p g0^2)   even n: weight g0^2

The first kind feeds the even-index solution series (u1), the second kind the
odd-index series (u2).  The tables depend only on (p, q, g0, grid): they are
built once and reused verbatim for every spectral parameter.

Since |entry n| <= (bound * x)^n, the tail of any solution series beyond
index N is bounded by sum_{n>N} (|omega| * bound * a)^n / n!, which is what
``truncation_order`` inverts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PowerOverflow, TruncationCapExceeded
from .grid import SampledFn, cumulative_integral
from .seed import Seed

__all__ = [
    "PowerTable",
    "build_power_table",
    "truncation_order",
    "series_tail_bound",
    "DEPTH_CAP",
]

DEPTH_CAP = 200


@dataclass
class PowerTable:
    """Both families tabulated for indices 0..depth (depth even in normal use)."""

    seed: Seed
    depth: int
    first_kind: list[SampledFn]
    second_kind: list[SampledFn]


def build_power_table(seed: Seed, depth: int) -> PowerTable:
    """Build both families up to the given highest index."""
    if depth < 1:
        raise ValueError(f"depth must be at least 1, got {depth}")
    grid = seed.g0.grid
    one = SampledFn(grid, np.ones(grid.n_points))
    first = [one]
    second = [one]
    w_sq = seed.weight_sq.values
    w_inv = seed.weight_inv.values
    for n in range(1, depth + 1):
        wf, ws = (w_sq, w_inv) if n % 2 == 1 else (w_inv, w_sq)
        fprev = first[-1].values * wf
        sprev = second[-1].values * ws
        if not (np.all(np.isfinite(fprev)) and np.all(np.isfinite(sprev))):
            raise PowerOverflow(
                f"power recursion overflowed at index {n}; "
                f"weight bound {seed.bound:.3e} is too large for this depth"
            )
        first.append(SampledFn(grid, n * cumulative_integral(SampledFn(grid, fprev)).values))
        second.append(SampledFn(grid, n * cumulative_integral(SampledFn(grid, sprev)).values))
    return PowerTable(seed, depth, first, second)


def series_tail_bound(r: float, n: int) -> float:
    """sum_{k>n} r^k / k!, summed term by term without forming r^k or k!."""
    if r == 0.0:
        return 0.0
    if r < 0.0:
        raise ValueError("tail argument must be nonnegative")
    term = 1.0
    for k in range(1, n + 2):
        term *= r / k
    total = 0.0
    k = n + 1
    while term > 0.0:
        total += term
        k += 1
        term *= r / k
        if k > r and term < 1e-18 * total:
            break
    return total


def truncation_order(seed: Seed, a: float, omega_abs: float, tol: float) -> int:
    """Smallest even N whose series tail bound is at most tol (minimum 2)."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    r = seed.bound * a * omega_abs
    n = 2
    while True:
        if series_tail_bound(r, n) <= tol:
            return n
        n += 2
        if n > DEPTH_CAP:
            raise TruncationCapExceeded(
                f"tail bound not below {tol:.1e} within {DEPTH_CAP} terms "
                f"(|omega|*bound*a = {r:.3e})"
            )

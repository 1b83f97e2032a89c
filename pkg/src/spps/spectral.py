"""Reduction of boundary-value spectral problems on (0, a) to zeros of an
analytic characteristic function, and location of eigenvalues.

Boundary conditions are Robin at both ends,

    u(0) cos(alpha) + u'(0) sin(alpha) = 0,
    u(a) cos(beta)  + u'(a) sin(beta)  = 0,

with Dirichlet/Neumann the alpha, beta = 0, pi/2 special cases.  Because
u1, u2 carry only even powers of omega, the characteristic function kappa has
even coefficients only and eigenvalue search happens in lambda = omega^2,
where K(lambda) = sum_j a_{2j} lambda^j and K(omega^2) = kappa(omega).

The seed may be complex (auto mode always is), so K is generally complex
along real lambda and sign-change bisection does not apply.  Eigenvalues are
found by scanning |K| over the window, refining each local minimum with
Newton iteration in complex lambda, then filtering, deduplicating, and
sorting by real part.  An optional mode instead takes all roots of the
truncated polynomial by Aberth-Ehrlich simultaneous iteration and filters to
the window.
"""

from __future__ import annotations

import cmath
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    ConvergenceFailure,
    DegenerateInputWarning,
    DirichletLeft,
    SppsError,
    TableTooShallow,
)
from .grid import SampledFn
from .powers import truncation_order
from .solver import DEFAULT_TOL, SppsBasis, solution_pair

__all__ = [
    "BoundaryConditions",
    "CharacteristicSeries",
    "SpectrumOptions",
    "Eigenvalue",
    "Spectrum",
    "robin_gamma",
    "characteristic_series",
    "characteristic_eval_direct",
    "find_eigenvalues",
    "eigenfunction",
    "boundary_defect",
]

_ANGLE_TOL = 1e-12


@dataclass(frozen=True)
class BoundaryConditions:
    """Robin angles at the two endpoints, interpreted modulo pi."""

    alpha: float
    beta: float

    @property
    def dirichlet_left(self) -> bool:
        return abs(math.sin(self.alpha)) <= _ANGLE_TOL


def robin_gamma(basis: SppsBasis, alpha: float) -> complex:
    """Scalar gamma tying the solution constants, c2 = gamma * c1.

    Signals :class:`DirichletLeft` when alpha is a multiple of pi; callers
    must branch to the Dirichlet reduction (c1 = 0) there.
    """
    s = math.sin(alpha)
    if abs(s) <= _ANGLE_TOL:
        raise DirichletLeft(f"alpha={alpha!r} is a multiple of pi")
    g00 = complex(basis.seed.g0.values[0])
    g0p0 = complex(basis.seed.g0_prime.values[0])
    p0 = complex(basis.p.values[0])
    cot = math.cos(alpha) / s
    return -g00 * p0 * (g00 * cot + g0p0)


@dataclass
class CharacteristicSeries:
    """Power-series coefficients a_m of kappa(omega); odd entries are exactly 0.

    ``eval_lambda`` evaluates K(lambda) = sum_j a_{2j} lambda^j, so that
    K(omega^2) = kappa(omega).
    """

    coeffs: np.ndarray
    gamma: Optional[complex]
    bc: BoundaryConditions
    basis: SppsBasis = field(repr=False)

    @property
    def lambda_coeffs(self) -> np.ndarray:
        return self.coeffs[::2]

    def eval_lambda(self, lam):
        return np.polyval(self.lambda_coeffs[::-1], lam)

    def eval_lambda_prime(self, lam):
        b = self.lambda_coeffs
        if b.size < 2:
            return np.zeros_like(lam, dtype=complex) if np.ndim(lam) else 0j
        d = b[1:] * np.arange(1, b.size)
        return np.polyval(d[::-1], lam)

    def eval_omega(self, omega):
        return self.eval_lambda(omega * omega)


def _inv_factorials(n: int) -> np.ndarray:
    out = np.empty(n + 1)
    out[0] = 1.0
    for k in range(1, n + 1):
        out[k] = out[k - 1] / k
    return out


def characteristic_series(
    basis: SppsBasis,
    bc: BoundaryConditions,
    m_top: Optional[int] = None,
    tol: float = DEFAULT_TOL,
) -> CharacteristicSeries:
    """Coefficients a_0..a_m_top from endpoint values of the power families.

    ``m_top`` defaults to the deepest even degree the table supports
    (depth - 1 endpoint entries are required).
    """
    depth = basis.table.depth
    if m_top is None:
        m_top = depth - 1 if (depth - 1) % 2 == 0 else depth - 2
    if m_top < 0 or m_top + 1 > depth:
        raise TableTooShallow(
            f"characteristic degree {m_top} needs table depth {m_top + 1}, "
            f"table has {depth}"
        )
    inv_fact = _inv_factorials(m_top + 1)
    end_first = np.array([f.values[-1] for f in basis.table.first_kind])
    end_second = np.array([f.values[-1] for f in basis.table.second_kind])

    g0a = complex(basis.seed.g0.values[-1])
    g0pa = complex(basis.seed.g0_prime.values[-1])
    pa = complex(basis.p.values[-1])
    cb, sb = math.cos(bc.beta), math.sin(bc.beta)
    end_weight = g0a * cb + g0pa * sb
    slope_weight = sb / (g0a * pa)

    coeffs = np.zeros(m_top + 1, dtype=np.complex128)
    if bc.dirichlet_left:
        gamma = None
        for m in range(0, m_top + 1, 2):
            coeffs[m] = (
                end_weight * end_second[m + 1] * inv_fact[m + 1]
                + slope_weight * end_second[m] * inv_fact[m]
            )
    else:
        gamma = robin_gamma(basis, bc.alpha)
        for m in range(0, m_top + 1, 2):
            t_val = end_first[m] * inv_fact[m] + gamma * end_second[m + 1] * inv_fact[m + 1]
            t_slope = gamma * end_second[m] * inv_fact[m]
            if m > 0:
                t_slope += end_first[m - 1] * inv_fact[m - 1]
            coeffs[m] = end_weight * t_val + slope_weight * t_slope
    return CharacteristicSeries(coeffs, gamma, bc, basis)


def characteristic_eval_direct(
    basis: SppsBasis,
    bc: BoundaryConditions,
    omega: complex,
    tol: float = DEFAULT_TOL,
) -> complex:
    """Boundary mismatch at x = a of the solution built to satisfy the left
    condition; vanishes exactly where the coefficient series does."""
    pair = solution_pair(basis, omega, tol)
    if bc.dirichlet_left:
        u_a = pair.u2.values[-1]
        up_a = pair.u2_prime.values[-1]
    else:
        gamma = robin_gamma(basis, bc.alpha)
        u_a = pair.u1.values[-1] + gamma * pair.u2.values[-1]
        up_a = pair.u1_prime.values[-1] + gamma * pair.u2_prime.values[-1]
    return complex(u_a * math.cos(bc.beta) + up_a * math.sin(bc.beta))


# ---------------------------- eigenvalue search -----------------------------


@dataclass
class SpectrumOptions:
    scan_points: int = 2000
    accept_tol: float = 1e-9
    max_newton: int = 50
    im_tol: float = 1e-6
    dedupe_rel: float = 1e-8
    method: str = "scan"  # "scan" (minima + Newton) or "aberth"
    series_tol: float = DEFAULT_TOL
    m_top: Optional[int] = None
    real_coefficients: Optional[bool] = None  # None: detect from p, q


@dataclass
class Eigenvalue:
    lam: complex
    kappa_residual: float
    newton_iters: int


@dataclass
class Spectrum:
    eigenvalues: list[Eigenvalue]
    window: tuple[float, float]
    options: SpectrumOptions
    scale: float
    diagnostic: Optional[str] = None


def _max_workers() -> int:
    raw = os.environ.get("SPPS_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, n)


def _detect_real(basis: SppsBasis) -> bool:
    p_im = float(np.max(np.abs(basis.p.values.imag)))
    q_im = float(np.max(np.abs(basis.q.values.imag)))
    p_sc = max(1.0, basis.p.max_abs())
    q_sc = max(1.0, basis.q.max_abs())
    return p_im <= 1e-13 * p_sc and q_im <= 1e-13 * q_sc


def _newton_refine(series, lam0, threshold, max_iter, cell):
    lam = complex(lam0)
    best_lam, best_abs = lam, float("inf")
    for it in range(1, max_iter + 1):
        k = complex(series.eval_lambda(lam))
        ak = abs(k)
        if ak < best_abs:
            best_lam, best_abs = lam, ak
        if ak <= 0.01 * threshold:
            return lam, ak, it
        kp = complex(series.eval_lambda_prime(lam))
        if kp == 0:
            lam += cell * 1e-3
            continue
        step = k / kp
        lam -= step
        if abs(step) <= 1e-15 * max(1.0, abs(lam)):
            k = complex(series.eval_lambda(lam))
            if abs(k) < best_abs:
                best_lam, best_abs = lam, abs(k)
            return best_lam, best_abs, it
    return best_lam, best_abs, max_iter


def _aberth_roots(b: np.ndarray, max_iter: int = 400):
    """All roots of the polynomial sum_j b_j z^j by simultaneous iteration."""
    mags = np.abs(b)
    top = int(np.max(np.nonzero(mags > 0.0)[0])) if np.any(mags > 0) else 0
    b = b[: top + 1]
    deg = b.size - 1
    if deg < 1:
        return np.empty(0, dtype=complex), 0
    # Fujiwara bound for the root radius, then spread starting points on a circle
    with np.errstate(divide="ignore"):
        ratios = np.abs(b[:-1] / b[-1]) ** (1.0 / (deg - np.arange(deg)))
    radius = 2.0 * float(np.max(ratios)) if np.all(np.isfinite(ratios)) else 1.0
    radius = max(radius, 1e-6)
    angles = 2.0 * np.pi * (np.arange(deg) + 0.5) / deg + 0.4
    z = 0.5 * radius * np.exp(1j * angles)
    d = b[1:] * np.arange(1, b.size)
    iters = 0
    for iters in range(1, max_iter + 1):
        pz = np.polyval(b[::-1], z)
        dpz = np.polyval(d[::-1], z)
        dpz = np.where(dpz == 0, 1e-300, dpz)
        newton = pz / dpz
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        sums = np.sum(1.0 / diff, axis=1) - 1.0  # remove the diagonal 1/1 terms
        corr = newton / (1.0 - newton * sums)
        z = z - corr
        if float(np.max(np.abs(corr))) <= 1e-13 * (1.0 + float(np.max(np.abs(z)))):
            break
    return z, iters


def find_eigenvalues(
    basis: SppsBasis,
    bc: BoundaryConditions,
    lambda_window: tuple[float, float],
    options: Optional[SpectrumOptions] = None,
) -> Spectrum:
    """Locate zeros of K(lambda) inside a finite real window.

    An empty result is a diagnostic, not an error; :class:`ConvergenceFailure`
    is raised only when, for a real-coefficient self-adjoint problem, the
    window provably brackets a sign change that refinement cannot resolve.
    """
    opts = options or SpectrumOptions()
    lo, hi = float(lambda_window[0]), float(lambda_window[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise SppsError(f"invalid eigenvalue window [{lo}, {hi}]")

    m_top = opts.m_top
    if m_top is None:
        omega_max = math.sqrt(max(abs(lo), abs(hi)))
        m_top = truncation_order(basis.seed, basis.grid.a, omega_max, opts.series_tol)
    series = characteristic_series(basis, bc, m_top, opts.series_tol)

    width = hi - lo
    lam_grid = np.linspace(lo, hi, opts.scan_points)
    cell = width / (opts.scan_points - 1)
    kvals = series.eval_lambda(lam_grid.astype(complex))
    absk = np.abs(kvals)
    scale = float(np.max(absk))
    if scale == 0.0:
        return Spectrum([], (lo, hi), opts, 0.0, "characteristic function is zero on the window")
    threshold = opts.accept_tol * scale

    real_problem = (
        opts.real_coefficients
        if opts.real_coefficients is not None
        else _detect_real(basis)
    )

    if opts.method == "aberth":
        roots, iters = _aberth_roots(series.lambda_coeffs.copy())
        candidates = [(complex(z), abs(complex(series.eval_lambda(z))), iters) for z in roots]
    elif opts.method == "scan":
        minima = [
            j
            for j in range(1, opts.scan_points - 1)
            if absk[j] < absk[j - 1] and absk[j] <= absk[j + 1]
        ]
        if absk[0] < absk[1]:
            minima.insert(0, 0)
        if absk[-1] < absk[-2]:
            minima.append(opts.scan_points - 1)

        def refine(j):
            return _newton_refine(series, lam_grid[j], threshold, opts.max_newton, cell)

        workers = _max_workers()
        if workers > 1 and len(minima) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                candidates = list(pool.map(refine, minima))
        else:
            candidates = [refine(j) for j in minima]
    else:
        raise SppsError(f"unknown eigenvalue search method {opts.method!r}")

    margin = max(opts.dedupe_rel * width, 1e-300)
    accepted: list[Eigenvalue] = []
    for lam, ak, iters in candidates:
        if ak > threshold:
            continue
        if not (lo - margin <= lam.real <= hi + margin):
            continue
        if real_problem and abs(lam.imag) > opts.im_tol * max(1.0, abs(lam)):
            continue
        accepted.append(Eigenvalue(lam, ak, iters))

    # deduplicate: keep the best residual in each cluster
    accepted.sort(key=lambda e: (e.lam.real, e.lam.imag))
    dedup: list[Eigenvalue] = []
    for ev in accepted:
        if dedup and abs(ev.lam - dedup[-1].lam) <= opts.dedupe_rel * width:
            if ev.kappa_residual < dedup[-1].kappa_residual:
                dedup[-1] = ev
        else:
            dedup.append(ev)

    if real_problem and opts.method == "scan":
        _audit_brackets(series, lam_grid, kvals, scale, threshold, dedup, cell, opts)

    diagnostic = None
    if not dedup:
        diagnostic = (
            f"no zeros of the characteristic function found in [{lo:g}, {hi:g}] "
            f"(min |K| on scan = {float(np.min(absk)):.3e}, scale = {scale:.3e})"
        )
    return Spectrum(dedup, (lo, hi), opts, scale, diagnostic)


def _audit_brackets(series, lam_grid, kvals, scale, threshold, accepted, cell, opts):
    """For real self-adjoint problems K is a fixed complex phase times a real
    analytic function, so a de-phased sign change provably brackets a zero.
    Rescue any bracket that Newton missed by bisection; raise if that fails."""
    iref = int(np.argmax(np.abs(kvals)))
    phase = kvals[iref] / abs(kvals[iref])
    curve = kvals / phase
    if float(np.max(np.abs(curve.imag))) > 1e-6 * scale:
        return  # phase is not constant: not actually a de-phasable problem
    r = curve.real
    sign_change = (r[:-1] * r[1:]) < 0
    for j in np.flatnonzero(sign_change):
        a, b = lam_grid[j], lam_grid[j + 1]
        if any(a - cell <= ev.lam.real <= b + cell for ev in accepted):
            continue
        lam, ak = _bisect_rescue(series, phase, a, b)
        if ak <= threshold:
            accepted.append(Eigenvalue(lam, ak, opts.max_newton))
            accepted.sort(key=lambda e: (e.lam.real, e.lam.imag))
        else:
            raise ConvergenceFailure(
                f"sign change of the characteristic function bracketed in "
                f"[{a:.8g}, {b:.8g}] but refinement stalled (|K| = {ak:.3e})"
            )


def _bisect_rescue(series, phase, a, b, iters: int = 200):
    fa = (complex(series.eval_lambda(a)) / phase).real
    for _ in range(iters):
        mid = 0.5 * (a + b)
        fm = (complex(series.eval_lambda(mid)) / phase).real
        if fm == 0.0 or (b - a) < 1e-16 * max(1.0, abs(mid)):
            a = b = mid
            break
        if (fa < 0) == (fm < 0):
            a, fa = mid, fm
        else:
            b = mid
    lam = complex(0.5 * (a + b))
    return lam, abs(complex(series.eval_lambda(lam)))


# ------------------------------ eigenfunctions ------------------------------


def _left_branch_solution(basis, bc, omega, tol):
    pair = solution_pair(basis, omega, tol)
    if bc.dirichlet_left:
        return pair.u2, pair.u2_prime
    gamma = robin_gamma(basis, bc.alpha)
    u = SampledFn(basis.grid, pair.u1.values + gamma * pair.u2.values)
    up = SampledFn(basis.grid, pair.u1_prime.values + gamma * pair.u2_prime.values)
    return u, up


def boundary_defect(
    basis: SppsBasis,
    bc: BoundaryConditions,
    lam: complex,
    tol: float = DEFAULT_TOL,
) -> float:
    """Max-abs mismatch of both boundary conditions for the left-branch
    solution at lambda, normalized by the solution's sup norm."""
    omega = cmath.sqrt(lam)
    u, up = _left_branch_solution(basis, bc, omega, tol)
    scale = u.max_abs()
    if scale == 0.0:
        warnings.warn("zero solution in boundary defect", DegenerateInputWarning)
        return 0.0
    left = abs(u.values[0] * math.cos(bc.alpha) + up.values[0] * math.sin(bc.alpha))
    right = abs(u.values[-1] * math.cos(bc.beta) + up.values[-1] * math.sin(bc.beta))
    return max(left, right) / scale


def eigenfunction(
    basis: SppsBasis,
    bc: BoundaryConditions,
    lam: complex,
    tol: float = DEFAULT_TOL,
    defect_tol: float = 1e-6,
) -> SampledFn:
    """Left-branch solution at lambda, scaled so its largest value is 1.

    If lambda is not actually an eigenvalue the right boundary condition
    fails; the defect is reported through a warning and the caller decides.
    """
    omega = cmath.sqrt(lam)
    u, up = _left_branch_solution(basis, bc, omega, tol)
    j = int(np.argmax(np.abs(u.values)))
    peak = u.values[j]
    if peak == 0:
        raise SppsError("left-branch solution is identically zero")
    scale = abs(peak)
    left = abs(u.values[0] * math.cos(bc.alpha) + up.values[0] * math.sin(bc.alpha))
    right = abs(u.values[-1] * math.cos(bc.beta) + up.values[-1] * math.sin(bc.beta))
    defect = max(left, right) / scale
    if defect > defect_tol:
        warnings.warn(
            f"boundary defect {defect:.3e} exceeds {defect_tol:.1e}; "
            f"lambda={lam!r} may not be an eigenvalue",
            DegenerateInputWarning,
        )
    return SampledFn(basis.grid, u.values / peak)

"""Problem definitions for the CLI: a sectioned key-value text format.

    # free Dirichlet problem on (0, 1)
    [problem]
    a = 1.0
    p = 1            # expression, or p_table = path.csv
    q = 0
    seed = auto      # or an expression, e.g. exp(i*x)
    tol = 1e-12

    [grid]
    n_points = 10001

    [spectrum]
    lambda_min = -100
    lambda_max = -1
    alpha = 0
    beta = 0

    [output]
    spectrum = spectrum.csv

Exactly one of expression/table must be given per coefficient.  Coefficient
tables are two-column (x, value) or three-column (x, re, im) CSV covering
[0, a]; they are resampled to the working grid by cubic spline interpolation.
Scalar values may be written as expressions (``pi/4``) and complex scalars in
``1+2i`` form.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, SppsError
from .exprlang import CoeffExpr, evaluate, parse
from .grid import DEFAULT_N_POINTS, Grid, SampledFn, make_grid

__all__ = ["ProblemConfig", "Problem", "load_config", "materialize", "parse_scalar", "parse_real"]


def parse_scalar(text: str) -> complex:
    """Parse a complex scalar written either as ``1.5-2i`` or as an expression."""
    compact = text.strip().replace(" ", "")
    try:
        return complex(compact.replace("i", "j"))
    except ValueError:
        pass
    try:
        return evaluate(parse(text), 0.0)
    except SppsError as exc:
        raise ConfigError(f"cannot parse scalar {text!r}: {exc}") from exc


def parse_real(text: str, what: str) -> float:
    value = parse_scalar(text)
    if abs(value.imag) > 1e-12 * (1.0 + abs(value.real)):
        raise ConfigError(f"{what} must be real, got {text!r}")
    return float(value.real)


_SECTIONS = {
    "problem": {"a", "p", "p_table", "q", "q_table", "seed", "tol"},
    "grid": {"n_points"},
    "spectrum": {
        "lambda_min",
        "lambda_max",
        "alpha",
        "beta",
        "scan_points",
        "accept_tol",
        "max_newton",
        "method",
    },
    "output": {"solve", "spectrum", "powers", "darboux", "verify", "eigenfunctions"},
}


@dataclass
class ProblemConfig:
    a: float
    n_points: int = DEFAULT_N_POINTS
    p_expr: Optional[str] = None
    p_table: Optional[str] = None
    q_expr: Optional[str] = None
    q_table: Optional[str] = None
    seed: str = "auto"
    tol: float = 1e-12
    alpha: float = 0.0
    beta: float = 0.0
    lambda_min: Optional[float] = None
    lambda_max: Optional[float] = None
    scan_points: int = 2000
    accept_tol: float = 1e-9
    max_newton: int = 50
    method: str = "scan"
    outputs: dict = field(default_factory=dict)
    base_dir: Path = Path(".")


def load_config(path: Union[str, Path]) -> ProblemConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config not found: {path}")
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",), comment_prefixes=("#",)
    )
    try:
        with path.open(encoding="utf-8") as handle:
            parser.read_file(handle)
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    if "problem" not in parser:
        raise ConfigError("config is missing the [problem] section")
    prob = parser["problem"]
    if "a" not in prob:
        raise ConfigError("[problem] must set the interval length a")

    cfg = ProblemConfig(a=parse_real(prob["a"], "a"), base_dir=path.parent)
    if cfg.a <= 0:
        raise ConfigError(f"interval length must be positive, got {cfg.a}")

    for name in ("p", "q"):
        expr = prob.get(name)
        table = prob.get(f"{name}_table")
        if (expr is None) == (table is None):
            raise ConfigError(
                f"[problem] must set exactly one of {name!r} or '{name}_table'"
            )
        setattr(cfg, f"{name}_expr", expr)
        setattr(cfg, f"{name}_table", table)

    cfg.seed = prob.get("seed", "auto").strip()
    if "tol" in prob:
        cfg.tol = parse_real(prob["tol"], "tol")
        if cfg.tol <= 0:
            raise ConfigError("tol must be positive")

    if "grid" in parser and "n_points" in parser["grid"]:
        try:
            cfg.n_points = int(parser["grid"]["n_points"])
        except ValueError as exc:
            raise ConfigError(f"n_points must be an integer: {exc}") from exc

    if "spectrum" in parser:
        spec = parser["spectrum"]
        if "lambda_min" in spec:
            cfg.lambda_min = parse_real(spec["lambda_min"], "lambda_min")
        if "lambda_max" in spec:
            cfg.lambda_max = parse_real(spec["lambda_max"], "lambda_max")
        if "alpha" in spec:
            cfg.alpha = parse_real(spec["alpha"], "alpha")
        if "beta" in spec:
            cfg.beta = parse_real(spec["beta"], "beta")
        try:
            cfg.scan_points = int(spec.get("scan_points", cfg.scan_points))
            cfg.max_newton = int(spec.get("max_newton", cfg.max_newton))
        except ValueError as exc:
            raise ConfigError(f"bad integer in [spectrum]: {exc}") from exc
        if "accept_tol" in spec:
            cfg.accept_tol = parse_real(spec["accept_tol"], "accept_tol")
        cfg.method = spec.get("method", cfg.method).strip()
        if cfg.method not in ("scan", "aberth"):
            raise ConfigError(f"unknown spectrum method {cfg.method!r}")

    if "output" in parser:
        cfg.outputs = dict(parser["output"])
    return cfg


@dataclass
class Problem:
    """A config realized on its working grid, ready for basis construction."""

    config: ProblemConfig
    grid: Grid
    p: SampledFn
    q: SampledFn
    p_mid: np.ndarray
    q_mid: np.ndarray
    seed_spec: Union[str, CoeffExpr]


def _load_table(path: Path, grid: Grid):
    if not path.is_file():
        raise ConfigError(f"coefficient table not found: {path}")
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except ValueError:
        try:
            data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2, skiprows=1)
        except ValueError as exc:
            raise ConfigError(f"cannot read coefficient table {path}: {exc}") from exc
    if data.shape[1] == 2:
        values = data[:, 1].astype(complex)
    elif data.shape[1] == 3:
        values = data[:, 1] + 1j * data[:, 2]
    else:
        raise ConfigError(
            f"coefficient table {path} must have 2 or 3 columns, has {data.shape[1]}"
        )
    order = np.argsort(data[:, 0])
    x = data[order, 0]
    values = values[order]
    slack = 1e-9 * grid.a
    if x[0] > slack or x[-1] < grid.a - slack:
        raise ConfigError(
            f"coefficient table {path} covers [{x[0]:g}, {x[-1]:g}], "
            f"needs [0, {grid.a:g}]"
        )
    try:
        spline = CubicSpline(x, values)
    except ValueError as exc:
        raise ConfigError(f"cannot interpolate table {path}: {exc}") from exc
    mids = grid.nodes[:-1] + 0.5 * grid.h
    return (
        SampledFn(grid, spline(grid.nodes)),
        np.asarray(spline(mids), dtype=np.complex128),
    )


def _sample_expr(source: str, grid: Grid):
    try:
        expr = parse(source)
    except SppsError as exc:
        raise ConfigError(f"bad coefficient expression {source!r}: {exc}") from exc
    from .grid import sample

    mids = grid.nodes[:-1] + 0.5 * grid.h
    mid_vals = np.array([evaluate(expr, float(x)) for x in mids])
    return sample(expr, grid), mid_vals


def materialize(cfg: ProblemConfig) -> Problem:
    """Tabulate the coefficients of a config on its working grid."""
    grid = make_grid(cfg.a, cfg.n_points)
    if cfg.p_expr is not None:
        p, p_mid = _sample_expr(cfg.p_expr, grid)
    else:
        p, p_mid = _load_table(cfg.base_dir / cfg.p_table, grid)
    if cfg.q_expr is not None:
        q, q_mid = _sample_expr(cfg.q_expr, grid)
    else:
        q, q_mid = _load_table(cfg.base_dir / cfg.q_table, grid)

    seed_spec: Union[str, CoeffExpr]
    if cfg.seed == "auto":
        seed_spec = "auto"
    else:
        try:
            seed_spec = parse(cfg.seed)
        except SppsError as exc:
            raise ConfigError(f"bad seed expression {cfg.seed!r}: {exc}") from exc
    return Problem(cfg, grid, p, q, p_mid, q_mid, seed_spec)

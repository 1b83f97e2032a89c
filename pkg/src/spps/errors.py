"""Exception hierarchy shared by all modules.

Everything numeric or contractual raised by this package derives from
:class:`SppsError` so callers (and the CLI) can classify failures with a
single except clause.
"""


class SppsError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(SppsError):
    """Expression source could not be parsed.

    ``offset`` is the byte offset into the source at which parsing failed.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class EvalError(SppsError):
    """Expression evaluation failed: pole, log/sqrt of zero, or a non-finite result."""


class GridError(SppsError):
    """Invalid grid parameters (nonpositive length, bad point count)."""


class SeedVanishes(SppsError):
    """The zero-energy solution drops below the vanish threshold somewhere on the grid."""


class SeedResidualTooLarge(SppsError):
    """An explicitly supplied seed does not satisfy the zero-energy equation."""


class PowerOverflow(SppsError):
    """The power recursion overflowed to non-finite values; the weight bound
    times the interval length is too large for the requested depth."""


class TruncationCapExceeded(SppsError):
    """The series tail bound cannot be brought under the tolerance within the depth cap."""


class TableTooShallow(SppsError):
    """The power table does not reach the depth required by the requested evaluation."""


class NonUnitP(SppsError):
    """Operation requires the leading coefficient p to be identically one."""


class DirichletLeft(SppsError):
    """Signal: the left boundary angle is a multiple of pi, so the Robin
    reduction does not apply and callers must take the Dirichlet branch."""


class ConvergenceFailure(SppsError):
    """A window provably brackets a characteristic-function sign change but
    refinement failed to converge there."""


class ConfigError(SppsError):
    """Problem configuration is missing, unreadable, or inconsistent."""


class DegenerateInputWarning(UserWarning):
    """Emitted when a degenerate input (e.g. the zero function) forces a
    conventional return value instead of a meaningful one."""

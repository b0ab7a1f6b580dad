"""Exception hierarchy shared by all modules.

Error kinds map onto CLI exit codes and HTTP statuses: parse errors -> 1 / 400,
infeasibility and size limits -> 2 / 409, contract violations -> 3 / 500.
"""


class SpeedScaleError(Exception):
    """Base class for all library errors."""

    kind = "internal"


class ParseError(SpeedScaleError):
    """A document failed validation; ``path`` points at the offending field."""

    kind = "parse"

    def __init__(self, path: str, message: str) -> None:
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class DomainError(SpeedScaleError):
    """An argument violates an operation's precondition."""

    kind = "parse"


class InfeasibleError(SpeedScaleError):
    """No feasible solution exists for the given input (e.g. grid too coarse)."""

    kind = "infeasible"


class SizeError(SpeedScaleError):
    """A search exceeded its configured state cap."""

    kind = "size"


class ContractViolationError(SpeedScaleError):
    """An internal invariant failed; indicates a bug or a broken precondition."""

    kind = "contract"


class SolverFailureError(SpeedScaleError):
    """The LP solver could not certify a result; never a silent wrong answer."""

    kind = "contract"

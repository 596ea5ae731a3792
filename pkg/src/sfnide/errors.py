"""Exception hierarchy shared by all modules."""


class SfnideError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SfnideError, ValueError):
    """An argument lies outside the admissible domain of an operation."""


class NumericOverflowError(DomainError, OverflowError):
    pass


class EvaluationError(SfnideError, ArithmeticError):
    """A user-supplied function produced a non-finite value."""


class ShapeError(SfnideError, ValueError):
    pass


class MismatchError(SfnideError, ValueError):
    """Two inputs that must agree (grids, rules, index sets) do not."""


class ConvergenceError(SfnideError, ArithmeticError):
    """An iterative or series computation did not converge."""


class NonFiniteStateError(EvaluationError):
    """The solver produced a non-finite state.

    Carries the step index (and the path index when known) so batch runs
    can attribute the failure.
    """

    def __init__(self, message, step=None, path=None, level=None):
        super().__init__(message)
        self.step = step
        self.path = path
        self.level = level


class ConfigError(SfnideError, ValueError):
    """Configuration validation failure.

    ``problems`` lists every ``(field, message)`` pair found, so a single
    report covers all invalid fields.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [("config", problems)]
        self.problems = list(problems)
        super().__init__("; ".join(f"{field}: {msg}" for field, msg in self.problems))

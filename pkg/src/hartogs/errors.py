"""Exception hierarchy.

Every error carries the CLI exit code it maps to, so the front end never has
to pattern-match on messages.
"""


class HartogsError(Exception):
    exit_code = 5

    def __init__(self, message, *, stage=None):
        super().__init__(message)
        self.stage = stage

    def with_stage(self, stage):
        if self.stage is None:
            self.stage = stage
        return self

    def __str__(self):
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class SceneError(HartogsError, ValueError):
    """Malformed or inconsistent scene input."""

    exit_code = 2


class ExprSyntaxError(SceneError):
    def __init__(self, message, offset, text=""):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset
        self.text = text


class PreconditionError(HartogsError, ValueError):
    """A geometric or theorem-level hypothesis does not hold."""

    exit_code = 3


class HypothesisViolation(PreconditionError):
    pass


class SeparationError(PreconditionError):
    pass


class EmptyFiberError(PreconditionError):
    pass


class NeighborhoodError(PreconditionError):
    pass


class ChainError(PreconditionError):
    pass


class ProximityError(PreconditionError):
    pass


class OutsideDomainError(PreconditionError):
    pass


class EvaluationError(HartogsError, ArithmeticError):
    exit_code = 3

    def __init__(self, message, point=None, **kw):
        super().__init__(message, **kw)
        self.point = point


class SingularityError(EvaluationError, ZeroDivisionError):
    pass


class ToleranceError(HartogsError):
    exit_code = 4

    def __init__(self, message, value=None, tolerance=None, witness=None, **kw):
        super().__init__(message, **kw)
        self.value = value
        self.tolerance = tolerance
        self.witness = witness


class ContourError(HartogsError):
    """Inconsistent lattice edge data; indicates a construction bug."""

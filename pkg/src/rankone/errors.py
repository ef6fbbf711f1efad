"""Exception hierarchy shared by all modules."""


class RankOneError(Exception):
    """Base class for every error raised by the package."""


class InvalidInput(RankOneError, ValueError):
    pass


class RationalInput(InvalidInput):
    """The requested number is rational; it has no infinite expansion."""


class ParseError(InvalidInput):
    def __init__(self, message, text="", column=0):
        self.text = text
        self.column = column
        if text:
            pointer = " " * column + "^"
            message = f"{message} (column {column + 1})\n  {text}\n  {pointer}"
        super().__init__(message)


class StreamExhausted(RankOneError):
    """No rule is available to produce the requested coefficient."""


class InsufficientPrecision(RankOneError):
    pass


class TieUnresolved(RankOneError):
    """Nearest integer could not be decided within the refinement budget."""


class GoldenTypeRejected(RankOneError):
    pass


class NeedsDeeperStage(RankOneError):
    def __init__(self, stage, message=None):
        self.stage = stage
        super().__init__(message or f"orbit leaves the column; resolve at stage {stage}")


class DepthUnavailable(RankOneError):
    pass


class DepthCapExceeded(RankOneError):
    pass


class StageMismatch(RankOneError):
    pass


class SamePoint(RankOneError):
    pass


class InvalidMode(RankOneError):
    pass


class InvalidParameter(RankOneError, ValueError):
    pass


class InternalInvariantViolation(RankOneError):
    """An exactness invariant failed. Always indicates a bug."""


class WitnessNotFound(RankOneError):
    pass

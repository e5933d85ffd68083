"""Exception hierarchy shared by every module of the package."""


class QuatRNNError(Exception):
    """Base class for all package errors."""


class DomainError(QuatRNNError, ValueError):
    """Argument outside the domain of a mathematical operation."""


class DimensionMismatch(QuatRNNError, ValueError):
    def __init__(self, message, *shapes):
        if shapes:
            message = f"{message}: " + " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(message)
        self.shapes = shapes


class LengthMismatch(QuatRNNError, ValueError):
    pass


class EmptySequence(QuatRNNError, ValueError):
    pass


class ConfigError(QuatRNNError, ValueError):
    pass


class NonFiniteError(QuatRNNError, FloatingPointError):
    """A parameter became NaN or infinite during training."""

    def __init__(self, step, message="non-finite parameter"):
        super().__init__(f"{message} at step {step}")
        self.step = step


class NonFiniteLoss(QuatRNNError, FloatingPointError):
    def __init__(self, index, message="loss is not finite"):
        super().__init__(f"{message} (perturbation {index})")
        self.index = index


class InsufficientHistory(QuatRNNError, ValueError):
    pass


class SeriesTooShort(QuatRNNError, ValueError):
    pass


class ParseError(QuatRNNError, ValueError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class NonUniformSampling(QuatRNNError, ValueError):
    pass


class MissingColumns(QuatRNNError, ValueError):
    def __init__(self, missing):
        super().__init__("missing columns: " + ", ".join(missing))
        self.missing = list(missing)


class DegenerateChannel(QuatRNNError, ValueError):
    pass


class DegenerateTruth(QuatRNNError, ValueError):
    pass


class InsufficientSamples(QuatRNNError, ValueError):
    pass

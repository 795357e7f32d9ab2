"""Exception types shared across the package."""


class VariantMismatchError(TypeError):
    """Operands mix exact rational and complex floating matrices."""


class EmptyInputError(ValueError):
    pass


class DimensionError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class DegeneracyError(ArithmeticError):
    """Numerical completion could not find enough independent directions."""


class InvariantError(ValueError):
    """A machine violates a structural invariant of its model."""


class ForeignSymbolError(ValueError):
    pass


class MachineFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DivergenceError(RuntimeError):
    def __init__(self, message: str, trial: int | None = None):
        self.trial = trial
        if trial is not None:
            message = f"trial {trial}: {message}"
        super().__init__(message)

"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operand dimensions are incompatible."""


class NumericalError(ArithmeticError):
    """A numerical kernel could not complete."""


class CholeskyError(NumericalError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot, message=None):
        self.pivot = pivot
        super().__init__(message or f"Cholesky breakdown at pivot {pivot}")


class ConvergenceError(NumericalError):
    """An iterative kernel ran out of iterations."""

    def __init__(self, last_estimate, message=None):
        self.last_estimate = last_estimate
        super().__init__(
            message or f"no convergence; last estimate {last_estimate!r}"
        )


class DivergenceError(NumericalError):
    """A solver or training run produced non-finite iterates."""

    def __init__(self, iteration, message=None):
        self.iteration = iteration
        super().__init__(message or f"diverged at iteration {iteration}")


class MatrixFormatError(ValueError):
    """A matrix file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CheckpointError(ValueError):
    """A checkpoint file is unusable."""


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointTruncatedError(CheckpointError):
    pass


class CheckpointShapeError(CheckpointError):
    pass


class InputError(ValueError):
    """Bad user-supplied input (CLI-level validation)."""

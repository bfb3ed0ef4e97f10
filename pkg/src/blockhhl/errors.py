"""Exception hierarchy shared by every stage of the solver."""


class SolverError(Exception):
    """Base class for all errors raised by blockhhl."""


class InvalidSpecError(SolverError, ValueError):
    pass


class DimensionMismatchError(SolverError, ValueError):
    pass


class SingularMatrixError(SolverError):
    pass


class ZeroRHSError(SolverError, ValueError):
    pass


class MatrixMarketError(SolverError, ValueError):
    """Malformed Matrix Market input. ``line`` is 1-based, or None for EOF."""

    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class NotBlockDiagonalError(SolverError):
    def __init__(self, mass, limit):
        self.mass = mass
        self.limit = limit
        super().__init__(
            f"off-block mass {mass:.6g} exceeds allowed {limit:.6g}"
        )


class NotSPDError(SolverError):
    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"matrix is not positive definite at index {index}")


class InvalidRotationError(SolverError):
    pass


class PostSelectionError(SolverError):
    pass


class ConvergenceError(SolverError):
    """CG ran out of iterations; the best iterate is kept on the exception."""

    def __init__(self, x, iterations, residual):
        self.x = x
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"no convergence after {iterations} iterations (residual {residual:.3e})"
        )


class BreakdownError(SolverError):
    pass


class ConfigError(SolverError, ValueError):
    pass


class RecordRejectedError(SolverError, ValueError):
    pass


class BlockError(SolverError):
    """Wraps a failure inside one block of a pipeline phase."""

    def __init__(self, phase, block_index, cause):
        self.phase = phase
        self.block_index = block_index
        self.cause = cause
        where = "" if block_index is None else f" on block {block_index}"
        super().__init__(f"{phase} failed{where}: {cause}")

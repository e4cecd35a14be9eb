"""Exception hierarchy shared by all modules."""


class DiglacianError(Exception):
    """Base class for errors raised by this package."""


class DeadEndRow(DiglacianError):
    """A row of an adjacency matrix sums to zero and cannot be normalized."""

    def __init__(self, row):
        self.row = int(row)
        super().__init__(
            f"row {self.row} has zero out-degree; add self-loops or augment the graph first"
        )


class NotIrreducible(DiglacianError):
    """The graph is not strongly connected."""


class ZeroMean(DiglacianError):
    """The mean of the normalized feature rows is the zero vector."""


class DegenerateAux(DiglacianError):
    """No auxiliary vector with a usable orthogonal component could be drawn."""


class NotConvergedWarning(RuntimeWarning):
    """Power iteration stopped with a residual above the acceptance level."""


class SingularSystem(DiglacianError):
    """A dense linear solve failed."""


class EigensolverFailure(DiglacianError):
    """The iterative singular value solver did not converge."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class EmptyRow(DiglacianError):
    """A sparsified commute row kept no entries."""

    def __init__(self, row):
        self.row = int(row)
        super().__init__(f"row {self.row} keeps no commute entries; mu is too large for N")


class NotRegular(DiglacianError):
    """The combinatorial graph does not have constant out-degree."""


class ShapeMismatch(DiglacianError, ValueError):
    pass


class EmptyMask(DiglacianError, ValueError):
    pass


class EmptyEdgeSet(DiglacianError, ValueError):
    pass


class ParseError(DiglacianError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = int(line)
        super().__init__(f"{self.path}:{self.line}: {message}")


class InconsistentCounts(DiglacianError):
    pass


class ClassTooSmall(DiglacianError, ValueError):
    pass


class WalkCapExceeded(RuntimeWarning):
    """Some Monte Carlo walks hit the step cap before reaching the target."""

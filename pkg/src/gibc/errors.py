"""Exception hierarchy shared by all gibc modules."""


class GibcError(Exception):
    """Base class for every error raised by the package."""


class DomainError(GibcError, ValueError):
    """Argument outside the mathematical domain of a function."""


class RangeError(GibcError, OverflowError):
    """Result not representable in double precision."""


class ParameterError(GibcError, ValueError):
    """Inconsistent parameters (radius mismatch, index mismatch, ...)."""


class ResonanceError(GibcError, ArithmeticError):
    """A per-mode linear system is singular."""

    def __init__(self, message, n=None, model=None):
        super().__init__(message)
        self.n = n
        self.model = model


class DecompositionError(GibcError, ArithmeticError):
    """Helmholtz decomposition failed (A_S multiplier vanished)."""


class MeshError(GibcError, ValueError):
    """Invalid triangle mesh (open, non-manifold, degenerate, ...)."""


class TopologyError(MeshError):
    """Mesh topology unsuitable for the requested operation."""


class ParseError(GibcError, ValueError):
    """Malformed configuration text."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f"line {line}"
            if column is not None:
                loc += f", column {column}"
            loc += ": "
        super().__init__(loc + message)
        self.line = line
        self.column = column

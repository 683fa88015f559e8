"""Exception hierarchy shared by every module."""


class ReachError(Exception):
    """Base class for all errors raised by relureach."""


class NonFiniteInput(ReachError, ValueError):
    pass


class DimensionMismatch(ReachError, ValueError):
    pass


class EmptyPolyhedron(ReachError, ValueError):
    pass


class Unbounded(ReachError, ValueError):
    pass


class EqualityNotComplementable(ReachError, ValueError):
    pass


class ResourceCapExceeded(ReachError):
    """A configured size cap was hit; reported rather than ground through."""


class EliminationBlowup(ResourceCapExceeded):
    def __init__(self, rows, cap):
        super().__init__(f"Fourier-Motzkin produced {rows} rows (cap {cap})")
        self.rows = rows
        self.cap = cap


class PatternSpaceTooLarge(ResourceCapExceeded):
    def __init__(self, n, cap):
        super().__init__(f"2**{n} activation patterns exceeds cap 2**{cap}")
        self.n = n
        self.cap = cap


class RegionCapExceeded(ResourceCapExceeded):
    def __init__(self, count, cap, layer):
        super().__init__(f"layer {layer} produced {count} regions (cap {cap})")
        self.count = count
        self.cap = cap
        self.layer = layer


class ParseError(ReachError, ValueError):
    """Malformed input file. ``context`` names the offending field or line."""

    def __init__(self, message, context=None):
        if context is not None:
            message = f"{message} (at {context})"
        super().__init__(message)
        self.context = context


class ShapeError(ReachError, ValueError):
    def __init__(self, message, layer=None):
        if layer is not None:
            message = f"layer {layer}: {message}"
        super().__init__(message)
        self.layer = layer

"""Exception types shared across the package."""


class LpmError(Exception):
    """Base class for all errors raised by lpmlat."""


class InvalidInput(LpmError, ValueError):
    """Malformed arguments: dimension or length mismatch, non-finite values."""


class InvalidSpec(LpmError, ValueError):
    """A scenario or filter specification violates its invariants."""


class Underdetermined(LpmError, ValueError):
    """Too few independent equations for the requested unknowns."""


class NoData(LpmError, ValueError):
    """A metric was requested over an empty set of frames."""

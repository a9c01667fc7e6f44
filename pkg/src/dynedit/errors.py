"""Exception types shared by the package."""


class DynEditError(Exception):
    """Base class for all errors raised by this package."""


class CapacityError(DynEditError):
    """The structure is full; the caller is expected to rebuild with a larger capacity."""


class RangeError(DynEditError, IndexError):
    """A position lies outside the valid range."""


class LabelError(DynEditError, KeyError):
    """A label is unknown or no longer present."""


class ArityError(DynEditError, ValueError):
    """Parallel sequences have mismatched lengths."""


class ShiftRangeError(DynEditError, ValueError):
    """A shift lies outside the window [-K..K]."""


class ConfigError(DynEditError, ValueError):
    """Invalid construction parameters."""


class ShiftSetError(DynEditError, ValueError):
    """Requested output shifts are not a subset of the allowed shift set."""


class TraceFormatError(DynEditError, ValueError):
    """A trace file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)

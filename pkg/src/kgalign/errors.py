"""Exception types shared across the package."""


class KgAlignError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(KgAlignError):
    """A data file is malformed.

    Carries the offending path and 1-based line number when known.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(loc + message)
        self.path = path
        self.line = line


class ConfigError(KgAlignError):
    """A configuration value or combination of values is invalid."""


class CheckpointError(KgAlignError):
    """A checkpoint file is missing, corrupt, or incompatible."""


class ContractViolation(KgAlignError):
    """An internal shape or state contract was violated by the caller."""

"""Exception types shared across the package."""

from __future__ import annotations


class RepairError(Exception):
    """Base class for all errors raised by this package."""


class FdParseError(RepairError):
    """A dependency file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TableFormatError(RepairError):
    """A table CSV violates the input conventions."""


class SchemaMismatchError(RepairError):
    """A table and a dependency set disagree on the attribute list."""


class IntractableFdSet(RepairError):
    """An exact engine was asked to run on a dependency set it cannot solve."""


class CapExceeded(RepairError):
    """A brute-force oracle was given an instance above its size caps."""

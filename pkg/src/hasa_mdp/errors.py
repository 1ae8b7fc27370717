# hasa_mdp/errors.py
from __future__ import annotations


class HasaError(Exception):
    """Base class for every error raised on purpose by this package."""


class ModelParseError(HasaError):
    """
    A model document could not be read. `path` is the field path inside the
    document (e.g. 'transition[2][1]'), `line` the 1-based source line if known.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = []
        if path:
            where.append(f"field {path!r}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class SchemaVersionError(ModelParseError):
    def __init__(self, found: object, expected: int):
        self.found = found
        self.expected = expected
        super().__init__(
            f"unsupported schema_version {found!r}, expected {expected}",
            path="schema_version",
        )


class ModelValidationError(HasaError):
    """Raised by callers that require a valid model; wraps the failed report."""

    def __init__(self, report):
        self.report = report
        lines = [v.describe() for v in report.violations]
        super().__init__("invalid model:\n  " + "\n  ".join(lines))


class EstimationError(HasaError):
    def __init__(self, state: str, message: str = "no records for true state"):
        self.state = state
        super().__init__(f"{message}: {state!r}")


class EnumerationCapError(HasaError):
    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"policy space |A|^|S| = {size} exceeds the cap of {cap}")


class NumericError(HasaError):
    """The Markov-reward-process linear system could not be solved accurately."""


class RecordParseError(HasaError):
    """A calibration record file has a malformed line."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")

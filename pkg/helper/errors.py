"""
Error Types Module
Every failure raised by the analysis library derives from QuantError so
callers (the CLI in particular) can map it to a single diagnostic line.
"""

from typing import Optional


class QuantError(ValueError):
    """Base class for all library errors."""

    kind = "QuantError"

    def __init__(self, detail: str = ""):
        super().__init__(detail)
        self.detail = detail

    def diagnostic(self) -> str:
        """One-line, machine-parsable description used by the CLI."""
        if self.detail:
            return f"{self.kind}: {self.detail}"
        return self.kind


class DomainMismatch(QuantError):
    kind = "DomainMismatch"


class EmptySet(QuantError):
    kind = "EmptySet"


class DomainNotNumeric(QuantError):
    kind = "DomainNotNumeric"


class UnsupportedDomain(QuantError):
    kind = "UnsupportedDomain"


class UnknownSymbol(QuantError):
    kind = "UnknownSymbol"

    def __init__(self, label: str, position: Optional[int] = None):
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"unknown symbol {label!r}{where}")
        self.label = label
        self.position = position


class EmptyCycle(QuantError):
    kind = "EmptyCycle"


class TraceParseError(QuantError):
    kind = "TraceParseError"


class AlphabetMismatch(QuantError):
    kind = "AlphabetMismatch"


class UnsupportedBackend(QuantError):
    kind = "UnsupportedBackend"


class BadParams(QuantError):
    kind = "BadParams"


class UnknownFixture(QuantError):
    kind = "UnknownFixture"


class EmptyFamily(QuantError):
    kind = "EmptyFamily"


class UnaryAlphabet(QuantError):
    kind = "UnaryAlphabet"


class SpecFileError(QuantError):
    kind = "SpecFileError"

    def __init__(self, path: str, detail: str):
        super().__init__(f"{path}: {detail}")
        self.path = path


class DepthExceeded(QuantError, RuntimeError):
    kind = "DepthExceeded"

    def __init__(self, depth: int, detail: str = ""):
        message = f"unfolding reached depth {depth}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
        self.depth = depth

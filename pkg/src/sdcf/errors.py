"""Exception hierarchy shared by the engines and the CLI."""


class SdcfError(Exception):
    """Base class for all package errors."""


class DomainError(SdcfError, ValueError):
    """An input lies outside the domain of an operation."""


class NumericError(SdcfError):
    """A numerical procedure could not produce a trustworthy answer."""


class IrrNotBracketedError(NumericError):
    """Present value minus target does not change sign over the search bracket."""


class IrrAmbiguousError(NumericError):
    """Present value is not monotone in the rate, so the IRR may not be unique.

    ``root`` holds the first root found scanning upward from the bottom of the
    bracket, or ``None`` when no sign change was seen.
    """

    def __init__(self, message: str, root: float | None = None):
        super().__init__(message)
        self.root = root


class ConsistencyError(SdcfError):
    """An internal invariant was violated (indicates a bug or corrupt input)."""

"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class WrpError(Exception):
    """Base class for all package errors."""


class ParseError(WrpError):
    """A text artifact (instance, route, decomposition) could not be parsed."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class ValidationError(WrpError):
    """A structural invariant was violated (bad graph, bad decomposition, ...)."""


class InvalidRouteError(WrpError):
    """A route failed validation; carries the individual violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        detail = "; ".join(v.describe() for v in self.violations) or "unknown"
        super().__init__(f"invalid route: {detail}")


class ResourceLimitError(WrpError):
    """A configured search/node/state budget was exhausted before an answer."""


class WidthLimitError(ResourceLimitError):
    """The decomposition width exceeds the configured cap for the DP solver."""


class BackendUnavailableError(WrpError):
    """A named backend is recognized but not bundled with this package."""


class InternalError(WrpError):
    """An internal cross-check failed; indicates a bug, not bad input."""

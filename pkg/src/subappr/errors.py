"""Exception hierarchy shared by every module."""

from __future__ import annotations


class SubapprError(Exception):
    """Base class for all package errors."""


class ParseError(SubapprError, ValueError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(SubapprError, ValueError):
    """Argument or data outside its documented domain."""


class IsolatedNodeError(ValidationError):
    """A degree-zero node was used where D^{-1} is required."""

    def __init__(self, node: int, context: str = ""):
        self.node = node
        msg = f"node {node} is isolated (degree 0)"
        if context:
            msg = f"{context}: {msg}"
        super().__init__(msg)


class SizeError(SubapprError, ValueError):
    """A dense computation was requested on a graph above the size cap."""


class NonTerminationError(SubapprError, RuntimeError):
    """Push-count cap exceeded; ``trace`` holds whatever was recorded."""

    def __init__(self, message: str, trace=None, pushes: int | None = None):
        self.trace = trace
        self.pushes = pushes
        super().__init__(message)


class NumericalGuardError(SubapprError, ArithmeticError):
    """A quantity that must stay positive did not; ``state`` is a dump."""

    def __init__(self, message: str, state: dict | None = None):
        self.state = state or {}
        super().__init__(f"{message} (state: {self.state})")

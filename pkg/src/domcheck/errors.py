"""Exception hierarchy."""

from __future__ import annotations


class DomcheckError(Exception):
    pass


class FrontendError(DomcheckError):
    """Any problem turning source text into a CFA."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}{message}")


class MiniCSyntaxError(FrontendError):
    pass


class UnsupportedConstruct(FrontendError):
    pass


class RecursiveCallError(FrontendError):
    pass


class UndefinedFunction(FrontendError):
    pass


class UndeclaredVariable(FrontendError):
    pass


class UndefinedLabel(FrontendError):
    pass


# --- BDD kernel --------------------------------------------------------------


class BddError(DomcheckError):
    pass


class UnknownVariable(BddError):
    pass


class NonInjectiveRename(BddError):
    pass


class WidthOverflow(BddError):
    pass


class WidthMismatch(BddError):
    pass


class ShiftOutOfRange(BddError):
    pass


class MixedDomainExpression(BddError):
    """An expression reads variables that the BDD domain does not track."""


class ResourceExhausted(DomcheckError):
    """A run exceeded one of its limits; ``limit`` names which one."""

    def __init__(self, limit: str, detail: str = ""):
        self.limit = limit
        super().__init__(f"{limit} limit exceeded" + (f": {detail}" if detail else ""))

"""Abstract syntax of MiniC."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

BOOLEAN_OPS = frozenset({"&&", "||"})
EQUALITY_OPS = frozenset({"==", "!="})
RELATIONAL_OPS = frozenset({"<", ">", "<=", ">="})
COMPARISON_OPS = EQUALITY_OPS | RELATIONAL_OPS
LINEAR_OPS = frozenset({"+", "-"})
BITWISE_OPS = frozenset({"&", "|", "^"})
HARD_OPS = frozenset({"*", "/", "%", "<<", ">>"})
BINARY_OPS = BOOLEAN_OPS | COMPARISON_OPS | LINEAR_OPS | BITWISE_OPS | HARD_OPS
UNARY_OPS = frozenset({"-", "!", "~"})


# --- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Nondet:
    def __str__(self) -> str:
        return "__VERIFIER_nondet_int()"


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"

    def __str__(self) -> str:
        return f"{self.op}{_paren(self.operand)}"


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Expr"
    rhs: "Expr"

    def __str__(self) -> str:
        return f"{_paren(self.lhs)} {self.op} {_paren(self.rhs)}"


Expr = Union[Const, Var, Nondet, Unary, Binary]


def _paren(e: Expr) -> str:
    if isinstance(e, (Const, Var, Nondet)):
        return str(e)
    return f"({e})"


def variables(e: Expr) -> Iterator[str]:
    """Yield variable names occurring in ``e`` (with repetition)."""
    if isinstance(e, Var):
        yield e.name
    elif isinstance(e, Unary):
        yield from variables(e.operand)
    elif isinstance(e, Binary):
        yield from variables(e.lhs)
        yield from variables(e.rhs)


def is_boolean_valued(e: Expr) -> bool:
    """True for expressions whose value is always 0 or 1."""
    if isinstance(e, Unary):
        return e.op == "!"
    if isinstance(e, Binary):
        return e.op in BOOLEAN_OPS or e.op in COMPARISON_OPS
    return False


def contains_nondet(e: Expr) -> bool:
    if isinstance(e, Nondet):
        return True
    if isinstance(e, Unary):
        return contains_nondet(e.operand)
    if isinstance(e, Binary):
        return contains_nondet(e.lhs) or contains_nondet(e.rhs)
    return False


def rename(e: Expr, mapping: dict[str, str]) -> Expr:
    if isinstance(e, Var):
        return Var(mapping.get(e.name, e.name))
    if isinstance(e, Unary):
        return Unary(e.op, rename(e.operand, mapping))
    if isinstance(e, Binary):
        return Binary(e.op, rename(e.lhs, mapping), rename(e.rhs, mapping))
    return e


# --- statements --------------------------------------------------------------


@dataclass(frozen=True)
class Call:
    """A call used as a full right-hand side or as a statement."""

    name: str
    args: tuple[Expr, ...]


@dataclass
class Stmt:
    line: int = field(default=0, kw_only=True)


@dataclass
class VarDecl(Stmt):
    name: str
    init: Optional[Union[Expr, Call]] = None


@dataclass
class Assign(Stmt):
    name: str
    value: Union[Expr, Call]


@dataclass
class CallStmt(Stmt):
    call: Call


@dataclass
class Block(Stmt):
    body: list[Stmt]


@dataclass
class If(Stmt):
    cond: Expr
    then: Stmt
    orelse: Optional[Stmt] = None


@dataclass
class While(Stmt):
    cond: Expr
    body: Stmt
    # executed on every iteration after the body, also on `continue` (for-loops)
    step: Optional[Stmt] = None


@dataclass
class Goto(Stmt):
    label: str


@dataclass
class Labeled(Stmt):
    label: str
    stmt: Stmt


@dataclass
class AssertStmt(Stmt):
    cond: Expr


@dataclass
class AssumeStmt(Stmt):
    cond: Expr


@dataclass
class ErrorStmt(Stmt):
    pass


@dataclass
class Return(Stmt):
    value: Optional[Expr] = None


@dataclass
class Break(Stmt):
    pass


@dataclass
class Continue(Stmt):
    pass


@dataclass
class Empty(Stmt):
    pass


@dataclass
class Function:
    name: str
    returns_value: bool
    params: list[str]
    body: Block
    line: int = 0


@dataclass
class Program:
    globals: list[VarDecl]
    functions: dict[str, Function]

"""Recursive-descent parser for MiniC.

MiniC is the int-only subset of C handled by the checker: global and local
``int`` declarations, assignments, ``if``/``else``, ``while``, ``for``,
``goto``/labels, ``assert``/``assume``, non-recursive functions with by-value
``int`` parameters, and the SV-COMP builtins ``__VERIFIER_nondet_int``,
``__VERIFIER_assume`` and ``__VERIFIER_error``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from domcheck import semantics
from domcheck.errors import MiniCSyntaxError, UnsupportedConstruct
from domcheck.frontend import ast as A

NONDET_NAMES = frozenset({"__VERIFIER_nondet_int", "__VERIFIER_nondet_uint", "nondet", "nondet_int"})
ERROR_NAMES = frozenset({"__VERIFIER_error", "reach_error"})
ASSUME_NAMES = frozenset({"assume", "__VERIFIER_assume"})
UNSUPPORTED_TYPES = frozenset(
    {"unsigned", "signed", "char", "short", "long", "float", "double", "struct", "union",
     "enum", "typedef", "_Bool", "bool"}
)
QUALIFIERS = frozenset({"static", "const", "volatile", "register", "auto", "inline"})
KEYWORDS = frozenset(
    {"int", "void", "if", "else", "while", "for", "do", "switch", "goto", "return", "break",
     "continue", "extern"}
) | UNSUPPORTED_TYPES | QUALIFIERS

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<pp>\#[^\n]*)
  | (?P<float>\d+\.\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)
  | (?P<num>0[xX][0-9a-fA-F]+[uUlL]*|\d+[uUlL]*)
  | (?P<str>"(?:\\.|[^"\\])*"|'(?:\\.|[^'\\])*')
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><<=|>>=|->|\+\+|--|&&|\|\||==|!=|<=|>=|<<|>>|\+=|-=|\*=|/=|%=|&=|\|=|\^=|[-+*/%<>=!~&|^(){};,:?\[\].])
    """,
    re.VERBOSE | re.DOTALL,
)

_BINARY_PRECEDENCE = [
    ("||",),
    ("&&",),
    ("|",),
    ("^",),
    ("&",),
    ("==", "!="),
    ("<", ">", "<=", ">="),
    ("<<", ">>"),
    ("+", "-"),
    ("*", "/", "%"),
]

_COMPOUND = {"+=": "+", "-=": "-", "*=": "*", "/=": "/", "%=": "%", "<<=": "<<", ">>=": ">>",
             "&=": "&", "|=": "|", "^=": "^"}


@dataclass(frozen=True)
class Token:
    kind: str  # num | id | op | eof
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise MiniCSyntaxError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "float":
            raise UnsupportedConstruct("floating-point literals are not supported", line, col)
        if kind == "str":
            raise UnsupportedConstruct("string and character literals are not supported", line, col)
        if kind in ("num", "id", "op"):
            tokens.append(Token(kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def parse(source: str) -> A.Program:
    """Parse MiniC text into a :class:`~domcheck.frontend.ast.Program`."""
    return _Parser(tokenize(source)).program()


def _fold_binary(op: str, lhs: A.Expr, rhs: A.Expr, tok: Token) -> A.Expr:
    if op in ("/", "%") and isinstance(rhs, A.Const) and rhs.value == 0:
        raise MiniCSyntaxError("division by constant zero", tok.line, tok.col)
    if isinstance(lhs, A.Const) and isinstance(rhs, A.Const):
        return A.Const(semantics.binary(op, lhs.value, rhs.value))
    return A.Binary(op, lhs, rhs)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    # -- token helpers --------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.kind != "eof" and self.tok.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def ident(self) -> Token:
        t = self.tok
        if t.kind != "id" or t.text in KEYWORDS:
            self.fail(f"expected identifier, found {t.text or 'end of input'!r}")
        return self.advance()

    def fail(self, message: str, tok: Optional[Token] = None):
        t = tok or self.tok
        raise MiniCSyntaxError(message, t.line, t.col)

    def unsupported(self, message: str, tok: Optional[Token] = None):
        t = tok or self.tok
        raise UnsupportedConstruct(message, t.line, t.col)

    def skip_qualifiers(self) -> None:
        while self.tok.kind == "id" and self.tok.text in QUALIFIERS:
            self.advance()

    def check_type(self) -> str:
        """Consume a type specifier and return ``"int"`` or ``"void"``."""
        self.skip_qualifiers()
        t = self.tok
        if t.kind == "id" and t.text in UNSUPPORTED_TYPES:
            self.unsupported(f"type '{t.text}' is not supported")
        if not (self.at("int") or self.at("void")):
            self.fail(f"expected type, found {t.text or 'end of input'!r}")
        self.advance()
        self.skip_qualifiers()
        if self.at("*"):
            self.unsupported("pointers are not supported")
        return t.text

    # -- top level ------------------------------------------------------------

    def program(self) -> A.Program:
        globals_: list[A.VarDecl] = []
        functions: dict[str, A.Function] = {}
        while self.tok.kind != "eof":
            if self.accept(";"):
                continue
            if self.at("extern"):
                # prototypes and extern declarations carry no semantics here
                while not self.at(";"):
                    if self.tok.kind == "eof":
                        self.fail("unterminated extern declaration")
                    self.advance()
                self.advance()
                continue
            type_tok = self.tok
            kind = self.check_type()
            name_tok = self.ident()
            if self.at("("):
                fn = self.function(name_tok, kind == "int")
                if fn is None:
                    continue
                if fn.name in functions:
                    self.fail(f"redefinition of function '{fn.name}'", name_tok)
                functions[fn.name] = fn
            else:
                if kind == "void":
                    self.fail("variable declared void", type_tok)
                globals_.extend(self.declarators(name_tok))
        return A.Program(globals_, functions)

    def function(self, name_tok: Token, returns_value: bool) -> Optional[A.Function]:
        self.expect("(")
        params: list[str] = []
        if self.at("void") and self.peek().text == ")":
            self.advance()
        elif not self.at(")"):
            while True:
                kind = self.check_type()
                if kind != "int":
                    self.fail("parameters must have type int")
                params.append(self.ident().text)
                if self.at("["):
                    self.unsupported("arrays are not supported")
                if not self.accept(","):
                    break
        self.expect(")")
        if self.accept(";"):
            return None  # prototype
        body = self.block()
        return A.Function(name_tok.text, returns_value, params, body, line=name_tok.line)

    def declarators(self, first: Token) -> list[A.VarDecl]:
        decls = []
        name_tok = first
        while True:
            if self.at("["):
                self.unsupported("arrays are not supported")
            init = None
            if self.accept("="):
                init = self.rhs()
            decls.append(A.VarDecl(name_tok.text, init, line=name_tok.line))
            if not self.accept(","):
                break
            self.skip_qualifiers()
            if self.at("*"):
                self.unsupported("pointers are not supported")
            name_tok = self.ident()
        self.expect(";")
        return decls

    # -- statements -----------------------------------------------------------

    def block(self) -> A.Block:
        start = self.expect("{")
        body: list[A.Stmt] = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.fail("unterminated block", start)
            body.extend(self.statement_list())
        self.expect("}")
        return A.Block(body, line=start.line)

    def statement_list(self) -> list[A.Stmt]:
        """A statement, or the several declarations of one ``int a, b;``."""
        self.skip_qualifiers()
        t = self.tok
        if t.kind == "id" and (t.text == "int" or t.text in UNSUPPORTED_TYPES):
            self.check_type()
            return self.declarators(self.ident())
        return [self.statement()]

    def statement(self) -> A.Stmt:
        t = self.tok
        line = t.line
        if self.at("{"):
            return self.block()
        if self.accept(";"):
            return A.Empty(line=line)
        if t.kind != "id":
            if self.at("++") or self.at("--"):
                op = self.advance().text
                name = self.ident().text
                self.expect(";")
                return A.Assign(name, A.Binary(op[0], A.Var(name), A.Const(1)), line=line)
            if self.at("*"):
                self.unsupported("pointer dereference is not supported")
            self.fail(f"unexpected {t.text or 'end of input'!r}")
        word = t.text
        if word in ("int", "void") or word in UNSUPPORTED_TYPES:
            self.fail("declaration not allowed here")
        if word == "if":
            self.advance()
            cond = self.paren_cond()
            then = self.statement()
            orelse = self.statement() if self.accept("else") else None
            return A.If(cond, then, orelse, line=line)
        if word == "while":
            self.advance()
            cond = self.paren_cond()
            return A.While(cond, self.statement(), line=line)
        if word == "for":
            return self.for_loop()
        if word in ("do", "switch"):
            self.unsupported(f"'{word}' statements are not supported")
        if word == "goto":
            self.advance()
            label = self.ident().text
            self.expect(";")
            return A.Goto(label, line=line)
        if word == "return":
            self.advance()
            value = None if self.at(";") else self.expr()
            self.expect(";")
            return A.Return(value, line=line)
        if word == "break":
            self.advance()
            self.expect(";")
            return A.Break(line=line)
        if word == "continue":
            self.advance()
            self.expect(";")
            return A.Continue(line=line)
        if word == "assert" or word in ASSUME_NAMES:
            self.advance()
            cond = self.paren_cond()
            self.expect(";")
            if word == "assert":
                return A.AssertStmt(cond, line=line)
            return A.AssumeStmt(cond, line=line)
        if word in ERROR_NAMES:
            self.advance()
            self.expect("(")
            self.expect(")")
            self.expect(";")
            return A.ErrorStmt(line=line)
        if word == "abort" and self.peek().text == "(":
            self.advance()
            self.expect("(")
            self.expect(")")
            self.expect(";")
            return A.AssumeStmt(A.Const(0), line=line)
        if word in KEYWORDS:
            self.fail(f"unexpected keyword '{word}'")
        nxt = self.peek().text
        if nxt == ":":
            label = self.advance().text
            self.advance()
            if self.at("}"):
                return A.Labeled(label, A.Empty(line=line), line=line)
            return A.Labeled(label, self.statement(), line=line)
        stmt = self.simple_statement()
        self.expect(";")
        return stmt

    def simple_statement(self) -> A.Stmt:
        """Assignment, increment or call, without the trailing ``;``."""
        t = self.tok
        line = t.line
        if self.accept("++") or self.accept("--"):
            op = self.toks[self.i - 1].text[0]
            name = self.ident().text
            return A.Assign(name, A.Binary(op, A.Var(name), A.Const(1)), line=line)
        name_tok = self.ident()
        name = name_tok.text
        if self.at("("):
            if name in NONDET_NAMES:
                self.unsupported("nondet call result must be assigned")
            return A.CallStmt(self.call(name), line=line)
        if self.at("["):
            self.unsupported("arrays are not supported")
        if self.at(".") or self.at("->"):
            self.unsupported("structs are not supported")
        if self.accept("++") or self.accept("--"):
            op = self.toks[self.i - 1].text[0]
            return A.Assign(name, A.Binary(op, A.Var(name), A.Const(1)), line=line)
        if self.accept("="):
            return A.Assign(name, self.rhs(), line=line)
        op_tok = self.tok
        if op_tok.text in _COMPOUND:
            self.advance()
            value = self.expr()
            self.no_nested_nondet(value, op_tok)
            return A.Assign(name, _fold_binary(_COMPOUND[op_tok.text], A.Var(name), value, op_tok), line=line)
        self.fail(f"expected assignment or call, found {op_tok.text or 'end of input'!r}")

    def for_loop(self) -> A.Stmt:
        line = self.advance().line
        self.expect("(")
        init: list[A.Stmt] = []
        if self.at("int"):
            self.check_type()
            init = self.declarators(self.ident())
        else:
            if not self.at(";"):
                init = [self.simple_statement()]
            self.expect(";")
        cond: A.Expr = A.Const(1) if self.at(";") else self.expr()
        self.no_nested_nondet(cond, self.tok)
        self.expect(";")
        step = None if self.at(")") else self.simple_statement()
        self.expect(")")
        body = self.statement()
        loop = A.While(cond, body, step=step, line=line)
        return A.Block([*init, loop], line=line)

    def paren_cond(self) -> A.Expr:
        tok = self.expect("(")
        cond = self.expr()
        self.expect(")")
        self.no_nested_nondet(cond, tok)
        return cond

    def call(self, name: str) -> A.Call:
        self.expect("(")
        args: list[A.Expr] = []
        if not self.at(")"):
            while True:
                tok = self.tok
                arg = self.expr()
                self.no_nested_nondet(arg, tok)
                args.append(arg)
                if not self.accept(","):
                    break
        self.expect(")")
        return A.Call(name, tuple(args))

    def rhs(self) -> Union[A.Expr, A.Call]:
        t = self.tok
        if (t.kind == "id" and t.text not in KEYWORDS and t.text not in NONDET_NAMES
                and self.peek().text == "("):
            self.advance()
            return self.call(t.text)
        value = self.expr()
        if not isinstance(value, A.Nondet):
            self.no_nested_nondet(value, t)
        return value

    def no_nested_nondet(self, e: A.Expr, tok: Token) -> None:
        if A.contains_nondet(e):
            self.unsupported("nondet values may only be used as a whole right-hand side", tok)

    # -- expressions ----------------------------------------------------------

    def expr(self) -> A.Expr:
        e = self.binary(0)
        if self.at("?"):
            self.unsupported("conditional expressions are not supported")
        if self.at("=") or self.tok.text in _COMPOUND:
            self.unsupported("assignments inside expressions are not supported")
        return e

    def binary(self, level: int) -> A.Expr:
        if level == len(_BINARY_PRECEDENCE):
            return self.unary()
        ops = _BINARY_PRECEDENCE[level]
        lhs = self.binary(level + 1)
        while self.tok.kind == "op" and self.tok.text in ops:
            op_tok = self.advance()
            rhs = self.binary(level + 1)
            lhs = _fold_binary(op_tok.text, lhs, rhs, op_tok)
        return lhs

    def unary(self) -> A.Expr:
        t = self.tok
        if t.kind == "op":
            if t.text in ("-", "!", "~", "+"):
                self.advance()
                operand = self.unary()
                if t.text == "+":
                    return operand
                if isinstance(operand, A.Const):
                    return A.Const(semantics.unary(t.text, operand.value))
                if t.text == "-":
                    return A.Binary("-", A.Const(0), operand)
                return A.Unary(t.text, operand)
            if t.text in ("*", "&"):
                self.unsupported("pointers are not supported")
            if t.text in ("++", "--"):
                self.unsupported("increments inside expressions are not supported")
            if t.text == "(":
                if self.peek().text == "int" and self.peek(2).text == ")":
                    self.i += 3  # (int) cast is the identity
                    return self.unary()
                if self.peek().text in UNSUPPORTED_TYPES:
                    self.unsupported("casts to non-int types are not supported")
                self.advance()
                e = self.expr()
                self.expect(")")
                return self.postfix(e)
        return self.postfix(self.primary())

    def postfix(self, e: A.Expr) -> A.Expr:
        if self.at("["):
            self.unsupported("arrays are not supported")
        if self.at(".") or self.at("->"):
            self.unsupported("structs are not supported")
        if self.at("++") or self.at("--"):
            self.unsupported("increments inside expressions are not supported")
        return e

    def primary(self) -> A.Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            digits = t.text.rstrip("uUlL")
            if digits.lower().startswith("0x"):
                value = int(digits, 16)
            elif len(digits) > 1 and digits.startswith("0"):
                value = int(digits, 8)
            else:
                value = int(digits)
            return A.Const(semantics.wrap(value))
        if t.kind == "id" and t.text not in KEYWORDS:
            self.advance()
            if self.at("("):
                if t.text in NONDET_NAMES:
                    self.expect("(")
                    self.expect(")")
                    return A.Nondet()
                self.unsupported("function calls are only allowed as a whole right-hand side", t)
            return A.Var(t.text)
        self.fail(f"expected expression, found {t.text or 'end of input'!r}")

"""Control-flow automata and lowering of MiniC programs into them.

All calls are inlined into ``main``; locals of an inlined callee are renamed
``<name>@<function>#<call-site>`` so that every variable of the resulting CFA
has exactly one declaration.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Optional, Union

from domcheck.errors import (
    FrontendError,
    MiniCSyntaxError,
    RecursiveCallError,
    UndeclaredVariable,
    UndefinedFunction,
    UndefinedLabel,
)
from domcheck.frontend import ast as A
from domcheck.frontend.parser import parse

# --- edge operations ---------------------------------------------------------


@dataclass(frozen=True)
class Decl:
    var: str
    init: Optional[A.Expr] = None

    def __str__(self) -> str:
        return f"int {self.var}" + (f" = {self.init}" if self.init is not None else "")


@dataclass(frozen=True)
class Assign:
    var: str
    expr: A.Expr

    def __str__(self) -> str:
        return f"{self.var} = {self.expr}"


@dataclass(frozen=True)
class Assume:
    expr: A.Expr
    polarity: bool = True

    def __str__(self) -> str:
        return f"[{self.expr}]" if self.polarity else f"[!({self.expr})]"


@dataclass(frozen=True)
class Skip:
    def __str__(self) -> str:
        return "skip"


EdgeOp = Union[Decl, Assign, Assume, Skip]


@dataclass(frozen=True)
class CfaEdge:
    source: int
    target: int
    op: EdgeOp
    line: int = 0

    def __str__(self) -> str:
        return f"{self.source} -{self.op}-> {self.target}"


def edge_expressions(op: EdgeOp) -> list[A.Expr]:
    if isinstance(op, Decl):
        return [op.init] if op.init is not None else []
    if isinstance(op, Assign):
        return [op.expr]
    if isinstance(op, Assume):
        return [op.expr]
    return []


def edge_variables(op: EdgeOp) -> list[str]:
    names = [v for e in edge_expressions(op) for v in A.variables(e)]
    if isinstance(op, (Decl, Assign)):
        names.insert(0, op.var)
    return names


@dataclass
class Cfa:
    locations: tuple[int, ...]
    edges: tuple[CfaEdge, ...]
    entry: int
    exit: Optional[int]  # None when main never terminates
    error_locations: frozenset[int]
    variables: tuple[str, ...]
    _out: dict[int, tuple[CfaEdge, ...]] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        out: dict[int, list[CfaEdge]] = defaultdict(list)
        for e in self.edges:
            out[e.source].append(e)
        self._out = {loc: tuple(out.get(loc, ())) for loc in self.locations}

    def out_edges(self, loc: int) -> tuple[CfaEdge, ...]:
        return self._out[loc]

    def in_edges(self, loc: int) -> list[CfaEdge]:
        return [e for e in self.edges if e.target == loc]

    def assume_pairs(self) -> int:
        """Number of (true, false) Assume edge pairs leaving a common source."""
        pairs = 0
        for loc in self.locations:
            exprs = [e.op for e in self._out[loc] if isinstance(e.op, Assume)]
            pos = {op.expr for op in exprs if op.polarity}
            pairs += sum(1 for op in exprs if not op.polarity and op.expr in pos)
        return pairs

    def to_dot(self) -> str:
        lines = ["digraph cfa {"]
        for loc in self.locations:
            shape = "doublecircle" if loc in self.error_locations else "circle"
            lines.append(f'  n{loc} [label="{loc}", shape={shape}];')
        for e in self.edges:
            label = str(e.op).replace('"', '\\"')
            lines.append(f'  n{e.source} -> n{e.target} [label="{label}"];')
        lines.append("}")
        return "\n".join(lines)


# --- lowering ----------------------------------------------------------------


@dataclass
class _Frame:
    """Lowering context of one inlined function body."""

    function: str
    scopes: list[dict[str, str]]
    labels: dict[str, int]
    label_refs: dict[str, int]  # label -> line of first goto
    defined_labels: set[str]
    exit: int
    ret_var: Optional[str]
    loops: list[tuple[int, int]] = field(default_factory=list)  # (continue target, break target)
    site: Optional[int] = None


class _Lowerer:
    def __init__(self, program: A.Program):
        self.program = program
        self.next_loc = 0
        self.edges: list[CfaEdge] = []
        self.errors: set[int] = set()
        self.declared: list[str] = []
        self.used_names: set[str] = set()
        self.call_stack: list[str] = []
        self.call_sites = 0

    def new_loc(self) -> int:
        loc = self.next_loc
        self.next_loc += 1
        return loc

    def edge(self, src: int, dst: int, op: EdgeOp, line: int) -> None:
        self.edges.append(CfaEdge(src, dst, op, line))

    # -- names ----------------------------------------------------------------

    def fresh_name(self, base: str) -> str:
        name = base
        k = 2
        while name in self.used_names:
            name = f"{base}#{k}"
            k += 1
        self.used_names.add(name)
        self.declared.append(name)
        return name

    def declare(self, frame: _Frame, name: str, line: int) -> str:
        scope = frame.scopes[-1]
        if name in scope:
            raise MiniCSyntaxError(f"redeclaration of '{name}'", line)
        base = name if frame.site is None else f"{name}@{frame.function}#{frame.site}"
        unique = self.fresh_name(base)
        scope[name] = unique
        return unique

    def resolve(self, frame: _Frame, name: str, line: int) -> str:
        for scope in reversed(frame.scopes):
            if name in scope:
                return scope[name]
        raise UndeclaredVariable(f"'{name}' is not declared", line)

    def expr(self, frame: _Frame, e: A.Expr, line: int) -> A.Expr:
        mapping = {n: self.resolve(frame, n, line) for n in set(A.variables(e))}
        return A.rename(e, mapping)

    # -- program --------------------------------------------------------------

    def lower(self) -> Cfa:
        if "main" not in self.program.functions:
            raise UndefinedFunction("no 'main' function")
        entry = self.new_loc()
        globals_scope: dict[str, str] = {}
        main = self.program.functions["main"]
        frame = _Frame("main", [globals_scope], {}, {}, set(), exit=-1, ret_var=None)
        cur = entry
        for decl in self.program.globals:
            cur = self.stmt(frame, decl, cur)
        self.call_stack.append("main")
        exit_loc = self.new_loc()
        main_frame = _Frame("main", [globals_scope, {}], {}, {}, set(), exit=exit_loc, ret_var=None)
        for p in main.params:
            nxt = self.new_loc()
            self.edge(cur, nxt, Decl(self.declare(main_frame, p, main.line)), main.line)
            cur = nxt
        end = self.body(main_frame, main.body, cur)
        self.edge(end, exit_loc, Skip(), main.line)
        self.call_stack.pop()
        return self.finish(entry, exit_loc)

    def body(self, frame: _Frame, block: A.Block, cur: int) -> int:
        for s in block.body:
            cur = self.stmt(frame, s, cur)
        self.check_labels(frame)
        return cur

    def check_labels(self, frame: _Frame) -> None:
        missing = sorted(set(frame.label_refs) - frame.defined_labels)
        if missing:
            raise UndefinedLabel(f"label '{missing[0]}' used but not defined", frame.label_refs[missing[0]])

    def label_loc(self, frame: _Frame, label: str) -> int:
        if label not in frame.labels:
            frame.labels[label] = self.new_loc()
        return frame.labels[label]

    def finish(self, entry: int, exit_loc: int) -> Cfa:
        succ: dict[int, list[CfaEdge]] = defaultdict(list)
        for e in self.edges:
            succ[e.source].append(e)
        seen = {entry}
        queue = deque([entry])
        while queue:
            loc = queue.popleft()
            for e in succ[loc]:
                if e.target not in seen:
                    seen.add(e.target)
                    queue.append(e.target)
        renumber = {old: new for new, old in enumerate(sorted(seen))}
        edges = tuple(
            CfaEdge(renumber[e.source], renumber[e.target], e.op, e.line)
            for e in self.edges
            if e.source in seen
        )
        used = {v for e in edges for v in edge_variables(e.op)}
        variables = tuple(v for v in self.declared if v in used)
        return Cfa(
            locations=tuple(range(len(renumber))),
            edges=edges,
            entry=renumber[entry],
            exit=renumber.get(exit_loc),
            error_locations=frozenset(renumber[l] for l in self.errors if l in seen),
            variables=variables,
        )

    # -- statements -----------------------------------------------------------

    def stmt(self, frame: _Frame, s: A.Stmt, cur: int) -> int:
        line = s.line
        if isinstance(s, A.Block):
            frame.scopes.append({})
            for inner in s.body:
                cur = self.stmt(frame, inner, cur)
            frame.scopes.pop()
            return cur
        if isinstance(s, A.VarDecl):
            if isinstance(s.init, A.Call):
                # evaluate the call before the name comes into scope
                tmp = self.new_loc()
                name = self.declare(frame, s.name, line)
                self.edge(cur, tmp, Decl(name), line)
                return self.call(frame, s.init, name, tmp, line)
            init = None if s.init is None else self.expr(frame, s.init, line)
            name = self.declare(frame, s.name, line)
            nxt = self.new_loc()
            self.edge(cur, nxt, Decl(name, init), line)
            return nxt
        if isinstance(s, A.Assign):
            target = self.resolve(frame, s.name, line)
            if isinstance(s.value, A.Call):
                return self.call(frame, s.value, target, cur, line)
            nxt = self.new_loc()
            self.edge(cur, nxt, Assign(target, self.expr(frame, s.value, line)), line)
            return nxt
        if isinstance(s, A.CallStmt):
            return self.call(frame, s.call, None, cur, line)
        if isinstance(s, A.If):
            cond = self.expr(frame, s.cond, line)
            then_loc, end = self.new_loc(), self.new_loc()
            self.edge(cur, then_loc, Assume(cond, True), line)
            self.edge(self.stmt(frame, s.then, then_loc), end, Skip(), line)
            if s.orelse is None:
                self.edge(cur, end, Assume(cond, False), line)
            else:
                else_loc = self.new_loc()
                self.edge(cur, else_loc, Assume(cond, False), line)
                self.edge(self.stmt(frame, s.orelse, else_loc), end, Skip(), line)
            return end
        if isinstance(s, A.While):
            cond = self.expr(frame, s.cond, line)
            head, body_loc, done = self.new_loc(), self.new_loc(), self.new_loc()
            self.edge(cur, head, Skip(), line)
            self.edge(head, body_loc, Assume(cond, True), line)
            self.edge(head, done, Assume(cond, False), line)
            cont = head if s.step is None else self.new_loc()
            frame.loops.append((cont, done))
            body_end = self.stmt(frame, s.body, body_loc)
            frame.loops.pop()
            self.edge(body_end, cont, Skip(), line)
            if s.step is not None:
                self.edge(self.stmt(frame, s.step, cont), head, Skip(), line)
            return done
        if isinstance(s, A.Goto):
            self.edge(cur, self.label_loc(frame, s.label), Skip(), line)
            frame.label_refs.setdefault(s.label, line)
            return self.new_loc()
        if isinstance(s, A.Labeled):
            if s.label in frame.defined_labels:
                raise MiniCSyntaxError(f"duplicate label '{s.label}'", line)
            frame.defined_labels.add(s.label)
            target = self.label_loc(frame, s.label)
            self.edge(cur, target, Skip(), line)
            return self.stmt(frame, s.stmt, target)
        if isinstance(s, A.AssertStmt):
            cond = self.expr(frame, s.cond, line)
            ok, err = self.new_loc(), self.new_loc()
            self.errors.add(err)
            self.edge(cur, ok, Assume(cond, True), line)
            self.edge(cur, err, Assume(cond, False), line)
            return ok
        if isinstance(s, A.AssumeStmt):
            nxt = self.new_loc()
            self.edge(cur, nxt, Assume(self.expr(frame, s.cond, line), True), line)
            return nxt
        if isinstance(s, A.ErrorStmt):
            err = self.new_loc()
            self.errors.add(err)
            self.edge(cur, err, Skip(), line)
            return self.new_loc()
        if isinstance(s, A.Return):
            if s.value is not None and frame.ret_var is not None:
                mid = self.new_loc()
                self.edge(cur, mid, Assign(frame.ret_var, self.expr(frame, s.value, line)), line)
                cur = mid
            elif s.value is not None:
                self.expr(frame, s.value, line)  # still checks declarations
            self.edge(cur, frame.exit, Skip(), line)
            return self.new_loc()
        if isinstance(s, A.Break):
            if not frame.loops:
                raise MiniCSyntaxError("'break' outside a loop", line)
            self.edge(cur, frame.loops[-1][1], Skip(), line)
            return self.new_loc()
        if isinstance(s, A.Continue):
            if not frame.loops:
                raise MiniCSyntaxError("'continue' outside a loop", line)
            self.edge(cur, frame.loops[-1][0], Skip(), line)
            return self.new_loc()
        if isinstance(s, A.Empty):
            return cur
        raise FrontendError(f"cannot lower {type(s).__name__}", line)

    def call(self, frame: _Frame, call: A.Call, target: Optional[str], cur: int, line: int) -> int:
        fn = self.program.functions.get(call.name)
        if fn is None:
            raise UndefinedFunction(f"function '{call.name}' is not defined", line)
        if call.name in self.call_stack:
            cycle = " -> ".join(self.call_stack[self.call_stack.index(call.name):] + [call.name])
            raise RecursiveCallError(f"recursive call cycle {cycle}", line)
        if len(call.args) != len(fn.params):
            raise MiniCSyntaxError(
                f"'{call.name}' expects {len(fn.params)} arguments, got {len(call.args)}", line
            )
        if target is not None and not fn.returns_value:
            raise MiniCSyntaxError(f"void function '{call.name}' used as a value", line)
        args = [self.expr(frame, a, line) for a in call.args]
        self.call_sites += 1
        globals_scope = frame.scopes[0]
        exit_loc = self.new_loc()
        callee = _Frame(call.name, [globals_scope, {}], {}, {}, set(), exit=exit_loc,
                        ret_var=None, site=self.call_sites)
        for param, arg in zip(fn.params, args):
            nxt = self.new_loc()
            self.edge(cur, nxt, Decl(self.declare(callee, param, fn.line), arg), line)
            cur = nxt
        if fn.returns_value:
            callee.ret_var = self.fresh_name(f"__ret@{call.name}#{callee.site}")
            nxt = self.new_loc()
            self.edge(cur, nxt, Decl(callee.ret_var), line)
            cur = nxt
        self.call_stack.append(call.name)
        end = self.body(callee, fn.body, cur)
        self.call_stack.pop()
        self.edge(end, exit_loc, Skip(), fn.line)
        if target is None:
            return exit_loc
        nxt = self.new_loc()
        self.edge(exit_loc, nxt, Assign(target, A.Var(callee.ret_var)), line)
        return nxt


def lower(program: A.Program) -> Cfa:
    """Inline all calls of ``main`` and build its control-flow automaton."""
    return _Lowerer(program).lower()


def build_cfa(source: str) -> Cfa:
    return lower(parse(source))

"""Concrete interpreter used as an independent oracle.

Executes the CFA on concrete valuations, enumerating every nondeterministic
choice (nondet right-hand sides and uninitialized declarations) from a finite
range.  The search is breadth-first over ``(location, valuation)`` pairs with a
visited set, so programs with a finite concrete state space always finish.
Division or remainder by zero evaluates to 0 here; the abstract domains treat
it as an arbitrary value, which covers this choice.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import AbstractSet, Iterable, Optional, Sequence

from domcheck import semantics
from domcheck.frontend import ast as A
from domcheck.frontend.cfa import Assign, Assume, Cfa, CfaEdge, Decl, Skip


class OracleVerdict(str, Enum):
    SAFE = "SAFE"
    UNSAFE = "UNSAFE"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class OracleResult:
    verdict: OracleVerdict
    states: int = 0
    path: list[CfaEdge] = field(default_factory=list)
    # the valuation at the error location, variables in CFA order (None = undeclared)
    final_values: Optional[tuple[Optional[int], ...]] = None


def eval_concrete(values: dict[str, int], e: A.Expr, width: int = semantics.INT_WIDTH) -> int:
    """Evaluate a nondet-free expression; reading an undeclared variable raises KeyError."""
    if isinstance(e, A.Const):
        return semantics.wrap(e.value, width)
    if isinstance(e, A.Var):
        return values[e.name]
    if isinstance(e, A.Unary):
        return semantics.unary(e.op, eval_concrete(values, e.operand, width), width)
    if isinstance(e, A.Binary):
        lhs = eval_concrete(values, e.lhs, width)
        if e.op == "&&" and lhs == 0:
            return 0
        if e.op == "||" and lhs != 0:
            return 1
        rhs = eval_concrete(values, e.rhs, width)
        try:
            return semantics.binary(e.op, lhs, rhs, width)
        except ZeroDivisionError:
            return 0
    raise ValueError(f"cannot evaluate {e}")


def _successors(
    cfa: Cfa,
    index: dict[str, int],
    loc: int,
    vals: tuple,
    choices: Sequence[int],
    width: int,
    allowed: Optional[AbstractSet[int]],
):
    env = None
    for edge in cfa.out_edges(loc):
        if allowed is not None and edge.target not in allowed:
            continue
        op = edge.op
        if isinstance(op, Skip):
            yield edge, vals
            continue
        if env is None:
            env = {v: x for v, x in zip(cfa.variables, vals) if x is not None}
        if isinstance(op, Assume):
            if (eval_concrete(env, op.expr, width) != 0) == op.polarity:
                yield edge, vals
            continue
        expr = op.expr if isinstance(op, Assign) else op.init
        i = index[op.var]
        if expr is None or isinstance(expr, A.Nondet):
            for c in choices:
                yield edge, vals[:i] + (semantics.wrap(c, width),) + vals[i + 1 :]
        else:
            value = eval_concrete(env, expr, width)
            yield edge, vals[:i] + (value,) + vals[i + 1 :]


def _search(
    cfa: Cfa,
    choices: Sequence[int],
    step_limit: int,
    state_limit: int,
    width: int,
    allowed: Optional[AbstractSet[int]] = None,
    deadline: Optional[float] = None,
) -> OracleResult:
    index = {v: i for i, v in enumerate(cfa.variables)}
    start = (cfa.entry, (None,) * len(cfa.variables))
    parent: dict[tuple, Optional[tuple[tuple, CfaEdge]]] = {start: None}
    queue = deque([(start, 0)])
    truncated = False
    popped = 0
    while queue:
        popped += 1
        if deadline is not None and popped & 1023 == 0 and time.thread_time() > deadline:
            return OracleResult(OracleVerdict.INCONCLUSIVE, len(parent))
        node, depth = queue.popleft()
        loc, vals = node
        if loc in cfa.error_locations:
            path: list[CfaEdge] = []
            cur = node
            while parent[cur] is not None:
                prev, edge = parent[cur]
                path.append(edge)
                cur = prev
            path.reverse()
            return OracleResult(OracleVerdict.UNSAFE, len(parent), path, vals)
        if depth >= step_limit:
            truncated = True
            continue
        for edge, nvals in _successors(cfa, index, loc, vals, choices, width, allowed):
            nxt = (edge.target, nvals)
            if nxt in parent:
                continue
            if len(parent) >= state_limit:
                return OracleResult(OracleVerdict.INCONCLUSIVE, len(parent))
            parent[nxt] = (node, edge)
            queue.append((nxt, depth + 1))
    verdict = OracleVerdict.INCONCLUSIVE if truncated else OracleVerdict.SAFE
    return OracleResult(verdict, len(parent))


def oracle_interpret(
    cfa: Cfa,
    nondet_range: Iterable[int],
    step_limit: int = 10_000,
    state_limit: int = 2_000_000,
    width: int = semantics.INT_WIDTH,
) -> OracleResult:
    """Exhaustive concrete reachability relative to ``nondet_range``.

    UNSAFE iff some execution within the range reaches an error location;
    INCONCLUSIVE if the step or state budget cut the search short first.
    """
    choices = sorted(set(nondet_range))
    return _search(cfa, choices, step_limit, state_limit, width)


def program_constants(cfa: Cfa) -> set[int]:
    found: set[int] = set()

    def walk(e: A.Expr) -> None:
        if isinstance(e, A.Const):
            found.add(e.value)
        elif isinstance(e, A.Unary):
            walk(e.operand)
        elif isinstance(e, A.Binary):
            walk(e.lhs)
            walk(e.rhs)

    for edge in cfa.edges:
        op = edge.op
        expr = getattr(op, "expr", None) if not isinstance(op, Decl) else op.init
        if expr is not None:
            walk(expr)
    return found


def candidate_values(cfa: Cfa, limit: int = 48) -> list[int]:
    """Small set of nondet values likely to hit branch conditions."""
    base = {0, 1, -1}
    for c in program_constants(cfa):
        base.update((c - 1, c, c + 1))
    ordered = sorted(base, key=lambda v: (abs(v), v))
    return ordered[:limit]


def find_concrete_error(
    cfa: Cfa,
    allowed: Optional[AbstractSet[int]] = None,
    state_limit: int = 200_000,
    step_limit: int = 100_000,
    width: int = semantics.INT_WIDTH,
    deadline: Optional[float] = None,
) -> Optional[list[CfaEdge]]:
    """A concrete error path using candidate nondet values, or ``None`` if none was found.

    ``deadline`` is a :func:`time.thread_time` value after which the search gives up.
    """
    result = _search(cfa, candidate_values(cfa), step_limit, state_limit, width, allowed, deadline)
    if result.verdict is OracleVerdict.UNSAFE:
        return result.path
    return None

"""Hash-consed reduced ordered BDDs.

Nodes are plain integers indexing three parallel arrays.  ``0`` and ``1`` are
the terminals.  The level of a variable is its bit index, so the variable
order is the order in which bits were registered with :meth:`BddStore.add_var`.
The store is append-only; it never collects garbage.
"""

from __future__ import annotations

import sys
import time
from typing import Iterable, Iterator, Mapping, Optional

from domcheck.errors import NonInjectiveRename, ResourceExhausted, UnknownVariable

FALSE = 0
TRUE = 1
_TERMINAL_LEVEL = 1 << 30
_DEADLINE_STRIDE = 1 << 14

# Recursion depth is bounded by the number of levels times a small factor.
if sys.getrecursionlimit() < 20000:
    sys.setrecursionlimit(20000)


class BddStore:
    """A private node table with unique table and operation caches."""

    def __init__(self, node_limit: int = 50_000_000, deadline: Optional[float] = None):
        self._level: list[int] = [_TERMINAL_LEVEL, _TERMINAL_LEVEL]
        self._low: list[int] = [0, 1]
        self._high: list[int] = [0, 1]
        self._unique: dict[tuple[int, int, int], int] = {}
        self.names: list[str] = []
        self.node_limit = node_limit
        # absolute time.thread_time() value after which operations abort
        self.deadline = deadline
        self._ticks = 0
        self.clear_caches()

    # -- bookkeeping ------------------------------------------------------

    def clear_caches(self) -> None:
        self._and: dict[tuple[int, int], int] = {}
        self._or: dict[tuple[int, int], int] = {}
        self._xor: dict[tuple[int, int], int] = {}
        self._not: dict[int, int] = {}
        self._ite: dict[tuple[int, int, int], int] = {}
        self._exists: dict[tuple[int, frozenset], int] = {}
        self._and_exists: dict[tuple[int, int, frozenset], int] = {}
        self._restrict: dict[tuple[int, int], int] = {}

    @property
    def num_vars(self) -> int:
        return len(self.names)

    @property
    def node_count(self) -> int:
        """Total nodes ever created, terminals included (the store never shrinks)."""
        return len(self._level)

    def add_var(self, name: Optional[str] = None) -> int:
        index = len(self.names)
        self.names.append(name if name is not None else f"x{index}")
        return index

    def level(self, f: int) -> int:
        return self._level[f]

    def low(self, f: int) -> int:
        return self._low[f]

    def high(self, f: int) -> int:
        return self._high[f]

    def is_terminal(self, f: int) -> bool:
        return f < 2

    def mk(self, level: int, low: int, high: int) -> int:
        if low == high:
            return low
        key = (level, low, high)
        node = self._unique.get(key)
        if node is not None:
            return node
        node = len(self._level)
        if node >= self.node_limit:
            raise ResourceExhausted("bdd-nodes", f"{node} nodes")
        self._ticks += 1
        if self.deadline is not None and self._ticks >= _DEADLINE_STRIDE:
            self._ticks = 0
            if time.thread_time() > self.deadline:
                raise ResourceExhausted("cpu", "deadline passed inside a BDD operation")
        self._level.append(level)
        self._low.append(low)
        self._high.append(high)
        self._unique[key] = node
        return node

    def var(self, index: int) -> int:
        if not 0 <= index < len(self.names):
            raise UnknownVariable(f"bit {index} is not registered")
        return self.mk(index, FALSE, TRUE)

    def nvar(self, index: int) -> int:
        if not 0 <= index < len(self.names):
            raise UnknownVariable(f"bit {index} is not registered")
        return self.mk(index, TRUE, FALSE)

    def literal(self, index: int, value: bool) -> int:
        return self.var(index) if value else self.nvar(index)

    # -- boolean connectives ---------------------------------------------

    def not_(self, f: int) -> int:
        if f < 2:
            return 1 - f
        r = self._not.get(f)
        if r is None:
            r = self.mk(self._level[f], self.not_(self._low[f]), self.not_(self._high[f]))
            self._not[f] = r
            self._not[r] = f
        return r

    def and_(self, f: int, g: int) -> int:
        if f == 0 or g == 0:
            return 0
        if f == 1:
            return g
        if g == 1 or f == g:
            return f
        if f > g:
            f, g = g, f
        key = (f, g)
        r = self._and.get(key)
        if r is not None:
            return r
        lf, lg = self._level[f], self._level[g]
        if lf == lg:
            r = self.mk(lf, self.and_(self._low[f], self._low[g]), self.and_(self._high[f], self._high[g]))
        elif lf < lg:
            r = self.mk(lf, self.and_(self._low[f], g), self.and_(self._high[f], g))
        else:
            r = self.mk(lg, self.and_(f, self._low[g]), self.and_(f, self._high[g]))
        self._and[key] = r
        return r

    def or_(self, f: int, g: int) -> int:
        if f == 1 or g == 1:
            return 1
        if f == 0:
            return g
        if g == 0 or f == g:
            return f
        if f > g:
            f, g = g, f
        key = (f, g)
        r = self._or.get(key)
        if r is not None:
            return r
        lf, lg = self._level[f], self._level[g]
        if lf == lg:
            r = self.mk(lf, self.or_(self._low[f], self._low[g]), self.or_(self._high[f], self._high[g]))
        elif lf < lg:
            r = self.mk(lf, self.or_(self._low[f], g), self.or_(self._high[f], g))
        else:
            r = self.mk(lg, self.or_(f, self._low[g]), self.or_(f, self._high[g]))
        self._or[key] = r
        return r

    def xor(self, f: int, g: int) -> int:
        if f == g:
            return 0
        if f == 0:
            return g
        if g == 0:
            return f
        if f == 1:
            return self.not_(g)
        if g == 1:
            return self.not_(f)
        if f > g:
            f, g = g, f
        key = (f, g)
        r = self._xor.get(key)
        if r is not None:
            return r
        lf, lg = self._level[f], self._level[g]
        if lf == lg:
            r = self.mk(lf, self.xor(self._low[f], self._low[g]), self.xor(self._high[f], self._high[g]))
        elif lf < lg:
            r = self.mk(lf, self.xor(self._low[f], g), self.xor(self._high[f], g))
        else:
            r = self.mk(lg, self.xor(f, self._low[g]), self.xor(f, self._high[g]))
        self._xor[key] = r
        return r

    def equiv(self, f: int, g: int) -> int:
        return self.not_(self.xor(f, g))

    def implies(self, f: int, g: int) -> int:
        return self.or_(self.not_(f), g)

    def apply(self, op: str, f: int, g: int) -> int:
        op = op.upper()
        if op == "AND":
            return self.and_(f, g)
        if op == "OR":
            return self.or_(f, g)
        if op == "XOR":
            return self.xor(f, g)
        raise ValueError(f"unknown BDD operator {op!r}")

    def negate(self, f: int) -> int:
        return self.not_(f)

    def ite(self, f: int, g: int, h: int) -> int:
        if f == 1:
            return g
        if f == 0:
            return h
        if g == h:
            return g
        if g == 1 and h == 0:
            return f
        if g == 0 and h == 1:
            return self.not_(f)
        if g == 1:
            return self.or_(f, h)
        if h == 0:
            return self.and_(f, g)
        if g == 0:
            return self.and_(self.not_(f), h)
        if h == 1:
            return self.or_(self.not_(f), g)
        key = (f, g, h)
        r = self._ite.get(key)
        if r is not None:
            return r
        lv = self._level
        top = min(lv[f], lv[g], lv[h])
        f0, f1 = self._cofactors(f, top)
        g0, g1 = self._cofactors(g, top)
        h0, h1 = self._cofactors(h, top)
        r = self.mk(top, self.ite(f0, g0, h0), self.ite(f1, g1, h1))
        self._ite[key] = r
        return r

    def _cofactors(self, f: int, level: int) -> tuple[int, int]:
        if self._level[f] == level:
            return self._low[f], self._high[f]
        return f, f

    def conjoin(self, fs: Iterable[int]) -> int:
        r = TRUE
        for f in fs:
            r = self.and_(r, f)
            if r == FALSE:
                break
        return r

    def disjoin(self, fs: Iterable[int]) -> int:
        r = FALSE
        for f in fs:
            r = self.or_(r, f)
            if r == TRUE:
                break
        return r

    # -- quantification and substitution ----------------------------------

    def exists(self, f: int, bits: Iterable[int]) -> int:
        cube = frozenset(bits)
        if not cube or f < 2:
            return f
        return self._exists_rec(f, cube, max(cube))

    def _exists_rec(self, f: int, cube: frozenset, last: int) -> int:
        if f < 2 or self._level[f] > last:
            return f
        key = (f, cube)
        r = self._exists.get(key)
        if r is not None:
            return r
        lo = self._exists_rec(self._low[f], cube, last)
        lvl = self._level[f]
        if lvl in cube:
            r = 1 if lo == 1 else self.or_(lo, self._exists_rec(self._high[f], cube, last))
        else:
            r = self.mk(lvl, lo, self._exists_rec(self._high[f], cube, last))
        self._exists[key] = r
        return r

    def forall(self, f: int, bits: Iterable[int]) -> int:
        return self.not_(self.exists(self.not_(f), bits))

    def and_exists(self, f: int, g: int, bits: Iterable[int]) -> int:
        """``exists bits. f and g`` without building the full conjunction."""
        cube = frozenset(bits)
        if not cube:
            return self.and_(f, g)
        return self._and_exists_rec(f, g, cube, max(cube))

    def _and_exists_rec(self, f: int, g: int, cube: frozenset, last: int) -> int:
        if f == 0 or g == 0:
            return 0
        if f == 1 and g == 1:
            return 1
        if f == 1 or f == g:
            return self._exists_rec(g, cube, last)
        if g == 1:
            return self._exists_rec(f, cube, last)
        lv = self._level
        if lv[f] > last and lv[g] > last:
            return self.and_(f, g)
        if f > g:
            f, g = g, f
        key = (f, g, cube)
        r = self._and_exists.get(key)
        if r is not None:
            return r
        top = min(lv[f], lv[g])
        f0, f1 = self._cofactors(f, top)
        g0, g1 = self._cofactors(g, top)
        lo = self._and_exists_rec(f0, g0, cube, last)
        if top in cube:
            r = 1 if lo == 1 else self.or_(lo, self._and_exists_rec(f1, g1, cube, last))
        else:
            r = self.mk(top, lo, self._and_exists_rec(f1, g1, cube, last))
        self._and_exists[key] = r
        return r

    def rename(self, f: int, mapping: Mapping[int, int]) -> int:
        """Simultaneously substitute bit ``b`` by bit ``mapping[b]``."""
        targets = list(mapping.values())
        if len(set(targets)) != len(targets):
            raise NonInjectiveRename("two bits are mapped to the same target")
        for b in list(mapping) + targets:
            if not 0 <= b < len(self.names):
                raise UnknownVariable(f"bit {b} is not registered")
        if not mapping:
            return f
        memo: dict[int, int] = {}
        return self._rename_rec(f, mapping, memo)

    def _rename_rec(self, f: int, mapping: Mapping[int, int], memo: dict[int, int]) -> int:
        if f < 2:
            return f
        r = memo.get(f)
        if r is not None:
            return r
        lvl = self._level[f]
        lo = self._rename_rec(self._low[f], mapping, memo)
        hi = self._rename_rec(self._high[f], mapping, memo)
        target = mapping.get(lvl, lvl)
        if target < self._level[lo] and target < self._level[hi]:
            r = self.mk(target, lo, hi)
        else:
            r = self.ite(self.mk(target, 0, 1), hi, lo)
        memo[f] = r
        return r

    def restrict(self, f: int, care: int) -> int:
        """A function equal to ``f`` wherever ``care`` holds, usually smaller."""
        if care == 0:
            return f
        return self._restrict_rec(f, care)

    def _restrict_rec(self, f: int, c: int) -> int:
        if c == 1 or f < 2:
            return f
        if f == c:
            return 1
        key = (f, c)
        r = self._restrict.get(key)
        if r is not None:
            return r
        lv = self._level
        if lv[c] < lv[f]:
            r = self._restrict_rec(f, self.or_(self._low[c], self._high[c]))
        else:
            top = lv[f]
            c0, c1 = self._cofactors(c, top)
            if c0 == 0:
                r = self._restrict_rec(self._high[f], c1)
            elif c1 == 0:
                r = self._restrict_rec(self._low[f], c0)
            else:
                r = self.mk(top, self._restrict_rec(self._low[f], c0), self._restrict_rec(self._high[f], c1))
        self._restrict[key] = r
        return r

    def cofactor(self, f: int, bit: int, value: bool) -> int:
        """Fix ``bit`` to ``value`` in ``f``."""
        memo: dict[int, int] = {}

        def go(n: int) -> int:
            if n < 2 or self._level[n] > bit:
                return n
            if n in memo:
                return memo[n]
            if self._level[n] == bit:
                r = self._high[n] if value else self._low[n]
            else:
                r = self.mk(self._level[n], go(self._low[n]), go(self._high[n]))
            memo[n] = r
            return r

        return go(f)

    # -- inspection -------------------------------------------------------

    def evaluate(self, f: int, assignment: Mapping[int, bool] | Iterable[bool]) -> bool:
        if not isinstance(assignment, Mapping):
            assignment = dict(enumerate(assignment))
        while f > 1:
            f = self._high[f] if assignment.get(self._level[f], False) else self._low[f]
        return f == 1

    def support(self, f: int) -> set[int]:
        seen: set[int] = set()
        levels: set[int] = set()
        stack = [f]
        while stack:
            n = stack.pop()
            if n < 2 or n in seen:
                continue
            seen.add(n)
            levels.add(self._level[n])
            stack.append(self._low[n])
            stack.append(self._high[n])
        return levels

    def size(self, f: int) -> int:
        """Number of internal nodes reachable from ``f``."""
        seen: set[int] = set()
        stack = [f]
        while stack:
            n = stack.pop()
            if n < 2 or n in seen:
                continue
            seen.add(n)
            stack.append(self._low[n])
            stack.append(self._high[n])
        return len(seen)

    def pick_one(self, f: int) -> Optional[dict[int, bool]]:
        """One satisfying partial assignment, preferring 0 branches."""
        if f == 0:
            return None
        out: dict[int, bool] = {}
        while f > 1:
            if self._low[f] != 0:
                out[self._level[f]] = False
                f = self._low[f]
            else:
                out[self._level[f]] = True
                f = self._high[f]
        return out

    def iter_sat(self, f: int, bits: list[int]) -> Iterator[dict[int, bool]]:
        """All total assignments over ``bits`` satisfying ``f``; ``bits`` must cover the support."""
        order = sorted(bits)

        def go(n: int, i: int, acc: dict[int, bool]) -> Iterator[dict[int, bool]]:
            if n == 0:
                return
            if i == len(order):
                if n == 1:
                    yield dict(acc)
                return
            b = order[i]
            for value in (False, True):
                if n > 1 and self._level[n] == b:
                    child = self._high[n] if value else self._low[n]
                else:
                    child = n
                acc[b] = value
                yield from go(child, i + 1, acc)
            del acc[b]

        yield from go(f, 0, {})

    def nodes_reachable(self, roots: Iterable[int]) -> list[int]:
        seen: set[int] = set()
        order: list[int] = []
        stack = list(roots)
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            order.append(n)
            if n > 1:
                stack.append(self._low[n])
                stack.append(self._high[n])
        return sorted(order)

    def audit(self) -> list[str]:
        """Violations of reducedness, orderedness or uniqueness (empty if none)."""
        problems = []
        seen: dict[tuple[int, int, int], int] = {}
        for n in range(2, len(self._level)):
            key = (self._level[n], self._low[n], self._high[n])
            if key[1] == key[2]:
                problems.append(f"node {n} has equal children")
            for child in key[1:]:
                if self._level[child] <= key[0]:
                    problems.append(f"node {n} is not ordered above child {child}")
            if key in seen:
                problems.append(f"node {n} duplicates node {seen[key]}")
            seen[key] = n
        return problems

    def to_dot(self, roots: Mapping[str, int]) -> str:
        lines = ["digraph bdd {", '  n0 [shape=box,label="0"];', '  n1 [shape=box,label="1"];']
        for label, root in roots.items():
            safe = str(label).replace('"', "'")
            lines.append(f'  "{safe}" [shape=plaintext];')
            lines.append(f'  "{safe}" -> n{root};')
        for n in self.nodes_reachable(roots.values()):
            if n < 2:
                continue
            lvl = self._level[n]
            lines.append(f'  n{n} [label="{self.names[lvl]} (#{n}, level {lvl})"];')
            lines.append(f"  n{n} -> n{self._low[n]} [style=dashed];")
            lines.append(f"  n{n} -> n{self._high[n]};")
        lines.append("}")
        return "\n".join(lines) + "\n"

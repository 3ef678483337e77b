"""Domain assignment and the composite reachability analysis.

Each variable is tracked by exactly one component: the explicit-value domain
or the BDD domain.  A configuration picks a threshold domain type; variables
whose type is at most the threshold go to the BDD side.

The reached set is kept per location and, within a location, grouped by the
set of variables the explicit part binds.  Merge joins the BDD parts of two
states whose explicit parts are equal.  Coverage looks for a reached state whose
explicit part is a sub-map of the new one and whose BDD part is entailed by it;
grouping by bound-variable set turns each candidate into one dictionary lookup.
"""

from __future__ import annotations

import heapq
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional

from domcheck import explicit, semantics
from domcheck.bdd.store import FALSE, BddStore
from domcheck.bdddomain import BddDomain, BitLayout, make_layouts, total_bits
from domcheck.domtype import DomainType, DomainTyping, infer
from domcheck.errors import ResourceExhausted
from domcheck.explicit import ExplicitState
from domcheck.frontend.cfa import Cfa, CfaEdge, edge_variables
from domcheck.interp import find_concrete_error


class Config(str, Enum):
    EXPLICIT_INT = "explicit-int"
    BDD_BOOL = "bdd-bool"
    BDD_INTEQ = "bdd-inteq"
    BDD_INTEQADD = "bdd-inteqadd"
    BDD_INT = "bdd-int"

    @property
    def threshold(self) -> Optional[DomainType]:
        return _THRESHOLDS[self]

    @classmethod
    def parse(cls, name: str) -> "Config":
        try:
            return cls(name.lower())
        except ValueError:
            names = ", ".join(c.value for c in cls)
            raise ValueError(f"unknown configuration {name!r} (choose from {names})") from None


_THRESHOLDS = {
    Config.EXPLICIT_INT: None,
    Config.BDD_BOOL: DomainType.BOOL,
    Config.BDD_INTEQ: DomainType.INTEQ,
    Config.BDD_INTEQADD: DomainType.INTEQADD,
    Config.BDD_INT: DomainType.INT,
}


class Outcome(str, Enum):
    TRUE = "TRUE"
    FALSE = "FALSE"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class DomainAssignment:
    config: Config
    explicit: frozenset[str]
    bdd: frozenset[str]
    layouts: Mapping[str, BitLayout]

    @property
    def total_bits(self) -> int:
        return total_bits(self.layouts)


def build_assignment(
    typing: DomainTyping,
    config: Config | str,
    width: int = semantics.INT_WIDTH,
    order: str = "declared",
) -> DomainAssignment:
    if isinstance(config, str):
        config = Config.parse(config)
    t = config.threshold
    bdd = frozenset(v for v in typing.variables if t is not None and typing.type_of[v] <= t)
    expl = frozenset(typing.variables) - bdd
    return DomainAssignment(config, expl, bdd, make_layouts(typing, bdd, width=width, order=order))


@dataclass(frozen=True)
class CompositeState:
    location: int
    explicit: ExplicitState
    bdd: int


@dataclass
class Limits:
    cpu_seconds: float = 900.0
    max_states: int = 1_000_000
    max_bdd_nodes: int = 50_000_000


@dataclass
class Options:
    waitlist: str = "rpo"
    width: int = semantics.INT_WIDTH
    bdd_order: str = "declared"
    # replay FALSE results concretely to mark them confirmed
    confirm: bool = True
    keep_reached: bool = False
    dump_bdd: bool = False
    # bound-variable groups per location scanned exhaustively by the coverage check
    coverage_scan_limit: int = 64


@dataclass
class Verdict:
    outcome: Outcome
    config: Config
    confirmed: bool = False
    cpu_seconds: float = 0.0
    reached_states: int = 0
    waitlist_peak: int = 0
    bdd_peak_nodes: int = 0
    trace: list[CfaEdge] = field(default_factory=list)
    limit_hit: Optional[str] = None
    diagnostics: str = ""
    stats: dict = field(default_factory=dict)
    reached: list[CompositeState] = field(default_factory=list, repr=False)
    dot: Optional[str] = field(default=None, repr=False)
    # the analysis owning the BDDs in ``reached``
    analysis: Optional["CompositeAnalysis"] = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "confirmed": self.confirmed,
            "cpu_seconds": round(self.cpu_seconds, 6),
            "reached_states": self.reached_states,
            "bdd_peak_nodes": self.bdd_peak_nodes,
            "trace": [e.line for e in self.trace],
            "config": self.config.value,
            "limit_hit": self.limit_hit,
            "waitlist_peak": self.waitlist_peak,
        }


class CompositeAnalysis:
    """Transfer, merge and stop of the explicit x BDD product over one CFA."""

    def __init__(
        self,
        cfa: Cfa,
        assignment: DomainAssignment,
        width: int = semantics.INT_WIDTH,
        store: Optional[BddStore] = None,
    ):
        self.cfa = cfa
        self.assignment = assignment
        self.width = width
        self.domain = BddDomain(dict(assignment.layouts), width=width, store=store or BddStore())
        # per edge: compiled explicit transfer and whether the BDD side is involved
        self._compiled: dict[int, tuple[explicit.Transfer, bool]] = {}

    @property
    def store(self) -> BddStore:
        return self.domain.store

    def initial(self) -> CompositeState:
        return CompositeState(self.cfa.entry, explicit.EMPTY, self.domain.top())

    def _edge(self, edge: CfaEdge) -> tuple[explicit.Transfer, bool]:
        entry = self._compiled.get(id(edge))
        if entry is None:
            fn = explicit.compile_transfer(edge.op, self.assignment.explicit, self.width)
            touches = any(v in self.assignment.bdd for v in edge_variables(edge.op))
            entry = self._compiled[id(edge)] = (fn, touches)
        return entry

    def successor(self, ex: ExplicitState, bdd: int, edge: CfaEdge) -> Optional[tuple[ExplicitState, int]]:
        fn, touches = self._edge(edge)
        succ = fn(ex)
        if succ is None:
            return None
        if touches:
            # both components read the pre-state; known explicit values are substituted
            bdd = self.domain.transfer(bdd, edge.op, env=ex)
            if bdd == FALSE:
                return None
        return succ, bdd

    def composite_transfer(self, state: CompositeState, edge: CfaEdge) -> list[CompositeState]:
        if edge.source != state.location:
            return []
        out = self.successor(state.explicit, state.bdd, edge)
        return [] if out is None else [CompositeState(edge.target, out[0], out[1])]

    def composite_merge(self, s1: CompositeState, s2: CompositeState) -> Optional[CompositeState]:
        """Join of the BDD parts when the explicit parts agree, else ``None`` (keep separate)."""
        if s1.location != s2.location or s1.explicit != s2.explicit:
            return None
        return CompositeState(s1.location, s1.explicit, self.domain.join(s1.bdd, s2.bdd))

    def covers(self, s: CompositeState, other: CompositeState) -> bool:
        """``s`` is covered by ``other``."""
        return (
            s.location == other.location
            and explicit.subsumes(s.explicit, other.explicit)
            and self.domain.entails(s.bdd, other.bdd)
        )

    def composite_stop(self, s: CompositeState, reached: Iterable[CompositeState]) -> bool:
        return any(self.covers(s, r) for r in reached)


WAITLISTS = ("rpo", "dfs", "bfs")


def reverse_postorder(cfa: Cfa) -> dict[int, int]:
    """Location -> position in a reverse postorder of the CFA from its entry."""
    order: list[int] = []
    seen = {cfa.entry}
    stack = [(cfa.entry, iter(cfa.out_edges(cfa.entry)))]
    while stack:
        loc, it = stack[-1]
        for edge in it:
            if edge.target not in seen:
                seen.add(edge.target)
                stack.append((edge.target, iter(cfa.out_edges(edge.target))))
                break
        else:
            order.append(loc)
            stack.pop()
    n = len(order)
    return {loc: n - 1 - i for i, loc in enumerate(order)}


class Waitlist:
    """Pending (location, explicit part) pairs.

    ``dfs`` and ``bfs`` are plain stack and queue orders.  ``rpo`` pops the
    entry whose location comes first in reverse postorder, newest first among
    equals, so both arms of a branch reach the join (and merge there) before
    the join is expanded.
    """

    def __init__(self, policy: str, cfa: Cfa):
        self.policy = policy
        if policy == "rpo":
            self._rank = reverse_postorder(cfa)
            self._heap: list = []
            self._seq = 0
        else:
            self._items: deque[tuple[int, ExplicitState]] = deque()

    def push(self, loc: int, ex: ExplicitState) -> None:
        if self.policy == "rpo":
            self._seq += 1
            heapq.heappush(self._heap, (self._rank.get(loc, 0), -self._seq, loc, ex))
        else:
            self._items.append((loc, ex))

    def pop(self) -> tuple[int, ExplicitState]:
        if self.policy == "rpo":
            _, _, loc, ex = heapq.heappop(self._heap)
            return loc, ex
        return self._items.pop() if self.policy == "dfs" else self._items.popleft()

    def __len__(self) -> int:
        return len(self._heap) if self.policy == "rpo" else len(self._items)


class _Reached:
    """Reached states grouped by location, then by the mask of bound variables."""

    def __init__(self, scan_limit: int = 64) -> None:
        self.scan_limit = scan_limit
        self.groups: dict[int, dict[int, dict[tuple, int]]] = {}
        self.parent: dict[tuple[int, tuple], Optional[tuple[tuple[int, tuple], CfaEdge]]] = {}
        self.count = 0

    def lookup(self, loc: int, ex: ExplicitState) -> Optional[int]:
        by_mask = self.groups.get(loc)
        if by_mask is None:
            return None
        group = by_mask.get(ex.mask)
        return None if group is None else group.get(ex.key)

    def covered(self, loc: int, ex: ExplicitState, bdd: int, entails) -> bool:
        """Some state with strictly fewer bindings covers ``(ex, bdd)``."""
        by_mask = self.groups.get(loc)
        if not by_mask:
            return False
        mask = ex.mask
        if len(by_mask) <= self.scan_limit:
            candidates = [m for m in by_mask if m != mask and m & mask == m]
        else:
            # many bound-variable sets: only look one binding away
            candidates = []
            rest = mask
            while rest:
                low = rest & -rest
                rest ^= low
                if mask ^ low in by_mask:
                    candidates.append(mask ^ low)
        for m in candidates:
            other = by_mask[m].get(ex.without_mask(mask & ~m))
            if other is not None and entails(bdd, other):
                return True
        return False

    def put(self, loc: int, ex: ExplicitState, bdd: int) -> bool:
        """Store the BDD part; returns True if the entry is new."""
        group = self.groups.setdefault(loc, {}).setdefault(ex.mask, {})
        new = ex.key not in group
        group[ex.key] = bdd
        if new:
            self.count += 1
        return new

    def states(self) -> Iterable[CompositeState]:
        for loc, by_mask in self.groups.items():
            for mask, group in by_mask.items():
                for key, bdd in group.items():
                    yield CompositeState(loc, ExplicitState.from_key(key, mask), bdd)


def verify(
    cfa: Cfa,
    typing: Optional[DomainTyping] = None,
    config: Config | str = Config.BDD_BOOL,
    limits: Optional[Limits] = None,
    options: Optional[Options] = None,
) -> Verdict:
    """Decide whether an error location is reachable."""
    if isinstance(config, str):
        config = Config.parse(config)
    limits = limits or Limits()
    options = options or Options()
    if options.waitlist not in WAITLISTS:
        raise ValueError(f"unknown waitlist policy {options.waitlist!r}")
    started = time.thread_time()
    deadline = started + limits.cpu_seconds
    typing = typing or infer(cfa)
    assignment = build_assignment(typing, config, width=options.width, order=options.bdd_order)
    store = BddStore(node_limit=limits.max_bdd_nodes, deadline=deadline)
    analysis = CompositeAnalysis(cfa, assignment, width=options.width, store=store)
    reached = _Reached(options.coverage_scan_limit)
    verdict = Verdict(Outcome.TRUE, config)
    waitlist = Waitlist(options.waitlist, cfa)
    queued: set[tuple[int, tuple]] = set()
    errors = cfa.error_locations
    error_key = None

    try:
        init = analysis.initial()
        key0 = (init.location, init.explicit.key)
        reached.put(init.location, init.explicit, init.bdd)
        reached.parent[key0] = None
        waitlist.push(init.location, init.explicit)
        queued.add(key0)
        if init.location in errors:
            error_key = key0
        pop = waitlist.pop
        join = analysis.domain.join
        entails = analysis.domain.entails
        max_states = limits.max_states
        while waitlist and error_key is None:
            if time.thread_time() > deadline:
                raise ResourceExhausted("cpu", f"{limits.cpu_seconds:g} s")
            loc, ex = pop()
            key = (loc, ex.key)
            queued.discard(key)
            bdd = reached.lookup(loc, ex)
            for edge in cfa.out_edges(loc):
                out = analysis.successor(ex, bdd, edge)
                if out is None:
                    continue
                sex, sbdd = out
                target = edge.target
                skey = (target, sex.key)
                old = reached.lookup(target, sex)
                if old is not None:
                    # merge: equal explicit parts, join the BDD parts
                    sbdd = join(old, sbdd)
                    if sbdd == old:
                        continue
                if reached.covered(target, sex, sbdd, entails):
                    continue
                if reached.put(target, sex, sbdd):
                    reached.parent[skey] = (key, edge)
                    if reached.count > max_states:
                        raise ResourceExhausted("states", f"{max_states} reached states")
                if target in errors:
                    error_key = skey
                    break
                if skey not in queued:
                    waitlist.push(target, sex)
                    queued.add(skey)
                    if len(waitlist) > verdict.waitlist_peak:
                        verdict.waitlist_peak = len(waitlist)
        if error_key is not None:
            verdict.outcome = Outcome.FALSE
            verdict.trace = _abstract_path(reached, error_key)
    except ResourceExhausted as exc:
        verdict.outcome = Outcome.UNKNOWN
        verdict.limit_hit = exc.limit
        verdict.diagnostics = str(exc)
    except RecursionError:
        verdict.outcome = Outcome.UNKNOWN
        verdict.limit_hit = "recursion"
        verdict.diagnostics = "BDD operation exceeded the recursion depth"

    if verdict.outcome is Outcome.FALSE and options.confirm:
        allowed = frozenset(reached.groups)
        try:
            concrete = find_concrete_error(cfa, allowed=allowed, width=options.width, deadline=deadline)
        except RecursionError:
            concrete = None
        if concrete is not None:
            verdict.trace = concrete
            verdict.confirmed = True

    verdict.cpu_seconds = time.thread_time() - started
    verdict.reached_states = reached.count
    verdict.bdd_peak_nodes = store.node_count
    verdict.stats = {
        "explicit_variables": sorted(assignment.explicit),
        "bdd_variables": sorted(assignment.bdd),
        **analysis.domain.stats(),
    }
    if options.keep_reached:
        verdict.reached = list(reached.states())
        verdict.analysis = analysis
    if options.dump_bdd:
        roots = {}
        for loc, by_mask in sorted(reached.groups.items()):
            acc = FALSE
            for group in by_mask.values():
                for b in group.values():
                    acc = store.or_(acc, b)
            roots[f"loc {loc}"] = acc
        verdict.dot = store.to_dot(roots)
    return verdict


def _abstract_path(reached: _Reached, key) -> list[CfaEdge]:
    path = []
    link = reached.parent.get(key)
    while link is not None:
        prev, edge = link
        path.append(edge)
        link = reached.parent.get(prev)
    path.reverse()
    return path


def verify_source(
    source: str,
    config: Config | str = Config.BDD_BOOL,
    limits: Optional[Limits] = None,
    options: Optional[Options] = None,
) -> Verdict:
    from domcheck.frontend import build_cfa

    cfa = build_cfa(source)
    return verify(cfa, infer(cfa), config, limits, options)

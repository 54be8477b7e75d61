"""Textual activity models: parsing, validation, and region analysis.

The accepted language is a line-oriented DSL for control-flow-only activity
models (``.act`` files)::

    activity Name {
      partition Lane {        # optional grouping; assigns nodes to a swimlane
        initial i;
        action A1 "collect Data";
      }
      final f;
      fork fk; join jn; decision d; merge m;
      i -> A1;
      d -> A1 guard c1 "label";   # guards only on decision out-edges
    }

Comments run from ``#`` to end of line.  Node ids must be unique; edges may
reference only declared nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional

from .report import ValidationReport, Violation

INITIAL = "initial"
FINAL = "final"
ACTION = "action"
FORK = "fork"
JOIN = "join"
DECISION = "decision"
MERGE = "merge"

NODE_KINDS = (INITIAL, FINAL, ACTION, FORK, JOIN, DECISION, MERGE)
CONTROL_KINDS = (INITIAL, FINAL, FORK, JOIN, DECISION, MERGE)


class ParseError(Exception):
    """Syntax or reference error with a source position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class StructureError(Exception):
    """Raised when a model has no well-structured region decomposition."""


@dataclass(frozen=True)
class Guard:
    id: str
    label: str = ""


@dataclass(frozen=True)
class ActivityNode:
    id: str
    kind: str
    label: str = ""


@dataclass(frozen=True)
class ActivityEdge:
    id: str
    source: str
    target: str
    guard: Optional[Guard] = None


@dataclass(frozen=True)
class ActivityModel:
    name: str
    nodes: tuple[ActivityNode, ...]
    edges: tuple[ActivityEdge, ...]
    partitions: Mapping[str, str] = field(default_factory=dict)

    def node(self, node_id: str) -> ActivityNode:
        return self._by_id[node_id]

    @property
    def _by_id(self) -> dict[str, ActivityNode]:
        return {n.id: n for n in self.nodes}

    def nodes_of_kind(self, kind: str) -> list[ActivityNode]:
        return [n for n in self.nodes if n.kind == kind]

    @property
    def actions(self) -> list[ActivityNode]:
        return self.nodes_of_kind(ACTION)

    def outgoing(self, node_id: str) -> list[ActivityEdge]:
        return [e for e in self.edges if e.source == node_id]

    def incoming(self, node_id: str) -> list[ActivityEdge]:
        return [e for e in self.edges if e.target == node_id]

    def guards_of(self, decision_id: str) -> list[Guard]:
        return [e.guard for e in self.outgoing(decision_id) if e.guard is not None]

    def guard_decisions(self) -> dict[str, str]:
        """Map guard id -> owning decision id (guards of one decision are exclusive)."""
        owners: dict[str, str] = {}
        for node in self.nodes_of_kind(DECISION):
            for guard in self.guards_of(node.id):
                owners[guard.id] = node.id
        return owners


# ---------------------------------------------------------------------------
# Parsing


class _Scanner:
    _PUNCT = ("->", "{", "}", ";")

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.line, self.col)

    def _advance(self, n: int) -> None:
        for ch in self.text[self.pos : self.pos + n]:
            if ch == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.pos += n

    def _skip_blank(self) -> None:
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch == "#":
                while self.pos < len(self.text) and self.text[self.pos] != "\n":
                    self._advance(1)
            elif ch.isspace():
                self._advance(1)
            else:
                return

    def next(self) -> Optional[tuple[str, str, int, int]]:
        """Return (kind, value, line, col) or None at end of input."""
        self._skip_blank()
        if self.pos >= len(self.text):
            return None
        line, col = self.line, self.col
        ch = self.text[self.pos]
        for punct in self._PUNCT:
            if self.text.startswith(punct, self.pos):
                self._advance(len(punct))
                return ("punct", punct, line, col)
        if ch == '"':
            self._advance(1)
            chars = []
            while self.pos < len(self.text) and self.text[self.pos] != '"':
                if self.text[self.pos] == "\n":
                    raise ParseError("unterminated string", line, col)
                chars.append(self.text[self.pos])
                self._advance(1)
            if self.pos >= len(self.text):
                raise ParseError("unterminated string", line, col)
            self._advance(1)
            return ("string", "".join(chars), line, col)
        if ch.isalpha() or ch == "_":
            chars = []
            while self.pos < len(self.text) and (
                self.text[self.pos].isalnum() or self.text[self.pos] == "_"
            ):
                chars.append(self.text[self.pos])
                self._advance(1)
            return ("word", "".join(chars), line, col)
        raise ParseError(f"unexpected character {ch!r}", line, col)


class _Parser:
    def __init__(self, text: str):
        self.scanner = _Scanner(text)
        self.tok = self.scanner.next()

    def _advance(self) -> None:
        self.tok = self.scanner.next()

    def _fail(self, message: str) -> ParseError:
        if self.tok is None:
            return ParseError(message, self.scanner.line, self.scanner.col)
        return ParseError(message, self.tok[2], self.tok[3])

    def expect(self, kind: str, value: Optional[str] = None) -> tuple[str, int, int]:
        if self.tok is None or self.tok[0] != kind or (value is not None and self.tok[1] != value):
            want = value if value is not None else kind
            got = "end of input" if self.tok is None else repr(self.tok[1])
            raise self._fail(f"expected {want}, got {got}")
        _, val, line, col = self.tok
        self._advance()
        return val, line, col

    def at_word(self, *values: str) -> bool:
        return self.tok is not None and self.tok[0] == "word" and self.tok[1] in values

    def parse(self) -> ActivityModel:
        self.expect("word", "activity")
        name, _, _ = self.expect("word")
        self.expect("punct", "{")
        nodes: list[ActivityNode] = []
        edges: list[ActivityEdge] = []
        partitions: dict[str, str] = {}
        positions: dict[str, tuple[int, int]] = {}
        self._body(nodes, edges, partitions, positions, lane=None)
        self.expect("punct", "}")
        if self.tok is not None:
            raise self._fail("trailing input after activity body")
        known = {n.id for n in nodes}
        for edge in edges:
            for ref in (edge.source, edge.target):
                if ref not in known:
                    line, col = positions[edge.id]
                    raise ParseError(f"unknown node {ref}", line, col)
        return ActivityModel(name=name, nodes=tuple(nodes), edges=tuple(edges), partitions=partitions)

    def _body(self, nodes, edges, partitions, positions, lane) -> None:
        while self.tok is not None and not (self.tok[0] == "punct" and self.tok[1] == "}"):
            if self.at_word("partition"):
                if lane is not None:
                    raise self._fail("partitions cannot nest")
                self._advance()
                lane_name, _, _ = self.expect("word")
                self.expect("punct", "{")
                self._body(nodes, edges, partitions, positions, lane=lane_name)
                self.expect("punct", "}")
            elif self.at_word(*NODE_KINDS):
                kind = self.tok[1]
                self._advance()
                node_id, line, col = self.expect("word")
                label = ""
                if kind == ACTION:
                    label, _, _ = self.expect("string")
                self.expect("punct", ";")
                if any(n.id == node_id for n in nodes):
                    raise ParseError(f"duplicate id {node_id}", line, col)
                nodes.append(ActivityNode(id=node_id, kind=kind, label=label))
                if lane is not None:
                    partitions[node_id] = lane
            elif self.tok[0] == "word":
                src, line, col = self.expect("word")
                self.expect("punct", "->")
                dst, _, _ = self.expect("word")
                guard = None
                if self.at_word("guard"):
                    self._advance()
                    gid, _, _ = self.expect("word")
                    glabel = ""
                    if self.tok is not None and self.tok[0] == "string":
                        glabel, _, _ = self.expect("string")
                    guard = Guard(id=gid, label=glabel)
                self.expect("punct", ";")
                edge_id = f"e{len(edges) + 1}"
                edges.append(ActivityEdge(id=edge_id, source=src, target=dst, guard=guard))
                positions[edge_id] = (line, col)
            else:
                raise self._fail("expected a declaration")


def parse_activity(text: str) -> ActivityModel:
    """Parse DSL source into an ActivityModel, or raise a positioned ParseError."""
    return _Parser(text).parse()


def pretty_print(model: ActivityModel) -> str:
    """Render a model back to canonical DSL source (reparses to an equal model)."""
    lines = [f"activity {model.name} {{"]
    lanes: dict[Optional[str], list[ActivityNode]] = {}
    for node in model.nodes:
        lanes.setdefault(model.partitions.get(node.id), []).append(node)

    def decl(node: ActivityNode) -> str:
        if node.kind == ACTION:
            return f'  {node.kind} {node.id} "{node.label}";'
        return f"  {node.kind} {node.id};"

    for node in lanes.get(None, []):
        lines.append(decl(node))
    for lane in sorted(k for k in lanes if k is not None):
        lines.append(f"  partition {lane} {{")
        for node in lanes[lane]:
            lines.append("  " + decl(node))
        lines.append("  }")
    for edge in model.edges:
        if edge.guard is not None:
            lines.append(f'  {edge.source} -> {edge.target} guard {edge.guard.id} "{edge.guard.label}";')
        else:
            lines.append(f"  {edge.source} -> {edge.target};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Graph utilities


def topological_order(model: ActivityModel) -> list[str]:
    """Deterministic topological order (declaration order breaks ties).

    Raises StructureError when the graph has a cycle.
    """
    order_index = {n.id: i for i, n in enumerate(model.nodes)}
    indegree = {n.id: 0 for n in model.nodes}
    for e in model.edges:
        if e.target in indegree:
            indegree[e.target] += 1
    ready = sorted((nid for nid, d in indegree.items() if d == 0), key=order_index.get)
    out: list[str] = []
    while ready:
        nid = ready.pop(0)
        out.append(nid)
        changed = False
        for e in model.outgoing(nid):
            if e.target in indegree:
                indegree[e.target] -= 1
                if indegree[e.target] == 0:
                    ready.append(e.target)
                    changed = True
        if changed:
            ready.sort(key=order_index.get)
    if len(out) != len(model.nodes):
        raise StructureError("cycle detected")
    return out


def _reachable(model: ActivityModel, start: str, live_edges: set[str]) -> set[str]:
    seen = {start}
    stack = [start]
    while stack:
        nid = stack.pop()
        for e in model.outgoing(nid):
            if e.id in live_edges and e.target not in seen:
                seen.add(e.target)
                stack.append(e.target)
    return seen


class _View:
    """Live subgraph of a model under forced decision choices."""

    def __init__(self, model: ActivityModel, forced: Mapping[str, str]):
        self.model = model
        self.forced = dict(forced)  # decision id -> chosen edge id
        live: set[str] = set()
        initial = model.nodes_of_kind(INITIAL)
        if not initial:
            raise StructureError("no initial node")
        seen = {initial[0].id}
        stack = [initial[0].id]
        while stack:
            nid = stack.pop()
            node = model.node(nid)
            outs = model.outgoing(nid)
            if node.kind == DECISION and nid in self.forced:
                outs = [e for e in outs if e.id == self.forced[nid]]
            for e in outs:
                live.add(e.id)
                if e.target not in seen:
                    seen.add(e.target)
                    stack.append(e.target)
        self.live_edges = live
        self.live_nodes = seen

    def child(self, decision_id: str, edge_id: str) -> "_View":
        forced = dict(self.forced)
        forced[decision_id] = edge_id
        return _View(self.model, forced)

    def out_edges(self, node_id: str) -> list[ActivityEdge]:
        node = self.model.node(node_id)
        outs = [e for e in self.model.outgoing(node_id) if e.id in self.live_edges]
        if node.kind == DECISION and node_id in self.forced:
            outs = [e for e in outs if e.id == self.forced[node_id]]
        return outs

    def in_edges(self, node_id: str) -> list[ActivityEdge]:
        return [e for e in self.model.incoming(node_id) if e.id in self.live_edges]

    def strict_postdominators(self) -> dict[str, set[str]]:
        order = [n for n in topological_order(self.model) if n in self.live_nodes]
        pdom: dict[str, set[str]] = {}
        for nid in reversed(order):
            outs = self.out_edges(nid)
            if not outs:
                pdom[nid] = {nid}
                continue
            acc: Optional[set[str]] = None
            for e in outs:
                succ = pdom[e.target]
                acc = set(succ) if acc is None else acc & succ
            acc = acc or set()
            acc.add(nid)
            pdom[nid] = acc
        return pdom

    def convergence(self, node_id: str) -> Optional[str]:
        """Nearest node every live path from node_id passes through."""
        pdom = self.strict_postdominators()
        candidates = pdom.get(node_id, set()) - {node_id}
        if not candidates:
            return None
        topo = {n: i for i, n in enumerate(topological_order(self.model))}
        return min(candidates, key=lambda n: topo[n])


# ---------------------------------------------------------------------------
# Flow structure (the shared backbone for regions and the FPC build)


@dataclass(frozen=True)
class Act:
    action: str


@dataclass(frozen=True)
class Conc:
    fork: str
    join: str
    branches: tuple[tuple, ...]  # tuple of element tuples


@dataclass(frozen=True)
class Excl:
    decision: str
    convergence: str
    branches: tuple[tuple[str, tuple], ...]  # (guard id, element tuple)


def _walk(view: _View, start: str, stop: Optional[str]) -> tuple:
    """Walk from node `start` to `stop` (exclusive), structuring regions.

    Returns the element tuple.  Raises StructureError for anything that does
    not decompose into properly scoped fork/join and decision/merge regions.
    """
    model = view.model
    elems: list = []
    pos = start
    while True:
        if pos == stop:
            return tuple(elems)
        node = model.node(pos)
        if node.kind == FINAL:
            if stop is None:
                return tuple(elems)
            raise StructureError(f"flow escapes its region at final node {pos}")
        if node.kind == INITIAL:
            outs = view.out_edges(pos)
            if len(outs) != 1:
                raise StructureError(f"initial node {pos} must have one outgoing edge")
            pos = outs[0].target
        elif node.kind == ACTION:
            elems.append(Act(pos))
            outs = view.out_edges(pos)
            if len(outs) != 1:
                raise StructureError(f"action {pos} must have one outgoing edge")
            pos = outs[0].target
        elif node.kind == MERGE:
            ins = view.in_edges(pos)
            if len(ins) != 1:
                raise StructureError(f"merge {pos} is not closed by a matching decision")
            outs = view.out_edges(pos)
            if len(outs) != 1:
                raise StructureError(f"merge {pos} must have one outgoing edge")
            pos = outs[0].target
        elif node.kind == JOIN:
            raise StructureError(f"join {pos} is not closed by a matching fork")
        elif node.kind == FORK:
            conv = view.convergence(pos)
            if conv is None or model.node(conv).kind != JOIN:
                raise StructureError(f"unpaired fork {pos}")
            if conv == stop:
                raise StructureError(f"fork {pos} leaks into the enclosing region")
            outs = view.out_edges(pos)
            branches = tuple(_walk(view, e.target, conv) for e in outs)
            join_ins = view.in_edges(conv)
            if len(join_ins) != len(outs):
                raise StructureError(f"unpaired fork {pos}: join {conv} arity mismatch")
            elems.append(Conc(fork=pos, join=conv, branches=branches))
            join_outs = view.out_edges(conv)
            if len(join_outs) != 1:
                raise StructureError(f"join {conv} must have one outgoing edge")
            pos = join_outs[0].target
        elif node.kind == DECISION:
            conv = view.convergence(pos)
            if conv is None or model.node(conv).kind != MERGE:
                raise StructureError(f"decision {pos} does not reconverge at a merge")
            outs = view.out_edges(pos)
            branches = []
            for e in outs:
                if e.guard is None:
                    raise StructureError(f"decision {pos} edge {e.id} has no guard")
                sub = view.child(pos, e.id)
                branches.append((e.guard.id, _walk(sub, e.target, conv)))
            elems.append(Excl(decision=pos, convergence=conv, branches=tuple(branches)))
            if conv == stop:
                pos = conv
            else:
                conv_outs = view.out_edges(conv)
                if len(conv_outs) != 1:
                    raise StructureError(f"merge {conv} must have one outgoing edge")
                pos = conv_outs[0].target
        else:
            raise StructureError(f"unexpected node kind {node.kind} at {pos}")


def parse_flow(model: ActivityModel) -> tuple:
    """Structure the whole model into a sequence of Act/Conc/Excl elements."""
    view = _View(model, {})
    initials = model.nodes_of_kind(INITIAL)
    if len(initials) != 1:
        raise StructureError("model must have exactly one initial node")
    return _walk(view, initials[0].id, None)


# ---------------------------------------------------------------------------
# Region map


@dataclass(frozen=True)
class ConcurrentRegion:
    fork: str
    join: str
    branches: tuple[tuple[str, ...], ...]
    parent: Optional[str] = None


@dataclass(frozen=True)
class ExclusiveRegion:
    decision: str
    merge: str
    branches: tuple[tuple[str, tuple[str, ...]], ...]  # (guard id, node ids)
    shared: tuple[str, ...] = ()
    parent: Optional[str] = None


@dataclass(frozen=True)
class RegionMap:
    concurrent_regions: tuple[ConcurrentRegion, ...] = ()
    exclusive_regions: tuple[ExclusiveRegion, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.concurrent_regions and not self.exclusive_regions


def _interior(view: _View, start: str, conv: str) -> set[str]:
    fwd = _reachable(view.model, start, view.live_edges)
    # restrict to nodes that can reach conv without passing beyond it
    back: set[str] = {conv}
    changed = True
    while changed:
        changed = False
        for e in view.model.edges:
            if e.id in view.live_edges and e.target in back and e.source not in back:
                back.add(e.source)
                changed = True
    return (fwd & back) - {start, conv}


def _lifo_pairings(model: ActivityModel, scopes: list[set[str]]) -> dict[str, str]:
    """Pair each decision with a merge, LIFO per concurrency scope.

    Raises StructureError when no 1:1 decision/merge matching exists.
    """
    topo = topological_order(model)
    pairs: dict[str, str] = {}
    for scope in scopes:
        stack: list[str] = []
        for nid in topo:
            if nid not in scope:
                continue
            kind = model.node(nid).kind
            if kind == DECISION:
                stack.append(nid)
            elif kind == MERGE:
                if not stack:
                    raise StructureError(f"merge {nid} has no matching decision")
                pairs[stack.pop()] = nid
        if stack:
            raise StructureError(f"decision {stack[-1]} shares a merge with another decision")
    return pairs


def _conc_scopes(model: ActivityModel, elems: tuple, parent_nodes: set[str], scopes: list[set[str]]) -> None:
    for el in elems:
        if isinstance(el, Conc):
            for branch in el.branches:
                branch_nodes: set[str] = set()
                _collect_nodes(branch, branch_nodes)
                parent_nodes -= branch_nodes
                scopes.append(branch_nodes)
                _conc_scopes(model, branch, branch_nodes, scopes)
        elif isinstance(el, Excl):
            for _, branch in el.branches:
                _conc_scopes(model, branch, parent_nodes, scopes)


def _collect_nodes(elems: tuple, into: set[str]) -> None:
    for el in elems:
        if isinstance(el, Act):
            into.add(el.action)
        elif isinstance(el, Conc):
            into.add(el.fork)
            into.add(el.join)
            for b in el.branches:
                _collect_nodes(b, into)
        elif isinstance(el, Excl):
            into.add(el.decision)
            into.add(el.convergence)
            for _, b in el.branches:
                _collect_nodes(b, into)


def pair_control_nodes(model: ActivityModel) -> RegionMap:
    """Match forks with joins and decisions with merges; record memberships.

    Decisions and merges must pair 1:1 within each concurrency scope (stack
    discipline in topological order).  Branch membership is computed from
    guard projections; nodes reachable under several guards of one decision
    are reported in `shared` (quasi-structured merges).
    Raises StructureError for ill-structured regions.
    """
    flow = parse_flow(model)

    all_nodes = {n.id for n in model.nodes}
    scopes = [set(all_nodes)]
    _conc_scopes(model, flow, scopes[0], scopes)
    decision_pairs = _lifo_pairings(model, scopes)

    merges = [n.id for n in model.nodes_of_kind(MERGE)]
    if len(merges) != len(decision_pairs):
        extra = set(merges) - set(decision_pairs.values())
        raise StructureError(f"merge {sorted(extra)[0]} has no matching decision")

    concurrent: list[ConcurrentRegion] = []
    exclusive: list[ExclusiveRegion] = []

    def visit(elems: tuple, view: _View, parent: Optional[str]) -> None:
        for el in elems:
            if isinstance(el, Conc):
                branch_ids = []
                for branch in el.branches:
                    nodes: set[str] = set()
                    _collect_nodes(branch, nodes)
                    branch_ids.append(tuple(sorted(nodes, key=_decl_index(model))))
                concurrent.append(
                    ConcurrentRegion(fork=el.fork, join=el.join, branches=tuple(branch_ids), parent=parent)
                )
                for branch in el.branches:
                    visit(branch, view, el.fork)
            elif isinstance(el, Excl):
                interior = _interior(view, el.decision, el.convergence)
                guard_edges = {e.guard.id: e for e in view.out_edges(el.decision)}
                reach = {
                    gid: _reachable(view.model, e.target, view.child(el.decision, e.id).live_edges)
                    for gid, e in guard_edges.items()
                }
                branch_ids = []
                claimed: set[str] = set()
                for gid, _branch in el.branches:
                    exclusive_nodes = reach[gid] & interior
                    for other, r in reach.items():
                        if other != gid:
                            exclusive_nodes -= r
                    claimed |= exclusive_nodes
                    branch_ids.append((gid, tuple(sorted(exclusive_nodes, key=_decl_index(model)))))
                shared = tuple(sorted(interior - claimed, key=_decl_index(model)))
                exclusive.append(
                    ExclusiveRegion(
                        decision=el.decision,
                        merge=decision_pairs[el.decision],
                        branches=tuple(branch_ids),
                        shared=shared,
                        parent=parent,
                    )
                )
                for gid, branch in el.branches:
                    visit(branch, view.child(el.decision, guard_edges[gid].id), el.decision)

    visit(flow, _View(model, {}), None)
    return RegionMap(concurrent_regions=tuple(concurrent), exclusive_regions=tuple(exclusive))


def _decl_index(model: ActivityModel):
    index = {n.id: i for i, n in enumerate(model.nodes)}
    return index.get


# ---------------------------------------------------------------------------
# Metamodel validation


_ARITY = {
    INITIAL: ((0, 0), (1, 1)),
    FINAL: ((1, 1), (0, 0)),
    ACTION: ((1, 1), (1, 1)),
    FORK: ((1, 1), (2, None)),
    JOIN: ((2, None), (1, 1)),
    DECISION: ((1, 1), (2, None)),
    MERGE: ((2, None), (1, 1)),
}


def validate_ram(model: ActivityModel) -> ValidationReport:
    """Check a model against the reduced activity metamodel rules.

    Violations are report entries, never exceptions; an empty report means
    the model is well-formed, acyclic, fully reachable, and decomposes into
    properly paired regions.
    """
    violations: list[Violation] = []
    ids = [n.id for n in model.nodes]
    dup = {i for i in ids if ids.count(i) > 1}
    for d in sorted(dup):
        violations.append(Violation("duplicate-id", f"node id {d} declared more than once", d))

    known = set(ids)
    for e in model.edges:
        for ref in (e.source, e.target):
            if ref not in known:
                violations.append(Violation("dangling-edge", f"edge {e.id} references unknown node {ref}", e.id))
    if any(v.code == "dangling-edge" or v.code == "duplicate-id" for v in violations):
        return ValidationReport(tuple(violations))

    initials = model.nodes_of_kind(INITIAL)
    finals = model.nodes_of_kind(FINAL)
    if len(initials) != 1:
        code = "multiple-initial" if len(initials) > 1 else "missing-initial"
        violations.append(Violation(code, f"model has {len(initials)} initial nodes", model.name))
    if len(finals) != 1:
        code = "multiple-final" if len(finals) > 1 else "missing-final"
        violations.append(Violation(code, f"model has {len(finals)} final nodes", model.name))

    for node in model.nodes:
        (in_lo, in_hi), (out_lo, out_hi) = _ARITY[node.kind]
        n_in = len(model.incoming(node.id))
        n_out = len(model.outgoing(node.id))
        if n_in < in_lo or (in_hi is not None and n_in > in_hi):
            code = "multi-in-action" if node.kind == ACTION and n_in > 1 else f"{node.kind}-arity"
            violations.append(Violation(code, f"{node.kind} {node.id} has {n_in} incoming edges", node.id))
        if n_out < out_lo or (out_hi is not None and n_out > out_hi):
            violations.append(Violation(f"{node.kind}-arity", f"{node.kind} {node.id} has {n_out} outgoing edges", node.id))

    for e in model.edges:
        src_kind = model.node(e.source).kind
        if e.guard is not None and src_kind != DECISION:
            violations.append(Violation("guard-unexpected", f"edge {e.id} from {src_kind} carries a guard", e.id))
        if e.guard is None and src_kind == DECISION:
            violations.append(Violation("guard-missing", f"decision edge {e.id} has no guard", e.id))
    for node in model.nodes_of_kind(DECISION):
        guards = [g.id for g in model.guards_of(node.id)]
        for g in sorted({g for g in guards if guards.count(g) > 1}):
            violations.append(Violation("guard-duplicate", f"guard {g} appears on several edges of decision {node.id}", node.id))

    try:
        topological_order(model)
    except StructureError:
        violations.append(Violation("cycle", "cycle detected", model.name))
        return ValidationReport(tuple(violations))

    if len(initials) == 1 and len(finals) == 1:
        live = {e.id for e in model.edges}
        fwd = _reachable(model, initials[0].id, live)
        for node in model.nodes:
            if node.id not in fwd:
                violations.append(Violation("unreachable", f"node {node.id} is unreachable from the initial node", node.id))
        back = {finals[0].id}
        changed = True
        while changed:
            changed = False
            for e in model.edges:
                if e.target in back and e.source not in back:
                    back.add(e.source)
                    changed = True
        for node in model.nodes:
            if node.id not in back and node.id in fwd:
                violations.append(Violation("cannot-reach-final", f"node {node.id} cannot reach the final node", node.id))

    if not violations:
        try:
            pair_control_nodes(model)
        except StructureError as err:
            msg = str(err)
            if "unpaired fork" in msg or "join" in msg:
                code = "unpaired-fork"
            elif "shares a merge" in msg or "no matching decision" in msg:
                code = "shared-merge"
            else:
                code = "ill-structured"
            violations.append(Violation(code, msg, model.name))

    return ValidationReport(tuple(violations))

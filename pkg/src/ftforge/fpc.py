"""Fault propagation chains built from validated activity models.

A chain is a sequence of fault events joined by implication edges.  Forks
become bifurcation/convergence over concurrent sub-chains.  Decision/merge
regions contract into a single multi-member fault event when every branch
holds exactly one plain action; otherwise the region splits into exclusive,
condition-annotated alternatives (one sub-chain per guard), which keeps
nested structures analyzable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Optional

from . import activity
from .activity import ActivityModel, RegionMap, StructureError
from .logic import (
    CmfFormula,
    ExclusiveDisjunction,
    FaultEvent,
    FaultFormula,
    MaterialImplication,
    single,
)

INIT = "init"
END = "end"

CONCURRENT = "concurrent"
EXCLUSIVE = "exclusive"


@dataclass(frozen=True)
class EvElem:
    """One event along a chain; `guards` maps member actions to their
    conditions when the event is contracted."""

    event: FaultEvent
    guards: Optional[tuple[tuple[str, str], ...]] = None  # (action, guard id)


@dataclass(frozen=True)
class ConcElem:
    fork: str
    branches: tuple[tuple, ...]


@dataclass(frozen=True)
class SplitElem:
    decision: str
    alternatives: tuple[tuple[str, tuple], ...]  # (guard id, chain)


Chain = tuple


@dataclass(frozen=True)
class FpcEdge:
    source: str
    target: str
    condition: Optional[str] = None
    region: Optional[tuple[str, str]] = None  # (kind, owning control node)


@dataclass(frozen=True)
class TraceLink:
    source: str
    target: str
    relation: str


@dataclass(frozen=True)
class FpcGraph:
    events: tuple[FaultEvent, ...]
    edges: tuple[FpcEdge, ...]
    structure: Chain
    action_events: Mapping[str, tuple[str, ...]]
    decision_guards: Mapping[str, tuple[str, ...]]
    action_labels: Mapping[str, str] = field(default_factory=dict)
    guard_labels: Mapping[str, str] = field(default_factory=dict)
    external_actions: tuple[str, ...] = ()
    trace: tuple[TraceLink, ...] = ()

    def event_named(self, name: str) -> FaultEvent:
        for ev in self.events:
            if ev.name == name:
                return ev
        raise KeyError(name)

    @property
    def event_names(self) -> list[str]:
        return [ev.name for ev in self.events]

    def region_tags(self) -> dict[tuple[str, str], Optional[tuple[str, str]]]:
        return {(e.source, e.target): e.region for e in self.edges}


# ---------------------------------------------------------------------------
# Structure from the activity flow tree


def _contractible(el: activity.Excl) -> bool:
    return all(
        len(branch) == 1 and isinstance(branch[0], activity.Act) for _, branch in el.branches
    )


def _convert(elems: tuple) -> Chain:
    chain: list = []
    for el in elems:
        if isinstance(el, activity.Act):
            chain.append(EvElem(single(el.action)))
        elif isinstance(el, activity.Conc):
            chain.append(ConcElem(el.fork, tuple(_convert(b) for b in el.branches)))
        elif isinstance(el, activity.Excl):
            if _contractible(el):
                guards = tuple((branch[0].action, gid) for gid, branch in el.branches)
                members = frozenset(a for a, _ in guards)
                chain.append(EvElem(FaultEvent(members), guards=guards))
            else:
                alts = tuple((gid, _convert(branch)) for gid, branch in el.branches)
                chain.append(SplitElem(el.decision, alts))
        else:
            raise StructureError(f"unknown flow element {el!r}")
    return tuple(chain)


def split_decisions(chain: Chain) -> list[SplitElem]:
    out: list[SplitElem] = []
    for el in chain:
        if isinstance(el, SplitElem):
            out.append(el)
            for _, alt in el.alternatives:
                out.extend(split_decisions(alt))
        elif isinstance(el, ConcElem):
            for b in el.branches:
                out.extend(split_decisions(b))
    return out


# ---------------------------------------------------------------------------
# Graph emission


class _Emitter:
    def __init__(self, model: ActivityModel):
        self.model = model
        self.events: list[FaultEvent] = []
        self.guard_maps: dict[str, tuple[tuple[str, str], ...]] = {}
        self.edges: list[FpcEdge] = []
        self.seen_edges: set[tuple[str, str, Optional[str]]] = set()
        self.trace: list[TraceLink] = []

    def add_event(self, el: EvElem) -> str:
        name = el.event.name
        if all(ev.name != name for ev in self.events):
            self.events.append(el.event)
            if el.guards is not None:
                self.guard_maps[name] = el.guards
            for action in sorted(el.event.members):
                self.trace.append(TraceLink(action, f"fpc:{name}", "contrapositive"))
        return name

    def add_edge(self, src: str, dst: str, cond: Optional[str], region) -> None:
        key = (src, dst, cond)
        if key in self.seen_edges:
            return
        self.seen_edges.add(key)
        self.edges.append(FpcEdge(src, dst, condition=cond, region=region))
        anchor = self._edge_anchor(dst)
        self.trace.append(TraceLink(anchor, f"fpc:{src}->{dst}", "contrapositive"))

    def _edge_anchor(self, dst: str) -> str:
        if dst == END:
            finals = self.model.nodes_of_kind(activity.FINAL)
            return finals[0].id if finals else END
        for ev in self.events:
            if ev.name == dst:
                if ev.contracted:
                    return min(sorted(ev.members))
                action = next(iter(ev.members))
                ins = self.model.incoming(action)
                return ins[0].id if ins else action
        return dst

    def emit(self, chain: Chain, tails: list[tuple[str, Optional[str]]], region) -> list[tuple[str, Optional[str]]]:
        for el in chain:
            if isinstance(el, EvElem):
                key = self.add_event(el)
                for src, cond in tails:
                    self.add_edge(src, key, cond, region)
                tails = [(key, None)]
            elif isinstance(el, ConcElem):
                tag = (CONCURRENT, el.fork)
                merged: list[tuple[str, Optional[str]]] = []
                for branch in el.branches:
                    for t in self.emit(branch, list(tails), tag):
                        if t not in merged:
                            merged.append(t)
                tails = merged
            elif isinstance(el, SplitElem):
                tag = (EXCLUSIVE, el.decision)
                merged = []
                for gid, alt in el.alternatives:
                    conditioned = [(src, gid) for src, _ in tails]
                    outs = self.emit(alt, conditioned, tag) if alt else conditioned
                    for t in outs:
                        if t not in merged:
                            merged.append(t)
                tails = merged
        return tails


def build_fpc(model: ActivityModel, regions: Optional[RegionMap] = None) -> FpcGraph:
    """Transform a validated model into its fault propagation chain.

    `regions` is accepted for pipeline symmetry; the flow structure is
    recomputed here.  Raises StructureError on ill-structured input.
    """
    del regions
    flow = activity.parse_flow(model)
    chain = _convert(flow)

    emitter = _Emitter(model)
    initials = model.nodes_of_kind(activity.INITIAL)
    if initials:
        emitter.trace.append(TraceLink(initials[0].id, f"fpc:{INIT}", "contrapositive"))
    finals = model.nodes_of_kind(activity.FINAL)
    if finals:
        emitter.trace.append(TraceLink(finals[0].id, f"fpc:{END}", "contrapositive"))
    tails = emitter.emit(chain, [(INIT, None)], None)
    for src, cond in tails:
        emitter.add_edge(src, END, cond, None)

    action_events: dict[str, list[str]] = {}
    for ev in emitter.events:
        for action in ev.members:
            action_events.setdefault(action, []).append(ev.name)
    decision_guards = {d: tuple(g.id for g in model.guards_of(d)) for d in
                       (n.id for n in model.nodes_of_kind(activity.DECISION))}
    guard_owners = model.guard_decisions()
    for name, guards in emitter.guard_maps.items():
        decision = guard_owners.get(guards[0][1])
        if decision is not None:
            emitter.trace.append(TraceLink(decision, f"fpc:{name}", "contrapositive"))

    lanes = dict(model.partitions)
    home = lanes.get(initials[0].id) if initials else None
    external = tuple(
        sorted(a.id for a in model.actions if lanes and lanes.get(a.id, home) != home)
    )
    guard_labels = {}
    for e in model.edges:
        if e.guard is not None:
            guard_labels[e.guard.id] = e.guard.label
    return FpcGraph(
        events=tuple(emitter.events),
        edges=tuple(emitter.edges),
        structure=chain,
        action_events={a: tuple(sorted(v)) for a, v in sorted(action_events.items())},
        decision_guards=decision_guards,
        action_labels={a.id: a.label for a in model.actions},
        guard_labels=guard_labels,
        external_actions=external,
        trace=tuple(emitter.trace),
    )


# ---------------------------------------------------------------------------
# Formula extraction


def _inline_units(chain: Chain, tails: list[FaultEvent], combo: Mapping[str, str], units: list[MaterialImplication]) -> list[FaultEvent]:
    i = 0
    elems = list(chain)
    while i < len(elems):
        el = elems[i]
        if isinstance(el, EvElem):
            for t in tails:
                units.append(MaterialImplication(t, el.event))
            tails = [el.event]
            i += 1
        elif isinstance(el, ConcElem):
            following = elems[i + 1] if i + 1 < len(elems) and isinstance(elems[i + 1], EvElem) else None
            merged: list[FaultEvent] = []
            for branch in el.branches:
                branch_tails = _inline_units(branch, list(tails), combo, units)
                if following is not None:
                    for t in branch_tails:
                        units.append(MaterialImplication(t, following.event))
                else:
                    merged.extend(t for t in branch_tails if t not in merged)
            if following is not None:
                tails = [following.event]
                i += 2
            else:
                tails = merged
                i += 1
        elif isinstance(el, SplitElem):
            chosen = dict(el.alternatives)[combo[el.decision]]
            tails = _inline_units(chosen, tails, combo, units)
            i += 1
        else:
            i += 1
    return tails


def fpc_to_formula(graph: FpcGraph) -> FaultFormula:
    """Conjunction of implication units; exclusive splits disjoin complete
    alternative chains."""
    splits = split_decisions(graph.structure)
    if not splits:
        units: list[MaterialImplication] = []
        _inline_units(graph.structure, [], {}, units)
        return CmfFormula(tuple(units))
    choice_lists = [[gid for gid, _ in s.alternatives] for s in splits]
    names = [s.decision for s in splits]
    alternatives: list[CmfFormula] = []
    for combo_values in itertools.product(*choice_lists):
        combo = dict(zip(names, combo_values))
        units = []
        _inline_units(graph.structure, [], combo, units)
        formula = CmfFormula(tuple(units))
        if formula not in alternatives:
            alternatives.append(formula)
    if len(alternatives) == 1:
        return alternatives[0]
    return ExclusiveDisjunction(tuple(alternatives))


# ---------------------------------------------------------------------------
# DOT export


def to_dot(graph: FpcGraph, name: str = "fpc") -> str:
    """Graphviz rendering: events as boxes, implications as arrows,
    conditions as edge labels."""
    lines = [f"digraph {name} {{", "  rankdir=TB;"]
    lines.append('  "init" [shape=point, label=""];')
    lines.append('  "end" [shape=doublecircle, label="", width=0.15];')
    for ev in graph.events:
        lines.append(f'  "{ev.name}" [shape=box, label="{ev.name}"];')
    for edge in graph.edges:
        attrs = []
        if edge.condition:
            attrs.append(f'label="{edge.condition}"')
        if edge.region and edge.region[0] == EXCLUSIVE:
            attrs.append("style=dashed")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f'  "{edge.source}" -> "{edge.target}"{suffix};')
    lines.append("}")
    return "\n".join(lines) + "\n"

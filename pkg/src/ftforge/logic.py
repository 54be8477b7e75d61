"""Behavioral propositions, fault events, and the implication calculus.

Propositions read "action completed execution"; fault events are their
negations.  Structural patterns of a validated activity model map to
implication sentences, which contrapose into fault-propagation units and
normalize into conjunctive material form (conjunctions of implications
between fault events, possibly contracted).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from . import activity
from .activity import ActivityModel, RegionMap

MAX_TRUTH_TABLE_VARS = 20


class LogicError(Exception):
    pass


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class And:
    operands: tuple["Expr", ...]


@dataclass(frozen=True)
class Or:
    operands: tuple["Expr", ...]


@dataclass(frozen=True)
class Implies:
    antecedent: "Expr"
    consequent: "Expr"


Expr = Union[Var, Not, And, Or, Implies]


def var_names(expr: Expr) -> set[str]:
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, Not):
        return var_names(expr.operand)
    if isinstance(expr, (And, Or)):
        out: set[str] = set()
        for op in expr.operands:
            out |= var_names(op)
        return out
    return var_names(expr.antecedent) | var_names(expr.consequent)


def evaluate(expr: Expr, env: dict[str, bool]) -> bool:
    if isinstance(expr, Var):
        return env[expr.name]
    if isinstance(expr, Not):
        return not evaluate(expr.operand, env)
    if isinstance(expr, And):
        return all(evaluate(op, env) for op in expr.operands)
    if isinstance(expr, Or):
        return any(evaluate(op, env) for op in expr.operands)
    return (not evaluate(expr.antecedent, env)) or evaluate(expr.consequent, env)


def equivalent(a: Expr, b: Expr) -> bool:
    """Exhaustive truth-table equivalence over the union of variables."""
    names = sorted(var_names(a) | var_names(b))
    if len(names) > MAX_TRUTH_TABLE_VARS:
        raise LogicError(f"too many variables for exhaustive check: {len(names)}")
    for values in itertools.product((False, True), repeat=len(names)):
        env = dict(zip(names, values))
        if evaluate(a, env) != evaluate(b, env):
            return False
    return True


def conjoin(exprs: Sequence[Expr]) -> Expr:
    if len(exprs) == 1:
        return exprs[0]
    return And(tuple(exprs))


def _render(expr: Expr, top: bool = False) -> str:
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Not):
        return "!" + _render(expr.operand)
    if isinstance(expr, And):
        body = " & ".join(_render(op) for op in expr.operands)
        return body if top else f"({body})"
    if isinstance(expr, Or):
        body = " | ".join(_render(op) for op in expr.operands)
        return body if top else f"({body})"
    return f"{_render(expr.antecedent)} -> {_render(expr.consequent)}"


def to_str(expr: Expr) -> str:
    """Canonical ASCII rendering: `a1 -> (a2 & a3)`, `(p2 | p3) -> p1`."""
    return _render(expr, top=True)


# ---------------------------------------------------------------------------
# Naming


def action_index(action_id: str) -> str:
    """Proposition index for an action id; `A7` and `a7` both index as `7`."""
    if len(action_id) > 1 and action_id[0] in "Aa":
        return action_id[1:]
    return action_id


def _index_sort_key(index: str):
    return (0, int(index), "") if index.isdigit() else (1, 0, index)


def prop_name(action_id: str) -> str:
    return "p" + action_index(action_id)


def fault_name(action_id: str) -> str:
    return "a" + action_index(action_id)


# ---------------------------------------------------------------------------
# Domain values


@dataclass(frozen=True)
class Proposition:
    action: str
    negated: bool = False

    def expr(self) -> Expr:
        v = Var(prop_name(self.action))
        return Not(v) if self.negated else v


@dataclass(frozen=True)
class FaultEvent:
    """Fault of one action, or the conjunction of several (contracted)."""

    members: frozenset[str]

    def __post_init__(self):
        if not self.members:
            raise LogicError("fault event needs at least one member action")

    @property
    def contracted(self) -> bool:
        return len(self.members) > 1

    @property
    def indices(self) -> list[str]:
        return sorted((action_index(a) for a in self.members), key=_index_sort_key)

    @property
    def name(self) -> str:
        if self.contracted:
            return "a{" + ",".join(self.indices) + "}"
        return fault_name(next(iter(self.members)))

    def expr(self) -> Expr:
        """Atom for truth tables; `expand` substitutes member conjunctions."""
        return Var(self.name)

    def expanded(self) -> Expr:
        terms = tuple(Var("a" + i) for i in self.indices)
        return terms[0] if len(terms) == 1 else And(terms)


def single(action_id: str) -> FaultEvent:
    return FaultEvent(frozenset({action_id}))


@dataclass(frozen=True)
class MaterialImplication:
    antecedent: FaultEvent
    consequent: FaultEvent

    def __post_init__(self):
        if self.antecedent == self.consequent:
            raise LogicError("implication between identical fault events")

    def expr(self) -> Expr:
        return Implies(self.antecedent.expr(), self.consequent.expr())

    def __str__(self) -> str:
        return f"{self.antecedent.name} -> {self.consequent.name}"


@dataclass(frozen=True)
class LogicalModel:
    sentences: tuple[Implies, ...]

    def __str__(self) -> str:
        return "\n".join(to_str(s) for s in self.sentences)


@dataclass(frozen=True)
class CmfFormula:
    units: tuple[MaterialImplication, ...]

    def expr(self) -> Expr:
        return conjoin(tuple(u.expr() for u in self.units))

    def __str__(self) -> str:
        if len(self.units) == 1:
            return str(self.units[0])
        return " & ".join(f"({u})" for u in self.units)


@dataclass(frozen=True)
class ExclusiveDisjunction:
    """Disjunction of CMF alternatives (mutually exclusive fault chains)."""

    alternatives: tuple[CmfFormula, ...]

    def expr(self) -> Expr:
        return Or(tuple(alt.expr() for alt in self.alternatives))

    def __str__(self) -> str:
        return " | ".join(f"({alt})" for alt in self.alternatives)


FaultFormula = Union[CmfFormula, ExclusiveDisjunction]

CHAIN = "chain"
CMF_NOT_CHAIN = "cmf_not_chain"
NOT_CMF = "not_cmf"


def classify(formula: FaultFormula) -> str:
    """Chain when consecutive units link consequent-to-antecedent; a
    disjunction of chains is not in conjunctive material form at all."""
    if isinstance(formula, ExclusiveDisjunction):
        return NOT_CMF
    for left, right in zip(formula.units, formula.units[1:]):
        if left.consequent != right.antecedent:
            return CMF_NOT_CHAIN
    return CHAIN


# ---------------------------------------------------------------------------
# Deriving the logical model


def _first_action_exprs(model: ActivityModel, edge: activity.ActivityEdge) -> Optional[Expr]:
    """Proposition(s) of the nearest action(s) downstream of an edge.

    Control nodes resolve locally the way the structural mapping rules do:
    forks and decisions offer any of their branch heads, merges defer to the
    action after them, joins to the action after them.
    """
    node = model.node(edge.target)
    if node.kind == activity.ACTION:
        return Var(prop_name(node.id))
    if node.kind == activity.FINAL:
        return None
    if node.kind in (activity.FORK, activity.DECISION):
        parts = [_first_action_exprs(model, e) for e in model.outgoing(node.id)]
        parts = [p for p in parts if p is not None]
        if not parts:
            return None
        return parts[0] if len(parts) == 1 else Or(tuple(parts))
    # merge and join both defer to whatever follows them
    outs = model.outgoing(node.id)
    if not outs:
        return None
    return _first_action_exprs(model, outs[0])


def _last_action_exprs(model: ActivityModel, edge: activity.ActivityEdge) -> Optional[Expr]:
    """Proposition(s) of the nearest action(s) upstream of an edge."""
    node = model.node(edge.source)
    if node.kind == activity.ACTION:
        return Var(prop_name(node.id))
    if node.kind == activity.INITIAL:
        return None
    ins = model.incoming(node.id)
    parts = [_last_action_exprs(model, e) for e in ins]
    parts = [p for p in parts if p is not None]
    if not parts:
        return None
    if node.kind == activity.JOIN:
        return parts[0] if len(parts) == 1 else And(tuple(parts))
    if node.kind == activity.MERGE:
        return parts[0] if len(parts) == 1 else Or(tuple(parts))
    # fork and decision pass their single upstream through
    return parts[0]


def derive_logical_model(model: ActivityModel, regions: Optional[RegionMap] = None) -> LogicalModel:
    """Implication sentences for every structural pattern of the model.

    Series edges give `p_next -> p_prev`; forks and decisions give
    `(p_b1 | ... | p_bk) -> p_prev`; joins give `p_next -> (p_b1 & ...)`;
    merges give `p_next -> (p_b1 | ...)`.  The `regions` argument is
    accepted for pipeline symmetry; derivation itself is structural.
    """
    del regions
    sentences: list[Implies] = []
    for node in model.nodes:
        if node.kind == activity.ACTION:
            for e in model.outgoing(node.id):
                succ = model.node(e.target)
                if succ.kind == activity.ACTION:
                    sentences.append(Implies(Var(prop_name(succ.id)), Var(prop_name(node.id))))
        elif node.kind in (activity.FORK, activity.DECISION):
            ins = model.incoming(node.id)
            upstream = _last_action_exprs(model, ins[0]) if ins else None
            heads = [_first_action_exprs(model, e) for e in model.outgoing(node.id)]
            heads = [h for h in heads if h is not None]
            if upstream is None or not heads:
                continue
            lhs = heads[0] if len(heads) == 1 else Or(tuple(heads))
            sentences.append(Implies(lhs, upstream))
        elif node.kind in (activity.JOIN, activity.MERGE):
            tails = [_last_action_exprs(model, e) for e in model.incoming(node.id)]
            tails = [t for t in tails if t is not None]
            outs = model.outgoing(node.id)
            head = _first_action_exprs(model, outs[0]) if outs else None
            if head is None or not tails:
                continue
            op = And if node.kind == activity.JOIN else Or
            rhs = tails[0] if len(tails) == 1 else op(tuple(tails))
            for head_var in _atoms_of(head):
                sentences.append(Implies(head_var, rhs))
    return LogicalModel(tuple(sentences))


def _atoms_of(expr: Expr) -> list[Expr]:
    """Disjunctive heads each imply the upstream separately."""
    if isinstance(expr, Or):
        out: list[Expr] = []
        for op in expr.operands:
            out.extend(_atoms_of(op))
        return out
    return [expr]


# ---------------------------------------------------------------------------
# Contraposition


def _negate_to_faults(expr: Expr) -> Expr:
    """Negate a proposition expression, pushing negation down (De Morgan)
    and rewriting !p_i as the fault atom a_i."""
    if isinstance(expr, Var):
        if not expr.name.startswith("p"):
            raise LogicError(f"expected a proposition atom, got {expr.name}")
        return Var("a" + expr.name[1:])
    if isinstance(expr, Not):
        return _strip_negation(expr.operand)
    if isinstance(expr, And):
        return Or(tuple(_negate_to_faults(op) for op in expr.operands))
    if isinstance(expr, Or):
        return And(tuple(_negate_to_faults(op) for op in expr.operands))
    raise LogicError("cannot contrapose a nested implication")


def _strip_negation(expr: Expr) -> Expr:
    if isinstance(expr, Var):
        return expr
    raise LogicError("unsupported double negation shape")


def contrapose_sentence(sentence: Implies) -> Implies:
    return Implies(_negate_to_faults(sentence.consequent), _negate_to_faults(sentence.antecedent))


def contrapose(logical: LogicalModel) -> list[Implies]:
    """Contrapositive of every sentence, over fault-event atoms."""
    return [contrapose_sentence(s) for s in logical.sentences]


def _side_event(expr: Expr) -> FaultEvent:
    """A fault atom or conjunction of fault atoms, as one (possibly
    contracted) fault event."""
    if isinstance(expr, Var):
        if not expr.name.startswith("a"):
            raise LogicError(f"expected a fault atom, got {expr.name}")
        return FaultEvent(frozenset({"A" + expr.name[1:]}))
    if isinstance(expr, And):
        members: set[str] = set()
        for op in expr.operands:
            members |= _side_event(op).members
        return FaultEvent(frozenset(members))
    raise LogicError("side is not a conjunction of fault events")


def refactor_disjunction(implication: Implies) -> CmfFormula:
    """Rewrite a disjunctive antecedent into one implication per disjunct;
    conjunctive consequents split likewise.  Implications already in
    conjunctive material form pass through unchanged."""
    antecedents = (
        implication.antecedent.operands
        if isinstance(implication.antecedent, Or)
        else (implication.antecedent,)
    )
    consequents = (
        implication.consequent.operands
        if isinstance(implication.consequent, Or)
        else (implication.consequent,)
    )
    if len(consequents) > 1:
        raise LogicError("disjunctive consequent has no conjunctive material form")
    units = [
        MaterialImplication(_side_event(a), _side_event(implication.consequent))
        for a in antecedents
    ]
    return CmfFormula(tuple(units))


def split_conjunctive_consequent(implication: Implies) -> CmfFormula:
    """`a -> (b & c)` is equivalently `(a -> b) & (a -> c)`."""
    lhs = _side_event(implication.antecedent)
    if isinstance(implication.consequent, And):
        units = tuple(MaterialImplication(lhs, _side_event(op)) for op in implication.consequent.operands)
    else:
        units = (MaterialImplication(lhs, _side_event(implication.consequent)),)
    return CmfFormula(units)


def contract(events: Iterable[FaultEvent], region: Optional[Iterable[str]] = None) -> FaultEvent:
    """Join single fault events from one exclusive region into a contracted
    event (the conjunction of its members)."""
    events = list(events)
    if len(events) < 2:
        raise LogicError("contraction needs at least two fault events")
    members: set[str] = set()
    for ev in events:
        members |= ev.members
    if region is not None:
        allowed = set(region)
        outside = members - allowed
        if outside:
            raise LogicError(f"contraction across different regions: {sorted(outside)}")
    return FaultEvent(frozenset(members))


def expand_contractions(expr: Expr) -> Expr:
    """Replace every contracted fault atom `a{i,j}` by `(a_i & a_j)`."""
    if isinstance(expr, Var):
        if expr.name.startswith("a{"):
            indices = expr.name[2:-1].split(",")
            return And(tuple(Var("a" + i) for i in indices))
        return expr
    if isinstance(expr, Not):
        return Not(expand_contractions(expr.operand))
    if isinstance(expr, And):
        return And(tuple(expand_contractions(op) for op in expr.operands))
    if isinstance(expr, Or):
        return Or(tuple(expand_contractions(op) for op in expr.operands))
    return Implies(expand_contractions(expr.antecedent), expand_contractions(expr.consequent))


def faults_as_propositions(expr: Expr) -> Expr:
    """Rewrite fault atoms a_i as !p_i (after expanding contractions), for
    checking contraposition soundness on a shared variable set."""
    expr = expand_contractions(expr)

    def rewrite(e: Expr) -> Expr:
        if isinstance(e, Var):
            if e.name.startswith("a"):
                return Not(Var("p" + e.name[1:]))
            return e
        if isinstance(e, Not):
            return Not(rewrite(e.operand))
        if isinstance(e, And):
            return And(tuple(rewrite(op) for op in e.operands))
        if isinstance(e, Or):
            return Or(tuple(rewrite(op) for op in e.operands))
        return Implies(rewrite(e.antecedent), rewrite(e.consequent))

    return rewrite(expr)

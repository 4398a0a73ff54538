"""Causal rules, consistency checking, and induced-change accounting.

A causal rule is a directed constraint ``antecedent => consequent`` between
features; the antecedent is a conjunction of literals over upstream
features, the consequent a single literal over one downstream feature.
The rule graph must be acyclic.

A state is *causally consistent* when every rule whose antecedent holds
also has its consequent hold.  When comparing a candidate state against a
baseline, each changed feature is labeled either as a *direct* change
(initiated by the user, charged at full weight) or an *induced* one (made
to happen by a causal rule triggered by other changes, charged nothing).

Induced labeling semantics: a changed feature ``f`` is induced iff some
rule with consequent on ``f`` has (a) its antecedent holding on the
candidate, (b) at least one antecedent feature itself changed, and (c) its
consequent newly satisfied — holding on the candidate but not on the
baseline.  The labeling is computed as a fixpoint over rules in
topological order; because condition (b) only asks whether an antecedent
feature changed at all, the result is independent of rule order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO

from causalcf import errors
from causalcf.rules import DecisionRuleSet, Literal, validate_literal
from causalcf.schema import Schema, State, state_diff


@dataclass(frozen=True)
class CausalRule:
    antecedent: tuple[Literal, ...]
    consequent: Literal

    def __post_init__(self):
        ant = tuple(self.antecedent)
        if not ant:
            raise errors.InvalidRule("causal rule needs a nonempty antecedent")
        object.__setattr__(self, "antecedent", ant)
        if any(lit.feature == self.consequent.feature for lit in ant):
            raise errors.InvalidRule(
                f"feature {self.consequent.feature!r} appears in its own antecedent"
            )

    @property
    def antecedent_features(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(lit.feature for lit in self.antecedent))

    def triggered(self, state: State) -> bool:
        return all(lit.holds(state) for lit in self.antecedent)


@dataclass(frozen=True)
class CausalRuleSet:
    """An acyclic collection of causal rules with a derived topological order."""

    rules: tuple[CausalRule, ...]
    topo_order: tuple[str, ...] = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "topo_order", _topological_order(self.rules))

    def __len__(self) -> int:
        return len(self.rules)

    def rules_in_topo_order(self) -> tuple[CausalRule, ...]:
        rank = {name: i for i, name in enumerate(self.topo_order)}
        return tuple(sorted(self.rules, key=lambda r: rank[r.consequent.feature]))


def _topological_order(rules: tuple[CausalRule, ...]) -> tuple[str, ...]:
    """Kahn's algorithm over the antecedent -> consequent feature graph.

    Deterministic (name-ordered) output; raises CyclicGraphError naming one
    cycle when the graph is not a DAG.
    """
    succ: dict[str, set[str]] = {}
    indeg: dict[str, int] = {}
    for rule in rules:
        cons = rule.consequent.feature
        indeg.setdefault(cons, 0)
        for ant in rule.antecedent_features:
            indeg.setdefault(ant, 0)
            if cons not in succ.setdefault(ant, set()):
                succ[ant].add(cons)
                indeg[cons] += 1
    ready = sorted(n for n, d in indeg.items() if d == 0)
    order: list[str] = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        for nxt in sorted(succ.get(node, ())):
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                ready.append(nxt)
        ready.sort()
    if len(order) != len(indeg):
        leftover = {n for n in indeg if n not in order}
        cycle = _find_cycle(succ, leftover)
        raise errors.CyclicGraphError(cycle)
    return tuple(order)


def _find_cycle(succ: dict[str, set[str]], nodes: set[str]) -> list[str]:
    start = sorted(nodes)[0]
    path, seen = [start], {start}
    node = start
    while True:
        node = sorted(n for n in succ.get(node, ()) if n in nodes)[0]
        if node in seen:
            return path[path.index(node):] + [node]
        path.append(node)
        seen.add(node)


@dataclass(frozen=True)
class ChangeLedger:
    """Partition of the changed features into direct and induced, plus the
    weight vector with induced entries zeroed."""

    direct: frozenset[str]
    induced: frozenset[str]
    adjusted_weights: tuple[float, ...]


def is_causally_consistent(state: State, causal: CausalRuleSet) -> bool:
    """True iff every triggered rule's consequent holds on the state."""
    return all(
        not rule.triggered(state) or rule.consequent.holds(state)
        for rule in causal.rules
    )


def _check_weights(weights, schema: Schema) -> tuple[float, ...]:
    w = tuple(float(x) for x in weights)
    if len(w) != len(schema):
        raise errors.SchemaMismatch(f"{len(w)} weights for {len(schema)} features")
    if any(x < 0 for x in w):
        raise errors.NegativeWeight("feature weights must be nonnegative")
    return w


def _label_changes(s0: State, s: State, causal: CausalRuleSet) -> tuple[frozenset[str], frozenset[str]]:
    changed = state_diff(s0, s)
    induced: set[str] = set()
    rules = causal.rules_in_topo_order()
    progressed = True
    while progressed:
        progressed = False
        for rule in rules:
            feat = rule.consequent.feature
            if feat not in changed or feat in induced:
                continue
            if (
                rule.triggered(s)
                and any(a in changed for a in rule.antecedent_features)
                and rule.consequent.holds(s)
                and not rule.consequent.holds(s0)
            ):
                induced.add(feat)
                progressed = True
    return frozenset(changed - induced), frozenset(induced)


def classify_changes(s0: State, s: State, causal: CausalRuleSet, weights) -> ChangeLedger:
    """Label each changed feature direct or induced and zero induced weights.

    Requires ``s`` to be causally consistent; ``evaluate_candidate`` is the
    precondition-free variant used while filtering raw candidates.
    """
    w = _check_weights(weights, s.schema)
    if s0.schema != s.schema:
        raise errors.SchemaMismatch("states do not share a schema")
    if not is_causally_consistent(s, causal):
        raise errors.CausallyInconsistentInput(
            "classify_changes requires a causally consistent state"
        )
    direct, induced = _label_changes(s0, s, causal)
    adjusted = tuple(
        0.0 if name in induced else w[i] for i, name in enumerate(s.schema.names)
    )
    return ChangeLedger(direct, induced, adjusted)


def evaluate_candidate(
    s: State,
    causal: CausalRuleSet,
    decisions: DecisionRuleSet,
    weights,
    s0: State,
) -> tuple[bool, ChangeLedger]:
    """Full candidate check: ledger plus validity.

    Valid means causally consistent, not decision compliant, and with no
    non-actionable feature among the direct changes.  The ledger is
    computed first and returned even for invalid candidates.
    """
    w = _check_weights(weights, s.schema)
    if s0.schema != s.schema:
        raise errors.SchemaMismatch("states do not share a schema")
    direct, induced = _label_changes(s0, s, causal)
    adjusted = tuple(
        0.0 if name in induced else w[i] for i, name in enumerate(s.schema.names)
    )
    ledger = ChangeLedger(direct, induced, adjusted)
    actionable_ok = all(s.schema.feature(name).actionable for name in direct)
    valid = (
        is_causally_consistent(s, causal)
        and not decisions.compliant(s)
        and actionable_ok
    )
    return valid, ledger


def is_counterfactual(
    s: State,
    causal: CausalRuleSet,
    decisions: DecisionRuleSet,
    weights,
    s0: State,
) -> tuple[bool, tuple[float, ...]]:
    """Validity of ``s`` as a counterfactual for baseline ``s0``.

    Returns ``(valid, adjusted_weights)``; the weights have induced-change
    entries zeroed and are computed in both outcomes.
    """
    valid, ledger = evaluate_candidate(s, causal, decisions, weights, s0)
    return valid, ledger.adjusted_weights


# -- JSON causal rule files ---------------------------------------------------

_OP_ALIASES = {"eq": "eq", "==": "eq", "=": "eq", "neq": "neq", "!=": "neq",
               "le": "le", "<=": "le", "gt": "gt", ">": "gt", "in": "in"}


def _literal_from_json(entry: dict, schema: Schema) -> Literal:
    if not isinstance(entry, dict) or set(entry) != {"feature", "op", "value"}:
        raise errors.ParseError(f"bad causal literal {entry!r}")
    op = _OP_ALIASES.get(entry["op"])
    if op is None:
        raise errors.ParseError(f"unknown causal op {entry['op']!r}")
    value = tuple(entry["value"]) if op == "in" else entry["value"]
    lit = Literal(entry["feature"], op, value)
    try:
        validate_literal(lit, schema)
    except (errors.InvalidRule, errors.UnknownFeature) as exc:
        raise errors.ParseError(str(exc)) from exc
    return lit


def load_causal_rules(source: bytes | str | IO, schema: Schema) -> CausalRuleSet:
    """Parse a causal rule JSON file: a list of {"if": [...], "then": {...}}."""
    if not isinstance(source, (bytes, str)):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise errors.ParseError(f"causal rules are not valid JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise errors.ParseError("causal rule document must be a JSON list")
    rules = []
    for entry in doc:
        if not isinstance(entry, dict) or set(entry) != {"if", "then"}:
            raise errors.ParseError(f"bad causal rule entry {entry!r}")
        antecedent = tuple(_literal_from_json(e, schema) for e in entry["if"])
        consequent = _literal_from_json(entry["then"], schema)
        try:
            rules.append(CausalRule(antecedent, consequent))
        except errors.InvalidRule as exc:
            raise errors.ParseError(str(exc)) from exc
    return CausalRuleSet(tuple(rules))


def _literal_to_json(lit: Literal) -> dict:
    value = list(lit.value) if lit.op == "in" else lit.value
    return {"feature": lit.feature, "op": lit.op, "value": value}


def causal_rules_to_json(causal: CausalRuleSet) -> bytes:
    doc = [
        {
            "if": [_literal_to_json(lit) for lit in rule.antecedent],
            "then": _literal_to_json(rule.consequent),
        }
        for rule in causal.rules
    ]
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")

"""Flattening of schema + rule programs into the array form both search
kernels consume.

Layout notes:

* states are float64 vectors: numeric values verbatim, ordinal and
  categorical values as their index in the declared domain;
* literals are (feature, op-code, lo, hi) rows; eq/neq/le/gt use ``lo``
  only, ``in`` is the half-open interval lo < x <= hi on the encoded scale;
* decision rules form a node tree laid out breadth-first so each node's
  children occupy one contiguous span; a node fires when all its literals
  hold and none of its children fires; the first ``n_roots`` nodes are the
  top-level rules;
* causal rules are stored in topological order of their consequent feature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from causalcf.causal import CausalRuleSet
from causalcf.rules import DecisionRule, DecisionRuleSet, Literal
from causalcf.schema import Schema, State

OP_EQ, OP_NEQ, OP_LE, OP_GT, OP_IN = 0, 1, 2, 3, 4
_OP_CODE = {"eq": OP_EQ, "neq": OP_NEQ, "le": OP_LE, "gt": OP_GT, "in": OP_IN}
KIND_NUMERIC, KIND_ORDINAL, KIND_CATEGORICAL = 0, 1, 2
_KIND_CODE = {"numeric": KIND_NUMERIC, "ordinal": KIND_ORDINAL, "categorical": KIND_CATEGORICAL}


@dataclass
class SearchPlan:
    """Array form of one (schema, decision rules, causal rules, weights) bundle."""

    n_features: int
    kinds: np.ndarray        # int8[n]
    weights: np.ndarray      # float64[n]
    norm_range: np.ndarray   # float64[n]
    actionable: np.ndarray   # uint8[n]

    dl_feat: np.ndarray      # int32[L] decision literal pool
    dl_op: np.ndarray        # uint8[L]
    dl_lo: np.ndarray        # float64[L]
    dl_hi: np.ndarray        # float64[L]
    dn_lit_start: np.ndarray  # int32[N] decision nodes
    dn_lit_end: np.ndarray
    dn_child_start: np.ndarray
    dn_child_end: np.ndarray
    n_roots: int

    cl_feat: np.ndarray      # causal literal pool (same columns as dl_*)
    cl_op: np.ndarray
    cl_lo: np.ndarray
    cl_hi: np.ndarray
    cr_ant_start: np.ndarray  # int32[R] antecedent literal span
    cr_ant_end: np.ndarray
    cr_cons: np.ndarray       # int32[R] consequent literal index
    cr_cons_feat: np.ndarray  # int32[R]
    cr_antfeat_start: np.ndarray  # int32[R] span into antfeat
    cr_antfeat_end: np.ndarray
    antfeat: np.ndarray       # int32[A] flat antecedent feature indices


def _encode_literal(lit: Literal, schema: Schema) -> tuple[int, int, float, float]:
    feat = schema.feature(lit.feature)
    j = schema.index(lit.feature)
    if lit.op == "in":
        lo, hi = lit.value  # type: ignore[misc]
        return j, OP_IN, feat.encode(lo), feat.encode(hi)
    return j, _OP_CODE[lit.op], feat.encode(lit.value), 0.0


def _flatten_decision(rules: tuple[DecisionRule, ...], schema: Schema):
    lit_rows: list[tuple[int, int, float, float]] = []
    nodes: list[list[int]] = []  # [lit_start, lit_end, child_start, child_end]
    queue: list[DecisionRule] = list(rules)
    node_rules: list[DecisionRule] = list(rules)
    for _ in range(len(rules)):
        nodes.append([0, 0, 0, 0])
    i = 0
    while i < len(node_rules):
        rule = node_rules[i]
        start = len(lit_rows)
        lit_rows.extend(_encode_literal(lit, schema) for lit in rule.body)
        child_start = len(nodes)
        for ex in rule.exceptions:
            node_rules.append(ex)
            nodes.append([0, 0, 0, 0])
        nodes[i][0] = start
        nodes[i][1] = len(lit_rows)
        nodes[i][2] = child_start
        nodes[i][3] = child_start + len(rule.exceptions)
        i += 1
    return lit_rows, nodes


def build_plan(
    schema: Schema,
    decisions: DecisionRuleSet,
    causal: CausalRuleSet,
    weights,
) -> SearchPlan:
    n = len(schema)
    lit_rows, nodes = _flatten_decision(decisions.rules, schema)

    cl_rows: list[tuple[int, int, float, float]] = []
    cr_ant_start, cr_ant_end, cr_cons, cr_cons_feat = [], [], [], []
    cr_antfeat_start, cr_antfeat_end, antfeat = [], [], []
    for rule in causal.rules_in_topo_order():
        cr_ant_start.append(len(cl_rows))
        cl_rows.extend(_encode_literal(lit, schema) for lit in rule.antecedent)
        cr_ant_end.append(len(cl_rows))
        cr_cons.append(len(cl_rows))
        cl_rows.append(_encode_literal(rule.consequent, schema))
        cr_cons_feat.append(schema.index(rule.consequent.feature))
        cr_antfeat_start.append(len(antfeat))
        antfeat.extend(schema.index(name) for name in rule.antecedent_features)
        cr_antfeat_end.append(len(antfeat))

    def lit_arrays(rows):
        if rows:
            feat, op, lo, hi = zip(*rows)
        else:
            feat, op, lo, hi = (), (), (), ()
        return (
            np.array(feat, dtype=np.int32),
            np.array(op, dtype=np.uint8),
            np.array(lo, dtype=np.float64),
            np.array(hi, dtype=np.float64),
        )

    dl_feat, dl_op, dl_lo, dl_hi = lit_arrays(lit_rows)
    cl_feat, cl_op, cl_lo, cl_hi = lit_arrays(cl_rows)
    node_arr = np.array(nodes, dtype=np.int32).reshape(len(nodes), 4) if nodes else np.zeros((0, 4), np.int32)

    return SearchPlan(
        n_features=n,
        kinds=np.array([_KIND_CODE[f.kind] for f in schema], dtype=np.int8),
        weights=np.array([float(w) for w in weights], dtype=np.float64),
        norm_range=np.array([f.effective_norm_range for f in schema], dtype=np.float64),
        actionable=np.array([1 if f.actionable else 0 for f in schema], dtype=np.uint8),
        dl_feat=dl_feat, dl_op=dl_op, dl_lo=dl_lo, dl_hi=dl_hi,
        dn_lit_start=np.ascontiguousarray(node_arr[:, 0]),
        dn_lit_end=np.ascontiguousarray(node_arr[:, 1]),
        dn_child_start=np.ascontiguousarray(node_arr[:, 2]),
        dn_child_end=np.ascontiguousarray(node_arr[:, 3]),
        n_roots=len(decisions.rules),
        cl_feat=cl_feat, cl_op=cl_op, cl_lo=cl_lo, cl_hi=cl_hi,
        cr_ant_start=np.array(cr_ant_start, dtype=np.int32),
        cr_ant_end=np.array(cr_ant_end, dtype=np.int32),
        cr_cons=np.array(cr_cons, dtype=np.int32),
        cr_cons_feat=np.array(cr_cons_feat, dtype=np.int32),
        cr_antfeat_start=np.array(cr_antfeat_start, dtype=np.int32),
        cr_antfeat_end=np.array(cr_antfeat_end, dtype=np.int32),
        antfeat=np.array(antfeat, dtype=np.int32),
    )


def encode_states(schema: Schema, states) -> np.ndarray:
    """Encode states into the float64 matrix the kernels evaluate."""
    m = np.empty((len(states), len(schema)), dtype=np.float64)
    for i, state in enumerate(states):
        m[i, :] = state.encoded()
    return m


def encode_state(state: State) -> np.ndarray:
    return np.array(state.encoded(), dtype=np.float64)

"""Weighted L0/L1/L2 distance between states.

Per feature, with weight ``w`` and normalized delta ``d``:

* p=0 adds ``w`` when the feature changed at all;
* p=1 adds ``w * |d|``;
* p=2 adds ``w * d**2`` (a sum of squares; no square root is taken).

Numeric and ordinal deltas are the raw difference (value difference or
level-index distance) divided by the feature's ``norm_range``; categorical
deltas are 1 when the values differ, else 0.  A zero weight therefore
makes a feature's change free under every norm, which is how induced
changes are excluded from cost.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from causalcf import errors
from causalcf.schema import State

NORM_NAMES = {0: "L0", 1: "L1", 2: "L2"}


@dataclass(frozen=True)
class CostBreakdown:
    total: float
    per_feature: dict[str, float]
    norm: str

    def to_dict(self) -> dict:
        return {"norm": self.norm, "total": self.total, "per_feature": dict(self.per_feature)}

    def to_json(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")


def compute_weighted_lp(s: State, s_prime: State, weights, p: int) -> CostBreakdown:
    """Weighted Lp cost of transforming ``s`` into ``s_prime``.

    ``per_feature`` lists the contribution of every changed feature (zero
    entries included, so zero-weight changes are visible as free).
    """
    if s.schema != s_prime.schema:
        raise errors.SchemaMismatch("states do not share a schema")
    if p not in NORM_NAMES:
        raise errors.InvalidRule(f"norm parameter must be 0, 1 or 2, got {p!r}")
    w = tuple(float(x) for x in weights)
    if len(w) != len(s.schema):
        raise errors.SchemaMismatch(f"{len(w)} weights for {len(s.schema)} features")
    if any(x < 0 for x in w):
        raise errors.NegativeWeight("feature weights must be nonnegative")

    total = 0.0
    per_feature: dict[str, float] = {}
    for i, feat in enumerate(s.schema):
        a, b = s.values[i], s_prime.values[i]
        if a == b:
            continue
        if p == 0:
            contribution = w[i]
        else:
            if feat.kind == "categorical":
                delta = 1.0
            else:
                delta = (feat.encode(b) - feat.encode(a)) / feat.effective_norm_range
            contribution = w[i] * (abs(delta) if p == 1 else delta * delta)
        per_feature[feat.name] = contribution
        total += contribution
    return CostBreakdown(total, per_feature, NORM_NAMES[p])


def standard_cost(s: State, s_prime: State, schema_weights=None, p: int = 0) -> CostBreakdown:
    """Baseline cost that charges every changed feature its schema weight,
    with no discount for causally induced changes."""
    if schema_weights is None:
        schema_weights = s.schema.default_weights()
    return compute_weighted_lp(s, s_prime, schema_weights, p)

from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from causalcf import errors
from causalcf.causal import classify_changes
from causalcf.cost import compute_weighted_lp, standard_cost
from causalcf.schema import FeatureSchema, Schema, State, state_diff


def mixed_schema() -> Schema:
    return Schema(
        (
            FeatureSchema("color", "categorical", ("red", "green", "blue")),
            FeatureSchema("size", "ordinal", ("s", "m", "l", "xl")),
            FeatureSchema("price", "numeric", (0.0, 100.0), norm_range=10.0),
        )
    )


def count_charged(s0: State, s: State, weights) -> float:
    # independent oracle for L0: sum weights over changed features
    total = 0.0
    for name in state_diff(s0, s):
        total += weights[s0.schema.index(name)]
    return total


class TestLoanCosts:
    def test_adjusted_l0_charges_two_interventions(self, loan):
        john = loan.dataset.rows[0]
        goal = State(loan.schema, ("no_debt", 60000.0, 620.0))
        ledger = classify_changes(john, goal, loan.causal, loan.schema.default_weights())
        breakdown = compute_weighted_lp(john, goal, ledger.adjusted_weights, 0)
        assert breakdown.total == count_charged(john, goal, ledger.adjusted_weights) == 2.0
        assert breakdown.per_feature["credit"] == 0.0

    def test_unadjusted_l0_charges_three_changes(self, loan):
        john = loan.dataset.rows[0]
        goal = State(loan.schema, ("no_debt", 60000.0, 620.0))
        weights = loan.schema.default_weights()
        breakdown = standard_cost(john, goal, weights, 0)
        assert breakdown.total == count_charged(john, goal, weights) == 3.0

    def test_four_changes_one_induced_costs_4_vs_3(self):
        # the one-discounted-change pattern: standard 4, adjusted 3
        schema = Schema(tuple(FeatureSchema(f"f{i}", "categorical", ("0", "1")) for i in range(5)))
        s0 = State(schema, ("0",) * 5)
        s = State(schema, ("1", "1", "1", "1", "0"))
        weights = schema.default_weights()
        adjusted = tuple(0.0 if i == 2 else w for i, w in enumerate(weights))
        assert standard_cost(s0, s, weights, 0).total == 4.0
        assert compute_weighted_lp(s0, s, adjusted, 0).total == 3.0


class TestComputeWeightedLp:
    def test_identity_costs_nothing(self, loan):
        john = loan.dataset.rows[0]
        for p in (0, 1, 2):
            assert compute_weighted_lp(john, john, (3.0, 0.5, 2.0), p).total == 0.0

    def test_single_numeric_change_closed_forms(self):
        schema = mixed_schema()
        a = State(schema, ("red", "s", 20.0))
        b = State(schema, ("red", "s", 35.0))
        # delta = 15/10 = 1.5, weight 2
        w = (1.0, 1.0, 2.0)
        assert compute_weighted_lp(a, b, w, 0).total == 2.0
        assert compute_weighted_lp(a, b, w, 1).total == 2.0 * 1.5
        assert compute_weighted_lp(a, b, w, 2).total == 2.0 * 1.5 * 1.5

    def test_ordinal_delta_is_index_distance(self):
        schema = mixed_schema()
        a = State(schema, ("red", "s", 0.0))
        b = State(schema, ("red", "xl", 0.0))
        assert compute_weighted_lp(a, b, (1.0, 1.0, 1.0), 1).total == 3.0
        assert compute_weighted_lp(a, b, (1.0, 1.0, 1.0), 2).total == 9.0

    def test_categorical_distance_is_unit_for_all_norms(self):
        schema = mixed_schema()
        a = State(schema, ("red", "s", 0.0))
        b = State(schema, ("blue", "s", 0.0))
        for p in (0, 1, 2):
            assert compute_weighted_lp(a, b, (1.0, 1.0, 1.0), p).total == 1.0

    def test_l2_is_sum_of_squares_without_root(self):
        schema = mixed_schema()
        a = State(schema, ("red", "s", 0.0))
        b = State(schema, ("green", "l", 5.0))
        # contributions: cat 1, ord 2^2=4, num (0.5)^2=0.25
        assert compute_weighted_lp(a, b, (1.0, 1.0, 1.0), 2).total == 1.0 + 4.0 + 0.25

    def test_negative_weight_rejected(self, loan):
        john = loan.dataset.rows[0]
        with pytest.raises(errors.NegativeWeight):
            compute_weighted_lp(john, john, (-1.0, 1.0, 1.0), 0)

    def test_weight_arity_and_schema_checked(self, loan):
        john = loan.dataset.rows[0]
        with pytest.raises(errors.SchemaMismatch):
            compute_weighted_lp(john, john, (1.0,), 0)
        other = State(mixed_schema(), ("red", "s", 0.0))
        with pytest.raises(errors.SchemaMismatch):
            compute_weighted_lp(john, other, (1.0, 1.0, 1.0), 0)

    def test_invalid_norm_rejected(self, loan):
        john = loan.dataset.rows[0]
        with pytest.raises(errors.InvalidRule):
            compute_weighted_lp(john, john, (1.0, 1.0, 1.0), 3)

    def test_breakdown_serializes_to_json(self, loan):
        john = loan.dataset.rows[0]
        goal = State(loan.schema, ("no_debt", 60000.0, 620.0))
        doc = json.loads(compute_weighted_lp(john, goal, (1.0, 1.0, 1.0), 1).to_json())
        assert doc["norm"] == "L1"
        assert doc["total"] == pytest.approx(sum(doc["per_feature"].values()))


_states = st.tuples(
    st.sampled_from(["red", "green", "blue"]),
    st.sampled_from(["s", "m", "l", "xl"]),
    st.floats(0.0, 100.0, allow_nan=False),
)
_weights = st.tuples(
    st.floats(0.0, 5.0, allow_nan=False),
    st.floats(0.0, 5.0, allow_nan=False),
    st.floats(0.0, 5.0, allow_nan=False),
)


class TestProperties:
    @given(a=_states, b=_states, w=_weights, p=st.sampled_from([0, 1, 2]))
    def test_nonnegative_and_sums_match(self, a, b, w, p):
        schema = mixed_schema()
        breakdown = compute_weighted_lp(State(schema, a), State(schema, b), w, p)
        assert breakdown.total >= 0.0
        assert breakdown.total == pytest.approx(sum(breakdown.per_feature.values()), rel=1e-9)

    @given(a=_states, b=_states, p=st.sampled_from([0, 1, 2]))
    def test_zero_iff_no_positive_weight_change(self, a, b, p):
        schema = mixed_schema()
        sa, sb = State(schema, a), State(schema, b)
        total = compute_weighted_lp(sa, sb, (1.0, 1.0, 1.0), p).total
        assert (total == 0.0) == (not state_diff(sa, sb))

    @given(a=_states, b=_states, p=st.sampled_from([0, 1, 2]))
    def test_zero_weight_changes_are_free(self, a, b, p):
        schema = mixed_schema()
        sa, sb = State(schema, a), State(schema, b)
        # zero out every changed feature: the whole move becomes free
        w = tuple(0.0 if name in state_diff(sa, sb) else 1.0 for name in schema.names)
        assert compute_weighted_lp(sa, sb, w, p).total == 0.0

    @given(a=_states, b=_states, w=_weights, p=st.sampled_from([0, 1, 2]),
           zeroed=st.sets(st.integers(0, 2)))
    def test_adjusted_never_exceeds_standard(self, a, b, w, p, zeroed):
        schema = mixed_schema()
        sa, sb = State(schema, a), State(schema, b)
        adjusted = tuple(0.0 if i in zeroed else x for i, x in enumerate(w))
        assert (
            compute_weighted_lp(sa, sb, adjusted, p).total
            <= standard_cost(sa, sb, w, p).total
        )

    @given(a=_states, b=_states)
    def test_unit_weight_l0_counts_changes(self, a, b):
        schema = mixed_schema()
        sa, sb = State(schema, a), State(schema, b)
        assert compute_weighted_lp(sa, sb, (1.0, 1.0, 1.0), 0).total == len(state_diff(sa, sb))

from __future__ import annotations

import random
from itertools import chain, combinations

import pytest

from causalcf import errors
from causalcf.causal import (
    CausalRule,
    CausalRuleSet,
    causal_rules_to_json,
    classify_changes,
    is_causally_consistent,
    is_counterfactual,
    load_causal_rules,
)
from causalcf.rules import DecisionRule, DecisionRuleSet, Literal
from causalcf.schema import FeatureSchema, Schema, State, enumerate_states, state_diff
from causalcf.synth import random_world


def bool_schema(*names: str, nonactionable: tuple[str, ...] = ()) -> Schema:
    return Schema(
        tuple(
            FeatureSchema(n, "categorical", ("0", "1"), actionable=n not in nonactionable)
            for n in names
        )
    )


class TestConsistency:
    def test_debt_cleared_with_good_credit_is_consistent(self, loan):
        s1 = State(loan.schema, ("no_debt", 40000.0, 620.0))
        assert is_causally_consistent(s1, loan.causal)

    def test_debt_cleared_with_bad_credit_is_inconsistent(self, loan):
        s2 = State(loan.schema, ("no_debt", 40000.0, 400.0))
        assert not is_causally_consistent(s2, loan.causal)

    def test_empty_rule_set_accepts_everything(self):
        schema = bool_schema("a", "b")
        empty = CausalRuleSet(())
        assert all(is_causally_consistent(s, empty) for s in enumerate_states(schema))

    def test_adding_a_rule_never_repairs_inconsistency(self):
        # theta_C monotonicity over random rule sets on 4-feature schemas
        for seed in range(25):
            world = random_world(seed, max_states=200)
            rules = world.causal.rules
            if len(rules) < 2:
                continue
            smaller = CausalRuleSet(rules[:-1])
            for s in world.dataset.rows:
                if not is_causally_consistent(s, smaller):
                    assert not is_causally_consistent(s, world.causal)


class TestGraphValidation:
    def test_cycle_rejected_with_diagnostic(self):
        a_to_b = CausalRule((Literal("a", "eq", "1"),), Literal("b", "eq", "1"))
        b_to_a = CausalRule((Literal("b", "eq", "1"),), Literal("a", "eq", "1"))
        with pytest.raises(errors.CyclicGraphError) as exc:
            CausalRuleSet((a_to_b, b_to_a))
        assert "a" in exc.value.cycle and "b" in exc.value.cycle

    def test_self_dependency_rejected(self):
        with pytest.raises(errors.InvalidRule):
            CausalRule((Literal("a", "eq", "1"),), Literal("a", "eq", "0"))

    def test_topological_order_respects_edges(self):
        rules = CausalRuleSet(
            (
                CausalRule((Literal("a", "eq", "1"),), Literal("b", "eq", "1")),
                CausalRule((Literal("b", "eq", "1"),), Literal("c", "eq", "1")),
            )
        )
        order = rules.topo_order
        assert order.index("a") < order.index("b") < order.index("c")


def _induced_by_definition(s0: State, s: State, causal: CausalRuleSet) -> frozenset[str]:
    """Independent labeling oracle: enumerate subsets of the changed features
    and keep the ones closed under the induced-change definition."""
    changed = state_diff(s0, s)

    def condition(f: str) -> bool:
        return any(
            rule.consequent.feature == f
            and rule.triggered(s)
            and any(a in changed for a in rule.antecedent_features)
            and rule.consequent.holds(s)
            and not rule.consequent.holds(s0)
            for rule in causal.rules
        )

    matching = [
        frozenset(sub)
        for sub in chain.from_iterable(
            combinations(sorted(changed), r) for r in range(len(changed) + 1)
        )
        if frozenset(sub) == frozenset(f for f in changed if condition(f))
    ]
    assert len(matching) == 1
    return matching[0]


class TestClassifyChanges:
    def test_loan_scenario_ledger(self, loan):
        john = loan.dataset.rows[0]
        goal = State(loan.schema, ("no_debt", 60000.0, 620.0))
        ledger = classify_changes(john, goal, loan.causal, loan.schema.default_weights())
        assert ledger.direct == {"debt", "balance"}
        assert ledger.induced == {"credit"}
        assert ledger.adjusted_weights == (1.0, 1.0, 0.0)

    def test_no_rules_means_all_direct(self, loan):
        john = loan.dataset.rows[0]
        goal = State(loan.schema, ("no_debt", 60000.0, 620.0))
        ledger = classify_changes(john, goal, CausalRuleSet(()), loan.schema.default_weights())
        assert ledger.direct == {"debt", "balance", "credit"}
        assert ledger.induced == frozenset()
        assert ledger.adjusted_weights == (1.0, 1.0, 1.0)

    def test_two_link_chain_propagates(self):
        schema = bool_schema("a", "b", "c")
        causal = CausalRuleSet(
            (
                CausalRule((Literal("a", "eq", "1"),), Literal("b", "eq", "1")),
                CausalRule((Literal("b", "eq", "1"),), Literal("c", "eq", "1")),
            )
        )
        s0 = State(schema, ("0", "0", "0"))
        s = State(schema, ("1", "1", "1"))
        ledger = classify_changes(s0, s, causal, (1.0, 1.0, 1.0))
        assert ledger.direct == {"a"}
        assert ledger.induced == {"b", "c"}
        assert ledger.induced == _induced_by_definition(s0, s, causal)

    def test_consequent_already_satisfied_is_not_induced(self):
        # b=1 held before the intervention, so nothing was newly caused.
        schema = bool_schema("a", "b")
        causal = CausalRuleSet(
            (CausalRule((Literal("a", "eq", "1"),), Literal("b", "eq", "1")),)
        )
        s0 = State(schema, ("0", "1"))
        s = State(schema, ("1", "1"))
        ledger = classify_changes(s0, s, causal, (1.0, 1.0))
        assert ledger.direct == {"a"}
        assert ledger.induced == frozenset()

    def test_untriggered_rule_does_not_discount(self, loan):
        john = loan.dataset.rows[0]
        other = State(loan.schema, ("le_10000", 90000.0, 630.0))
        ledger = classify_changes(john, other, loan.causal, loan.schema.default_weights())
        assert ledger.induced == frozenset()
        assert ledger.direct == {"debt", "balance", "credit"}

    def test_inconsistent_input_rejected(self, loan):
        john = loan.dataset.rows[0]
        bad = State(loan.schema, ("no_debt", 40000.0, 400.0))
        with pytest.raises(errors.CausallyInconsistentInput):
            classify_changes(john, bad, loan.causal, loan.schema.default_weights())

    def test_negative_weights_rejected(self, loan):
        john = loan.dataset.rows[0]
        with pytest.raises(errors.NegativeWeight):
            classify_changes(john, john, loan.causal, (-1.0, 1.0, 1.0))

    def test_partition_and_rule_order_invariance(self):
        rng = random.Random(7)
        for seed in range(20):
            world = random_world(seed, max_states=300)
            weights = world.weights
            states = world.dataset.rows
            s0 = world.adverse[0]
            shuffled_rules = list(world.causal.rules)
            rng.shuffle(shuffled_rules)
            shuffled = CausalRuleSet(tuple(shuffled_rules))
            for s in states[:: max(1, len(states) // 40)]:
                if not is_causally_consistent(s, world.causal):
                    continue
                ledger = classify_changes(s0, s, world.causal, weights)
                assert ledger.direct | ledger.induced == state_diff(s0, s)
                assert not ledger.direct & ledger.induced
                assert ledger.induced == _induced_by_definition(s0, s, world.causal)
                again = classify_changes(s0, s, shuffled, weights)
                assert again.direct == ledger.direct
                assert again.induced == ledger.induced


class TestIsCounterfactual:
    def test_goal_state_is_valid_with_zeroed_credit_weight(self, loan):
        john = loan.dataset.rows[0]
        goal = State(loan.schema, ("no_debt", 60000.0, 620.0))
        ok, adjusted = is_counterfactual(
            goal, loan.causal, loan.decisions, loan.schema.default_weights(), s0=john
        )
        assert ok
        assert adjusted == (1.0, 1.0, 0.0)

    def test_original_state_is_not_a_counterfactual(self, loan):
        john = loan.dataset.rows[0]
        ok, adjusted = is_counterfactual(
            john, loan.causal, loan.decisions, loan.schema.default_weights(), s0=john
        )
        assert not ok
        assert adjusted == (1.0, 1.0, 1.0)

    def test_causally_inconsistent_state_rejected(self, loan):
        john = loan.dataset.rows[0]
        s2 = State(loan.schema, ("no_debt", 40000.0, 400.0))
        ok, _ = is_counterfactual(
            s2, loan.causal, loan.decisions, loan.schema.default_weights(), s0=john
        )
        assert not ok

    def test_direct_change_to_nonactionable_feature_rejected(self):
        schema = bool_schema("age_flag", "b", nonactionable=("age_flag",))
        decisions = DecisionRuleSet(
            (DecisionRule("bad", (Literal("b", "eq", "0"),)),), "bad", "good"
        )
        causal = CausalRuleSet(())
        s0 = State(schema, ("0", "0"))
        direct_on_frozen = State(schema, ("1", "1"))
        ok, _ = is_counterfactual(direct_on_frozen, causal, decisions, (1.0, 1.0), s0=s0)
        assert not ok
        fine = State(schema, ("0", "1"))
        ok, _ = is_counterfactual(fine, causal, decisions, (1.0, 1.0), s0=s0)
        assert ok

    def test_induced_change_to_nonactionable_feature_allowed(self):
        schema = bool_schema("study", "skill", nonactionable=("skill",))
        causal = CausalRuleSet(
            (CausalRule((Literal("study", "eq", "1"),), Literal("skill", "eq", "1")),)
        )
        decisions = DecisionRuleSet(
            (DecisionRule("bad", (Literal("skill", "eq", "0"),)),), "bad", "good"
        )
        s0 = State(schema, ("0", "0"))
        candidate = State(schema, ("1", "1"))
        ok, adjusted = is_counterfactual(candidate, causal, decisions, (1.0, 1.0), s0=s0)
        assert ok
        assert adjusted == (1.0, 0.0)

    def test_zero_rule_degeneration(self):
        # With no causal rules the check reduces to "not decision compliant"
        # with unchanged weights (on an all-actionable schema).
        for seed in range(10):
            world = random_world(seed, max_states=200)
            empty = CausalRuleSet(())
            s0 = world.adverse[0]
            for s in world.dataset.rows[:: max(1, len(world.dataset.rows) // 30)]:
                ok, adjusted = is_counterfactual(
                    s, empty, world.decisions, world.weights, s0=s0
                )
                assert ok == (not world.decisions.compliant(s))
                assert adjusted == world.weights


class TestCausalJson:
    def test_roundtrip(self, loan):
        data = causal_rules_to_json(loan.causal)
        assert load_causal_rules(data, loan.schema) == loan.causal

    def test_cyclic_file_rejected(self, loan_paths, loan):
        doc = b"""
        [
          {"if": [{"feature": "debt", "op": "eq", "value": "no_debt"}],
           "then": {"feature": "credit", "op": "gt", "value": 599.0}},
          {"if": [{"feature": "credit", "op": "gt", "value": 599.0}],
           "then": {"feature": "debt", "op": "eq", "value": "no_debt"}}
        ]
        """
        with pytest.raises(errors.CyclicGraphError):
            load_causal_rules(doc, loan.schema)

    def test_unknown_feature_rejected(self, loan):
        doc = b'[{"if": [{"feature": "x", "op": "eq", "value": "1"}], "then": {"feature": "credit", "op": "gt", "value": 599.0}}]'
        with pytest.raises(errors.ParseError):
            load_causal_rules(doc, loan.schema)

    def test_bad_op_rejected(self, loan):
        doc = b'[{"if": [{"feature": "debt", "op": "~", "value": "no_debt"}], "then": {"feature": "credit", "op": "gt", "value": 599.0}}]'
        with pytest.raises(errors.ParseError):
            load_causal_rules(doc, loan.schema)

from __future__ import annotations

import random

import pytest

from causalcf import errors
from causalcf.blackbox import RuleBlackBox
from causalcf.learner import LearnerConfig, extract_logic, fidelity, learn_rules
from causalcf.rules import DecisionRule, DecisionRuleSet, Literal
from causalcf.schema import Dataset, FeatureSchema, Schema, State, enumerate_states


def bool_schema(*names: str) -> Schema:
    return Schema(tuple(FeatureSchema(n, "categorical", ("0", "1")) for n in names))


def labeled(schema: Schema, rows, rules: DecisionRuleSet) -> tuple[Dataset, list[str]]:
    states = tuple(State(schema, r) for r in rows)
    return Dataset(schema, states), [rules.classify(s) for s in states]


class TestLearnerConfig:
    def test_field_ranges(self):
        with pytest.raises(errors.SchemaError):
            LearnerConfig(max_exception_depth=-1)
        with pytest.raises(errors.SchemaError):
            LearnerConfig(min_coverage_fraction=0.0)
        with pytest.raises(errors.SchemaError):
            LearnerConfig(split_candidates="median")
        with pytest.raises(errors.SchemaError):
            LearnerConfig(impurity="entropy")
        assert LearnerConfig(split_candidates="all-midpoints").quantile_cap is None
        assert LearnerConfig().quantile_cap == 32


class TestLearnRules:
    def test_single_threshold_separable(self):
        schema = Schema((FeatureSchema("credit", "numeric", (300.0, 850.0)),))
        rng = random.Random(0)
        values = [float(rng.randint(300, 580)) for _ in range(40)]
        values += [float(rng.randint(620, 850)) for _ in range(40)]
        rows = tuple(State(schema, (v,)) for v in values)
        labels = ["reject" if v < 600 else "approve" for v in values]
        learned = learn_rules(Dataset(schema, rows), labels, undesired_label="reject")
        assert len(learned.rules) == 1
        rule = learned.rules[0]
        assert len(rule.body) == 1 and not rule.exceptions
        lit = rule.body[0]
        # the threshold must lie between the closest opposing observations
        lo = max(v for v in values if v < 600)
        hi = min(v for v in values if v >= 600)
        assert lit.op == "le" and lo < lit.value < hi
        assert all(learned.classify(r) == lbl for r, lbl in zip(rows, labels))

    def test_xor_truth_table_classified_correctly(self):
        schema = bool_schema("a", "b")
        rows = [("0", "0"), ("0", "1"), ("1", "0"), ("1", "1")]
        states = tuple(State(schema, r) for r in rows)
        labels = ["bad" if a != b else "good" for a, b in rows]
        learned = learn_rules(Dataset(schema, states), labels, undesired_label="bad")
        assert [learned.classify(s) for s in states] == labels

    def test_conjunctive_false_positive_region_becomes_exception(self):
        # positives: a=1 and b == c; the body stalls at a=1 with a balanced
        # residual, which only exception rules can carve out.
        schema = bool_schema("a", "b", "c")
        states = tuple(enumerate_states(schema))
        labels = [
            "bad" if s.value("a") == "1" and s.value("b") == s.value("c") else "good"
            for s in states
        ]
        learned = learn_rules(Dataset(schema, states), labels, undesired_label="bad")
        assert [learned.classify(s) for s in states] == labels
        assert any(rule.exceptions for rule in learned.rules)

    def test_single_class_input_yields_default_only(self):
        schema = bool_schema("a")
        states = tuple(State(schema, (v,)) for v in ("0", "1", "1"))
        learned = learn_rules(Dataset(schema, states), ["good"] * 3, undesired_label="bad")
        assert learned.rules == ()
        assert all(learned.classify(s) == "good" for s in states)

    def test_all_undesired_input_covers_everything(self):
        schema = bool_schema("a", "b")
        states = tuple(enumerate_states(schema))
        learned = learn_rules(
            Dataset(schema, states), ["bad"] * len(states), undesired_label="bad"
        )
        assert all(learned.classify(s) == "bad" for s in states)

    def test_determinism(self):
        world_rules = DecisionRuleSet(
            (DecisionRule("bad", (Literal("a", "eq", "1"), Literal("b", "eq", "0"))),),
            "bad",
            "good",
        )
        schema = bool_schema("a", "b", "c")
        rng = random.Random(3)
        rows = [tuple(rng.choice("01") for _ in range(3)) for _ in range(60)]
        data, labels = labeled(schema, rows, world_rules)
        first = learn_rules(data, labels, LearnerConfig(seed=5), undesired_label="bad")
        second = learn_rules(data, labels, LearnerConfig(seed=5), undesired_label="bad")
        assert first == second

    def test_numeric_thresholds_are_observed_midpoints(self):
        schema = Schema(
            (
                FeatureSchema("x", "numeric", (0.0, 50.0)),
                FeatureSchema("y", "numeric", (0.0, 50.0)),
            )
        )
        rng = random.Random(1)
        rows = tuple(
            State(schema, (float(rng.randint(0, 50)), float(rng.randint(0, 50))))
            for _ in range(120)
        )
        labels = [
            "bad" if s.value("x") <= 20 and s.value("y") > 30 else "good" for s in rows
        ]
        learned = learn_rules(Dataset(schema, rows), labels, undesired_label="bad")

        def observed(feature: str) -> list[float]:
            return sorted({s.value(feature) for s in rows})

        def walk(rule: DecisionRule):
            yield from rule.body
            for ex in rule.exceptions:
                yield from walk(ex)

        for rule in learned.rules:
            for lit in walk(rule):
                values = observed(lit.feature)
                assert any(
                    abs((a + b) / 2.0 - lit.value) < 1e-12
                    for a, b in zip(values, values[1:])
                ), f"threshold {lit.value} is not a midpoint of observed {lit.feature}"

    def test_min_coverage_suppresses_tail_rules(self):
        schema = bool_schema("a", "b", "c")
        # 30 positives explained by a=1; one stray positive at (0,1,1)
        rows = [("1", "0", "0")] * 30 + [("0", "1", "1")] + [("0", "0", "0")] * 30
        states = tuple(State(schema, r) for r in rows)
        labels = ["bad"] * 31 + ["good"] * 30
        strict = learn_rules(
            Dataset(schema, states),
            labels,
            LearnerConfig(min_coverage_fraction=0.2),
            undesired_label="bad",
        )
        assert strict.classify(State(schema, ("0", "1", "1"))) == "good"
        lax = learn_rules(
            Dataset(schema, states),
            labels,
            LearnerConfig(min_coverage_fraction=1e-9),
            undesired_label="bad",
        )
        assert lax.classify(State(schema, ("0", "1", "1"))) == "bad"

    def test_default_label_inferred_from_majority(self):
        schema = bool_schema("a")
        states = tuple(State(schema, (v,)) for v in ("0", "1", "0", "1", "1"))
        labels = ["bad", "ok", "bad", "ok", "meh"]
        learned = learn_rules(Dataset(schema, states), labels, undesired_label="bad")
        assert learned.default_label == "ok"


class TestExtractLogic:
    def test_pass_through_for_rule_based_models(self, loan):
        model = RuleBlackBox(loan.decisions)
        assert extract_logic(model, loan.dataset) == loan.decisions

    def test_statistical_model_requires_undesired_label(self, loan):
        class Opaque(RuleBlackBox):
            is_rule_based = False

        with pytest.raises(ValueError):
            extract_logic(Opaque(loan.decisions), loan.dataset)

    def test_empty_dataset_rejected(self, loan):
        model = RuleBlackBox(loan.decisions)
        with pytest.raises(errors.EmptyDataset):
            extract_logic(model, Dataset(loan.schema, ()))

    def test_black_box_recovered_on_exhaustive_grid(self):
        # hidden ground truth, uniform sample, then grade on the full grid
        truth = DecisionRuleSet(
            (
                DecisionRule("bad", (Literal("a", "eq", "1"), Literal("b", "eq", "0"))),
                DecisionRule("bad", (Literal("c", "eq", "1"),)),
            ),
            "bad",
            "good",
        )
        schema = bool_schema("a", "b", "c", "d")

        class Opaque(RuleBlackBox):
            is_rule_based = False

        model = Opaque(truth)
        rng = random.Random(11)
        rows = tuple(
            State(schema, tuple(rng.choice("01") for _ in range(4))) for _ in range(400)
        )
        learned = extract_logic(model, Dataset(schema, rows), undesired_label="bad")
        grid = list(enumerate_states(schema))
        agreement = sum(learned.classify(s) == truth.classify(s) for s in grid) / len(grid)
        assert agreement == 1.0

    def test_constant_label_model_yields_empty_rule_set(self, loan):
        class Constant(RuleBlackBox):
            is_rule_based = False

            def _predict(self, batch):
                return ["approve"] * len(batch)

        learned = extract_logic(Constant(loan.decisions), loan.dataset, undesired_label="reject")
        assert learned.rules == ()
        assert learned.default_label == "approve"


class TestFidelity:
    def test_own_rules_agree_fully(self, loan):
        model = RuleBlackBox(loan.decisions)
        report = fidelity(model, loan.decisions, loan.dataset)
        assert report.agreement_rate == 1.0
        assert report.rule_count == 2
        assert report.literal_count == 2

    def test_empty_rules_vs_all_undesired_model_agree_never(self, loan):
        class AlwaysReject(RuleBlackBox):
            is_rule_based = False

            def _predict(self, batch):
                return ["reject"] * len(batch)

        empty = DecisionRuleSet((), "reject", "approve")
        report = fidelity(AlwaysReject(loan.decisions), empty, loan.dataset)
        assert report.agreement_rate == 0.0
        assert report.confusion["fn"] == len(loan.dataset.rows)

    def test_confusion_counts_total(self, loan):
        model = RuleBlackBox(loan.decisions)
        report = fidelity(model, loan.decisions, loan.dataset)
        assert sum(report.confusion.values()) == len(loan.dataset.rows)

from __future__ import annotations

import numpy as np
import pytest

from causalcf._plan import build_plan, encode_state, encode_states
from causalcf.backend import available_backends, get_backend
from causalcf.causal import is_counterfactual
from causalcf.cost import compute_weighted_lp
from causalcf.synth import adult_world, german_world, loan_world, random_world

HAS_COMPILED = "compiled" in available_backends()

pytestmark = pytest.mark.skipif(
    not HAS_COMPILED, reason="compiled kernel not built; nothing to compare"
)


def _workloads():
    for seed in range(8):
        world = random_world(seed, max_states=400, induced_bias=seed % 2 == 0)
        yield world, world.weights, world.adverse[0]
    for world in (loan_world(), adult_world(1, 60), german_world(2, 60)):
        yield world, world.schema.default_weights(), world.adverse[0]


class TestBackendEquivalence:
    def test_twins_are_bit_identical(self):
        compiled = get_backend("compiled")
        python = get_backend("python")
        for world, weights, s0 in _workloads():
            plan = build_plan(world.schema, world.decisions, world.causal, weights)
            X = encode_states(world.schema, list(world.dataset.rows))
            for p in (0, 1, 2):
                for adjusted in (True, False):
                    a = compiled.evaluate_batch(plan, X, encode_state(s0), p, adjusted)
                    b = python.evaluate_batch(plan, X, encode_state(s0), p, adjusted)
                    for left, right in zip(a, b):
                        assert np.array_equal(left, right)

    def test_kernel_matches_object_level_route(self):
        kernel = get_backend("auto")
        for world, weights, s0 in _workloads():
            plan = build_plan(world.schema, world.decisions, world.causal, weights)
            states = list(world.dataset.rows)
            X = encode_states(world.schema, states)
            valid, cost, n_direct = kernel.evaluate_batch(plan, X, encode_state(s0), 1, True)
            step = max(1, len(states) // 25)
            for i in range(0, len(states), step):
                ok, adjusted = is_counterfactual(
                    states[i], world.causal, world.decisions, weights, s0=s0
                )
                assert ok == bool(valid[i])
                assert compute_weighted_lp(s0, states[i], adjusted, 1).total == cost[i]
                direct = sum(
                    1
                    for name, w_adj in zip(world.schema.names, adjusted)
                    if states[i].value(name) != s0.value(name) and w_adj != 0.0
                )
                # n_direct counts changed-and-not-induced regardless of weight;
                # with positive schema weights the two coincide
                if all(w > 0 for w in weights):
                    assert direct == n_direct[i]


class TestIntervalLiterals:
    def test_interval_rules_agree_across_all_routes(self):
        from causalcf.causal import CausalRule, CausalRuleSet
        from causalcf.rules import DecisionRule, DecisionRuleSet, Literal
        from causalcf.schema import Dataset, FeatureSchema, Schema, State

        schema = Schema(
            (
                FeatureSchema("income", "numeric", (0.0, 100.0), norm_range=10.0),
                FeatureSchema("grade", "ordinal", ("c", "b", "a")),
                FeatureSchema("area", "categorical", ("x", "y")),
            )
        )
        decisions = DecisionRuleSet(
            (
                DecisionRule("bad", (Literal("income", "in", (20.0, 60.0)),)),
                DecisionRule("bad", (Literal("grade", "in", ("c", "b")),)),
            ),
            "bad",
            "good",
        )
        causal = CausalRuleSet(
            (CausalRule((Literal("income", "in", (60.0, 100.0)),), Literal("grade", "eq", "a")),)
        )
        states = [
            State(schema, (float(i), g, a))
            for i in range(0, 101, 5)
            for g in ("c", "b", "a")
            for a in ("x", "y")
        ]
        weights = schema.default_weights()
        s0 = State(schema, (40.0, "c", "x"))
        plan = build_plan(schema, decisions, causal, weights)
        X = encode_states(schema, states)
        outputs = [
            get_backend(name).evaluate_batch(plan, X, encode_state(s0), 1, True)
            for name in available_backends()
        ]
        for other in outputs[1:]:
            for left, right in zip(outputs[0], other):
                assert np.array_equal(left, right)
        valid, cost, _ = outputs[0]
        for i, s in enumerate(states):
            ok, adjusted = is_counterfactual(s, causal, decisions, weights, s0=s0)
            assert ok == bool(valid[i])
            assert compute_weighted_lp(s0, s, adjusted, 1).total == cost[i]


class TestBackendBench:
    def test_bench_smoke_reports_both_backends(self):
        from causalcf.bench_backends import run

        rows = run(seed=0, n_candidates=2000, repeat=1, p=1)
        assert [r["backend"] for r in rows] == ["compiled", "python"]
        assert all(r["candidates_per_s"] > 0 for r in rows)

"""Synthetic micro-worlds: the loan fixture plus seeded generators.

Every world bundles a schema, a ground-truth decision rule set (usable as
a rule-based model or as a hidden labeler for surrogate training), causal
rules, a dataset, and the adverse instances worth explaining.  The
generators are deterministic functions of their seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from causalcf.blackbox import RuleBlackBox
from causalcf.causal import CausalRule, CausalRuleSet, causal_rules_to_json, is_causally_consistent
from causalcf.rules import DecisionRule, DecisionRuleSet, Literal, serialize_rules
from causalcf.schema import (
    Dataset,
    FeatureSchema,
    Schema,
    State,
    dataset_to_csv,
    enumerate_states,
    schema_to_json,
)


@dataclass(frozen=True)
class SynthWorld:
    name: str
    dataset: Dataset
    decisions: DecisionRuleSet
    causal: CausalRuleSet
    adverse: tuple[State, ...]

    @property
    def schema(self) -> Schema:
        return self.dataset.schema

    def model(self) -> RuleBlackBox:
        return RuleBlackBox(self.decisions)


def write_world(world: SynthWorld, directory: str | Path, with_labels: bool = False) -> dict[str, Path]:
    """Write a world as the four-file bundle the CLI consumes."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    dataset = world.dataset
    if with_labels and dataset.labels is None:
        dataset = Dataset(
            dataset.schema,
            dataset.rows,
            tuple(world.decisions.classify(r) for r in dataset.rows),
        )
    paths = {
        "schema": directory / "schema.json",
        "data": directory / "data.csv",
        "rules": directory / "decision.rules",
        "causal": directory / "causal.json",
    }
    paths["schema"].write_bytes(schema_to_json(dataset.schema))
    paths["data"].write_bytes(dataset_to_csv(dataset))
    paths["rules"].write_bytes(serialize_rules(world.decisions))
    paths["causal"].write_bytes(causal_rules_to_json(world.causal))
    return paths


# -- the loan micro-world -----------------------------------------------------


def loan_world() -> SynthWorld:
    """Three-feature loan scenario: clearing debt lifts the credit score.

    The applicant in row 0 is denied (low balance, low credit); the
    cheapest fix is row 1 — raise the balance and clear the debt, after
    which the credit improvement comes for free.
    """
    schema = Schema(
        (
            FeatureSchema("debt", "ordinal", ("no_debt", "le_10000", "gt_10000")),
            FeatureSchema("balance", "numeric", (0.0, 1_000_000.0), norm_range=20_000.0),
            FeatureSchema("credit", "numeric", (300.0, 850.0), norm_range=100.0),
        )
    )
    decisions = DecisionRuleSet(
        (
            DecisionRule("reject", (Literal("balance", "le", 59_999.0),)),
            DecisionRule("reject", (Literal("credit", "le", 599.0),)),
        ),
        undesired_label="reject",
        default_label="approve",
    )
    causal = CausalRuleSet(
        (CausalRule((Literal("debt", "eq", "no_debt"),), Literal("credit", "gt", 599.0)),)
    )
    rows = tuple(
        State(schema, v)
        for v in (
            ("gt_10000", 40_000.0, 599.0),
            ("no_debt", 60_000.0, 620.0),
            ("le_10000", 90_000.0, 630.0),
            ("gt_10000", 52_000.0, 610.0),
            ("no_debt", 35_000.0, 640.0),
            ("le_10000", 61_000.0, 590.0),
            ("no_debt", 72_000.0, 615.0),
            ("gt_10000", 45_000.0, 580.0),
        )
    )
    dataset = Dataset(schema, rows)
    adverse = tuple(r for r in rows if decisions.compliant(r) and is_causally_consistent(r, causal))
    return SynthWorld("loan", dataset, decisions, causal, adverse)


# -- car-evaluation flavor: categorical, no causal rules ----------------------


def cars_world(seed: int = 0, n_rows: int = 200) -> SynthWorld:
    rng = random.Random(seed)
    schema = Schema(
        (
            FeatureSchema("buying", "ordinal", ("low", "med", "high", "vhigh")),
            FeatureSchema("maint", "ordinal", ("low", "med", "high", "vhigh")),
            FeatureSchema("persons", "categorical", ("two", "four", "more")),
            FeatureSchema("lug_boot", "ordinal", ("small", "med", "big")),
            FeatureSchema("safety", "ordinal", ("low", "med", "high")),
        )
    )
    decisions = DecisionRuleSet(
        (
            DecisionRule("unacc", (Literal("safety", "le", "low"),)),
            DecisionRule("unacc", (Literal("persons", "eq", "two"),)),
            DecisionRule("unacc", (Literal("buying", "gt", "high"), Literal("maint", "gt", "high"))),
        ),
        undesired_label="unacc",
        default_label="acc",
    )
    causal = CausalRuleSet(())
    rows = tuple(
        State(schema, tuple(rng.choice(f.domain) for f in schema)) for _ in range(n_rows)
    )
    labels = tuple(decisions.classify(r) for r in rows)
    dataset = Dataset(schema, rows, labels)
    adverse = tuple(r for r in rows if decisions.compliant(r))
    return SynthWorld("cars", dataset, decisions, causal, adverse)


# -- census flavor: mixed kinds, education unlocks skill ----------------------


def adult_world(seed: int = 0, n_rows: int = 300) -> SynthWorld:
    rng = random.Random(seed)
    schema = Schema(
        (
            FeatureSchema("age", "numeric", (18.0, 90.0), actionable=False, norm_range=20.0),
            FeatureSchema("education", "ordinal", ("dropout", "highschool", "bachelors", "masters")),
            FeatureSchema("hours", "numeric", (10.0, 80.0), norm_range=10.0),
            FeatureSchema("skill", "categorical", ("low", "high"), weight=2.0),
        )
    )
    decisions = DecisionRuleSet(
        (
            DecisionRule("reject", (Literal("hours", "le", 34.5),)),
            DecisionRule("reject", (Literal("skill", "eq", "low"),)),
        ),
        undesired_label="reject",
        default_label="accept",
    )
    causal = CausalRuleSet(
        (CausalRule((Literal("education", "gt", "highschool"),), Literal("skill", "eq", "high")),)
    )
    rows = []
    for _ in range(n_rows):
        education = rng.choice(schema.feature("education").domain)
        skill = "high" if education in ("bachelors", "masters") else rng.choice(("low", "high"))
        rows.append(
            State(
                schema,
                (
                    float(rng.randint(18, 90)),
                    education,
                    float(rng.randint(10, 80)),
                    skill,
                ),
            )
        )
    dataset = Dataset(schema, tuple(rows), tuple(decisions.classify(r) for r in rows))
    adverse = tuple(
        r for r in rows if decisions.compliant(r) and is_causally_consistent(r, causal)
    )
    return SynthWorld("adult", dataset, decisions, causal, adverse)


# -- credit flavor: approval needs four fixes, one comes free ------------------


def german_world(seed: int = 0, n_rows: int = 200) -> SynthWorld:
    rng = random.Random(seed)
    schema = Schema(
        (
            FeatureSchema("savings", "ordinal", ("low", "medium", "high")),
            FeatureSchema("employment", "ordinal", ("short", "medium", "long")),
            FeatureSchema("credit_hist", "categorical", ("poor", "good")),
            FeatureSchema("housing", "categorical", ("rent", "own")),
            FeatureSchema("age", "numeric", (18.0, 75.0), actionable=False, norm_range=10.0),
        )
    )
    decisions = DecisionRuleSet(
        (
            DecisionRule("reject", (Literal("savings", "le", "medium"),)),
            DecisionRule("reject", (Literal("employment", "le", "medium"),)),
            DecisionRule("reject", (Literal("credit_hist", "eq", "poor"),)),
            DecisionRule("reject", (Literal("housing", "eq", "rent"),)),
        ),
        undesired_label="reject",
        default_label="approve",
    )
    causal = CausalRuleSet(
        (CausalRule((Literal("employment", "eq", "long"),), Literal("credit_hist", "eq", "good")),)
    )
    rows = []
    for _ in range(n_rows):
        employment = rng.choice(schema.feature("employment").domain)
        credit_hist = "good" if employment == "long" else rng.choice(("poor", "good"))
        rows.append(
            State(
                schema,
                (
                    rng.choice(schema.feature("savings").domain),
                    employment,
                    credit_hist,
                    rng.choice(schema.feature("housing").domain),
                    float(rng.randint(18, 75)),
                ),
            )
        )
    dataset = Dataset(schema, tuple(rows), tuple(decisions.classify(r) for r in rows))
    adverse = tuple(
        r for r in rows if decisions.compliant(r) and is_causally_consistent(r, causal)
    )
    return SynthWorld("german", dataset, decisions, causal, adverse)


# -- seeded random discrete worlds ---------------------------------------------


def _random_literal(rng: random.Random, feat: FeatureSchema) -> Literal:
    if feat.kind == "categorical":
        return Literal(feat.name, rng.choice(("eq", "neq")), rng.choice(feat.domain))
    op = rng.choice(("eq", "le", "gt"))
    if op == "le":
        return Literal(feat.name, "le", rng.choice(feat.domain[:-1]))
    if op == "gt":
        return Literal(feat.name, "gt", rng.choice(feat.domain[:-1]))
    return Literal(feat.name, "eq", rng.choice(feat.domain))


def _random_schema(rng: random.Random, n_features: int, max_states: int) -> Schema:
    while 2 ** n_features > max_states and n_features > 2:
        n_features -= 1
    levels = [rng.choice((2, 2, 3, 3, 4)) for _ in range(n_features)]
    while _prod(levels) > max_states and max(levels) > 2:
        levels[levels.index(max(levels))] -= 1
    feats = []
    for i, n_levels in enumerate(levels):
        kind = rng.choice(("ordinal", "categorical"))
        prefix = "l" if kind == "ordinal" else "v"
        feats.append(
            FeatureSchema(f"f{i}", kind, tuple(f"{prefix}{j}" for j in range(n_levels)))
        )
    return Schema(tuple(feats))


def _prod(values) -> int:
    out = 1
    for v in values:
        out *= v
    return out


def _attempt_random_world(seed: int, max_states: int, induced_bias: bool) -> SynthWorld | None:
    rng = random.Random(seed)
    schema = _random_schema(rng, rng.randint(4, 8), max_states)
    feats = schema.features

    causal_rules: list[CausalRule] = []
    if induced_bias:
        # One rule guaranteed to matter: the decision tests the effect
        # feature, whose direct change is priced high.
        trigger, effect = feats[0], feats[1]
        good_trigger = trigger.domain[-1]
        good_effect = effect.domain[-1]
        causal_rules.append(
            CausalRule((Literal(trigger.name, "eq", good_trigger),),
                       Literal(effect.name, "eq", good_effect))
        )
        weights = tuple(3.0 if f.name == effect.name else 1.0 for f in feats)
        forced_literal = Literal(
            effect.name,
            "neq" if effect.kind == "categorical" else "le",
            good_effect if effect.kind == "categorical" else effect.domain[-2],
        )
    else:
        weights = tuple(1.0 for _ in feats)
        forced_literal = None
    for _ in range(rng.randint(1, 3)):
        cons_idx = rng.randrange(1, len(feats))
        ant_idx = rng.sample(range(cons_idx), k=min(cons_idx, rng.randint(1, 2)))
        causal_rules.append(
            CausalRule(
                tuple(_random_literal(rng, feats[i]) for i in sorted(ant_idx)),
                _random_literal(rng, feats[cons_idx]),
            )
        )
    causal = CausalRuleSet(tuple(causal_rules))

    rules = []
    if forced_literal is not None:
        rules.append(DecisionRule("bad", (forced_literal,)))
    for _ in range(rng.randint(1, 3)):
        body = tuple(
            _random_literal(rng, feats[i])
            for i in sorted(rng.sample(range(len(feats)), k=rng.randint(1, 2)))
        )
        exceptions = ()
        if rng.random() < 0.3:
            exceptions = (DecisionRule("bad", (_random_literal(rng, rng.choice(feats)),)),)
        rules.append(DecisionRule("bad", body, exceptions))
    decisions = DecisionRuleSet(tuple(rules), "bad", "good")

    states = tuple(enumerate_states(schema))
    dataset = Dataset(schema, states)
    adverse = tuple(
        s for s in states if decisions.compliant(s) and is_causally_consistent(s, causal)
    )
    if not adverse:
        return None
    world = SynthWorld(f"random-{seed}", dataset, decisions, causal, adverse)
    return _attach_weights(world, weights)


@dataclass(frozen=True)
class WeightedWorld(SynthWorld):
    weights: tuple[float, ...] = ()


def _attach_weights(world: SynthWorld, weights: tuple[float, ...]) -> "WeightedWorld":
    return WeightedWorld(
        world.name, world.dataset, world.decisions, world.causal, world.adverse, weights
    )


def random_world(seed: int, max_states: int = 4000, induced_bias: bool = False) -> "WeightedWorld":
    """A fully discrete random world with DAG causal rules and at least one
    adverse, causally consistent instance.  Deterministic per seed."""
    attempt = 0
    while True:
        world = _attempt_random_world(seed + 100_000 * attempt, max_states, induced_bias)
        if world is not None:
            return world
        attempt += 1

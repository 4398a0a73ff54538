"""Minimal-cost counterfactual search and the benchmark harness.

The engine extracts decision rules from the model once, streams candidate
states from a pluggable source, filters them through the causal validity
check (which also zeroes induced-change weights), scores survivors with
the weighted Lp cost, and returns the cheapest k.  Results are
deterministic and independent of candidate order: ties break by lower
cost, then fewer direct changes, then lexicographically smaller encoded
state vector.

Two cost modes share one search path: ``mc3g`` scores with the adjusted
weights (induced changes free), ``standard`` charges every change its
schema weight.  Validity is identical in both modes.
"""

from __future__ import annotations

import concurrent.futures
import csv
import heapq
import io
import json
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from causalcf import errors
from causalcf._plan import build_plan, encode_state, encode_states
from causalcf.backend import get_backend
from causalcf.blackbox import BlackBox
from causalcf.causal import CausalRuleSet, ChangeLedger, classify_changes, is_causally_consistent
from causalcf.cost import NORM_NAMES, CostBreakdown, compute_weighted_lp
from causalcf.learner import LearnerConfig, extract_logic
from causalcf.rules import DecisionRule, DecisionRuleSet
from causalcf.schema import Dataset, Schema, State

MODES = ("mc3g", "standard")

L2_NOTE = "L2 is the weighted sum of squared normalized deltas; no square root is taken"


@dataclass(frozen=True)
class CandidateSource:
    """Where candidate states come from.

    * ``dataset-rows`` — the dataset's own rows (the default);
    * ``rule-grid`` — the cross-product of per-feature value sets built
      from rule thresholds in the decision and causal rules, each numeric
      threshold offset by ±``grid_step``, plus domain endpoints and the
      instance's own value;
    * ``hybrid`` — both, de-duplicated.
    """

    strategy: str = "dataset-rows"
    grid_step: float = 1.0
    grid_cap: int = 1_000_000

    def __post_init__(self):
        if self.strategy not in ("dataset-rows", "rule-grid", "hybrid"):
            raise errors.InvalidRule(f"unknown candidate strategy {self.strategy!r}")
        if not self.grid_step > 0:
            raise errors.InvalidRule("grid_step must be > 0")
        if self.grid_cap < 1:
            raise errors.InvalidRule("grid_cap must be >= 1")


@dataclass(frozen=True)
class CounterfactualResult:
    state: State
    ledger: ChangeLedger
    cost: CostBreakdown
    rank: int  # 1-based position in the returned list

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "state": self.state.as_dict(),
            "direct": sorted(self.ledger.direct),
            "induced": sorted(self.ledger.induced),
            "cost": self.cost.to_dict(),
        }


def _decision_literals(rules: tuple[DecisionRule, ...]):
    for rule in rules:
        yield from rule.body
        yield from _decision_literals(rule.exceptions)


def _feature_value_sets(
    schema: Schema,
    decisions: DecisionRuleSet,
    causal: CausalRuleSet | None,
    s0: State,
    step: float,
) -> list[list]:
    literals: dict[str, list] = {name: [] for name in schema.names}
    for lit in _decision_literals(decisions.rules):
        literals[lit.feature].append(lit)
    if causal is not None:
        for rule in causal.rules:
            for lit in rule.antecedent:
                literals[lit.feature].append(lit)
            literals[rule.consequent.feature].append(rule.consequent)

    sets: list[list] = []
    for feat in schema:
        mentioned: list = []
        for lit in literals[feat.name]:
            if lit.op == "in":
                mentioned.extend(lit.value)  # type: ignore[arg-type]
            else:
                mentioned.append(lit.value)
        s0v = s0.value(feat.name)
        if feat.kind == "numeric":
            lo, hi = feat.domain
            values = {float(s0v), lo, hi}
            for t in mentioned:
                for v in (float(t) - step, float(t), float(t) + step):
                    values.add(min(hi, max(lo, v)))
            sets.append(sorted(values))
        elif feat.kind == "ordinal":
            last = len(feat.domain) - 1
            indices = {feat.domain.index(s0v), 0, last}
            for v in mentioned:
                i = feat.domain.index(v)
                indices.update(x for x in (i - 1, i, i + 1) if 0 <= x <= last)
            sets.append([feat.domain[i] for i in sorted(indices)])
        else:
            # Unordered domains have no endpoints or steps; the whole
            # (typically small) domain is the candidate set.
            sets.append(list(feat.domain))
    return sets


def generate_candidates(
    source: CandidateSource,
    data: Dataset,
    decisions: DecisionRuleSet,
    causal: CausalRuleSet | None = None,
    s0: State | None = None,
) -> list[State]:
    """Materialize the candidate states for one search."""
    if source.strategy == "dataset-rows":
        return list(data.rows)
    if s0 is None:
        raise errors.InvalidRule(f"{source.strategy} candidates need the instance state")
    sets = _feature_value_sets(data.schema, decisions, causal, s0, source.grid_step)
    projected = 1
    for values in sets:
        projected *= len(values)
    if projected > source.grid_cap:
        raise errors.GridTooLarge(projected, source.grid_cap)
    grid = [State(data.schema, combo) for combo in product(*sets)]
    if source.strategy == "rule-grid":
        return grid
    seen: set[tuple] = set()
    merged: list[State] = []
    for state in list(data.rows) + grid:
        if state.values not in seen:
            seen.add(state.values)
            merged.append(state)
    return merged


@dataclass
class SearchContext:
    """Everything one search needs besides the instance itself; picklable."""

    data: Dataset
    decisions: DecisionRuleSet
    causal: CausalRuleSet
    weights: tuple[float, ...]
    source: CandidateSource
    backend: str = "auto"
    _plan: object = field(default=None, repr=False, compare=False)
    _row_cache: object = field(default=None, repr=False, compare=False)

    @property
    def schema(self) -> Schema:
        return self.data.schema

    def plan(self):
        if self._plan is None:
            self._plan = build_plan(self.schema, self.decisions, self.causal, self.weights)
        return self._plan

    def candidates(self, s0: State) -> tuple[list[State], np.ndarray]:
        if self.source.strategy == "dataset-rows":
            if self._row_cache is None:
                states = _dedupe(generate_candidates(self.source, self.data, self.decisions))
                self._row_cache = (states, encode_states(self.schema, states))
            return self._row_cache
        states = _dedupe(
            generate_candidates(self.source, self.data, self.decisions, self.causal, s0)
        )
        return states, encode_states(self.schema, states)


def _dedupe(states: list[State]) -> list[State]:
    seen: set[tuple] = set()
    out = []
    for s in states:
        if s.values not in seen:
            seen.add(s.values)
            out.append(s)
    return out


def _search(ctx: SearchContext, s0: State, p: int, k: int, mode: str) -> list[CounterfactualResult]:
    if mode not in MODES:
        raise errors.InvalidRule(f"unknown cost mode {mode!r}")
    states, X = ctx.candidates(s0)
    if not states:
        return []
    kernel = get_backend(ctx.backend)
    valid, cost, n_direct = kernel.evaluate_batch(
        ctx.plan(), X, encode_state(s0), p, mode == "mc3g"
    )
    ranked = heapq.nsmallest(
        k,
        (
            (cost[i], int(n_direct[i]), tuple(X[i].tolist()), i)
            for i in range(len(states))
            if valid[i]
        ),
    )
    results = []
    for rank, (kernel_cost, _, _, i) in enumerate(ranked, start=1):
        state = states[i]
        ledger = classify_changes(s0, state, ctx.causal, ctx.weights)
        scoring = ledger.adjusted_weights if mode == "mc3g" else ctx.weights
        breakdown = compute_weighted_lp(s0, state, scoring, p)
        if breakdown.total != kernel_cost:
            raise RuntimeError(
                f"kernel/object cost mismatch: {kernel_cost!r} != {breakdown.total!r}"
            )
        results.append(CounterfactualResult(state, ledger, breakdown, rank))
    return results


def find_counterfactuals(
    model: BlackBox,
    data: Dataset,
    s0: State,
    causal: CausalRuleSet,
    source: CandidateSource | None = None,
    weights=None,
    p: int = 0,
    k: int = 1,
    *,
    mode: str = "mc3g",
    learner_config: LearnerConfig | None = None,
    undesired_label: str | None = None,
    backend: str = "auto",
) -> list[CounterfactualResult]:
    """Top-k minimal-cost counterfactuals for an adverse instance.

    Extracts decision rules from the model, requires the instance to be
    adverse under them (NotAdverse otherwise), and returns up to k valid
    counterfactuals in ascending cost order.  An empty list means no
    candidate from the source was valid; that is a status, not an error.
    """
    if k < 1:
        raise errors.InvalidRule("k must be >= 1")
    if p not in NORM_NAMES:
        raise errors.InvalidRule(f"norm parameter must be 0, 1 or 2, got {p!r}")
    decisions = extract_logic(model, data, learner_config, undesired_label=undesired_label)
    if not decisions.compliant(s0):
        raise errors.NotAdverse(
            f"instance already classified {decisions.default_label!r}; nothing to explain"
        )
    ctx = SearchContext(
        data=data,
        decisions=decisions,
        causal=causal,
        weights=tuple(weights) if weights is not None else data.schema.default_weights(),
        source=source or CandidateSource(),
        backend=backend,
    )
    return _search(ctx, s0, p, k, mode)


# -- benchmark harness --------------------------------------------------------


@dataclass(frozen=True)
class InstanceRecord:
    instance: int
    mode: str
    norm: str
    costs: tuple[float, ...]
    states: tuple[tuple, ...]
    any_induced: bool

    def to_dict(self) -> dict:
        return {
            "instance": self.instance,
            "mode": self.mode,
            "norm": self.norm,
            "costs": list(self.costs),
            "states": [list(v) for v in self.states],
            "any_induced": self.any_induced,
        }


@dataclass(frozen=True)
class SummaryRow:
    mode: str
    norm: str
    n_instances: int
    n_found: int
    k1_avg: float
    kth_avg: float
    avg_avg: float
    causal_compliance_pct: float
    blackbox_agreement_pct: float


@dataclass
class BenchmarkReport:
    dataset: str
    k: int
    norms: tuple[str, ...]
    modes: tuple[str, ...]
    seed: int | None
    summary: list[SummaryRow]
    instances: list[InstanceRecord]
    l2_note: str = L2_NOTE

    def to_json(self) -> bytes:
        doc = {
            "dataset": self.dataset,
            "k": self.k,
            "norms": list(self.norms),
            "modes": list(self.modes),
            "seed": self.seed,
            "l2_definition": self.l2_note,
            "summary": [
                {
                    "mode": r.mode,
                    "norm": r.norm,
                    "n_instances": r.n_instances,
                    "n_found": r.n_found,
                    "k1_avg": r.k1_avg,
                    "kth_avg": r.kth_avg,
                    "avg_avg": r.avg_avg,
                    "causal_compliance_pct": r.causal_compliance_pct,
                    "blackbox_agreement_pct": r.blackbox_agreement_pct,
                }
                for r in self.summary
            ],
            "instances": [rec.to_dict() for rec in self.instances],
        }
        return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")

    def to_csv(self) -> bytes:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["dataset", "mode", "norm", "stat", "value"])
        for row in self.summary:
            stats = [
                ("k1", row.k1_avg),
                (f"k{self.k}", row.kth_avg),
                ("avg", row.avg_avg),
                ("causal_compliance_pct", row.causal_compliance_pct),
                ("blackbox_agreement_pct", row.blackbox_agreement_pct),
                ("found_pct", 100.0 * row.n_found / row.n_instances if row.n_instances else float("nan")),
            ]
            for stat, value in stats:
                writer.writerow([self.dataset, row.mode, row.norm, stat, repr(float(value))])
        return out.getvalue().encode("utf-8")


_WORKER_CTX: tuple | None = None


def _bench_init(ctx: SearchContext, instances, norms, modes, k) -> None:
    global _WORKER_CTX
    _WORKER_CTX = (ctx, instances, norms, modes, k)


def _bench_one(ctx: SearchContext, instances, norms, modes, k, idx: int) -> list[InstanceRecord]:
    records = []
    s0 = instances[idx]
    for mode in modes:
        for p in norms:
            results = _search(ctx, s0, p, k, mode)
            records.append(
                InstanceRecord(
                    instance=idx,
                    mode=mode,
                    norm=NORM_NAMES[p],
                    costs=tuple(r.cost.total for r in results),
                    states=tuple(r.state.values for r in results),
                    any_induced=any(r.ledger.induced for r in results),
                )
            )
    return records


def _bench_worker(idx: int) -> list[InstanceRecord]:
    assert _WORKER_CTX is not None
    return _bench_one(*_WORKER_CTX, idx)


def run_benchmark(
    model: BlackBox,
    data: Dataset,
    instances: list[State],
    causal: CausalRuleSet,
    source: CandidateSource | None = None,
    norms=(0, 1, 2),
    k: int = 1,
    modes=MODES,
    *,
    weights=None,
    learner_config: LearnerConfig | None = None,
    undesired_label: str | None = None,
    backend: str = "auto",
    jobs: int = 1,
    dataset_name: str = "dataset",
    seed: int | None = None,
) -> BenchmarkReport:
    """Search every instance under every requested mode and norm.

    Reports, per mode and norm: the average nearest (K=1), k-th nearest and
    mean top-k distances over instances, the fraction of returned states
    re-verified as causally consistent and favorably classified, and the
    agreement of the black box itself on the returned states.
    """
    decisions = extract_logic(model, data, learner_config, undesired_label=undesired_label)
    for i, s0 in enumerate(instances):
        if not decisions.compliant(s0):
            raise errors.NotAdverse(f"benchmark instance {i} is not adverse")
    ctx = SearchContext(
        data=data,
        decisions=decisions,
        causal=causal,
        weights=tuple(weights) if weights is not None else data.schema.default_weights(),
        source=source or CandidateSource(),
        backend=backend,
    )
    instances = list(instances)
    args = (ctx, instances, tuple(norms), tuple(modes), k)
    if jobs <= 1 or len(instances) <= 1:
        per_instance = [_bench_one(*args, i) for i in range(len(instances))]
    else:
        with concurrent.futures.ProcessPoolExecutor(
            max_workers=jobs, initializer=_bench_init, initargs=args
        ) as pool:
            per_instance = list(pool.map(_bench_worker, range(len(instances))))
    records = [rec for group in per_instance for rec in group]

    # Re-verify emitted states object-level and ask the black box for its
    # own labels (surrogate/black-box disagreement is measured, not assumed).
    unique_states: dict[tuple, State] = {}
    for rec in records:
        for values in rec.states:
            if values not in unique_states:
                unique_states[values] = State(data.schema, values)
    ordered = list(unique_states.values())
    bb_labels = dict(zip(unique_states.keys(), model.predict(ordered))) if ordered else {}
    compliant_ok: dict[tuple, bool] = {
        values: is_causally_consistent(state, causal) and not decisions.compliant(state)
        for values, state in unique_states.items()
    }

    summary = []
    for mode in modes:
        for p in norms:
            norm = NORM_NAMES[p]
            rows = [r for r in records if r.mode == mode and r.norm == norm]
            found = [r for r in rows if r.costs]
            def _avg(values):
                return sum(values) / len(values) if values else float("nan")
            n_states = sum(len(r.states) for r in rows)
            n_ok = sum(1 for r in rows for v in r.states if compliant_ok[v])
            n_agree = sum(
                1 for r in rows for v in r.states
                if bb_labels[v] != decisions.undesired_label
            )
            summary.append(
                SummaryRow(
                    mode=mode,
                    norm=norm,
                    n_instances=len(rows),
                    n_found=len(found),
                    k1_avg=_avg([r.costs[0] for r in found]),
                    kth_avg=_avg([r.costs[-1] for r in found]),
                    avg_avg=_avg([sum(r.costs) / len(r.costs) for r in found]),
                    causal_compliance_pct=100.0 * n_ok / n_states if n_states else float("nan"),
                    blackbox_agreement_pct=100.0 * n_agree / n_states if n_states else float("nan"),
                )
            )
    return BenchmarkReport(
        dataset=dataset_name,
        k=k,
        norms=tuple(NORM_NAMES[p] for p in norms),
        modes=tuple(modes),
        seed=seed,
        summary=summary,
        instances=records,
    )

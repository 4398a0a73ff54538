"""Minimal-cost counterfactual search for tabular classifiers under causal
rule constraints: changes a causal rule makes happen automatically are
charged nothing, so recourse cost reflects only what the user must do."""

from causalcf import errors
from causalcf.backend import DEFAULT_BACKEND, available_backends
from causalcf.causal import (
    CausalRule,
    CausalRuleSet,
    ChangeLedger,
    causal_rules_to_json,
    classify_changes,
    is_causally_consistent,
    is_counterfactual,
    load_causal_rules,
)
from causalcf.cost import CostBreakdown, compute_weighted_lp, standard_cost
from causalcf.blackbox import (
    BlackBox,
    PredictionFileBlackBox,
    RuleBlackBox,
    SubprocessBlackBox,
    predict,
)
from causalcf.learner import FidelityReport, LearnerConfig, extract_logic, fidelity, learn_rules
from causalcf.rules import (
    DecisionRule,
    DecisionRuleSet,
    Literal,
    is_decision_compliant,
    parse_rules,
    rule_fires,
    serialize_rules,
)
from causalcf.schema import (
    Dataset,
    FeatureSchema,
    Schema,
    State,
    dataset_to_csv,
    enumerate_states,
    load_dataset,
    load_schema,
    schema_to_json,
    state_diff,
)
from causalcf.search import (
    BenchmarkReport,
    CandidateSource,
    CounterfactualResult,
    find_counterfactuals,
    generate_candidates,
    run_benchmark,
)

__version__ = "0.1.0"

__all__ = [
    "BenchmarkReport",
    "BlackBox",
    "CandidateSource",
    "CausalRule",
    "CausalRuleSet",
    "ChangeLedger",
    "CostBreakdown",
    "CounterfactualResult",
    "Dataset",
    "DecisionRule",
    "DecisionRuleSet",
    "DEFAULT_BACKEND",
    "FeatureSchema",
    "FidelityReport",
    "LearnerConfig",
    "Literal",
    "PredictionFileBlackBox",
    "RuleBlackBox",
    "Schema",
    "State",
    "SubprocessBlackBox",
    "available_backends",
    "causal_rules_to_json",
    "classify_changes",
    "compute_weighted_lp",
    "dataset_to_csv",
    "enumerate_states",
    "errors",
    "extract_logic",
    "fidelity",
    "find_counterfactuals",
    "generate_candidates",
    "is_causally_consistent",
    "is_counterfactual",
    "is_decision_compliant",
    "learn_rules",
    "load_causal_rules",
    "load_dataset",
    "load_schema",
    "parse_rules",
    "predict",
    "rule_fires",
    "run_benchmark",
    "schema_to_json",
    "serialize_rules",
    "standard_cost",
    "state_diff",
]

"""Command-line interface.

Subcommands: learn (extract rules + fidelity report), explain (recourse
for one instance), bench (benchmark over adverse rows), validate (check a
schema/rules/causal bundle).

Exit codes: 0 ok, 2 configuration error, 3 model-adapter failure,
4 instance not adverse, 5 no counterfactual found.  All outputs are
byte-identical across reruns with identical inputs and seed.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from causalcf import errors
from causalcf.backend import DEFAULT_BACKEND, available_backends
from causalcf.blackbox import (
    BlackBox,
    ModelSpec,
    PredictionFileBlackBox,
    RuleBlackBox,
    SubprocessBlackBox,
)
from causalcf.causal import CausalRuleSet, load_causal_rules
from causalcf.cost import NORM_NAMES, compute_weighted_lp, standard_cost
from causalcf.learner import LearnerConfig, extract_logic, fidelity
from causalcf.rules import parse_rules, serialize_rules, validate_ruleset
from causalcf.schema import Dataset, load_dataset, load_schema
from causalcf.search import CandidateSource, find_counterfactuals, run_benchmark

_NORMS = {"l0": 0, "l1": 1, "l2": 2}
_STRATEGIES = {"dataset": "dataset-rows", "grid": "rule-grid", "hybrid": "hybrid"}

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ADAPTER = 3
EXIT_NOT_ADVERSE = 4
EXIT_NO_COUNTERFACTUAL = 5

_CONFIG_ERRORS = (
    errors.ParseError,
    errors.SchemaError,
    errors.SchemaMismatch,
    errors.DomainViolation,
    errors.UnknownFeature,
    errors.InvalidRule,
    errors.CyclicGraphError,
    errors.GridTooLarge,
    errors.EmptyDataset,
    errors.NegativeWeight,
    OSError,
)
_ADAPTER_ERRORS = (
    errors.BlackBoxFailure,
    errors.ProtocolError,
    errors.Timeout,
    errors.MissingPrediction,
)


class _NoCounterfactual(errors.CausalCfError):
    pass


def _add_common(p: argparse.ArgumentParser, *, model: bool = True) -> None:
    p.add_argument("--data", required=True, help="dataset CSV path")
    p.add_argument("--schema", required=True, help="schema JSON path")
    p.add_argument("--causal", help="causal rule JSON path (omit for no causal rules)")
    if model:
        p.add_argument(
            "--model",
            required=True,
            help="classifier: rules:<path> | exec:<command> | preds:<path>",
        )
        p.add_argument("--undesired", help="undesired class label (required for exec/preds models)")
    p.add_argument("--seed", type=int, default=0)


def _add_search(p: argparse.ArgumentParser) -> None:
    p.add_argument("--norm", nargs="+", choices=sorted(_NORMS), default=["l0", "l1", "l2"])
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--candidates", choices=sorted(_STRATEGIES), default="dataset")
    p.add_argument("--grid-step", type=float, default=1.0)
    p.add_argument("--mode", choices=["mc3g", "standard", "both"], default="both")
    p.add_argument("--backend", choices=["auto", *available_backends()], default="auto")
    p.add_argument("--jobs", type=int, default=1)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalcf",
        description="Minimal-cost counterfactuals under causal rule constraints.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="extract decision rules from a model")
    _add_common(p)
    p.add_argument("--out", required=True, help="output directory for rules.txt / fidelity.json")
    p.add_argument("--max-exception-depth", type=int, default=2)
    p.add_argument("--min-coverage", type=float, default=0.02)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("explain", help="counterfactual recourse for one instance")
    _add_common(p)
    _add_search(p)
    p.add_argument("--instance", type=int, default=0, help="dataset row index to explain")
    p.add_argument("--out", help="write the JSON result here ('-' for stdout)")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("bench", help="benchmark both cost modes over adverse rows")
    _add_common(p)
    _add_search(p)
    p.add_argument("--sample", type=int, help="benchmark a seeded sample of this many adverse rows")
    p.add_argument("--out", required=True, help="output directory for report.json / report.csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("validate", help="validate a schema/rules/causal bundle")
    p.add_argument("--schema", required=True)
    p.add_argument("--data", help="optional dataset CSV to validate against the schema")
    p.add_argument("--rules", help="optional decision rule file")
    p.add_argument("--causal", help="optional causal rule JSON")
    p.set_defaults(func=cmd_validate)
    return parser


def _load_bundle(args) -> tuple[Dataset, CausalRuleSet, BlackBox, str | None]:
    dataset = load_dataset(Path(args.data).read_bytes(), Path(args.schema).read_bytes())
    if args.causal:
        causal = load_causal_rules(Path(args.causal).read_bytes(), dataset.schema)
    else:
        causal = CausalRuleSet(())
    spec = ModelSpec.parse(args.model)
    if spec.kind == "rules":
        rules = parse_rules(Path(spec.payload).read_bytes(), dataset.schema)
        model: BlackBox = RuleBlackBox(rules)
        undesired = rules.undesired_label
        if args.undesired and args.undesired != undesired:
            raise errors.ParseError(
                f"--undesired {args.undesired!r} contradicts the rule file's "
                f"undesired label {undesired!r}"
            )
    elif spec.kind == "exec":
        model = SubprocessBlackBox(spec.payload)
        undesired = args.undesired
    else:
        model = PredictionFileBlackBox.from_files(Path(spec.payload).read_bytes(), dataset)
        undesired = args.undesired
    if undesired is None:
        raise errors.ParseError("--undesired is required for exec:/preds: models")
    return dataset, causal, model, undesired


def _source(args) -> CandidateSource:
    return CandidateSource(strategy=_STRATEGIES[args.candidates], grid_step=args.grid_step)


def cmd_learn(args) -> int:
    dataset, _, model, undesired = _load_bundle(args)
    config = LearnerConfig(
        max_exception_depth=args.max_exception_depth,
        min_coverage_fraction=args.min_coverage,
        seed=args.seed,
    )
    with model:
        rules = extract_logic(model, dataset, config, undesired_label=undesired)
        report = fidelity(model, rules, dataset)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "rules.txt").write_bytes(serialize_rules(rules))
    (out / "fidelity.json").write_bytes(
        (json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n").encode("utf-8")
    )
    print(f"wrote {out / 'rules.txt'} ({len(rules.rules)} rules, agreement {report.agreement_rate:.3f})")
    return EXIT_OK


def _recommendation(result, s0) -> str:
    schema = s0.schema
    lines = []
    for name in schema.names:
        if name in result.ledger.direct:
            lines.append(f"  do: set {name} to {result.state.value(name)} (was {s0.value(name)})")
    for name in schema.names:
        if name in result.ledger.induced:
            lines.append(
                f"  automatic: {name} becomes {result.state.value(name)} (was {s0.value(name)})"
            )
    return "\n".join(lines)


def cmd_explain(args) -> int:
    dataset, causal, model, undesired = _load_bundle(args)
    if not 0 <= args.instance < len(dataset.rows):
        raise errors.ParseError(f"--instance {args.instance} out of range for {len(dataset.rows)} rows")
    s0 = dataset.rows[args.instance]
    norms = [_NORMS[n] for n in args.norm]
    mode = "mc3g" if args.mode == "both" else args.mode
    with model:
        results = find_counterfactuals(
            model,
            dataset,
            s0,
            causal,
            source=_source(args),
            p=norms[0],
            k=args.k,
            mode=mode,
            undesired_label=undesired,
            backend=args.backend,
        )
    if not results:
        raise _NoCounterfactual("no valid counterfactual among the candidate states")

    weights = dataset.schema.default_weights()
    payload = []
    for result in results:
        entry = result.to_dict()
        entry["costs"] = {
            NORM_NAMES[p]: {
                "mc3g": compute_weighted_lp(s0, result.state, result.ledger.adjusted_weights, p).total,
                "standard": standard_cost(s0, result.state, weights, p).total,
            }
            for p in norms
        }
        entry["recommendation"] = _recommendation(result, s0)
        payload.append(entry)

    for result, entry in zip(results, payload):
        ranking_norm = NORM_NAMES[norms[0]]
        std = entry["costs"][ranking_norm]["standard"]
        print(f"counterfactual {result.rank}: cost {ranking_norm} = {result.cost.total} "
              f"(standard {std})")
        print(entry["recommendation"])
    if args.out:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        if args.out == "-":
            sys.stdout.write(text)
        else:
            Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_bench(args) -> int:
    dataset, causal, model, undesired = _load_bundle(args)
    with model:
        decisions = extract_logic(model, dataset, undesired_label=undesired)
        adverse_idx = [i for i, row in enumerate(dataset.rows) if decisions.compliant(row)]
        if not adverse_idx:
            raise errors.NotAdverse("no adverse rows in the dataset; nothing to benchmark")
        if args.sample is not None and args.sample < len(adverse_idx):
            rng = random.Random(args.seed)
            adverse_idx = sorted(rng.sample(adverse_idx, args.sample))
        instances = [dataset.rows[i] for i in adverse_idx]
        modes = ("mc3g", "standard") if args.mode == "both" else (args.mode,)
        report = run_benchmark(
            model,
            dataset,
            instances,
            causal,
            source=_source(args),
            norms=[_NORMS[n] for n in args.norm],
            k=args.k,
            modes=modes,
            undesired_label=undesired,
            backend=args.backend,
            jobs=args.jobs,
            dataset_name=Path(args.data).stem,
            seed=args.seed,
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_bytes(report.to_json())
    (out / "report.csv").write_bytes(report.to_csv())
    print(f"wrote {out / 'report.json'} and {out / 'report.csv'} "
          f"({len(instances)} instances, backend {args.backend if args.backend != 'auto' else DEFAULT_BACKEND})",
          file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    problems: list[str] = []
    schema = None
    try:
        schema = load_schema(Path(args.schema).read_bytes())
        print(f"{args.schema}: ok ({len(schema)} features)")
    except (errors.CausalCfError, OSError) as exc:
        problems.append(f"{args.schema}: {exc}")
    if schema is not None and not any(f.actionable for f in schema):
        problems.append(f"{args.schema}: no feature is actionable; recourse is impossible")

    decisions = None
    if args.rules and schema is not None:
        try:
            decisions = parse_rules(Path(args.rules).read_bytes(), schema)
            validate_ruleset(decisions, schema)
            print(f"{args.rules}: ok ({len(decisions.rules)} rules)")
        except (errors.CausalCfError, OSError) as exc:
            problems.append(f"{args.rules}: {exc}")

    causal = None
    if args.causal and schema is not None:
        try:
            causal = load_causal_rules(Path(args.causal).read_bytes(), schema)
            print(f"{args.causal}: ok ({len(causal)} causal rules)")
        except (errors.CausalCfError, OSError) as exc:
            problems.append(f"{args.causal}: {exc}")

    if schema is not None and decisions is not None and decisions.rules:
        referenced = {lit.feature for rule in decisions.rules for lit in rule.body}
        inducible = {r.consequent.feature for r in causal.rules} if causal is not None else set()
        reachable = [
            f for f in referenced
            if schema.feature(f).actionable or f in inducible
        ]
        if not reachable:
            problems.append(
                f"{args.rules}: every feature the rules test is non-actionable and "
                "not inducible by any causal rule; no recourse can exist"
            )

    if args.data and schema is not None:
        try:
            dataset = load_dataset(Path(args.data).read_bytes(), Path(args.schema).read_bytes())
            print(f"{args.data}: ok ({len(dataset)} rows)")
        except (errors.CausalCfError, OSError) as exc:
            problems.append(f"{args.data}: {exc}")

    for problem in problems:
        print(problem, file=sys.stderr)
    return EXIT_CONFIG if problems else EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except errors.NotAdverse as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_ADVERSE
    except _NoCounterfactual as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_COUNTERFACTUAL
    except _ADAPTER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ADAPTER
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

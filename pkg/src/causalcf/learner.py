"""Rule extraction from classifiers.

``extract_logic`` is the single entry point: rule-based models hand over
their rules verbatim; statistical models are queried for labels over the
dataset and a stratified rule program is induced from (rows, labels).

The induction is sequential covering for the undesired class: grow one
conjunctive rule at a time by greedily adding the literal with the best
Gini split gain on the still-covered rows; when no literal improves and
the rule still covers negatives, learn exception sub-rules on those
false positives (recursively, up to a depth bound); covered positives are
removed and the loop repeats.  Rules covering less than a configured
fraction of the undesired examples are suppressed.  Numeric thresholds
are midpoints between observed values (capped by quantile selection), so
every learned constant is derived from the data.  All tie-breaks are
deterministic: lowest feature index, then smallest threshold/value, then
operator order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from causalcf import errors
from causalcf.blackbox import BlackBox
from causalcf.rules import DecisionRule, DecisionRuleSet, Literal
from causalcf.schema import Dataset, Schema

_SPLIT_RE = re.compile(r"all-midpoints\Z|quantiles\((\d+)\)\Z")
_GAIN_EPS = 1e-12


@dataclass(frozen=True)
class LearnerConfig:
    max_exception_depth: int = 2
    min_coverage_fraction: float = 0.02
    split_candidates: str = "quantiles(32)"
    impurity: str = "gini"
    seed: int = 0  # reserved for sampled tie-breaks; current breaking is deterministic

    def __post_init__(self):
        if self.max_exception_depth < 0:
            raise errors.SchemaError("max_exception_depth must be >= 0")
        if not 0.0 < self.min_coverage_fraction < 1.0:
            raise errors.SchemaError("min_coverage_fraction must lie in (0, 1)")
        if self.impurity != "gini":
            raise errors.SchemaError(f"unsupported impurity {self.impurity!r}")
        if not _SPLIT_RE.match(self.split_candidates):
            raise errors.SchemaError(
                f"split_candidates must be 'all-midpoints' or 'quantiles(k)', got {self.split_candidates!r}"
            )

    @property
    def quantile_cap(self) -> int | None:
        m = _SPLIT_RE.match(self.split_candidates)
        return int(m.group(1)) if m.group(1) else None


@dataclass(frozen=True)
class FidelityReport:
    agreement_rate: float
    confusion: dict[str, int]
    rule_count: int
    literal_count: int

    def to_dict(self) -> dict:
        return {
            "agreement_rate": self.agreement_rate,
            "confusion": dict(self.confusion),
            "rule_count": self.rule_count,
            "literal_count": self.literal_count,
        }


# -- vectorized rule machinery ------------------------------------------------


class _Ctx:
    def __init__(self, schema: Schema, X: np.ndarray, y: np.ndarray):
        self.schema = schema
        self.X = X
        self.y = y
        self.pos_total = int(y.sum())
        self._mask_cache: dict[tuple, np.ndarray] = {}

    def literal_mask(self, lit: Literal) -> np.ndarray:
        key = (lit.feature, lit.op, lit.value)
        mask = self._mask_cache.get(key)
        if mask is None:
            feat = self.schema.feature(lit.feature)
            col = self.X[:, self.schema.index(lit.feature)]
            if lit.op == "eq":
                mask = col == feat.encode(lit.value)
            elif lit.op == "neq":
                mask = col != feat.encode(lit.value)
            elif lit.op == "le":
                mask = col <= feat.encode(lit.value)
            else:
                mask = col > feat.encode(lit.value)
            self._mask_cache[key] = mask
        return mask

    def rule_mask(self, rule: DecisionRule) -> np.ndarray:
        mask = np.ones(len(self.X), dtype=bool)
        for lit in rule.body:
            mask &= self.literal_mask(lit)
        for ex in rule.exceptions:
            mask &= ~self.rule_mask(ex)
        return mask


def _gini(pos: int, neg: int) -> float:
    tot = pos + neg
    if tot == 0:
        return 0.0
    p = pos / tot
    return 2.0 * p * (1.0 - p)


def _numeric_thresholds(vals: np.ndarray, labs: np.ndarray, cap: int | None) -> list[float]:
    uniq, inverse = np.unique(vals, return_inverse=True)
    if len(uniq) < 2:
        return []
    pos_at = np.bincount(inverse[labs], minlength=len(uniq))
    neg_at = np.bincount(inverse[~labs], minlength=len(uniq))
    mids = []
    for i in range(len(uniq) - 1):
        same_pure = (pos_at[i] == 0 and pos_at[i + 1] == 0) or (
            neg_at[i] == 0 and neg_at[i + 1] == 0
        )
        if not same_pure:
            mids.append((uniq[i] + uniq[i + 1]) / 2.0)
    if cap is not None and len(mids) > cap:
        idx = np.unique(np.linspace(0, len(mids) - 1, cap).round().astype(int))
        mids = [mids[i] for i in idx]
    return mids


def _candidates(ctx: _Ctx, cov: np.ndarray, labs_cov: np.ndarray, cap: int | None):
    """Yield candidate literals in deterministic tie-break order."""
    for j, feat in enumerate(ctx.schema):
        col_cov = ctx.X[cov, j]
        if feat.kind == "numeric":
            for t in _numeric_thresholds(col_cov, labs_cov, cap):
                yield Literal(feat.name, "le", float(t))
                yield Literal(feat.name, "gt", float(t))
        elif feat.kind == "ordinal":
            present = np.unique(col_cov).astype(int)
            if len(present) < 2:
                continue
            for i in range(int(present[0]), int(present[-1])):
                level = feat.domain[i]
                yield Literal(feat.name, "le", level)
                yield Literal(feat.name, "gt", level)
        else:
            for code in np.unique(col_cov).astype(int):
                value = feat.domain[int(code)]
                yield Literal(feat.name, "eq", value)
                yield Literal(feat.name, "neq", value)


def _grow(
    ctx: _Ctx,
    pos: np.ndarray,
    neg: np.ndarray,
    depth: int,
    cfg: LearnerConfig,
    head: str,
) -> tuple[DecisionRule, np.ndarray]:
    """Grow one rule separating pos from neg; returns (rule, fires mask)."""
    body: list[Literal] = []
    exceptions: list[DecisionRule] = []
    cov = pos | neg
    tried_exceptions = False
    while True:
        kp = int((cov & pos).sum())
        kn = int((cov & neg).sum())
        if kn == 0:
            break
        parent_gini = _gini(kp, kn)
        precision = kp / (kp + kn)
        ctot = kp + kn

        best_gain, best_gain_lit, best_gain_mask = _GAIN_EPS, None, None
        best_forced, best_forced_lit, best_forced_mask = None, None, None
        for lit in _candidates(ctx, cov, ctx.y[cov], cfg.quantile_cap):
            kept = cov & ctx.literal_mask(lit)
            p1 = int((kept & pos).sum())
            if p1 == 0:
                continue
            n1 = int((kept & neg).sum())
            size = p1 + n1
            if size == ctot:
                continue
            gain = (
                parent_gini
                - (size / ctot) * _gini(p1, n1)
                - ((ctot - size) / ctot) * _gini(kp - p1, kn - n1)
            )
            if gain > best_gain:
                best_gain, best_gain_lit, best_gain_mask = gain, lit, kept
            prec1 = p1 / size
            if prec1 >= precision - _GAIN_EPS:
                key = (prec1, p1)
                if best_forced is None or key > best_forced:
                    best_forced, best_forced_lit, best_forced_mask = key, lit, kept

        if best_gain_lit is not None:
            body.append(best_gain_lit)
            cov = best_gain_mask
            continue
        if body and not tried_exceptions and depth < cfg.max_exception_depth:
            tried_exceptions = True
            inner = _cover(ctx, cov & neg, cov & pos, depth + 1, cfg, head)
            removed = np.zeros(len(ctx.X), dtype=bool)
            for ex_rule, ex_mask in inner:
                if (ex_mask & cov & pos).any() or not (ex_mask & cov & neg).any():
                    continue
                exceptions.append(ex_rule)
                removed |= ex_mask
            if exceptions:
                cov = cov & ~removed
                continue
        if best_forced_lit is not None:
            body.append(best_forced_lit)
            cov = best_forced_mask
            continue
        break

    rule = DecisionRule(head, _simplify_body(ctx.schema, body), tuple(exceptions))
    fires = ctx.rule_mask(rule)
    return rule, fires


def _simplify_body(schema: Schema, body: list[Literal]) -> tuple[Literal, ...]:
    """Drop literals subsumed by a tighter one on the same feature (a
    conjunction of le-thresholds is its minimum, of gt-thresholds its
    maximum); preserves semantics exactly."""
    keep: list[Literal] = []
    tightest: dict[tuple[str, str], Literal] = {}
    for lit in body:
        if lit.op in ("le", "gt"):
            key = (lit.feature, lit.op)
            feat = schema.feature(lit.feature)
            prev = tightest.get(key)
            if prev is not None:
                better = (
                    feat.encode(lit.value) < feat.encode(prev.value)
                    if lit.op == "le"
                    else feat.encode(lit.value) > feat.encode(prev.value)
                )
                if better:
                    keep[keep.index(prev)] = lit
                    tightest[key] = lit
                continue
            tightest[key] = lit
            keep.append(lit)
        elif lit not in keep:
            keep.append(lit)
    return tuple(keep)


def _cover(
    ctx: _Ctx,
    pos: np.ndarray,
    neg: np.ndarray,
    depth: int,
    cfg: LearnerConfig,
    head: str,
) -> list[tuple[DecisionRule, np.ndarray]]:
    """Sequential covering of pos against neg."""
    out: list[tuple[DecisionRule, np.ndarray]] = []
    remaining = pos.copy()
    min_count = cfg.min_coverage_fraction * ctx.pos_total if depth == 0 else 1
    while remaining.any():
        rule, fires = _grow(ctx, remaining, neg, depth, cfg, head)
        if not rule.body and neg.any():
            break
        if depth == 0 and int((fires & ctx.y).sum()) < min_count:
            break
        newly = fires & remaining
        if not newly.any():
            break
        out.append((rule, fires))
        remaining = remaining & ~fires
    return out


def _always_rules(schema: Schema, head: str) -> tuple[DecisionRule, ...]:
    """Rules firing on every state, for the all-rows-undesired degenerate case."""
    for feat in schema:
        if feat.kind == "numeric":
            return (DecisionRule(head, (Literal(feat.name, "le", feat.domain[1]),)),)
        if feat.kind == "ordinal":
            return (DecisionRule(head, (Literal(feat.name, "le", feat.domain[-1]),)),)
    feat = schema.features[0]
    return tuple(DecisionRule(head, (Literal(feat.name, "eq", v),)) for v in feat.domain)


def learn_rules(
    data: Dataset,
    labels,
    config: LearnerConfig | None = None,
    *,
    undesired_label: str,
    default_label: str | None = None,
) -> DecisionRuleSet:
    """Induce a stratified rule program for the undesired class from labeled rows."""
    cfg = config or LearnerConfig()
    labels = list(labels)
    if len(labels) != len(data.rows):
        raise errors.SchemaMismatch(f"{len(labels)} labels for {len(data.rows)} rows")
    if default_label is None:
        counts: dict[str, int] = {}
        for lbl in labels:
            if lbl != undesired_label:
                counts[lbl] = counts.get(lbl, 0) + 1
        if counts:
            default_label = max(sorted(counts), key=lambda k: counts[k])
        else:
            default_label = f"not_{undesired_label}"

    y = np.array([lbl == undesired_label for lbl in labels], dtype=bool)
    if not y.any():
        return DecisionRuleSet((), undesired_label, default_label)
    if y.all():
        return DecisionRuleSet(_always_rules(data.schema, undesired_label), undesired_label, default_label)

    X = np.array([row.encoded() for row in data.rows], dtype=np.float64)
    ctx = _Ctx(data.schema, X, y)
    covered = _cover(ctx, y.copy(), ~y, 0, cfg, undesired_label)
    return DecisionRuleSet(tuple(rule for rule, _ in covered), undesired_label, default_label)


def _predict_rows(model: BlackBox, rows) -> list[str]:
    try:
        return model.predict(list(rows))
    except errors.ProtocolError as exc:
        raise errors.BlackBoxFailure(f"model adapter failed: {exc}", row_index=exc.index) from exc
    except (errors.Timeout, errors.MissingPrediction) as exc:
        raise errors.BlackBoxFailure(f"model adapter failed: {exc}") from exc


def extract_logic(
    model: BlackBox,
    data: Dataset,
    config: LearnerConfig | None = None,
    *,
    undesired_label: str | None = None,
) -> DecisionRuleSet:
    """Rules of the model itself when it is rule-based, else rules induced
    from the model's predictions over the dataset."""
    if not data.rows:
        raise errors.EmptyDataset("extract_logic needs a nonempty dataset")
    if model.is_rule_based:
        return model.rules  # type: ignore[attr-defined]
    if undesired_label is None:
        raise ValueError("undesired_label is required for non-rule-based models")
    labels = _predict_rows(model, data.rows)
    return learn_rules(data, labels, config, undesired_label=undesired_label)


def fidelity(model: BlackBox, rules: DecisionRuleSet, data: Dataset) -> FidelityReport:
    """Agreement of the rule set with the model over the dataset's rows."""
    if not data.rows:
        raise errors.EmptyDataset("fidelity needs a nonempty dataset")
    model_labels = _predict_rows(model, data.rows)
    matches = 0
    confusion = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    for row, got in zip(data.rows, model_labels):
        predicted = rules.classify(row)
        if predicted == got:
            matches += 1
        rule_pos = predicted == rules.undesired_label
        model_pos = got == rules.undesired_label
        key = "tp" if rule_pos and model_pos else "fp" if rule_pos else "fn" if model_pos else "tn"
        confusion[key] += 1
    return FidelityReport(
        agreement_rate=matches / len(data.rows),
        confusion=confusion,
        rule_count=len(rules.rules),
        literal_count=sum(r.literal_count() for r in rules.rules),
    )

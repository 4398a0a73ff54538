"""Decision rules: stratified if/except rule programs over states.

A rule set lists rules whose head is the undesired class; a state that
makes any rule fire receives the undesired outcome, everything else gets
the default (favorable) class.  Rules may carry exception sub-rules: a
rule fires when its whole body holds and no exception fires, evaluated
recursively.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

from causalcf import errors
from causalcf.schema import Schema, State

OPS = ("eq", "neq", "le", "gt", "in")
OP_TOKENS = {"=": "eq", "!=": "neq", "<=": "le", ">": "gt"}
TOKEN_OF_OP = {v: k for k, v in OP_TOKENS.items()}

#: Exception nesting deeper than this is rejected unless callers raise the bound.
DEFAULT_MAX_EXCEPTION_DEPTH = 2


@dataclass(frozen=True)
class Literal:
    """A single test on one feature.

    ``op`` is one of eq/neq (any kind), le/gt (numeric and ordinal, by
    declared level order), or ``in`` — a half-open interval (lo, hi], i.e.
    ``lo < x <= hi`` on the feature's arithmetic scale.
    """

    feature: str
    op: str
    value: object

    def __post_init__(self):
        if self.op not in OPS:
            raise errors.InvalidRule(f"unknown literal op {self.op!r}")
        if self.op == "in":
            try:
                lo, hi = self.value  # type: ignore[misc]
            except (TypeError, ValueError):
                raise errors.InvalidRule("interval literal needs a (lo, hi) pair") from None
            object.__setattr__(self, "value", (lo, hi))
        elif isinstance(self.value, bool):
            raise errors.InvalidRule("literal values cannot be booleans")
        elif isinstance(self.value, int):
            object.__setattr__(self, "value", float(self.value))

    def holds(self, state: State) -> bool:
        feat = state.schema.feature(self.feature)
        x = state.value(self.feature)
        if self.op == "eq":
            return x == self.value
        if self.op == "neq":
            return x != self.value
        if feat.kind == "categorical":
            raise errors.InvalidRule(
                f"op {self.op!r} not valid for categorical feature {self.feature!r}"
            )
        xe = feat.encode(x)
        if self.op == "le":
            return xe <= feat.encode(self.value)
        if self.op == "gt":
            return xe > feat.encode(self.value)
        lo, hi = self.value  # type: ignore[misc]
        return feat.encode(lo) < xe <= feat.encode(hi)


@dataclass(frozen=True)
class DecisionRule:
    """head :- body, unless an exception fires."""

    head: str
    body: tuple[Literal, ...]
    exceptions: tuple["DecisionRule", ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        # Exceptions are abnormality guards of this rule; they share its head.
        fixed = tuple(
            ex if ex.head == self.head else replace(ex, head=self.head)
            for ex in self.exceptions
        )
        object.__setattr__(self, "exceptions", fixed)

    def fires(self, state: State) -> bool:
        return all(lit.holds(state) for lit in self.body) and not any(
            ex.fires(state) for ex in self.exceptions
        )

    def depth(self) -> int:
        return 1 + max((ex.depth() for ex in self.exceptions), default=0)

    def literal_count(self) -> int:
        return len(self.body) + sum(ex.literal_count() for ex in self.exceptions)


@dataclass(frozen=True)
class DecisionRuleSet:
    """All rules for the undesired class plus the complement default class."""

    rules: tuple[DecisionRule, ...]
    undesired_label: str
    default_label: str

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        if self.undesired_label == self.default_label:
            raise errors.InvalidRule("undesired and default labels must differ")
        for rule in self.rules:
            if rule.head != self.undesired_label:
                raise errors.InvalidRule(
                    f"rule head {rule.head!r} != undesired label {self.undesired_label!r}"
                )

    def classify(self, state: State) -> str:
        return self.undesired_label if self.compliant(state) else self.default_label

    def compliant(self, state: State) -> bool:
        return any(rule.fires(state) for rule in self.rules)


def rule_fires(rule: DecisionRule, state: State) -> bool:
    """True iff all body literals hold on the state and no exception fires."""
    return rule.fires(state)


def is_decision_compliant(state: State, ruleset: DecisionRuleSet) -> bool:
    """True iff at least one rule fires, i.e. the state gets the undesired outcome."""
    return ruleset.compliant(state)


def validate_literal(lit: Literal, schema: Schema) -> None:
    feat = schema.feature(lit.feature)
    if lit.op in ("le", "gt", "in") and feat.kind == "categorical":
        raise errors.InvalidRule(
            f"op {lit.op!r} not valid for categorical feature {lit.feature!r}"
        )
    values = lit.value if lit.op == "in" else (lit.value,)
    for v in values:  # type: ignore[union-attr]
        if not feat.contains(v):
            raise errors.InvalidRule(
                f"literal value {v!r} outside domain of {lit.feature!r}"
            )
    if lit.op == "in":
        lo, hi = lit.value  # type: ignore[misc]
        if not feat.encode(lo) < feat.encode(hi):
            raise errors.InvalidRule(f"empty interval on {lit.feature!r}: {lit.value!r}")


def validate_ruleset(
    ruleset: DecisionRuleSet,
    schema: Schema,
    max_exception_depth: int = DEFAULT_MAX_EXCEPTION_DEPTH,
) -> None:
    """Check every literal against the schema and the exception-depth bound."""

    def walk(rule: DecisionRule, depth: int) -> None:
        if depth > max_exception_depth:
            raise errors.InvalidRule(
                f"exception nesting exceeds the configured bound of {max_exception_depth}"
            )
        for lit in rule.body:
            validate_literal(lit, schema)
        for ex in rule.exceptions:
            walk(ex, depth + 1)

    for rule in ruleset.rules:
        walk(rule, 0)


# -- text format -------------------------------------------------------------
#
#   undesired: reject
#   default: approve
#   reject :- balance <= 59999.0, credit <= 599.0 except (vip = yes)
#
# One rule per line; `#` starts a comment.  Interval literals have no surface
# form and serialize as the equivalent `f > lo, f <= hi` pair.

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<implies>:-)"
    r"|(?P<op><=|!=|=|>)"
    r"|(?P<comma>,)"
    r"|(?P<lparen>\()"
    r"|(?P<rparen>\))"
    r'|(?P<quoted>"[^"]*")'
    r"|(?P<word>[^\s,()\"=<>!]+)"
)

_DIRECTIVE_RE = re.compile(r"(undesired|default)\s*:\s*(\S+)\s*$")
_BARE_VALUE_RE = re.compile(r"[A-Za-z0-9_.+-]+\Z")


class _Tokens:
    def __init__(self, line: str, lineno: int):
        self.lineno = lineno
        self.items: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(line):
            m = _TOKEN_RE.match(line, pos)
            if m is None:
                raise errors.ParseError(
                    f"unexpected character {line[pos]!r}", line=lineno, col=pos + 1
                )
            if m.lastgroup != "ws":
                self.items.append((m.lastgroup, m.group(), pos + 1))
            pos = m.end()
        self.i = 0

    def peek(self) -> tuple[str, str, int] | None:
        return self.items[self.i] if self.i < len(self.items) else None

    def next(self, expected: str | None = None) -> tuple[str, str, int]:
        tok = self.peek()
        if tok is None:
            raise errors.ParseError(
                f"unexpected end of line (expected {expected})", line=self.lineno
            )
        if expected is not None and tok[0] != expected:
            raise errors.ParseError(
                f"expected {expected}, found {tok[1]!r}", line=self.lineno, col=tok[2]
            )
        self.i += 1
        return tok


def _parse_value(token_kind: str, text: str, feature: str, schema: Schema, lineno: int, col: int):
    raw = text[1:-1] if token_kind == "quoted" else text
    feat = schema.feature(feature)
    if feat.kind == "numeric":
        try:
            return float(raw)
        except ValueError:
            raise errors.ParseError(
                f"feature {feature!r} is numeric but value {raw!r} is not",
                line=lineno,
                col=col,
            ) from None
    return raw


def _parse_body(tokens: _Tokens, schema: Schema) -> tuple[tuple[Literal, ...], tuple[DecisionRule, ...]]:
    literals: list[Literal] = []
    while True:
        kind, text, col = tokens.next("word")
        if text == "except":
            raise errors.ParseError("rule body cannot start with 'except'", line=tokens.lineno, col=col)
        try:
            schema.feature(text)
        except errors.UnknownFeature as exc:
            raise errors.ParseError(str(exc), line=tokens.lineno, col=col) from exc
        op_kind, op_text, op_col = tokens.next()
        if op_kind != "op":
            raise errors.ParseError(
                f"expected an operator, found {op_text!r}", line=tokens.lineno, col=op_col
            )
        vkind, vtext, vcol = tokens.next()
        if vkind not in ("word", "quoted"):
            raise errors.ParseError(
                f"expected a value, found {vtext!r}", line=tokens.lineno, col=vcol
            )
        value = _parse_value(vkind, vtext, text, schema, tokens.lineno, vcol)
        lit = Literal(text, OP_TOKENS[op_text], value)
        try:
            validate_literal(lit, schema)
        except errors.InvalidRule as exc:
            raise errors.ParseError(str(exc), line=tokens.lineno, col=col) from exc
        literals.append(lit)
        nxt = tokens.peek()
        if nxt is not None and nxt[0] == "comma":
            tokens.next()
            continue
        break
    exceptions: list[DecisionRule] = []
    while True:
        nxt = tokens.peek()
        if nxt is None or nxt[0] != "word" or nxt[1] != "except":
            break
        tokens.next()
        tokens.next("lparen")
        ex_body, ex_exc = _parse_body(tokens, schema)
        tokens.next("rparen")
        exceptions.append(DecisionRule("", ex_body, tuple(ex_exc)))
    return tuple(literals), tuple(exceptions)


def parse_rules(
    source: bytes | str,
    schema: Schema,
    max_exception_depth: int = DEFAULT_MAX_EXCEPTION_DEPTH,
) -> DecisionRuleSet:
    """Parse the rule text format into a DecisionRuleSet."""
    text = source.decode("utf-8") if isinstance(source, bytes) else source
    undesired: str | None = None
    default: str | None = None
    rules: list[DecisionRule] = []
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if ":-" not in line:
            m = _DIRECTIVE_RE.match(line)
            if m is None:
                raise errors.ParseError(f"cannot parse line {raw_line!r}", line=lineno)
            if m.group(1) == "undesired":
                undesired = m.group(2)
            else:
                default = m.group(2)
            continue
        tokens = _Tokens(line, lineno)
        _, head, _ = tokens.next("word")
        tokens.next("implies")
        body, exc = _parse_body(tokens, schema)
        if tokens.peek() is not None:
            kind, txt, col = tokens.peek()  # type: ignore[misc]
            raise errors.ParseError(f"trailing {txt!r}", line=lineno, col=col)
        rules.append(DecisionRule(head, body, exc))
        if undesired is None:
            undesired = head
    if undesired is None:
        raise errors.ParseError("no rules and no 'undesired:' directive; labels unknown")
    if default is None:
        default = f"not_{undesired}"
    ruleset = DecisionRuleSet(tuple(rules), undesired, default)
    validate_ruleset(ruleset, schema, max_exception_depth)
    return ruleset


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    text = str(value)
    return text if _BARE_VALUE_RE.match(text) else f'"{text}"'


def _format_body(rule: DecisionRule) -> str:
    parts = []
    for lit in rule.body:
        if lit.op == "in":
            lo, hi = lit.value  # type: ignore[misc]
            parts.append(f"{lit.feature} > {_format_value(lo)}")
            parts.append(f"{lit.feature} <= {_format_value(hi)}")
        else:
            parts.append(f"{lit.feature} {TOKEN_OF_OP[lit.op]} {_format_value(lit.value)}")
    text = ", ".join(parts)
    for ex in rule.exceptions:
        text += f" except ({_format_body(ex)})"
    return text


def serialize_rules(ruleset: DecisionRuleSet) -> bytes:
    """Render a rule set in the text format; parse_rules inverts this exactly
    for any set expressible in the format (interval literals are lowered to
    their two-literal equivalent)."""
    lines = [f"undesired: {ruleset.undesired_label}", f"default: {ruleset.default_label}"]
    for rule in ruleset.rules:
        lines.append(f"{rule.head} :- {_format_body(rule)}")
    return ("\n".join(lines) + "\n").encode("utf-8")

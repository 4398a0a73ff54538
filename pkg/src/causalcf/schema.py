"""Feature schemas, states over them, and CSV/JSON dataset ingestion.

Value representation conventions used throughout the package:

* numeric features hold 64-bit floats;
* ordinal features hold one of their declared level strings, and all
  arithmetic (costs, thresholds) happens on the level's index in the
  declared order;
* categorical features hold one of their declared value strings and
  admit only equality tests.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field, replace
from itertools import product
from typing import IO, Iterator

from causalcf import errors

KINDS = ("numeric", "categorical", "ordinal")

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class FeatureSchema:
    """Declaration of one feature: kind, domain, actionability and cost metadata.

    ``norm_range`` divides raw numeric/ordinal differences in cost
    computations so features of different scales are commensurable.  When
    left unset it defaults to the domain width for numeric features and to
    1.0 (plain index distance) for ordinal ones; ``load_dataset`` replaces
    an unset numeric range with the observed max-min spread.
    """

    name: str
    kind: str
    domain: tuple
    actionable: bool = True
    weight: float = 1.0
    norm_range: float | None = None

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise errors.SchemaError(f"feature name {self.name!r} is not an identifier")
        if self.kind not in KINDS:
            raise errors.SchemaError(f"{self.name}: unknown kind {self.kind!r}")
        if self.kind == "numeric":
            if len(self.domain) != 2:
                raise errors.SchemaError(f"{self.name}: numeric domain must be [lo, hi]")
            lo, hi = (float(self.domain[0]), float(self.domain[1]))
            if not lo < hi:
                raise errors.SchemaError(f"{self.name}: numeric domain needs lo < hi")
            object.__setattr__(self, "domain", (lo, hi))
        else:
            values = tuple(self.domain)
            if not values:
                raise errors.SchemaError(f"{self.name}: empty {self.kind} domain")
            if any(not isinstance(v, str) for v in values):
                raise errors.SchemaError(f"{self.name}: {self.kind} values must be strings")
            if len(set(values)) != len(values):
                raise errors.SchemaError(f"{self.name}: duplicate {self.kind} values")
            object.__setattr__(self, "domain", values)
        if not float(self.weight) >= 0.0:
            raise errors.SchemaError(f"{self.name}: weight must be >= 0")
        object.__setattr__(self, "weight", float(self.weight))
        if self.norm_range is not None:
            if not float(self.norm_range) > 0.0:
                raise errors.SchemaError(f"{self.name}: norm_range must be > 0")
            object.__setattr__(self, "norm_range", float(self.norm_range))

    @property
    def effective_norm_range(self) -> float:
        if self.norm_range is not None:
            return self.norm_range
        if self.kind == "numeric":
            return self.domain[1] - self.domain[0]
        return 1.0

    def contains(self, value) -> bool:
        if self.kind == "numeric":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                return False
            return self.domain[0] <= float(value) <= self.domain[1]
        return value in self.domain

    def encode(self, value) -> float:
        """Map a domain value to the float used for arithmetic and kernels."""
        if self.kind == "numeric":
            return float(value)
        try:
            return float(self.domain.index(value))
        except ValueError:
            raise errors.DomainViolation(
                f"{value!r} not in domain of {self.name}", feature=self.name
            ) from None

    def decode(self, code: float):
        if self.kind == "numeric":
            return float(code)
        return self.domain[int(code)]


@dataclass(frozen=True)
class Schema:
    """An ordered collection of feature declarations."""

    features: tuple[FeatureSchema, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        feats = tuple(self.features)
        object.__setattr__(self, "features", feats)
        names = [f.name for f in feats]
        if len(set(names)) != len(names):
            raise errors.SchemaError("duplicate feature names in schema")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})

    def __len__(self) -> int:
        return len(self.features)

    def __iter__(self) -> Iterator[FeatureSchema]:
        return iter(self.features)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def feature(self, name: str) -> FeatureSchema:
        try:
            return self.features[self._index[name]]
        except KeyError:
            raise errors.UnknownFeature(f"unknown feature {name!r}") from None

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise errors.UnknownFeature(f"unknown feature {name!r}") from None

    def default_weights(self) -> tuple[float, ...]:
        return tuple(f.weight for f in self.features)

    def state(self, *values) -> "State":
        return State(self, tuple(values))

    def is_discrete(self) -> bool:
        return all(f.kind != "numeric" for f in self.features)


@dataclass(frozen=True)
class State:
    """One full assignment of values to the schema's features."""

    schema: Schema
    values: tuple

    def __post_init__(self):
        vals = tuple(self.values)
        if len(vals) != len(self.schema):
            raise errors.SchemaMismatch(
                f"state has {len(vals)} values for {len(self.schema)} features"
            )
        canon = []
        for feat, v in zip(self.schema, vals):
            if not feat.contains(v):
                raise errors.DomainViolation(
                    f"{v!r} outside domain of feature {feat.name!r}", feature=feat.name
                )
            canon.append(float(v) if feat.kind == "numeric" else v)
        object.__setattr__(self, "values", tuple(canon))

    def value(self, name: str):
        return self.values[self.schema.index(name)]

    def replace(self, **changes) -> "State":
        vals = list(self.values)
        for name, v in changes.items():
            vals[self.schema.index(name)] = v
        return State(self.schema, tuple(vals))

    def encoded(self) -> tuple[float, ...]:
        return tuple(f.encode(v) for f, v in zip(self.schema, self.values))

    def as_dict(self) -> dict:
        return dict(zip(self.schema.names, self.values))


@dataclass(frozen=True)
class Dataset:
    """Rows of states over one schema, with optional class labels."""

    schema: Schema
    rows: tuple[State, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        for i, row in enumerate(self.rows):
            if row.schema != self.schema:
                raise errors.SchemaMismatch(f"row {i} built against a different schema")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != len(self.rows):
                raise errors.SchemaMismatch(
                    f"{len(self.labels)} labels for {len(self.rows)} rows"
                )

    def __len__(self) -> int:
        return len(self.rows)


def state_diff(a: State, b: State) -> frozenset[str]:
    """Names of features whose values differ between two same-schema states."""
    if a.schema != b.schema:
        raise errors.SchemaMismatch("states do not share a schema")
    return frozenset(
        name for name, va, vb in zip(a.schema.names, a.values, b.values) if va != vb
    )


def enumerate_states(schema: Schema) -> Iterator[State]:
    """Every state of a fully discrete schema, in domain declaration order."""
    if not schema.is_discrete():
        raise errors.SchemaError("cannot enumerate states of a schema with numeric features")
    for combo in product(*(f.domain for f in schema)):
        yield State(schema, combo)


# -- serialization ----------------------------------------------------------


def _as_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def load_schema(source: bytes | str | IO) -> Schema:
    """Parse a schema JSON document (a list of feature objects)."""
    try:
        doc = json.loads(_as_text(source))
    except json.JSONDecodeError as exc:
        raise errors.ParseError(f"schema is not valid JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise errors.ParseError("schema document must be a JSON list of features")
    feats = []
    for entry in doc:
        if not isinstance(entry, dict) or "name" not in entry or "kind" not in entry:
            raise errors.ParseError(f"bad feature entry: {entry!r}")
        unknown = set(entry) - {"name", "kind", "domain", "actionable", "weight", "norm_range"}
        if unknown:
            raise errors.ParseError(f"unknown schema keys {sorted(unknown)} in {entry['name']!r}")
        try:
            feats.append(
                FeatureSchema(
                    name=entry["name"],
                    kind=entry["kind"],
                    domain=tuple(entry.get("domain", ())),
                    actionable=bool(entry.get("actionable", True)),
                    weight=entry.get("weight", 1.0),
                    norm_range=entry.get("norm_range"),
                )
            )
        except errors.SchemaError as exc:
            raise errors.ParseError(str(exc)) from exc
    return Schema(tuple(feats))


def schema_to_json(schema: Schema) -> bytes:
    doc = []
    for f in schema:
        entry: dict = {"name": f.name, "kind": f.kind, "domain": list(f.domain)}
        if not f.actionable:
            entry["actionable"] = False
        if f.weight != 1.0:
            entry["weight"] = f.weight
        if f.norm_range is not None:
            entry["norm_range"] = f.norm_range
        doc.append(entry)
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def _parse_cell(feat: FeatureSchema, cell: str, row: int):
    if feat.kind == "numeric":
        try:
            value = float(cell)
        except ValueError:
            raise errors.ParseError(
                f"cannot parse {cell!r} as a number for feature {feat.name!r}",
                line=row + 2,
            ) from None
    else:
        value = cell
    if not feat.contains(value):
        raise errors.DomainViolation(
            f"{cell!r} outside domain of {feat.name!r} at row {row}, column {feat.name!r}",
            feature=feat.name,
            row=row,
            column=feat.name,
        )
    return value


def load_dataset(csv_source: bytes | str | IO, schema_source: bytes | str | IO) -> Dataset:
    """Load and validate a CSV dataset against a schema document.

    The CSV header must list the schema's feature names in order; one extra
    trailing column is accepted and read as class labels.  Numeric features
    whose schema entry omits ``norm_range`` get the observed max-min spread.
    """
    schema = load_schema(schema_source)
    text = _as_text(csv_source)
    try:
        records = list(csv.reader(io.StringIO(text)))
    except csv.Error as exc:
        raise errors.ParseError(f"malformed CSV: {exc}") from exc
    if not records:
        raise errors.ParseError("CSV is empty (missing header row)")
    header = tuple(records[0])
    names = schema.names
    if header == names:
        label_col = None
    elif len(header) == len(names) + 1 and header[:-1] == names:
        label_col = len(names)
    else:
        raise errors.SchemaMismatch(
            f"CSV header {list(header)} does not match schema features {list(names)}"
        )

    raw_rows: list[list] = []
    labels: list[str] = []
    for i, record in enumerate(records[1:]):
        if not record:
            continue
        expected = len(names) + (1 if label_col is not None else 0)
        if len(record) != expected:
            raise errors.ParseError(f"row {i} has {len(record)} cells, expected {expected}")
        raw_rows.append([_parse_cell(f, c, i) for f, c in zip(schema, record)])
        if label_col is not None:
            labels.append(record[label_col])

    # Fill unset numeric norm_ranges from the observed spread (domain width
    # when the column is constant or there is no data).
    concrete = []
    for j, feat in enumerate(schema):
        if feat.kind == "numeric" and feat.norm_range is None:
            observed = [r[j] for r in raw_rows]
            spread = (max(observed) - min(observed)) if observed else 0.0
            concrete.append(replace(feat, norm_range=spread if spread > 0 else None))
        else:
            concrete.append(feat)
    final_schema = Schema(tuple(concrete))
    rows = tuple(State(final_schema, tuple(r)) for r in raw_rows)
    return Dataset(final_schema, rows, tuple(labels) if label_col is not None else None)


def dataset_to_csv(dataset: Dataset) -> bytes:
    """Serialize a dataset to CSV bytes that round-trip through load_dataset."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    header = list(dataset.schema.names)
    if dataset.labels is not None:
        header.append("label")
    writer.writerow(header)
    for i, row in enumerate(dataset.rows):
        cells = [repr(v) if isinstance(v, float) else v for v in row.values]
        if dataset.labels is not None:
            cells.append(dataset.labels[i])
        writer.writerow(cells)
    return out.getvalue().encode("utf-8")

"""Exception hierarchy shared by all causalcf modules."""

from __future__ import annotations


class CausalCfError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(CausalCfError):
    """A feature schema violates its own invariants (bad domain, weight, ...)."""


class SchemaMismatch(CausalCfError):
    """Two objects that must share a schema do not."""


class DomainViolation(CausalCfError):
    """A value falls outside its feature's declared domain."""

    def __init__(self, message: str, *, feature: str | None = None,
                 row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.feature = feature
        self.row = row
        self.column = column


class ParseError(CausalCfError):
    """A schema/rule/causal file could not be parsed."""

    def __init__(self, message: str, *, line: int | None = None, col: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", col {col}" if col is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.col = col


class UnknownFeature(CausalCfError):
    """A rule references a feature that does not exist in the schema."""


class InvalidRule(CausalCfError):
    """A rule is structurally unsound (op/kind mismatch, bad nesting, ...)."""


class CyclicGraphError(CausalCfError):
    """The causal rules induce a cycle between features."""

    def __init__(self, cycle: list[str]):
        super().__init__("cyclic causal graph: " + " -> ".join(cycle))
        self.cycle = tuple(cycle)


class CausallyInconsistentInput(CausalCfError):
    """An operation requiring a causally consistent state received one that is not."""


class NegativeWeight(CausalCfError):
    """A feature weight vector contains a negative entry."""


class EmptyDataset(CausalCfError):
    """An operation requiring data received an empty dataset."""


class BlackBoxFailure(CausalCfError):
    """The classifier adapter failed; carries the offending row index when known."""

    def __init__(self, message: str, *, row_index: int | None = None):
        if row_index is not None:
            message = f"{message} (row {row_index})"
        super().__init__(message)
        self.row_index = row_index


class ProtocolError(CausalCfError):
    """A subprocess model broke the line-oriented JSON protocol."""

    def __init__(self, message: str, *, index: int | None = None):
        super().__init__(message)
        self.index = index


class Timeout(CausalCfError):
    """A subprocess model did not answer a batch within the deadline."""


class MissingPrediction(CausalCfError):
    """A predictions-file model was asked about a state it has no label for."""


class NotAdverse(CausalCfError):
    """The instance to explain already receives the favorable outcome."""


class GridTooLarge(CausalCfError):
    """The projected candidate grid exceeds the configured cap."""

    def __init__(self, projected: int, cap: int):
        super().__init__(
            f"candidate grid would contain {projected} states (cap {cap}); "
            "coarsen the grid resolution or restrict feature value sets"
        )
        self.projected = projected
        self.cap = cap

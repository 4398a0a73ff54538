"""Adapters giving every classifier one predict() surface.

Three kinds:

* internal-rules — wraps a DecisionRuleSet and evaluates it directly;
* subprocess — talks to an external scorer over a line-oriented JSON
  protocol: one ``{"values": [...]}`` request per line on stdin, one
  ``{"label": "..."}`` reply per line on stdout, flushed per batch;
* predictions-file — replays published labels for known dataset rows.

Prediction must be deterministic from the caller's point of view:
subprocess adapters are expected to wrap deterministic scorers.  A handle
belongs to one logical owner at a time; internal-rules handles may be
shared freely.
"""

from __future__ import annotations

import csv
import io
import json
import shlex
import subprocess
import threading
from dataclasses import dataclass

from causalcf import errors
from causalcf.rules import DecisionRuleSet
from causalcf.schema import Dataset, State


class BlackBox:
    """Base adapter; subclasses implement _predict."""

    kind = "abstract"
    is_rule_based = False

    def predict(self, batch: list[State]) -> list[str]:
        """One label per state, order preserving."""
        if not batch:
            return []
        return self._predict(list(batch))

    def _predict(self, batch: list[State]) -> list[str]:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def predict(handle: BlackBox, batch: list[State]) -> list[str]:
    return handle.predict(batch)


class RuleBlackBox(BlackBox):
    """A model that *is* a rule set; predictions evaluate the rules."""

    kind = "internal-rules"
    is_rule_based = True

    def __init__(self, rules: DecisionRuleSet):
        self.rules = rules

    def _predict(self, batch: list[State]) -> list[str]:
        return [self.rules.classify(s) for s in batch]


def _json_value(value):
    return value if isinstance(value, str) else float(value)


class SubprocessBlackBox(BlackBox):
    """Scores states through a child process speaking the JSON-lines protocol."""

    kind = "subprocess"

    def __init__(self, argv: list[str] | str, timeout: float = 30.0):
        self.argv = shlex.split(argv) if isinstance(argv, str) else list(argv)
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None

    def _ensure_started(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.argv,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                )
            except OSError as exc:
                raise errors.BlackBoxFailure(f"cannot start model process: {exc}") from exc
        return self._proc

    def _predict(self, batch: list[State]) -> list[str]:
        proc = self._ensure_started()
        assert proc.stdin is not None and proc.stdout is not None
        try:
            for state in batch:
                request = {"values": [_json_value(v) for v in state.values]}
                proc.stdin.write(json.dumps(request) + "\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise errors.ProtocolError(f"model process closed stdin: {exc}") from exc

        replies: list[str] = []

        def reader():
            for _ in range(len(batch)):
                line = proc.stdout.readline()
                if not line:
                    break
                replies.append(line)

        thread = threading.Thread(target=reader, daemon=True)
        thread.start()
        thread.join(self.timeout)
        if thread.is_alive():
            self.close(kill=True)
            raise errors.Timeout(
                f"model process gave no reply within {self.timeout}s for a batch of {len(batch)}"
            )
        labels: list[str] = []
        for i in range(len(batch)):
            if i >= len(replies):
                raise errors.ProtocolError(
                    f"model process replied to {len(replies)} of {len(batch)} requests",
                    index=len(replies),
                )
            try:
                reply = json.loads(replies[i])
            except json.JSONDecodeError as exc:
                raise errors.ProtocolError(f"bad JSON reply: {exc}", index=i) from exc
            if not isinstance(reply, dict) or "label" not in reply:
                raise errors.ProtocolError(f"reply missing 'label': {replies[i]!r}", index=i)
            labels.append(str(reply["label"]))
        return labels

    def close(self, kill: bool = False) -> None:
        proc, self._proc = self._proc, None
        if proc is None:
            return
        try:
            if proc.stdin is not None:
                proc.stdin.close()
            if kill:
                proc.kill()
            try:
                proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait(timeout=2.0)
        except OSError:
            pass

    def __del__(self):
        try:
            self.close(kill=True)
        except Exception:
            pass


class PredictionFileBlackBox(BlackBox):
    """Replays labels recorded for dataset rows; valid only for those rows."""

    kind = "predictions-file"

    def __init__(self, labels_by_state: dict[tuple, str]):
        self._labels = dict(labels_by_state)

    @classmethod
    def from_files(cls, predictions_csv: bytes | str, dataset: Dataset) -> "PredictionFileBlackBox":
        """Join a ``row_id,label`` CSV against the dataset's rows."""
        text = predictions_csv.decode("utf-8") if isinstance(predictions_csv, bytes) else predictions_csv
        records = list(csv.reader(io.StringIO(text)))
        if not records or records[0] != ["row_id", "label"]:
            raise errors.ParseError("predictions file must have header 'row_id,label'")
        table: dict[tuple, str] = {}
        for lineno, record in enumerate(records[1:], start=2):
            if len(record) != 2:
                raise errors.ParseError("predictions row needs 2 cells", line=lineno)
            try:
                row_id = int(record[0])
                row = dataset.rows[row_id]
            except (ValueError, IndexError):
                raise errors.ParseError(
                    f"row_id {record[0]!r} does not name a dataset row", line=lineno
                ) from None
            key = row.values
            if key in table and table[key] != record[1]:
                raise errors.ParseError(
                    f"conflicting labels for identical rows (row_id {row_id})", line=lineno
                )
            table[key] = record[1]
        return cls(table)

    def _predict(self, batch: list[State]) -> list[str]:
        labels = []
        for state in batch:
            label = self._labels.get(state.values)
            if label is None:
                raise errors.MissingPrediction(
                    f"no recorded prediction for state {state.as_dict()!r}"
                )
            labels.append(label)
        return labels


@dataclass(frozen=True)
class ModelSpec:
    """Parsed form of the CLI's --model argument."""

    kind: str
    payload: str

    @classmethod
    def parse(cls, text: str) -> "ModelSpec":
        for prefix, kind in (("rules:", "rules"), ("exec:", "exec"), ("preds:", "preds")):
            if text.startswith(prefix):
                payload = text[len(prefix):]
                if not payload:
                    raise errors.ParseError(f"empty --model payload in {text!r}")
                return cls(kind, payload)
        raise errors.ParseError(
            f"--model must look like rules:<path>, exec:<cmd> or preds:<path>, got {text!r}"
        )

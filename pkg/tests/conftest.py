from __future__ import annotations

import json
from pathlib import Path

import pytest

from causalcf.cli import main as cli_main
from causalcf.synth import loan_world

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def loan():
    return loan_world()


@pytest.fixture(scope="session")
def loan_paths():
    d = FIXTURES / "loan"
    return {
        "data": str(d / "data.csv"),
        "schema": str(d / "schema.json"),
        "rules": str(d / "decision.rules"),
        "causal": str(d / "causal.json"),
    }


@pytest.fixture
def run_cli(capsys):
    """Invoke the CLI in-process; returns (exit_code, stdout, stderr)."""

    def runner(*argv):
        code = cli_main(list(argv))
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return runner


def read_json(path) -> object:
    return json.loads(Path(path).read_text(encoding="utf-8"))

from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from helpers import ACCEPTANCE_REPORT, corpus_sessions, replay_gateway, run_corpus_session


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_REPORT):
        terminalreporter.write_line(ACCEPTANCE_REPORT[name])


@pytest.fixture(scope="session")
def corpus():
    return corpus_sessions()


@pytest.fixture(scope="session")
def corpus_results(corpus):
    """Each fixture-corpus session run once per test session; results are immutable."""
    return {spec["name"]: run_corpus_session(spec) for spec in corpus}


@pytest.fixture(scope="session")
def tutorial_result(corpus_results):
    return corpus_results["tutorial"]


@pytest.fixture()
def gateway():
    return replay_gateway()

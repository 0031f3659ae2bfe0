from __future__ import annotations

from pathlib import Path

import pytest

from reconfig.adl import parse_adl, validate
from reconfig.corpus import load_corpus
from reconfig.factory import Granularity, instantiate, plan_modules
from reconfig.modules import ModuleManager

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def corpus_path(name: str) -> Path:
    return FIXTURES / "corpora" / name


def adl_path(name: str) -> Path:
    return FIXTURES / "adl" / name


def script_path(name: str) -> Path:
    return FIXTURES / "scripts" / name


def build_architecture(adl_name: str, corpus_name: str,
                       granularity: Granularity = Granularity.PER_COMPONENT,
                       mgr: ModuleManager | None = None):
    """Parse, validate, plan, and instantiate a fixture architecture."""
    definition = parse_adl(adl_path(adl_name).read_text(encoding="utf-8"))
    corpus = load_corpus(corpus_path(corpus_name))
    diagnostics = validate(definition, corpus)
    assert diagnostics == [], [d.render() for d in diagnostics]
    plan = plan_modules(definition, granularity, corpus)
    arch = instantiate(definition, plan, mgr or ModuleManager(), corpus)
    return arch, corpus, plan


_acceptance_results: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _acceptance_results.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance_results:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict} {name}")

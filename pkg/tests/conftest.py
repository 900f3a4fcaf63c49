"""Shared fixtures: tiny deterministic corpora kept cheap with small dims."""

from __future__ import annotations

from datetime import date

import pytest

from sonoscope import (
    ConceptSpec,
    CorpusSpec,
    CorpusStore,
    GroundTruth,
    TemporalPattern,
    generate_synthetic_corpus,
)


def two_concept_spec(dim: int = 8, days: int = 1, seed: int = 11) -> CorpusSpec:
    return CorpusSpec(
        sensors=1,
        days=days,
        dim=dim,
        seed=seed,
        start_day=date(2022, 1, 1),
        concepts=(
            ConceptSpec(
                name="siren",
                center=tuple([4.0] * (dim // 2) + [0.0] * (dim - dim // 2)),
                stddev=0.5,
                pattern=TemporalPattern(rate=0.05),
            ),
            ConceptSpec(
                name="jackhammer",
                center=tuple([0.0] * (dim - dim // 2) + [-4.0] * (dim // 2)),
                stddev=0.5,
                pattern=TemporalPattern(start_minute=480, end_minute=1020, rate=0.1),
            ),
        ),
    )


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory) -> tuple[CorpusStore, GroundTruth]:
    root = tmp_path_factory.mktemp("corpus-small")
    return generate_synthetic_corpus(two_concept_spec(), root)


def pytest_terminal_summary(terminalreporter, exitstatus, config) -> None:
    """Echo one pass/fail line per acceptance check at the end of the run."""
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None) if module else None
    if not results:
        return
    terminalreporter.write_sep("=", "acceptance checks")
    for line in results:
        terminalreporter.write_line(line)

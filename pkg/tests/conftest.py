import json
from pathlib import Path

import pytest

from oblint import analyze_to_fixpoint, parse_module, validate_module
from oblint.harness import load_harness
from oblint.ir import has_errors

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

CORPUS_PROGRAMS = sorted(p.stem for p in CORPUS.glob("*.bir"))


def corpus_path(name: str) -> Path:
    return CORPUS / f"{name}.bir"


def harness_path(name: str) -> Path:
    return CORPUS / "harnesses" / f"{name}.json"


def load_corpus_module(name: str):
    m = parse_module(corpus_path(name).read_text())
    diags = validate_module(m)
    assert not has_errors(diags), diags
    return m


def load_corpus_harness(name: str):
    return load_harness(harness_path(name))


@pytest.fixture(scope="session")
def manifest():
    return json.loads((CORPUS / "manifest.json").read_text())


@pytest.fixture(scope="session")
def analyzed_corpus():
    """Static analysis results for every corpus program, computed once."""
    out = {}
    for name in CORPUS_PROGRAMS:
        m = load_corpus_module(name)
        out[name] = (m, analyze_to_fixpoint(m))
    return out

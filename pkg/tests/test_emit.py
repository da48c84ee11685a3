import re

import pytest

from oblint import analyze_to_fixpoint, parse_module
from oblint.ir import emit_annotated, emit_module
from oblint.taint import TaintState

from conftest import CORPUS_PROGRAMS, corpus_path


def analyze(src: str):
    m = parse_module(src)
    return m, analyze_to_fixpoint(m)


def marked_lines(text: str) -> list[str]:
    return [line.strip() for line in text.splitlines() if line.endswith("!t")]


def test_empty_taint_emits_no_markers():
    m = parse_module(corpus_path("find_max").read_text())
    out = emit_annotated(m, TaintState.empty())
    assert "!t" not in out


def test_blinded_scalar_single_add_marks_exactly_that_line():
    # Hand propagation: %k is the only seed, the add is its only use, so the
    # add result is the only tainted instruction line.
    _, res = analyze("fn scale(%k: i32 blinded, %m: i32) -> i32 {\nentry:\n  %r = add i32 %k, %m\n  ret %r\n}\n")
    out = emit_annotated(res.module, res.taint)
    assert marked_lines(out) == ["%r = add i32 %k, %m !t"]


def test_find_max_markers_match_expected_pattern():
    m = parse_module(corpus_path("find_max").read_text())
    res = analyze_to_fixpoint(m)
    out = emit_annotated(res.module, res.taint)
    marked = marked_lines(out)
    assert any(line.startswith("%v = load") for line in marked)
    assert any(line.startswith("%gt = icmp") for line in marked)
    assert not any(line.startswith("%p = addr") for line in marked)


def test_marker_count_equals_tainted_value_defs():
    m = parse_module(corpus_path("page_rank").read_text())
    res = analyze_to_fixpoint(m)
    out = emit_annotated(res.module, res.taint)
    n_markers = out.count("!t")
    tainted_results = 0
    for fn, _, _, inst in res.module.instructions():
        r = getattr(inst, "result", None)
        if r and res.taint.is_value_tainted(fn.name, r):
            tainted_results += 1
    assert n_markers == tainted_results


def test_annotated_output_reparses_to_same_module():
    m = parse_module(corpus_path("find_max").read_text())
    res = analyze_to_fixpoint(m)
    again = parse_module(emit_annotated(res.module, res.taint))
    assert again == res.module


@pytest.mark.parametrize("name", CORPUS_PROGRAMS)
def test_double_roundtrip_is_stable(name):
    first = parse_module(corpus_path(name).read_text())
    text = emit_module(first)
    assert emit_module(parse_module(text)) == text


def test_global_and_extern_formatting():
    src = "global @t: [2 x i32] blinded = [5, 6]\nextern max(i32, i32) -> i32\n\nfn f() -> i32 {\nentry:\n  ret 0\n}\n"
    m = parse_module(src)
    out = emit_module(m)
    assert "global @t: [2 x i32] blinded = [5, 6]" in out
    assert "extern max(i32, i32) -> i32" in out
    assert parse_module(out) == m

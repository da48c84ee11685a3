import pytest

from oblint import parse_module
from oblint.ir import (
    Alloca,
    ArrayType,
    Call,
    IntType,
    ParseError,
    Phi,
    PtrType,
    StructType,
    emit_module,
    parse_type,
)

from conftest import CORPUS_PROGRAMS, corpus_path


def test_minimal_program_one_line():
    m = parse_module("fn main() -> i32 { entry: ret 0 }")
    assert len(m.functions) == 1
    fn = m.functions[0]
    assert len(fn.blocks) == 1
    assert len(fn.blocks[0].instructions) == 1


def test_blinded_pointer_parameter():
    m = parse_module(corpus_path("find_max").read_text())
    fn = m.function("find_max")
    assert fn is not None
    blinded = [p.name for p in fn.params if p.blinded]
    assert blinded == ["arr"]
    assert isinstance(fn.param("arr").ty, PtrType)


def test_truncated_operand_is_a_syntax_error():
    with pytest.raises(ParseError) as exc:
        parse_module("fn f() -> i32 { entry: %x = add i32 1, }")
    assert exc.value.line == 1
    assert exc.value.col > 0


@pytest.mark.parametrize(
    "bad",
    [
        "fn f() -> i32 { entry: %x = frobnicate i32 1, 2 }",
        "fn f() -> q32 { entry: ret 0 }",
        "fn f() { %x = add i32 1, 2 ret }",  # instruction before any label
        "global x: i32",  # global name must use @
    ],
)
def test_malformed_input_raises(bad):
    with pytest.raises(ParseError):
        parse_module(bad)


def test_types_parse_and_print():
    assert parse_type("i1") == IntType(1)
    assert parse_type("ptr") == PtrType()
    assert parse_type("[4 x i32]") == ArrayType(IntType(32), 4)
    nested = parse_type("{i32, [2 x {i8, i64}]}")
    assert isinstance(nested, StructType)
    assert str(parse_type(str(nested))) == str(nested)


def test_globals_externs_and_calls():
    m = parse_module(
        """
global @table: [4 x i32] blinded = [1, 2, 3, 4]
global @flag: i8

extern print(i32)
extern max(i32, i32) -> i32

fn main() -> i32 {
entry:
  %m = call max(1, 2)
  call print(%m)
  ret %m
}
"""
    )
    assert m.global_def("table").blinded
    assert m.global_def("table").init == [1, 2, 3, 4]
    assert m.extern("print").ret_ty is None
    calls = [i for _, _, _, i in m.instructions() if isinstance(i, Call)]
    assert [c.callee for c in calls] == ["max", "print"]
    assert calls[1].result is None


def test_alloca_count_and_phi_arms():
    m = parse_module(
        """
fn f(%c: i1) -> i32 {
entry:
  %buf = alloca i32, 8
  br %c, a, b
a:
  jmp join
b:
  jmp join
join:
  %x = phi i32 [1, a], [-2, b]
  ret %x
}
"""
    )
    allocas = [i for _, _, _, i in m.instructions() if isinstance(i, Alloca)]
    assert allocas[0].count == 8
    phis = [i for _, _, _, i in m.instructions() if isinstance(i, Phi)]
    assert len(phis[0].incomings) == 2


def test_taint_marker_is_ignored():
    marked = "fn f(%k: i32 blinded) -> i32 {\nentry:\n  %r = add i32 %k, 1 !t\n  ret %r\n}\n"
    plain = marked.replace(" !t", "")
    assert parse_module(marked) == parse_module(plain)


def test_comments_are_ignored():
    m = parse_module("; header\nfn f() -> i32 { entry: ret 0 } ; trailing\n; tail\n")
    assert m.function("f") is not None


@pytest.mark.parametrize("name", CORPUS_PROGRAMS)
def test_roundtrip_corpus(name):
    first = parse_module(corpus_path(name).read_text())
    second = parse_module(emit_module(first))
    assert first == second

import random

import pytest

from oblint import analyze_to_fixpoint, parse_module
from oblint.ir import Addr, BinOp, Cast, ICmp, Phi, Select, ValueRef
from oblint.pointsto import AbstractObject, analyze
from oblint.vfg import (
    ADDR_INDEX,
    DATA,
    MEMORY_READ,
    MEMORY_WRITE,
    SELECT_COND,
    ObjectNode,
    ValueFlowGraph,
    ValueNode,
    build,
    reachable,
)

from conftest import CORPUS_PROGRAMS, corpus_path


# --- independent oracle: boolean-matrix transitive closure ---------------------

def closure_reachable(nodes, edges, sources):
    n = len(nodes)
    index = {node: i for i, node in enumerate(nodes)}
    reach = [[False] * n for _ in range(n)]
    for i in range(n):
        reach[i][i] = True
    for src, dst in edges:
        reach[index[src]][index[dst]] = True
    for k in range(n):
        rk = reach[k]
        for i in range(n):
            if reach[i][k]:
                ri = reach[i]
                for j in range(n):
                    if rk[j]:
                        ri[j] = True
    out = set()
    for s in sources:
        for j in range(n):
            if reach[index[s]][j]:
                out.add(nodes[j])
    return out


def graph_of(n_nodes, edge_pairs):
    nodes = [ValueNode("g", f"n{i}") for i in range(n_nodes)]
    edges = {(nodes[a], nodes[b], DATA) for a, b in edge_pairs}
    return nodes, ValueFlowGraph(nodes, edges)


def build_for(src: str):
    m = parse_module(src)
    pts = analyze(m)
    return m, pts, build(m, pts)


# --- tests ----------------------------------------------------------------------

def test_select_edges():
    _, _, g = build_for(
        "fn f(%cond: i1, %a: i32, %b: i32) -> i32 {\nentry:\n  %c = select %cond, i32 %a, %b\n  ret %c\n}\n"
    )
    res = ValueNode("f", "c")
    assert (ValueNode("f", "cond"), res, SELECT_COND) in g.edges
    assert (ValueNode("f", "a"), res, DATA) in g.edges
    assert (ValueNode("f", "b"), res, DATA) in g.edges


def test_store_then_load_through_one_alloca():
    _, _, g = build_for(
        """
fn f(%x: i32) -> i32 {
entry:
  %p = alloca i32
  store i32 %x, %p
  %v = load i32, %p
  ret %v
}
"""
    )
    obj = ObjectNode(AbstractObject("f:entry:0", "stack"))
    assert (ValueNode("f", "x"), obj, MEMORY_WRITE) in g.edges
    assert (obj, ValueNode("f", "v"), MEMORY_READ) in g.edges
    # the whole path is reachable from the stored value
    assert ValueNode("f", "v") in reachable(g, {ValueNode("f", "x")})


def test_tainted_address_flows_into_loaded_value_and_written_object():
    _, _, g = build_for(
        """
fn f(%p: ptr, %i: i32) -> i32 {
entry:
  %q = addr i32, %p, %i
  %v = load i32, %q
  store i32 0, %q
  ret %v
}
"""
    )
    q = ValueNode("f", "q")
    assert (ValueNode("f", "i"), q, ADDR_INDEX) in g.edges
    assert (ValueNode("f", "p"), q, DATA) in g.edges  # base flows into the address
    assert (q, ValueNode("f", "v"), MEMORY_READ) in g.edges
    obj = ObjectNode(AbstractObject("f::p", "extern"))
    assert (q, obj, MEMORY_WRITE) in g.edges


def test_page_rank_path_from_edge_load_to_counter_address():
    m = parse_module(corpus_path("page_rank").read_text())
    pts = analyze(m)
    g = build(m, pts)
    edges_obj = ObjectNode(AbstractObject("count_out_edges::edges", "extern"))
    reach = reachable(g, {edges_obj})
    f = "count_out_edges"
    assert ValueNode(f, "src") in reach
    assert ValueNode(f, "vp") in reach  # via the addr-index edge
    assert ValueNode(f, "np") in reach  # via the addr base edge


def test_empty_sources_reach_nothing():
    _, g = graph_of(5, [(0, 1), (1, 2)])
    assert reachable(g, set()) == frozenset()


def test_sources_included_in_result():
    nodes, g = graph_of(3, [(0, 1)])
    assert nodes[2] in reachable(g, {nodes[2]})


def test_random_dags_match_matrix_closure():
    rng = random.Random(4321)
    for trial in range(200):
        n = rng.randint(1, 50)
        pairs = set()
        for _ in range(rng.randint(0, 3 * n)):
            a, b = rng.randrange(n), rng.randrange(n)
            if a < b:  # forward edges only: a DAG
                pairs.add((a, b))
        nodes, g = graph_of(n, pairs)
        k = rng.randint(0, max(1, n // 4))
        sources = set(rng.sample(nodes, k)) if k else set()
        got = reachable(g, sources)
        want = closure_reachable(
            nodes, {(nodes[a], nodes[b]) for a, b in pairs}, sources
        )
        assert got == want, f"trial {trial} diverged"


def test_reachability_is_monotone_in_sources():
    rng = random.Random(5)
    nodes, g = graph_of(30, {(a, b) for a in range(30) for b in range(a + 1, 30) if rng.random() < 0.1})
    small = {nodes[0]}
    big = {nodes[0], nodes[7], nodes[12]}
    assert reachable(g, small) <= reachable(g, big)


@pytest.mark.parametrize("name", CORPUS_PROGRAMS)
def test_direct_operand_uses_mirror_edges(name):
    """Every direct-flow operand use produces exactly one edge of the right
    label, and those edges come only from such uses."""
    m = parse_module(corpus_path(name).read_text())
    pts = analyze(m)
    g = build(m, pts)

    from oblint.ir import Call

    expected = []
    for fn, _, _, inst in m.instructions():
        f = fn.name
        if isinstance(inst, (BinOp, ICmp)):
            ops = [(inst.lhs, DATA), (inst.rhs, DATA)]
        elif isinstance(inst, Cast):
            ops = [(inst.value, DATA)]
        elif isinstance(inst, Phi):
            ops = [(v, DATA) for v, _ in inst.incomings]
        elif isinstance(inst, Select):
            ops = [(inst.if_true, DATA), (inst.if_false, DATA), (inst.cond, SELECT_COND)]
        elif isinstance(inst, Addr):
            ops = [(inst.base, DATA)] + [(i, ADDR_INDEX) for i in inst.indices]
        elif isinstance(inst, Call) and m.extern(inst.callee) is not None and inst.result:
            ops = [(a, DATA) for a in inst.args]  # extern results depend on all args
        else:
            continue
        for op, label in ops:
            if isinstance(op, ValueRef):
                expected.append((ValueNode(f, op.name), ValueNode(f, inst.result), label))

    mirror = {e for e in g.edges if e[2] in (DATA, SELECT_COND, ADDR_INDEX)}
    assert mirror == set(expected)


def test_dot_export_mentions_labels_and_nodes():
    _, _, g = build_for(
        "fn f(%a: i32) -> i32 {\nentry:\n  %b = add i32 %a, 1\n  ret %b\n}\n"
    )
    dot = g.to_dot()
    assert dot.startswith("digraph")
    assert 'label="data"' in dot
    assert "f:%a" in dot

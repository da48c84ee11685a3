"""Value-flow graph: the dependency graph along which taint propagates.

Nodes are SSA definitions (parameters and instruction results) plus abstract
memory objects. Direct operand flow is labelled `data`; the remaining labels
mark the special channels: the select condition, address-index arithmetic,
memory reads/writes (including flow from a tainted address into whatever moves
through it), and call argument/return binding.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Union

from .ir import (
    Addr,
    BinOp,
    Br,
    Call,
    Cast,
    GlobalRef,
    ICmp,
    Load,
    Module,
    Phi,
    PtrType,
    Ret,
    Select,
    Store,
    ValueRef,
)
from .pointsto import AbstractObject, PointsToMap

DATA = "data"
MEMORY_WRITE = "memory-write"
MEMORY_READ = "memory-read"
SELECT_COND = "select-cond"
CALL_ARG = "call-arg"
CALL_RET = "call-ret"
ADDR_INDEX = "addr-index"

EDGE_LABELS = (DATA, MEMORY_WRITE, MEMORY_READ, SELECT_COND, CALL_ARG, CALL_RET, ADDR_INDEX)


@dataclass(frozen=True)
class ValueNode:
    function: str
    name: str

    def __str__(self) -> str:
        return f"{self.function}:%{self.name}"


@dataclass(frozen=True)
class ObjectNode:
    obj: AbstractObject

    def __str__(self) -> str:
        return f"obj:{self.obj.site}"


VfgNode = Union[ValueNode, ObjectNode]


def node_sort_key(n: VfgNode):
    if isinstance(n, ValueNode):
        return (0, n.function, n.name)
    return (1, n.obj.kind, n.obj.site)


class ValueFlowGraph:
    def __init__(self, nodes: Iterable[VfgNode], edges: Iterable[tuple]):
        self.nodes = frozenset(nodes)
        self.edges = frozenset(edges)  # (src, dst, label)
        succ: dict[VfgNode, list] = {}
        for src, dst, label in self.edges:
            succ.setdefault(src, []).append((dst, label))
        self._succ = {
            n: tuple(sorted(out, key=lambda e: (node_sort_key(e[0]), e[1])))
            for n, out in succ.items()
        }

    def successors(self, node: VfgNode) -> tuple:
        return self._succ.get(node, ())

    def edges_with_label(self, label: str) -> set[tuple]:
        return {e for e in self.edges if e[2] == label}

    def to_dot(self) -> str:
        names = {n: f"n{i}" for i, n in enumerate(sorted(self.nodes, key=node_sort_key))}
        lines = ["digraph vfg {"]
        for n, ident in names.items():
            shape = "box" if isinstance(n, ObjectNode) else "ellipse"
            lines.append(f'  {ident} [label="{n}", shape={shape}];')
        for src, dst, label in sorted(
            self.edges, key=lambda e: (node_sort_key(e[0]), node_sort_key(e[1]), e[2])
        ):
            lines.append(f'  {names[src]} -> {names[dst]} [label="{label}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build(m: Module, pts: PointsToMap) -> ValueFlowGraph:
    nodes: set[VfgNode] = set()
    edges: set[tuple] = set()

    for obj in pts.objects:
        nodes.add(ObjectNode(obj))

    def vn(fn: str, name: str) -> ValueNode:
        return ValueNode(fn, name)

    def ref_node(fn: str, op) -> ValueNode | None:
        # Only SSA values carry taint; globals and constants are addresses or
        # literals and are never tainted as values.
        if isinstance(op, ValueRef):
            return vn(fn, op.name)
        return None

    for fn in m.functions:
        for p in fn.params:
            nodes.add(vn(fn.name, p.name))

    def add(src, dst, label) -> None:
        edges.add((src, dst, label))

    for fn, block, idx, inst in m.instructions():
        f = fn.name
        if isinstance(inst, (BinOp, ICmp)):
            res = vn(f, inst.result)
            nodes.add(res)
            for op in (inst.lhs, inst.rhs):
                src = ref_node(f, op)
                if src is not None:
                    add(src, res, DATA)
        elif isinstance(inst, Cast):
            res = vn(f, inst.result)
            nodes.add(res)
            src = ref_node(f, inst.value)
            if src is not None:
                add(src, res, DATA)
        elif isinstance(inst, Phi):
            res = vn(f, inst.result)
            nodes.add(res)
            for value, _ in inst.incomings:
                src = ref_node(f, value)
                if src is not None:
                    add(src, res, DATA)
        elif isinstance(inst, Select):
            res = vn(f, inst.result)
            nodes.add(res)
            for op in (inst.if_true, inst.if_false):
                src = ref_node(f, op)
                if src is not None:
                    add(src, res, DATA)
            csrc = ref_node(f, inst.cond)
            if csrc is not None:
                add(csrc, res, SELECT_COND)
        elif isinstance(inst, Addr):
            res = vn(f, inst.result)
            nodes.add(res)
            bsrc = ref_node(f, inst.base)
            if bsrc is not None:
                add(bsrc, res, DATA)
            for op in inst.indices:
                src = ref_node(f, op)
                if src is not None:
                    add(src, res, ADDR_INDEX)
        elif isinstance(inst, Load):
            res = vn(f, inst.result)
            nodes.add(res)
            for obj in pts.of_operand(f, inst.addr):
                add(ObjectNode(obj), res, MEMORY_READ)
            asrc = ref_node(f, inst.addr)
            if asrc is not None:
                add(asrc, res, MEMORY_READ)
        elif isinstance(inst, Store):
            vsrc = ref_node(f, inst.value)
            asrc = ref_node(f, inst.addr)
            for obj in pts.of_operand(f, inst.addr):
                objnode = ObjectNode(obj)
                nodes.add(objnode)
                if vsrc is not None:
                    add(vsrc, objnode, MEMORY_WRITE)
                if asrc is not None:
                    add(asrc, objnode, MEMORY_WRITE)
        elif isinstance(inst, Call):
            _call_edges(m, f, inst, nodes, edges, pts)

    for n in set(e[0] for e in edges) | set(e[1] for e in edges):
        nodes.add(n)
    return ValueFlowGraph(nodes, edges)


def _call_edges(m: Module, caller: str, inst: Call, nodes, edges, pts: PointsToMap) -> None:
    def add(src, dst, label):
        edges.add((src, dst, label))

    arg_nodes = [
        ValueNode(caller, a.name) if isinstance(a, ValueRef) else None for a in inst.args
    ]
    target = m.function(inst.callee)
    if target is not None:
        for p, asrc in zip(target.params, arg_nodes):
            pnode = ValueNode(target.name, p.name)
            nodes.add(pnode)
            if asrc is not None:
                add(asrc, pnode, CALL_ARG)
        if inst.result is not None:
            res = ValueNode(caller, inst.result)
            nodes.add(res)
            for _, _, _, ti in m.instructions():
                if (
                    isinstance(ti, Ret)
                    and ti.iid.function == target.name
                    and isinstance(ti.value, ValueRef)
                ):
                    add(ValueNode(target.name, ti.value.name), res, CALL_RET)
        return

    ext = m.extern(inst.callee)
    if ext is None:
        return
    # Unknown code: the result may depend on every argument, and every
    # argument (value or pointee) may end up in every pointee it can write.
    if inst.result is not None:
        res = ValueNode(caller, inst.result)
        nodes.add(res)
        for asrc in arg_nodes:
            if asrc is not None:
                add(asrc, res, DATA)
    ptr_pts = [
        pts.of_operand(caller, arg)
        for arg, ty in zip(inst.args, ext.param_tys)
        if isinstance(ty, PtrType)
    ]
    written: set[AbstractObject] = set()
    for objs in ptr_pts:
        written |= objs
    for dst_obj in written:
        dstnode = ObjectNode(dst_obj)
        nodes.add(dstnode)
        for asrc in arg_nodes:
            if asrc is not None:
                add(asrc, dstnode, MEMORY_WRITE)
        for src_objs in ptr_pts:
            for src_obj in src_objs:
                if src_obj != dst_obj:
                    add(ObjectNode(src_obj), dstnode, MEMORY_WRITE)


def reachable(g: ValueFlowGraph, sources: Iterable[VfgNode]) -> frozenset:
    """Forward-reachable set from `sources`, breadth-first."""
    seen, _ = bfs_with_parents(g, sources)
    return seen


def bfs_with_parents(g: ValueFlowGraph, sources: Iterable[VfgNode]):
    """BFS returning (reached set, parent map); parents give shortest paths
    back to some source. Deterministic: ties break on node sort order."""
    roots = sorted((s for s in sources if s in g.nodes), key=node_sort_key)
    parents: dict[VfgNode, VfgNode | None] = {s: None for s in roots}
    queue = deque(roots)
    while queue:
        node = queue.popleft()
        for succ, _label in g.successors(node):
            if succ not in parents:
                parents[succ] = node
                queue.append(succ)
    return frozenset(parents), parents

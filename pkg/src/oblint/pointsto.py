"""Inclusion-based (Andersen-style) points-to analysis.

Every allocation site becomes one abstract object, field- and index-insensitive.
Constraints are the four classic inclusion rules; `solve` computes their least
fixpoint with a worklist. Flow-insensitive throughout: any store to an object
may reach any load of it.

Node keys are strings: `fn::name` for SSA values and parameters, `@name` for
globals (the global's address value), and `!obj:<site>` for the contents of
an abstract object (what the object's cells may point to).
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Iterable, Optional

from .ir import (
    Addr,
    Alloca,
    Call,
    Cast,
    GlobalRef,
    Load,
    Module,
    Operand,
    Phi,
    PtrType,
    Ret,
    Select,
    Store,
    ValueRef,
)


@dataclass(frozen=True)
class AbstractObject:
    """One analysis-level memory object per allocation site."""

    site: str  # "fn:block:idx" | "@name" | "extern:fn:block:idx" | "fn::param"
    kind: str  # "stack" | "global" | "extern"

    def __str__(self) -> str:
        return self.site


@dataclass(frozen=True)
class Constraint:
    kind: str  # "addr-of" | "copy" | "load" | "store"
    lhs: str
    rhs: "str | AbstractObject"

    def __str__(self) -> str:
        if self.kind == "addr-of":
            return f"{self.lhs} >= {{{self.rhs}}}"
        if self.kind == "copy":
            return f"{self.lhs} >= {self.rhs}"
        if self.kind == "load":
            return f"{self.lhs} >= *{self.rhs}"
        return f"*{self.lhs} >= {self.rhs}"


def vkey(fn: str, name: str) -> str:
    return f"{fn}::{name}"


def gkey(name: str) -> str:
    return f"@{name}"


def okey(obj: AbstractObject) -> str:
    return f"!obj:{obj.site}"


def param_object(fn: str, param: str) -> AbstractObject:
    return AbstractObject(f"{fn}::{param}", "extern")


def _operand_key(fn: str, op: Operand) -> Optional[str]:
    if isinstance(op, ValueRef):
        return vkey(fn, op.name)
    if isinstance(op, GlobalRef):
        return gkey(op.name)
    return None


def entry_candidates(m: Module) -> set[str]:
    """Functions with no internal call site; their pointer parameters are fed
    from outside the module and get a synthetic object each."""
    called = {
        inst.callee
        for _, _, _, inst in m.instructions()
        if isinstance(inst, Call) and m.function(inst.callee) is not None
    }
    return {f.name for f in m.functions if f.name not in called}


def collect_constraints(m: Module) -> list[Constraint]:
    cons: list[Constraint] = []

    def addr_of(lhs: str, obj: AbstractObject) -> None:
        cons.append(Constraint("addr-of", lhs, obj))

    def copy(lhs: str, rhs: Optional[str]) -> None:
        if rhs is not None:
            cons.append(Constraint("copy", lhs, rhs))

    for g in m.globals:
        addr_of(gkey(g.name), AbstractObject(gkey(g.name), "global"))

    for fname in sorted(entry_candidates(m)):
        fn = m.function(fname)
        for p in fn.params:
            if isinstance(p.ty, PtrType):
                addr_of(vkey(fname, p.name), param_object(fname, p.name))

    for fn, block, idx, inst in m.instructions():
        f = fn.name
        if isinstance(inst, Alloca):
            addr_of(vkey(f, inst.result), AbstractObject(str(inst.iid), "stack"))
        elif isinstance(inst, Load) and isinstance(inst.ty, PtrType):
            rhs = _operand_key(f, inst.addr)
            if rhs is not None:
                cons.append(Constraint("load", vkey(f, inst.result), rhs))
        elif isinstance(inst, Store) and isinstance(inst.ty, PtrType):
            dst = _operand_key(f, inst.addr)
            src = _operand_key(f, inst.value)
            if dst is not None and src is not None:
                cons.append(Constraint("store", dst, src))
        elif isinstance(inst, Addr):
            copy(vkey(f, inst.result), _operand_key(f, inst.base))
        elif isinstance(inst, Select) and isinstance(inst.ty, PtrType):
            copy(vkey(f, inst.result), _operand_key(f, inst.if_true))
            copy(vkey(f, inst.result), _operand_key(f, inst.if_false))
        elif isinstance(inst, Phi) and isinstance(inst.ty, PtrType):
            for value, _ in inst.incomings:
                copy(vkey(f, inst.result), _operand_key(f, value))
        elif isinstance(inst, Cast) and isinstance(inst.ty, PtrType):
            copy(vkey(f, inst.result), _operand_key(f, inst.value))
        elif isinstance(inst, Call):
            _call_constraints(m, f, inst, cons)
    return cons


def _call_constraints(m: Module, caller: str, inst: Call, cons: list[Constraint]) -> None:
    target = m.function(inst.callee)
    if target is not None:
        for p, arg in zip(target.params, inst.args):
            if isinstance(p.ty, PtrType):
                src = _operand_key(caller, arg)
                if src is not None:
                    cons.append(Constraint("copy", vkey(target.name, p.name), src))
        if inst.result is not None and isinstance(target.ret_ty, PtrType):
            for _, _, _, ti in m.instructions():
                if (
                    isinstance(ti, Ret)
                    and ti.iid.function == target.name
                    and isinstance(ti.value, ValueRef)
                ):
                    cons.append(
                        Constraint(
                            "copy",
                            vkey(caller, inst.result),
                            vkey(target.name, ti.value.name),
                        )
                    )
        return

    ext = m.extern(inst.callee)
    if ext is None:
        return
    # Unknown code: a pointer result may be fresh storage or any pointer
    # argument; data may move between any two argument pointees.
    ptr_args = [
        (k, _operand_key(caller, arg))
        for k, (arg, ty) in enumerate(zip(inst.args, ext.param_tys))
        if isinstance(ty, PtrType) and _operand_key(caller, arg) is not None
    ]
    if inst.result is not None and isinstance(ext.ret_ty, PtrType):
        res = vkey(caller, inst.result)
        cons.append(
            Constraint("addr-of", res, AbstractObject(f"extern:{inst.iid}", "extern"))
        )
        for _, key in ptr_args:
            cons.append(Constraint("copy", res, key))
    for i, dst in ptr_args:
        for j, src in ptr_args:
            if i == j:
                continue
            tmp = f"!x:{inst.iid}:{i}:{j}"
            cons.append(Constraint("load", tmp, src))
            cons.append(Constraint("store", dst, tmp))


@dataclass(frozen=True)
class PointsToMap:
    mapping: dict  # node key -> frozenset[AbstractObject]
    objects: frozenset  # every AbstractObject mentioned by any constraint

    def get(self, key: str) -> frozenset:
        return self.mapping.get(key, frozenset())

    def of_value(self, fn: str, name: str) -> frozenset:
        return self.get(vkey(fn, name))

    def of_global(self, name: str) -> frozenset:
        return self.get(gkey(name))

    def of_operand(self, fn: str, op: Operand) -> frozenset:
        key = _operand_key(fn, op)
        return self.get(key) if key is not None else frozenset()

    def contents(self, obj: AbstractObject) -> frozenset:
        return self.get(okey(obj))

    def dump(self) -> str:
        lines = []
        for key in sorted(self.mapping):
            if key.startswith("!"):
                continue
            sites = ", ".join(sorted(str(o) for o in self.mapping[key]))
            lines.append(f"{key} -> {{{sites}}}")
        return "\n".join(lines)


def solve(constraints: Iterable[Constraint]) -> PointsToMap:
    """Least fixpoint of the inclusion rules; output is worklist-order independent."""
    pts: dict[str, set[AbstractObject]] = defaultdict(set)
    succ: dict[str, set[str]] = defaultdict(set)
    loads: dict[str, set[str]] = defaultdict(set)
    stores: dict[str, set[str]] = defaultdict(set)
    objects: set[AbstractObject] = set()

    work: deque[str] = deque()
    queued: set[str] = set()

    def enqueue(node: str) -> None:
        if node not in queued:
            queued.add(node)
            work.append(node)

    def flow(src: str, dst: str) -> None:
        if pts[src] - pts[dst]:
            pts[dst] |= pts[src]
            enqueue(dst)

    def add_edge(src: str, dst: str) -> None:
        if dst not in succ[src]:
            succ[src].add(dst)
            flow(src, dst)

    for c in constraints:
        if c.kind == "addr-of":
            assert isinstance(c.rhs, AbstractObject)
            objects.add(c.rhs)
            if c.rhs not in pts[c.lhs]:
                pts[c.lhs].add(c.rhs)
                enqueue(c.lhs)
        elif c.kind == "copy":
            succ[c.rhs].add(c.lhs)
        elif c.kind == "load":
            loads[c.rhs].add(c.lhs)
        else:
            stores[c.lhs].add(c.rhs)

    for node in sorted(pts):
        for dst in succ[node]:
            flow(node, dst)

    while work:
        node = work.popleft()
        queued.discard(node)
        for dst in loads[node]:
            for obj in tuple(pts[node]):
                add_edge(okey(obj), dst)
        for src in stores[node]:
            for obj in tuple(pts[node]):
                add_edge(src, okey(obj))
        for dst in tuple(succ[node]):
            flow(node, dst)

    mapping = {k: frozenset(v) for k, v in pts.items() if v}
    return PointsToMap(mapping, frozenset(objects))


def analyze(m: Module) -> PointsToMap:
    return solve(collect_constraints(m))

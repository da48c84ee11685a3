"""Structural and SSA validation: namespaces, terminators, typing, dominance."""

from __future__ import annotations

from typing import Optional

from .core import (
    Addr,
    Alloca,
    BinOp,
    Block,
    Br,
    Call,
    Cast,
    Diagnostic,
    Function,
    GlobalRef,
    ICmp,
    InstId,
    Instr,
    IntConst,
    Jmp,
    Load,
    Module,
    Operand,
    Phi,
    Ret,
    Select,
    Store,
    ValueRef,
    has_errors,
    is_terminator,
    result_of,
)
from .types import ArrayType, IntType, PtrType, StructType, Type, is_scalar


def block_successors(block: Block) -> list[str]:
    term = block.terminator
    if isinstance(term, Br):
        return [term.then_label, term.else_label]
    if isinstance(term, Jmp):
        return [term.label]
    return []


def block_predecessors(fn: Function) -> dict[str, list[str]]:
    preds: dict[str, list[str]] = {b.label: [] for b in fn.blocks}
    for b in fn.blocks:
        for succ in block_successors(b):
            if succ in preds and b.label not in preds[succ]:
                preds[succ].append(b.label)
    return preds


def reachable_blocks(fn: Function) -> set[str]:
    seen: set[str] = set()
    stack = [fn.entry.label]
    while stack:
        label = stack.pop()
        if label in seen:
            continue
        seen.add(label)
        block = fn.block(label)
        if block is not None:
            stack.extend(s for s in block_successors(block) if s not in seen)
    return seen


def compute_dominators(fn: Function) -> dict[str, set[str]]:
    """Iterative dominator sets over the reachable CFG (entry dominates all)."""
    reach = reachable_blocks(fn)
    order = [b.label for b in fn.blocks if b.label in reach]
    preds = block_predecessors(fn)
    entry = fn.entry.label
    dom: dict[str, set[str]] = {label: set(order) for label in order}
    dom[entry] = {entry}
    changed = True
    while changed:
        changed = False
        for label in order:
            if label == entry:
                continue
            ps = [p for p in preds[label] if p in reach]
            new = set.intersection(*(dom[p] for p in ps)) if ps else set()
            new.add(label)
            if new != dom[label]:
                dom[label] = new
                changed = True
    return dom


class _FunctionChecker:
    def __init__(self, m: Module, fn: Function, diags: list[Diagnostic]):
        self.m = m
        self.fn = fn
        self.diags = diags
        self.def_types: dict[str, Type] = {}
        self.def_sites: dict[str, tuple[str, int]] = {}  # value -> (block, index)

    def error(self, iid: InstId | str, message: str) -> None:
        self.diags.append(Diagnostic("error", message, str(iid)))

    def warning(self, iid: InstId | str, message: str) -> None:
        self.diags.append(Diagnostic("warning", message, str(iid)))

    def run(self) -> None:
        fn = self.fn
        if not fn.blocks:
            self.error(fn.name, "function has no blocks")
            return
        self.check_blocks()
        self.collect_defs()
        if not has_errors(self.diags):
            self.check_instructions()
        if not has_errors(self.diags):
            self.check_dominance()

    def check_blocks(self) -> None:
        seen: set[str] = set()
        for b in self.fn.blocks:
            if b.label in seen:
                self.error(f"{self.fn.name}:{b.label}", "duplicate block label")
            seen.add(b.label)
            if not b.instructions or not is_terminator(b.instructions[-1]):
                self.error(f"{self.fn.name}:{b.label}", "missing terminator")
            for i, inst in enumerate(b.instructions[:-1]):
                if is_terminator(inst):
                    self.error(inst.iid, "terminator in the middle of a block")
            in_phis = True
            for inst in b.instructions:
                if isinstance(inst, Phi):
                    if not in_phis:
                        self.error(inst.iid, "phi must precede non-phi instructions")
                else:
                    in_phis = False

    def collect_defs(self) -> None:
        seen: set[str] = set()
        for p in self.fn.params:
            if p.name in seen:
                self.error(self.fn.name, f"duplicate parameter %{p.name}")
            seen.add(p.name)
            self.def_types[p.name] = p.ty
        for b in self.fn.blocks:
            for i, inst in enumerate(b.instructions):
                r = result_of(inst)
                if r is None:
                    continue
                if r in seen:
                    self.error(inst.iid, f"SSA violation: %{r} defined more than once")
                    continue
                seen.add(r)
                ty = self.result_type(inst)
                if ty is not None:
                    self.def_types[r] = ty
                self.def_sites[r] = (b.label, i)

    def result_type(self, inst: Instr) -> Optional[Type]:
        if isinstance(inst, (Alloca, Addr)):
            return PtrType()
        if isinstance(inst, (Load, BinOp, Select, Cast, Phi)):
            return inst.ty
        if isinstance(inst, ICmp):
            return IntType(1)
        if isinstance(inst, Call):
            target = self.m.function(inst.callee)
            if target is not None:
                return target.ret_ty
            ext = self.m.extern(inst.callee)
            if ext is not None:
                return ext.ret_ty
            return None
        return None

    def operand_type(self, op: Operand) -> Optional[Type]:
        if isinstance(op, ValueRef):
            return self.def_types.get(op.name)
        if isinstance(op, GlobalRef):
            return PtrType() if self.m.global_def(op.name) else None
        return None  # constants are typed by context

    def check_operand(self, iid: InstId, op: Operand, expect: Type, what: str) -> None:
        if isinstance(op, IntConst):
            if not isinstance(expect, IntType):
                self.error(iid, f"{what}: integer constant where {expect} is required")
                return
            w = expect.width
            if not (-(1 << (w - 1)) <= op.value < (1 << w)):
                self.error(iid, f"{what}: constant {op.value} does not fit in i{w}")
            return
        if isinstance(op, GlobalRef) and self.m.global_def(op.name) is None:
            self.error(iid, f"{what}: unknown global @{op.name}")
            return
        actual = self.operand_type(op)
        if actual is None:
            self.error(iid, f"{what}: use of undefined value {op}")
            return
        if actual != expect:
            self.error(iid, f"{what}: expected {expect}, found {actual}")

    def check_instructions(self) -> None:
        preds = block_predecessors(self.fn)
        labels = {b.label for b in self.fn.blocks}
        for b in self.fn.blocks:
            for inst in b.instructions:
                self.check_instruction(b, inst, preds, labels)

    def check_instruction(self, b: Block, inst: Instr, preds, labels) -> None:
        iid = inst.iid
        if isinstance(inst, Load):
            if not is_scalar(inst.ty):
                self.error(iid, "load type must be scalar (int or ptr)")
            self.check_operand(iid, inst.addr, PtrType(), "load address")
        elif isinstance(inst, Store):
            if not is_scalar(inst.ty):
                self.error(iid, "store type must be scalar (int or ptr)")
            else:
                self.check_operand(iid, inst.value, inst.ty, "stored value")
            self.check_operand(iid, inst.addr, PtrType(), "store address")
        elif isinstance(inst, Addr):
            self.check_operand(iid, inst.base, PtrType(), "addr base")
            self.check_addr_indices(inst)
        elif isinstance(inst, BinOp):
            if not isinstance(inst.ty, IntType):
                self.error(iid, f"{inst.op} requires an integer type")
                return
            self.check_operand(iid, inst.lhs, inst.ty, f"{inst.op} lhs")
            self.check_operand(iid, inst.rhs, inst.ty, f"{inst.op} rhs")
        elif isinstance(inst, ICmp):
            if not isinstance(inst.ty, IntType):
                self.error(iid, "icmp requires an integer type")
                return
            self.check_operand(iid, inst.lhs, inst.ty, "icmp lhs")
            self.check_operand(iid, inst.rhs, inst.ty, "icmp rhs")
        elif isinstance(inst, Select):
            self.check_operand(iid, inst.cond, IntType(1), "select condition")
            if not is_scalar(inst.ty):
                self.error(iid, "select type must be scalar (int or ptr)")
                return
            self.check_operand(iid, inst.if_true, inst.ty, "select true value")
            self.check_operand(iid, inst.if_false, inst.ty, "select false value")
        elif isinstance(inst, Cast):
            src = self.operand_type(inst.value)
            if isinstance(inst.value, IntConst):
                self.error(iid, "cast of a constant is pointless; write the constant")
                return
            if src is None:
                self.error(iid, f"cast: use of undefined value {inst.value}")
                return
            ok = (isinstance(src, IntType) and isinstance(inst.ty, IntType)) or (
                isinstance(src, PtrType) and isinstance(inst.ty, PtrType)
            )
            if not ok:
                self.error(iid, f"cast {src} -> {inst.ty} is not allowed")
        elif isinstance(inst, Phi):
            if not is_scalar(inst.ty):
                self.error(iid, "phi type must be scalar (int or ptr)")
                return
            expected = sorted(preds.get(b.label, []))
            got = sorted(label for _, label in inst.incomings)
            if expected != got:
                self.error(
                    iid,
                    f"phi lists predecessors {got}, CFG has {expected}",
                )
            for value, label in inst.incomings:
                if label in labels:
                    self.check_operand(iid, value, inst.ty, f"phi value from {label}")
        elif isinstance(inst, Call):
            self.check_call(inst)
        elif isinstance(inst, Br):
            self.check_operand(iid, inst.cond, IntType(1), "branch condition")
            for label in (inst.then_label, inst.else_label):
                if label not in labels:
                    self.error(iid, f"branch to unknown block {label!r}")
        elif isinstance(inst, Jmp):
            if inst.label not in labels:
                self.error(iid, f"jump to unknown block {inst.label!r}")
        elif isinstance(inst, Ret):
            if self.fn.ret_ty is None:
                if inst.value is not None:
                    self.error(iid, "ret with a value in a function returning nothing")
            elif inst.value is None:
                self.error(iid, f"ret must return a {self.fn.ret_ty} value")
            else:
                self.check_operand(iid, inst.value, self.fn.ret_ty, "return value")

    def check_addr_indices(self, inst: Addr) -> None:
        iid = inst.iid
        for idx in inst.indices:
            if isinstance(idx, ValueRef):
                ty = self.operand_type(idx)
                if ty is None:
                    self.error(iid, f"addr index: use of undefined value {idx}")
                elif not isinstance(ty, IntType):
                    self.error(iid, f"addr index must be an integer, found {ty}")
            elif isinstance(idx, GlobalRef):
                self.error(iid, "addr index must be an integer")
        # Indices past the first walk into the type; aggregate steps must be
        # constant and in range so every address has a static layout.
        cur: Type = inst.ty
        for idx in inst.indices[1:]:
            if isinstance(cur, ArrayType):
                cur = cur.elem
            elif isinstance(cur, StructType):
                if not isinstance(idx, IntConst):
                    self.error(iid, "aggregate field index must be constant")
                    return
                if not (0 <= idx.value < len(cur.fields)):
                    self.error(iid, f"field index {idx.value} out of range")
                    return
                cur = cur.fields[idx.value]
            else:
                self.error(iid, f"cannot index into {cur}")
                return

    def check_call(self, inst: Call) -> None:
        iid = inst.iid
        target = self.m.function(inst.callee)
        ext = self.m.extern(inst.callee)
        if target is not None:
            expected = [p.ty for p in target.params]
            ret_ty = target.ret_ty
        elif ext is not None:
            expected = list(ext.param_tys)
            ret_ty = ext.ret_ty
        else:
            self.error(iid, f"call target {inst.callee!r} does not resolve")
            return
        if len(inst.args) != len(expected):
            self.error(
                iid,
                f"call to {inst.callee} with {len(inst.args)} args, expects {len(expected)}",
            )
            return
        for k, (arg, ty) in enumerate(zip(inst.args, expected)):
            self.check_operand(iid, arg, ty, f"argument {k}")
        if inst.result is not None and ret_ty is None:
            self.error(iid, f"{inst.callee} returns nothing; result %{inst.result} is invalid")

    def check_dominance(self) -> None:
        reach = reachable_blocks(self.fn)
        for b in self.fn.blocks:
            if b.label not in reach:
                self.warning(f"{self.fn.name}:{b.label}", "unreachable block")
        dom = compute_dominators(self.fn)

        def defined_above(name: str, block: str, index: int) -> bool:
            if name not in self.def_sites:
                return True  # parameter, or already reported as undefined
            dblock, didx = self.def_sites[name]
            if dblock == block:
                return didx < index
            return dblock in dom.get(block, set())

        def dominates_block_end(name: str, block: str) -> bool:
            if name not in self.def_sites:
                return True
            dblock, _ = self.def_sites[name]
            return dblock == block or dblock in dom.get(block, set())

        for b in self.fn.blocks:
            if b.label not in reach:
                continue
            for i, inst in enumerate(b.instructions):
                if isinstance(inst, Phi):
                    for value, label in inst.incomings:
                        if isinstance(value, ValueRef) and not dominates_block_end(
                            value.name, label
                        ):
                            self.error(
                                inst.iid,
                                f"SSA dominance: %{value.name} does not reach the "
                                f"{label} edge",
                            )
                    continue
                for op in _uses_of(inst):
                    if isinstance(op, ValueRef) and not defined_above(op.name, b.label, i):
                        self.error(
                            inst.iid,
                            f"SSA dominance: %{op.name} used before its definition "
                            f"dominates the use",
                        )


def _uses_of(inst: Instr):
    from .core import operands_of

    return operands_of(inst)


def _check_init_shape(ty: Type, init, where: str, diags: list[Diagnostic]) -> None:
    if init is None:
        return
    if isinstance(ty, IntType):
        if not isinstance(init, int):
            diags.append(Diagnostic("error", "integer initializer required", where))
        return
    if isinstance(ty, PtrType):
        diags.append(Diagnostic("error", "pointer globals cannot be initialized", where))
        return
    if isinstance(ty, ArrayType):
        if not isinstance(init, list) or len(init) != ty.length:
            diags.append(
                Diagnostic("error", f"initializer must be a list of {ty.length}", where)
            )
            return
        for item in init:
            _check_init_shape(ty.elem, item, where, diags)
        return
    if isinstance(ty, StructType):
        if not isinstance(init, list) or len(init) != len(ty.fields):
            diags.append(
                Diagnostic(
                    "error", f"initializer must be a list of {len(ty.fields)}", where
                )
            )
            return
        for f, item in zip(ty.fields, init):
            _check_init_shape(f, item, where, diags)


def value_types(m: Module, fn: Function) -> dict[str, Type]:
    """Static type of every SSA definition in `fn` (parameters included)."""
    checker = _FunctionChecker(m, fn, [])
    checker.collect_defs()
    return checker.def_types


def validate_module(m: Module) -> list[Diagnostic]:
    """Check module invariants; an empty list means the module is well-formed."""
    diags: list[Diagnostic] = []
    seen_globals: set[str] = set()
    for g in m.globals:
        if g.name in seen_globals:
            diags.append(Diagnostic("error", f"duplicate global @{g.name}", f"@{g.name}"))
        seen_globals.add(g.name)
        _check_init_shape(g.ty, g.init, f"@{g.name}", diags)
    seen_fns: set[str] = set()
    for name in [f.name for f in m.functions] + [e.name for e in m.externs]:
        if name in seen_fns:
            diags.append(Diagnostic("error", f"duplicate function name {name!r}", name))
        seen_fns.add(name)
    for fn in m.functions:
        _FunctionChecker(m, fn, diags).run()
    return diags

"""Pretty-printer for modules; optionally marks tainted definitions with `!t`."""

from __future__ import annotations

from typing import Optional

from .core import (
    Addr,
    Alloca,
    BinOp,
    Br,
    Call,
    Cast,
    Function,
    GlobalDef,
    ICmp,
    Instr,
    Jmp,
    Load,
    Module,
    Phi,
    Ret,
    Select,
    Store,
    result_of,
)


def _fmt_init(init) -> str:
    if isinstance(init, list):
        return "[" + ", ".join(_fmt_init(v) for v in init) + "]"
    return str(init)


def _fmt_inst(inst: Instr) -> str:
    if isinstance(inst, Alloca):
        count = f", {inst.count}" if inst.count != 1 else ""
        return f"%{inst.result} = alloca {inst.ty}{count}"
    if isinstance(inst, Load):
        return f"%{inst.result} = load {inst.ty}, {inst.addr}"
    if isinstance(inst, Store):
        return f"store {inst.ty} {inst.value}, {inst.addr}"
    if isinstance(inst, Addr):
        idx = ", ".join(str(i) for i in inst.indices)
        return f"%{inst.result} = addr {inst.ty}, {inst.base}, {idx}"
    if isinstance(inst, BinOp):
        return f"%{inst.result} = {inst.op} {inst.ty} {inst.lhs}, {inst.rhs}"
    if isinstance(inst, ICmp):
        return f"%{inst.result} = icmp {inst.pred} {inst.ty} {inst.lhs}, {inst.rhs}"
    if isinstance(inst, Select):
        return (
            f"%{inst.result} = select {inst.cond}, {inst.ty} "
            f"{inst.if_true}, {inst.if_false}"
        )
    if isinstance(inst, Cast):
        return f"%{inst.result} = cast {inst.ty}, {inst.value}"
    if isinstance(inst, Phi):
        arms = ", ".join(f"[{v}, {label}]" for v, label in inst.incomings)
        return f"%{inst.result} = phi {inst.ty} {arms}"
    if isinstance(inst, Call):
        args = ", ".join(str(a) for a in inst.args)
        head = f"%{inst.result} = " if inst.result else ""
        return f"{head}call {inst.callee}({args})"
    if isinstance(inst, Br):
        return f"br {inst.cond}, {inst.then_label}, {inst.else_label}"
    if isinstance(inst, Jmp):
        return f"jmp {inst.label}"
    if isinstance(inst, Ret):
        return f"ret {inst.value}" if inst.value is not None else "ret"
    raise TypeError(f"unknown instruction {inst!r}")


def _fmt_global(g: GlobalDef) -> str:
    parts = [f"global @{g.name}: {g.ty}"]
    if g.blinded:
        parts.append("blinded")
    if g.init is not None:
        parts.append(f"= {_fmt_init(g.init)}")
    return " ".join(parts)


def _fmt_function(fn: Function, taint=None) -> list[str]:
    params = ", ".join(
        f"%{p.name}: {p.ty}" + (" blinded" if p.blinded else "") for p in fn.params
    )
    ret = f" -> {fn.ret_ty}" if fn.ret_ty is not None else ""
    lines = [f"fn {fn.name}({params}){ret} {{"]
    for block in fn.blocks:
        lines.append(f"{block.label}:")
        for inst in block.instructions:
            text = f"  {_fmt_inst(inst)}"
            r = result_of(inst)
            if taint is not None and r is not None and taint.is_value_tainted(fn.name, r):
                text += " !t"
            lines.append(text)
    lines.append("}")
    return lines


def emit_module(m: Module, taint=None) -> str:
    """Render a module as parseable IR text; with `taint`, tainted defs get `!t`."""
    chunks: list[str] = []
    for g in m.globals:
        chunks.append(_fmt_global(g))
    for e in m.externs:
        tys = ", ".join(str(t) for t in e.param_tys)
        ret = f" -> {e.ret_ty}" if e.ret_ty is not None else ""
        chunks.append(f"extern {e.name}({tys}){ret}")
    out: list[str] = []
    if chunks:
        out.extend(chunks)
    for fn in m.functions:
        if out:
            out.append("")
        out.extend(_fmt_function(fn, taint))
    return "\n".join(out) + "\n"


def emit_annotated(m: Module, taint) -> str:
    """Annotated IR: every tainted value-defining instruction line ends in `!t`."""
    return emit_module(m, taint)

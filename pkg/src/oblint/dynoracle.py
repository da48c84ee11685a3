"""Dynamic oracle: a deterministic interpreter with exact taint tracking.

Runs one harness to completion and records a warning (instead of faulting)
whenever tainted data reaches a policed operation: a conditional branch, a
load/store address, a call into an extern stub, or (behind a flag) a division.
Execution always continues down the concrete path, and a warned branch
condition does not taint anything downstream, so a looped violation shows up
once per iteration and is deduplicated afterwards.

Taint rules per instruction:
  binop/icmp/cast      output = OR of input taints
  phi                  output = taint of the incoming value actually taken
  select               output = condition taint OR chosen input taint
  addr                 output = base taint OR index taints
  load                 result = OR of loaded bytes OR the address value's taint
  store                written bytes = stored value taint OR address taint
  extern stubs         per-stub; result taint derives only from argument values

Taint bits never influence concrete results. Memory is bounds-checked per
object; reading stored addresses as raw bytes (or vice versa) traps, as does
division by zero, an unknown extern, or exceeding the step budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .config import AnalysisConfig
from .harness import ArgSpec, Harness, HarnessError, resolve
from .ir import (
    Addr,
    Alloca,
    ArrayType,
    BinOp,
    Br,
    Call,
    Cast,
    DIVISION_OPS,
    Function,
    ICmp,
    InstId,
    IntConst,
    IntType,
    Jmp,
    Load,
    Module,
    GlobalRef,
    Phi,
    PtrType,
    Ret,
    Select,
    Store,
    StructType,
    Type,
    ValueRef,
    field_offset,
    size_of,
    value_types,
)
from .policy import BRANCH, EXTERN_CALL, MEM_LOAD, MEM_STORE, VARLAT, ViolationReport


def _wrap(v: int, width: int) -> int:
    return v & ((1 << width) - 1)


def _signed(v: int, width: int) -> int:
    return v - (1 << width) if v >> (width - 1) else v


@dataclass(frozen=True)
class Pointer:
    obj: int  # index into Machine.objects
    offset: int


class Trap(Exception):
    def __init__(self, message: str, location: Optional[InstId], report: "DynReport"):
        where = f" at {location}" if location is not None else ""
        super().__init__(f"{message}{where}")
        self.message = message
        self.location = location
        self.report = report


@dataclass
class DynReport:
    raw: list = field(default_factory=list)  # (InstId, category, step)

    @property
    def dedup(self) -> frozenset:
        return frozenset((iid, cat) for iid, cat, _ in self.raw)

    def dedup_sorted(self) -> list:
        return sorted(self.dedup, key=lambda p: (str(p[0]), p[1]))

    def count(self, category: str) -> int:
        return sum(1 for _, cat in self.dedup if cat == category)

    def format_log(self) -> str:
        return "\n".join(f"WARN {cat} {iid} step={step}" for iid, cat, step in self.raw)


class _MemObject:
    __slots__ = ("abstract_site", "size", "data", "taint", "ptr_slots")

    def __init__(self, abstract_site: str, size: int):
        self.abstract_site = abstract_site
        self.size = size
        self.data = bytearray(size)
        self.taint = bytearray(size)
        self.ptr_slots: dict[int, Pointer] = {}


@dataclass
class _Frame:
    fn: Function
    env: dict
    block: object
    index: int
    dest: Optional[str]  # caller result to bind when this frame returns


class Machine:
    """One interpreter instance; instances share nothing."""

    def __init__(self, module: Module, *, check_varlat: bool = False):
        self.module = module
        self.check_varlat = check_varlat
        self.objects: list[_MemObject] = []
        self.global_objs: dict[str, int] = {}
        self.printed: list[str] = []
        self.raw: list = []
        self.steps = 0
        self._types: dict[str, dict[str, Type]] = {}
        for g in module.globals:
            idx = self.new_object(f"@{g.name}", size_of(g.ty))
            self.global_objs[g.name] = idx
            self._write_const(self.objects[idx], 0, g.ty, g.init, g.blinded)

    # -- memory -----------------------------------------------------------

    def new_object(self, abstract_site: str, size: int) -> int:
        self.objects.append(_MemObject(abstract_site, size))
        return len(self.objects) - 1

    def _write_const(self, obj: _MemObject, off: int, ty: Type, value, tainted: bool):
        if isinstance(ty, IntType):
            size = size_of(ty)
            v = _wrap(int(value or 0), ty.width)
            obj.data[off:off + size] = v.to_bytes(size, "little")
            if tainted:
                obj.taint[off:off + size] = b"\x01" * size
            return
        if isinstance(ty, ArrayType):
            esz = size_of(ty.elem)
            items = value if value is not None else [None] * ty.length
            for i, item in enumerate(items):
                self._write_const(obj, off + i * esz, ty.elem, item, tainted)
            return
        if isinstance(ty, StructType):
            items = value if value is not None else [None] * len(ty.fields)
            for i, (fty, item) in enumerate(zip(ty.fields, items)):
                self._write_const(obj, off + field_offset(ty, i), fty, item, tainted)
            return
        raise HarnessError(f"cannot materialize {ty}")

    def snapshot(self) -> list:
        """Concrete memory image for output-equality checks; taint excluded."""
        return [
            (o.abstract_site, bytes(o.data), tuple(sorted(o.ptr_slots.items())))
            for o in self.objects
        ]

    # -- harness ------------------------------------------------------------

    def materialize_args(self, fn: Function, h: Harness) -> list:
        if len(h.args) != len(fn.params):
            raise HarnessError(
                f"{h.entry} takes {len(fn.params)} arguments, harness has {len(h.args)}"
            )
        out = []
        for p, spec in zip(fn.params, h.args):
            if type(p.ty) is not type(spec.ty):
                raise HarnessError(f"argument %{p.name}: expected {p.ty}, got {spec.ty}")
            if isinstance(p.ty, IntType):
                if not isinstance(spec.value, int):
                    raise HarnessError(f"argument %{p.name}: integer value required")
                out.append((_wrap(spec.value, p.ty.width), bool(spec.taint)))
            else:
                out.append(self._materialize_ptr(fn.name, p.name, spec))
        return out

    def _materialize_ptr(self, fn: str, param: str, spec: ArgSpec):
        if not isinstance(spec.value, list):
            raise HarnessError(f"argument %{param}: element list required")
        esz = size_of(spec.elem)
        size = esz * len(spec.value)
        idx = self.new_object(f"{fn}::{param}", size)
        obj = self.objects[idx]
        for i, item in enumerate(spec.value):
            self._write_const(obj, i * esz, spec.elem, item, False)
        if spec.taint is True:
            obj.taint[:] = b"\x01" * size
        elif isinstance(spec.taint, list):
            if len(spec.taint) != size:
                raise HarnessError(
                    f"argument %{param}: taint mask has {len(spec.taint)} bytes, "
                    f"object has {size}"
                )
            obj.taint[:] = bytes(1 if b else 0 for b in spec.taint)
        return (Pointer(idx, 0), False)

    # -- reporting ------------------------------------------------------------

    def warn(self, iid: InstId, category: str) -> None:
        self.raw.append((iid, category, self.steps))

    def report(self) -> DynReport:
        return DynReport(list(self.raw))

    def trap(self, message: str, iid: Optional[InstId]):
        raise Trap(message, iid, self.report())

    # -- evaluation ------------------------------------------------------------

    def types_of(self, fn: Function) -> dict[str, Type]:
        if fn.name not in self._types:
            self._types[fn.name] = value_types(self.module, fn)
        return self._types[fn.name]

    def _eval(self, frame: _Frame, op, ty: Type):
        if isinstance(op, ValueRef):
            return frame.env[op.name]
        if isinstance(op, GlobalRef):
            return (Pointer(self.global_objs[op.name], 0), False)
        assert isinstance(op, IntConst)
        return (_wrap(op.value, ty.width), False)

    def _eval_index(self, frame: _Frame, op) -> tuple[int, bool]:
        """Index operands as signed Python ints."""
        if isinstance(op, IntConst):
            return op.value, False
        v, t = frame.env[op.name]
        width = self.types_of(frame.fn)[op.name].width
        return _signed(v, width), t

    # -- execution ------------------------------------------------------------

    def execute(self, entry: str, args: list, max_steps: int):
        fn = self.module.function(entry)
        if fn is None:
            raise HarnessError(f"entry function {entry!r} not found")
        frame = _Frame(fn, dict(zip((p.name for p in fn.params), args)), fn.entry, 0, None)
        if any(isinstance(i, Phi) for i in fn.entry.instructions):
            self.trap("phi in the entry block of a called function", None)
        frames = [frame]

        while True:
            frame = frames[-1]
            inst = frame.block.instructions[frame.index]
            self.steps += 1
            if self.steps > max_steps:
                self.trap(f"step budget of {max_steps} exceeded", inst.iid)

            if isinstance(inst, Alloca):
                idx = self.new_object(str(inst.iid), size_of(inst.ty) * inst.count)
                frame.env[inst.result] = (Pointer(idx, 0), False)
                frame.index += 1
            elif isinstance(inst, Load):
                frame.env[inst.result] = self._do_load(frame, inst)
                frame.index += 1
            elif isinstance(inst, Store):
                self._do_store(frame, inst)
                frame.index += 1
            elif isinstance(inst, Addr):
                frame.env[inst.result] = self._do_addr(frame, inst)
                frame.index += 1
            elif isinstance(inst, BinOp):
                frame.env[inst.result] = self._do_binop(frame, inst)
                frame.index += 1
            elif isinstance(inst, ICmp):
                frame.env[inst.result] = self._do_icmp(frame, inst)
                frame.index += 1
            elif isinstance(inst, Select):
                c, ct = self._eval(frame, inst.cond, IntType(1))
                v, vt = self._eval(
                    frame, inst.if_true if c else inst.if_false, inst.ty
                )
                frame.env[inst.result] = (v, vt or ct)
                frame.index += 1
            elif isinstance(inst, Cast):
                frame.env[inst.result] = self._do_cast(frame, inst)
                frame.index += 1
            elif isinstance(inst, Call):
                self._do_call(frames, frame, inst)
            elif isinstance(inst, Br):
                c, ct = self._eval(frame, inst.cond, IntType(1))
                if ct:
                    self.warn(inst.iid, BRANCH)
                self._enter_block(frame, inst.then_label if c else inst.else_label)
            elif isinstance(inst, Jmp):
                self._enter_block(frame, inst.label)
            elif isinstance(inst, Ret):
                value = None
                if inst.value is not None:
                    value = self._eval(frame, inst.value, frame.fn.ret_ty)
                frames.pop()
                if not frames:
                    return value, self.report()
                if frame.dest is not None:
                    frames[-1].env[frame.dest] = value
            else:
                self.trap(f"cannot execute {type(inst).__name__}", inst.iid)

    def _enter_block(self, frame: _Frame, label: str) -> None:
        target = frame.fn.block(label)
        prev = frame.block.label
        nphis = 0
        updates = []
        for inst in target.instructions:
            if not isinstance(inst, Phi):
                break
            nphis += 1
            for value, come_from in inst.incomings:
                if come_from == prev:
                    updates.append((inst.result, self._eval(frame, value, inst.ty)))
                    break
        for name, tv in updates:  # parallel assignment after all arms are read
            frame.env[name] = tv
        frame.block = target
        frame.index = nphis

    def _check_bounds(self, p: Pointer, size: int, iid: InstId) -> _MemObject:
        obj = self.objects[p.obj]
        if p.offset < 0 or p.offset + size > obj.size:
            self.trap(
                f"out-of-bounds access: offset {p.offset} size {size} in "
                f"{obj.abstract_site} ({obj.size} bytes)",
                iid,
            )
        return obj

    def _slot_overlap(self, obj: _MemObject, off: int, size: int) -> bool:
        return any(s < off + size and s + 8 > off for s in obj.ptr_slots)

    def _do_load(self, frame: _Frame, inst: Load):
        p, pt = self._eval(frame, inst.addr, PtrType())
        if not isinstance(p, Pointer):
            self.trap("load address is not an address value", inst.iid)
        if pt:
            self.warn(inst.iid, MEM_LOAD)
        size = size_of(inst.ty)
        obj = self._check_bounds(p, size, inst.iid)
        taint = any(obj.taint[p.offset:p.offset + size]) or pt
        if isinstance(inst.ty, PtrType):
            slot = obj.ptr_slots.get(p.offset)
            if slot is None:
                self.trap("load of an address from bytes that hold none", inst.iid)
            return (slot, taint)
        if self._slot_overlap(obj, p.offset, size):
            self.trap("load of raw bytes from a stored address", inst.iid)
        value = int.from_bytes(obj.data[p.offset:p.offset + size], "little")
        return (_wrap(value, inst.ty.width), taint)

    def _do_store(self, frame: _Frame, inst: Store) -> None:
        v, vt = self._eval(frame, inst.value, inst.ty)
        p, pt = self._eval(frame, inst.addr, PtrType())
        if not isinstance(p, Pointer):
            self.trap("store address is not an address value", inst.iid)
        if pt:
            self.warn(inst.iid, MEM_STORE)
        size = size_of(inst.ty)
        obj = self._check_bounds(p, size, inst.iid)
        for s in [s for s in obj.ptr_slots if s < p.offset + size and s + 8 > p.offset]:
            del obj.ptr_slots[s]
        taint = 1 if (vt or pt) else 0
        obj.taint[p.offset:p.offset + size] = bytes([taint]) * size
        if isinstance(inst.ty, PtrType):
            obj.ptr_slots[p.offset] = v
            obj.data[p.offset:p.offset + size] = b"\x00" * size
        else:
            obj.data[p.offset:p.offset + size] = _wrap(v, inst.ty.width).to_bytes(
                size, "little"
            )

    def _do_addr(self, frame: _Frame, inst: Addr):
        base, bt = self._eval(frame, inst.base, PtrType())
        if not isinstance(base, Pointer):
            self.trap("addr base is not an address value", inst.iid)
        taint = bt
        first, t0 = self._eval_index(frame, inst.indices[0])
        taint = taint or t0
        off = base.offset + first * size_of(inst.ty)
        cur: Type = inst.ty
        for op in inst.indices[1:]:
            idx, ti = self._eval_index(frame, op)
            taint = taint or ti
            if isinstance(cur, ArrayType):
                off += idx * size_of(cur.elem)
                cur = cur.elem
            elif isinstance(cur, StructType):
                off += field_offset(cur, idx)
                cur = cur.fields[idx]
            else:
                self.trap(f"cannot index into {cur}", inst.iid)
        return (Pointer(base.obj, off), taint)

    def _do_binop(self, frame: _Frame, inst: BinOp):
        w = inst.ty.width
        (a, at) = self._eval(frame, inst.lhs, inst.ty)
        (b, bt) = self._eval(frame, inst.rhs, inst.ty)
        taint = at or bt
        if inst.op in DIVISION_OPS:
            if self.check_varlat and taint:
                self.warn(inst.iid, VARLAT)
            if b == 0:
                self.trap("division by zero", inst.iid)
        sa, sb = _signed(a, w), _signed(b, w)
        if inst.op == "add":
            r = a + b
        elif inst.op == "sub":
            r = a - b
        elif inst.op == "mul":
            r = a * b
        elif inst.op == "sdiv":
            r = abs(sa) // abs(sb) * (1 if (sa < 0) == (sb < 0) else -1) if sa else 0
        elif inst.op == "udiv":
            r = a // b
        elif inst.op == "srem":
            q = abs(sa) // abs(sb) * (1 if (sa < 0) == (sb < 0) else -1) if sa else 0
            r = sa - q * sb
        elif inst.op == "urem":
            r = a % b
        elif inst.op == "and":
            r = a & b
        elif inst.op == "or":
            r = a | b
        elif inst.op == "xor":
            r = a ^ b
        elif inst.op == "shl":
            r = a << (b % w)
        elif inst.op == "lshr":
            r = a >> (b % w)
        elif inst.op == "ashr":
            r = sa >> (b % w)
        else:
            self.trap(f"unknown operation {inst.op}", inst.iid)
        return (_wrap(r, w), taint)

    def _do_icmp(self, frame: _Frame, inst: ICmp):
        w = inst.ty.width
        (a, at) = self._eval(frame, inst.lhs, inst.ty)
        (b, bt) = self._eval(frame, inst.rhs, inst.ty)
        sa, sb = _signed(a, w), _signed(b, w)
        table = {
            "eq": a == b, "ne": a != b,
            "slt": sa < sb, "sle": sa <= sb, "sgt": sa > sb, "sge": sa >= sb,
            "ult": a < b, "ule": a <= b, "ugt": a > b, "uge": a >= b,
        }
        return (1 if table[inst.pred] else 0, at or bt)

    def _do_cast(self, frame: _Frame, inst: Cast):
        v, vt = frame.env[inst.value.name]
        src = self.types_of(frame.fn)[inst.value.name]
        if isinstance(src, PtrType):
            return (v, vt)  # ptr -> ptr is an identity
        ws, wd = src.width, inst.ty.width
        if wd <= ws:
            return (_wrap(v, wd), vt)
        if ws == 1:
            return (v, vt)  # booleans zero-extend
        return (_wrap(_signed(v, ws), wd), vt)

    def _do_call(self, frames: list, frame: _Frame, inst: Call) -> None:
        target = self.module.function(inst.callee)
        if target is not None:
            args = [
                self._eval(frame, a, p.ty) for a, p in zip(inst.args, target.params)
            ]
            if any(isinstance(i, Phi) for i in target.entry.instructions):
                self.trap("phi in the entry block of a called function", inst.iid)
            frame.index += 1
            frames.append(
                _Frame(
                    target,
                    dict(zip((p.name for p in target.params), args)),
                    target.entry,
                    0,
                    inst.result,
                )
            )
            return
        ext = self.module.extern(inst.callee)
        if ext is None:
            self.trap(f"call target {inst.callee!r} does not resolve", inst.iid)
        args = [self._eval(frame, a, ty) for a, ty in zip(inst.args, ext.param_tys)]
        if any(t for _, t in args):
            self.warn(inst.iid, EXTERN_CALL)
        stub = STUBS.get(inst.callee)
        if stub is None:
            self.trap(f"no stub registered for extern {inst.callee!r}", inst.iid)
        result = stub(self, inst, ext, args)
        if inst.result is not None:
            if result is None:
                self.trap(f"stub {inst.callee!r} produced no return value", inst.iid)
            frame.env[inst.result] = result
        frame.index += 1


# -- extern stubs ---------------------------------------------------------
#
# The registry is closed: an extern without a stub traps. Stub result taint
# derives only from argument value taints, keeping the dynamic side within
# the static model of extern calls.

def _stub_minmax(pick):
    def stub(machine: Machine, inst, ext, args):
        if len(args) != 2 or not all(isinstance(t, IntType) for t in ext.param_tys):
            machine.trap(f"{inst.callee} expects two integer arguments", inst.iid)
        (a, at), (b, bt) = args
        wa, wb = ext.param_tys[0].width, ext.param_tys[1].width
        chosen = pick(_signed(a, wa), _signed(b, wb))
        width = ext.ret_ty.width if isinstance(ext.ret_ty, IntType) else 64
        return (_wrap(chosen, width), at or bt)

    return stub


def _stub_print(machine: Machine, inst, ext, args):
    parts = []
    for v, _ in args:
        if isinstance(v, Pointer):
            parts.append(f"&{machine.objects[v.obj].abstract_site}+{v.offset}")
        else:
            parts.append(str(v))
    machine.printed.append(" ".join(parts))
    return None


def _stub_memcpy(machine: Machine, inst, ext, args):
    if len(args) != 3:
        machine.trap("memcpy expects (dst, src, n)", inst.iid)
    (dst, dt), (src, st), (n, nt) = args
    if not isinstance(dst, Pointer) or not isinstance(src, Pointer) or isinstance(n, Pointer):
        machine.trap("memcpy expects (ptr, ptr, int)", inst.iid)
    count = n
    dobj = machine._check_bounds(dst, count, inst.iid)
    sobj = machine._check_bounds(src, count, inst.iid)
    if machine._slot_overlap(dobj, dst.offset, count) or machine._slot_overlap(
        sobj, src.offset, count
    ):
        machine.trap("memcpy over stored addresses", inst.iid)
    extra = 1 if (dt or st or nt) else 0
    data = sobj.data[src.offset:src.offset + count]
    taint = bytes(min(1, t | extra) for t in sobj.taint[src.offset:src.offset + count])
    dobj.data[dst.offset:dst.offset + count] = data
    dobj.taint[dst.offset:dst.offset + count] = taint
    if ext.ret_ty is None:
        return None
    if isinstance(ext.ret_ty, PtrType):
        return (dst, dt)
    machine.trap("memcpy must be declared returning ptr or nothing", inst.iid)


STUBS = {
    "min": _stub_minmax(min),
    "max": _stub_minmax(max),
    "print": _stub_print,
    "memcpy": _stub_memcpy,
}


# -- top-level entry points ---------------------------------------------------

def run(m: Module, h: Harness, config: AnalysisConfig | None = None):
    """Execute a harness; returns (return value, DynReport). Raises Trap."""
    value, report, _ = run_with_machine(m, h, config)
    return value, report


def run_with_machine(m: Module, h: Harness, config: AnalysisConfig | None = None):
    config = config or AnalysisConfig()
    concrete = resolve(h)
    machine = Machine(m, check_varlat=config.check_varlat)
    fn = m.function(concrete.entry)
    if fn is None:
        raise HarnessError(f"entry function {concrete.entry!r} not found")
    args = machine.materialize_args(fn, concrete)
    max_steps = concrete.max_steps or config.max_steps
    value, report = machine.execute(concrete.entry, args, max_steps)
    return value, report, machine


# -- differential check --------------------------------------------------------

@dataclass
class SubsetVerdict:
    passed: bool
    escaped: list  # dynamic (InstId, category) pairs missing from the static report
    static_pairs: frozenset
    dynamic_pairs: frozenset


def subset_check(
    static_report: ViolationReport,
    dyn: DynReport,
    clone_map=None,
) -> SubsetVerdict:
    """Every deduplicated dynamic warning must appear in the static report.

    Both sides are normalized to original-function coordinates so a report
    produced on the cloned module matches warnings from the original one.
    """

    def norm(iid: InstId) -> InstId:
        if clone_map is None:
            return iid
        return InstId(clone_map.original_of(iid.function), iid.block, iid.index)

    static_pairs = frozenset((norm(i), c) for i, c in static_report.pairs())
    dynamic_pairs = frozenset((norm(i), c) for i, c in dyn.dedup)
    escaped = sorted(
        (p for p in dynamic_pairs if p not in static_pairs),
        key=lambda p: (str(p[0]), p[1]),
    )
    return SubsetVerdict(not escaped, escaped, static_pairs, dynamic_pairs)

"""SSA program representation: operands, instructions, blocks, functions, modules."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Union

from .types import Type

BINARY_OPS = (
    "add", "sub", "mul", "sdiv", "udiv", "srem", "urem",
    "and", "or", "xor", "shl", "lshr", "ashr",
)
DIVISION_OPS = frozenset({"sdiv", "udiv", "srem", "urem"})
ICMP_PREDS = ("eq", "ne", "slt", "sle", "sgt", "sge", "ult", "ule", "ugt", "uge")


@dataclass(frozen=True)
class InstId:
    """Stable instruction coordinates: function, block label, index within block."""

    function: str
    block: str
    index: int

    def __str__(self) -> str:
        return f"{self.function}:{self.block}:{self.index}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    location: str = ""

    def __str__(self) -> str:
        loc = f"{self.location}: " if self.location else ""
        return f"{loc}{self.severity}: {self.message}"


def has_errors(diags: list[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diags)


# --- operands ----------------------------------------------------------------

@dataclass(frozen=True)
class ValueRef:
    name: str

    def __str__(self) -> str:
        return f"%{self.name}"


@dataclass(frozen=True)
class GlobalRef:
    name: str

    def __str__(self) -> str:
        return f"@{self.name}"


@dataclass(frozen=True)
class IntConst:
    value: int

    def __str__(self) -> str:
        return str(self.value)


Operand = Union[ValueRef, GlobalRef, IntConst]


# --- instructions ------------------------------------------------------------

@dataclass
class Instr:
    iid: Optional[InstId] = field(default=None, kw_only=True)


@dataclass
class Alloca(Instr):
    result: str = ""
    ty: Type = None  # type: ignore[assignment]
    count: int = 1


@dataclass
class Load(Instr):
    result: str = ""
    ty: Type = None  # type: ignore[assignment]
    addr: Operand = None  # type: ignore[assignment]


@dataclass
class Store(Instr):
    ty: Type = None  # type: ignore[assignment]
    value: Operand = None  # type: ignore[assignment]
    addr: Operand = None  # type: ignore[assignment]


@dataclass
class Addr(Instr):
    """Address computation: new address = base + indices scaled by `ty` layout.

    The first index scales by the full size of `ty`; later indices step into
    arrays and aggregate fields of `ty`, as in a classic chained element-pointer
    computation.
    """

    result: str = ""
    ty: Type = None  # type: ignore[assignment]
    base: Operand = None  # type: ignore[assignment]
    indices: tuple[Operand, ...] = ()


@dataclass
class BinOp(Instr):
    result: str = ""
    op: str = ""
    ty: Type = None  # type: ignore[assignment]
    lhs: Operand = None  # type: ignore[assignment]
    rhs: Operand = None  # type: ignore[assignment]


@dataclass
class ICmp(Instr):
    result: str = ""
    pred: str = ""
    ty: Type = None  # type: ignore[assignment]
    lhs: Operand = None  # type: ignore[assignment]
    rhs: Operand = None  # type: ignore[assignment]


@dataclass
class Select(Instr):
    result: str = ""
    cond: Operand = None  # type: ignore[assignment]
    ty: Type = None  # type: ignore[assignment]
    if_true: Operand = None  # type: ignore[assignment]
    if_false: Operand = None  # type: ignore[assignment]


@dataclass
class Cast(Instr):
    result: str = ""
    ty: Type = None  # type: ignore[assignment]  # target type
    value: Operand = None  # type: ignore[assignment]


@dataclass
class Phi(Instr):
    result: str = ""
    ty: Type = None  # type: ignore[assignment]
    incomings: tuple[tuple[Operand, str], ...] = ()


@dataclass
class Call(Instr):
    result: Optional[str] = None
    callee: str = ""
    args: tuple[Operand, ...] = ()


@dataclass
class Br(Instr):
    cond: Operand = None  # type: ignore[assignment]
    then_label: str = ""
    else_label: str = ""


@dataclass
class Jmp(Instr):
    label: str = ""


@dataclass
class Ret(Instr):
    value: Optional[Operand] = None


TERMINATORS = (Br, Jmp, Ret)


def is_terminator(inst: Instr) -> bool:
    return isinstance(inst, TERMINATORS)


def result_of(inst: Instr) -> Optional[str]:
    r = getattr(inst, "result", None)
    return r if r else None


def operands_of(inst: Instr) -> tuple[Operand, ...]:
    """All value-position operands of an instruction, in textual order."""
    if isinstance(inst, Load):
        return (inst.addr,)
    if isinstance(inst, Store):
        return (inst.value, inst.addr)
    if isinstance(inst, Addr):
        return (inst.base, *inst.indices)
    if isinstance(inst, (BinOp, ICmp)):
        return (inst.lhs, inst.rhs)
    if isinstance(inst, Select):
        return (inst.cond, inst.if_true, inst.if_false)
    if isinstance(inst, Cast):
        return (inst.value,)
    if isinstance(inst, Phi):
        return tuple(v for v, _ in inst.incomings)
    if isinstance(inst, Call):
        return inst.args
    if isinstance(inst, Br):
        return (inst.cond,)
    if isinstance(inst, Ret):
        return (inst.value,) if inst.value is not None else ()
    return ()


# --- module structure --------------------------------------------------------

@dataclass
class Param:
    name: str
    ty: Type
    blinded: bool = False


@dataclass
class Block:
    label: str
    instructions: list[Instr] = field(default_factory=list)

    @property
    def terminator(self) -> Optional[Instr]:
        if self.instructions and is_terminator(self.instructions[-1]):
            return self.instructions[-1]
        return None


@dataclass
class Function:
    name: str
    params: list[Param]
    ret_ty: Optional[Type]
    blocks: list[Block]

    @property
    def entry(self) -> Block:
        return self.blocks[0]

    def block(self, label: str) -> Optional[Block]:
        for b in self.blocks:
            if b.label == label:
                return b
        return None

    def param(self, name: str) -> Optional[Param]:
        for p in self.params:
            if p.name == name:
                return p
        return None


@dataclass
class GlobalDef:
    name: str
    ty: Type
    blinded: bool = False
    init: object = None  # int, or nested list matching ty, or None


@dataclass
class ExternDecl:
    name: str
    param_tys: list[Type]
    ret_ty: Optional[Type]


@dataclass
class Module:
    globals: list[GlobalDef] = field(default_factory=list)
    externs: list[ExternDecl] = field(default_factory=list)
    functions: list[Function] = field(default_factory=list)

    def function(self, name: str) -> Optional[Function]:
        for f in self.functions:
            if f.name == name:
                return f
        return None

    def extern(self, name: str) -> Optional[ExternDecl]:
        for e in self.externs:
            if e.name == name:
                return e
        return None

    def global_def(self, name: str) -> Optional[GlobalDef]:
        for g in self.globals:
            if g.name == name:
                return g
        return None

    def instructions(self) -> Iterator[tuple[Function, Block, int, Instr]]:
        for f in self.functions:
            for b in f.blocks:
                for i, inst in enumerate(b.instructions):
                    yield f, b, i, inst


def assign_ids(fn: Function) -> None:
    for b in fn.blocks:
        for i, inst in enumerate(b.instructions):
            inst.iid = InstId(fn.name, b.label, i)


def copy_function(fn: Function, new_name: Optional[str] = None) -> Function:
    """Structural copy; instruction ids are reassigned under the new name."""
    out = Function(
        new_name or fn.name,
        [replace(p) for p in fn.params],
        fn.ret_ty,
        [Block(b.label, [replace(i) for i in b.instructions]) for b in fn.blocks],
    )
    assign_ids(out)
    return out


def copy_module(m: Module) -> Module:
    return Module(
        [replace(g) for g in m.globals],
        [replace(e) for e in m.externs],
        [copy_function(f) for f in m.functions],
    )

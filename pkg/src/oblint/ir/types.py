"""Types for the IR: fixed-width ints, untyped addresses, arrays, aggregates.

Addresses carry no pointee type; load/store/addr spell out the type they
operate on. Memory layout is packed (no padding), little-endian.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class IntType:
    width: int  # one of 1, 8, 32, 64

    def __str__(self) -> str:
        return f"i{self.width}"


@dataclass(frozen=True)
class PtrType:
    def __str__(self) -> str:
        return "ptr"


@dataclass(frozen=True)
class ArrayType:
    elem: "Type"
    length: int

    def __str__(self) -> str:
        return f"[{self.length} x {self.elem}]"


@dataclass(frozen=True)
class StructType:
    fields: tuple["Type", ...]

    def __str__(self) -> str:
        return "{" + ", ".join(str(f) for f in self.fields) + "}"


Type = IntType | PtrType | ArrayType | StructType

I1 = IntType(1)
I8 = IntType(8)
I32 = IntType(32)
I64 = IntType(64)
PTR = PtrType()

INT_WIDTHS = (1, 8, 32, 64)
PTR_BYTES = 8


def size_of(ty: Type) -> int:
    """Storage size in bytes (packed layout; i1 occupies one byte)."""
    if isinstance(ty, IntType):
        return max(1, ty.width // 8)
    if isinstance(ty, PtrType):
        return PTR_BYTES
    if isinstance(ty, ArrayType):
        return ty.length * size_of(ty.elem)
    if isinstance(ty, StructType):
        return sum(size_of(f) for f in ty.fields)
    raise TypeError(f"not a type: {ty!r}")


def field_offset(ty: StructType, index: int) -> int:
    return sum(size_of(f) for f in ty.fields[:index])


def is_scalar(ty: Type) -> bool:
    """Scalars are what load/store can move: ints and addresses."""
    return isinstance(ty, (IntType, PtrType))

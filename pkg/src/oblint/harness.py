"""Interpreter harnesses: entry point, argument values, taint markings.

Harness files are JSON:

    {
      "entry": "find_max",
      "seed": 1,
      "max_steps": 100000,
      "args": [
        {"type": "ptr", "elem": "i32", "taint": true,
         "generate": {"len": 64, "min": 0, "max": 1023}},
        {"type": "i32", "value": 64},
        {"type": "ptr", "elem": "i32", "value": [0]},
        {"type": "ptr", "elem": "i32", "value": [-1]}
      ]
    }

Scalar args carry an int `value`; pointer args carry `elem` (any pointer-free
type string) and a `value` list, one entry per element (ints, or nested lists
for aggregate elements). `taint` is a bool for whole-value/whole-object
marking, or a per-byte 0/1 list for pointer args. A `generate` block replaces
`value` with seeded random contents: `len` (elements; scalars omit it), `min`,
`max`, and optional `sorted` for scalar arrays.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

from .ir import ArrayType, IntType, PtrType, StructType, Type, parse_type


class HarnessError(Exception):
    pass


@dataclass
class ArgSpec:
    ty: Type
    value: object = None
    elem: Optional[Type] = None
    taint: Union[bool, list] = False
    generate: Optional[dict] = None


@dataclass
class Harness:
    entry: str
    args: list[ArgSpec] = field(default_factory=list)
    seed: Optional[int] = None
    max_steps: Optional[int] = None

    def with_seed(self, seed: int) -> "Harness":
        return replace(self, seed=seed)

    def untainted(self) -> "Harness":
        return replace(self, args=[replace(a, taint=False) for a in self.args])


def _contains_ptr(ty: Type) -> bool:
    if isinstance(ty, PtrType):
        return True
    if isinstance(ty, ArrayType):
        return _contains_ptr(ty.elem)
    if isinstance(ty, StructType):
        return any(_contains_ptr(f) for f in ty.fields)
    return False


def _parse_arg(raw: dict) -> ArgSpec:
    try:
        ty = parse_type(raw["type"])
    except KeyError:
        raise HarnessError("argument is missing 'type'")
    elem = None
    if isinstance(ty, PtrType):
        if "elem" not in raw:
            raise HarnessError("pointer argument needs 'elem'")
        elem = parse_type(raw["elem"])
        if _contains_ptr(elem):
            raise HarnessError("harness-materialized data cannot contain pointers")
    spec = ArgSpec(
        ty=ty,
        value=raw.get("value"),
        elem=elem,
        taint=raw.get("taint", False),
        generate=raw.get("generate"),
    )
    if spec.value is None and spec.generate is None:
        raise HarnessError("argument needs 'value' or 'generate'")
    return spec


def load_harness(path: str | Path) -> Harness:
    raw = json.loads(Path(path).read_text())
    return harness_from_dict(raw)


def harness_from_dict(raw: dict) -> Harness:
    if "entry" not in raw:
        raise HarnessError("harness is missing 'entry'")
    return Harness(
        entry=raw["entry"],
        args=[_parse_arg(a) for a in raw.get("args", [])],
        seed=raw.get("seed"),
        max_steps=raw.get("max_steps"),
    )


def _random_value(rng: random.Random, ty: Type, lo: int, hi: int):
    if isinstance(ty, IntType):
        if ty.width == 1:
            return rng.randint(0, 1)
        return rng.randint(lo, hi)
    if isinstance(ty, ArrayType):
        return [_random_value(rng, ty.elem, lo, hi) for _ in range(ty.length)]
    if isinstance(ty, StructType):
        return [_random_value(rng, f, lo, hi) for f in ty.fields]
    raise HarnessError(f"cannot generate values of type {ty}")


def resolve(h: Harness) -> Harness:
    """Materialize `generate` blocks into concrete values using the seed."""
    if not any(a.generate for a in h.args):
        return h
    rng = random.Random(h.seed if h.seed is not None else 0)
    args = []
    for a in h.args:
        if a.generate is None:
            args.append(a)
            continue
        g = a.generate
        lo, hi = int(g.get("min", 0)), int(g.get("max", 255))
        if isinstance(a.ty, PtrType):
            length = int(g["len"])
            value = [_random_value(rng, a.elem, lo, hi) for _ in range(length)]
            if g.get("sorted") and isinstance(a.elem, IntType):
                value.sort()
        else:
            value = _random_value(rng, a.ty, lo, hi)
        args.append(replace(a, value=value, generate=None))
    return replace(h, args=args)

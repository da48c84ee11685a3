"""Taint seeding from `blinded` annotations and breadth-first propagation.

A `blinded` scalar parameter taints its SSA value; a `blinded` pointer
parameter or global taints the pointed-to objects (the data behind the
address, never the address itself). Propagation is plain forward
reachability over the value-flow graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .ir import Diagnostic, Module, PtrType
from .pointsto import AbstractObject, PointsToMap
from .vfg import ObjectNode, ValueFlowGraph, ValueNode, VfgNode, bfs_with_parents


@dataclass(frozen=True)
class TaintState:
    values: frozenset  # of ValueNode
    objects: frozenset  # of AbstractObject

    @staticmethod
    def empty() -> "TaintState":
        return TaintState(frozenset(), frozenset())

    @property
    def is_empty(self) -> bool:
        return not self.values and not self.objects

    def is_value_tainted(self, fn: str, name: str) -> bool:
        return ValueNode(fn, name) in self.values

    def is_object_tainted(self, obj: AbstractObject) -> bool:
        return obj in self.objects

    def nodes(self) -> frozenset:
        return self.values | frozenset(ObjectNode(o) for o in self.objects)

    def union(self, other: "TaintState") -> "TaintState":
        return TaintState(self.values | other.values, self.objects | other.objects)


@dataclass
class TaintTrace:
    """Shortest seed-to-node paths, stored as BFS parent links."""

    parents: dict  # VfgNode -> VfgNode | None (None marks a seed)

    def has(self, node: VfgNode) -> bool:
        return node in self.parents

    def path_to(self, node: VfgNode) -> list[VfgNode]:
        path = []
        cur: Optional[VfgNode] = node
        while cur is not None:
            path.append(cur)
            cur = self.parents.get(cur)
        path.reverse()
        return path


def partition(nodes: Iterable[VfgNode]) -> TaintState:
    values = frozenset(n for n in nodes if isinstance(n, ValueNode))
    objects = frozenset(n.obj for n in nodes if isinstance(n, ObjectNode))
    return TaintState(values, objects)


def seed_sources(
    m: Module,
    pts: PointsToMap,
    skip_functions: frozenset = frozenset(),
) -> tuple[TaintState, list[Diagnostic]]:
    """Turn `blinded` annotations into taint seeds.

    `skip_functions` suppresses seeding for analysis-created clones, whose
    taint arrives through call-argument edges instead.
    """
    values: set[ValueNode] = set()
    objects: set[AbstractObject] = set()
    warnings: list[Diagnostic] = []

    for fn in m.functions:
        if fn.name in skip_functions:
            continue
        for p in fn.params:
            if not p.blinded:
                continue
            if isinstance(p.ty, PtrType):
                pointees = pts.of_value(fn.name, p.name)
                if not pointees:
                    warnings.append(
                        Diagnostic(
                            "warning",
                            f"blinded pointer %{p.name} has an empty points-to set; "
                            f"no data is tainted",
                            f"{fn.name}",
                        )
                    )
                objects.update(pointees)
            else:
                values.add(ValueNode(fn.name, p.name))

    for g in m.globals:
        if not g.blinded:
            continue
        gobj = AbstractObject(f"@{g.name}", "global")
        if isinstance(g.ty, PtrType):
            pointees = pts.contents(gobj)
            if not pointees:
                warnings.append(
                    Diagnostic(
                        "warning",
                        f"blinded pointer @{g.name} has an empty points-to set; "
                        f"no data is tainted",
                        f"@{g.name}",
                    )
                )
            objects.update(pointees)
        else:
            objects.add(gobj)

    return TaintState(frozenset(values), frozenset(objects)), warnings


def propagate(g: ValueFlowGraph, seeds: TaintState) -> tuple[TaintState, TaintTrace]:
    """Tainted set = forward reachability from the seeds, with shortest traces."""
    reached, parents = bfs_with_parents(g, seeds.nodes())
    return partition(reached), TaintTrace(parents)

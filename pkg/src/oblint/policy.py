"""Policy check: scan the analyzed module for uses of tainted data that a
data-oblivious target would fault on.

Flagged: conditional branches on tainted conditions, loads/stores through
tainted addresses, calls into unanalyzable externs with tainted arguments,
and (behind a flag) variable-latency division on tainted operands. A select
with a tainted condition is not flagged; it propagates taint instead and can
be lowered obliviously.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import AnalysisConfig
from .ir import (
    BinOp,
    Br,
    Call,
    DIVISION_OPS,
    InstId,
    Load,
    Module,
    Store,
    ValueRef,
)
from .pointsto import PointsToMap
from .taint import TaintState, TaintTrace
from .vfg import ObjectNode, ValueNode, VfgNode

BRANCH = "branch"
MEM_LOAD = "mem-load"
MEM_STORE = "mem-store"
VARLAT = "varlat"
EXTERN_CALL = "extern-call"

CATEGORIES = (BRANCH, MEM_LOAD, MEM_STORE, VARLAT, EXTERN_CALL)


@dataclass(frozen=True)
class Violation:
    location: InstId
    category: str
    operand: str  # the tainted operand, for the report text
    trace: tuple  # VfgNode path from a taint seed to the operand

    def __str__(self) -> str:
        return f"{self.category} at {self.location} on {self.operand}"


@dataclass
class ViolationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not self.violations

    def count(self, category: str) -> int:
        return sum(1 for v in self.violations if v.category == category)

    def summary(self) -> dict[str, int]:
        """Category counts; loads and stores fold into one memory figure."""
        return {
            "branch": self.count(BRANCH),
            "memory": self.count(MEM_LOAD) + self.count(MEM_STORE),
            "varlat": self.count(VARLAT),
            "extern_call": self.count(EXTERN_CALL),
        }

    def pairs(self) -> frozenset:
        return frozenset((v.location, v.category) for v in self.violations)


def validate(
    m: Module,
    taint: TaintState,
    trace: TaintTrace,
    pts: PointsToMap,
    config: AnalysisConfig | None = None,
) -> ViolationReport:
    """Build the violation report for a module under its taint fixpoint.

    Violations come out ordered by (function, block, index) in module order,
    so reports are stable across runs.
    """
    config = config or AnalysisConfig()
    report = ViolationReport()

    def tainted_value(fn: str, op) -> bool:
        return isinstance(op, ValueRef) and taint.is_value_tainted(fn, op.name)

    def value_trace(fn: str, op) -> tuple:
        node = ValueNode(fn, op.name)
        return tuple(trace.path_to(node)) if trace.has(node) else (node,)

    for fn, block, idx, inst in m.instructions():
        f = fn.name
        if isinstance(inst, Br):
            if tainted_value(f, inst.cond):
                report.violations.append(
                    Violation(inst.iid, BRANCH, str(inst.cond), value_trace(f, inst.cond))
                )
        elif isinstance(inst, Load):
            if tainted_value(f, inst.addr):
                report.violations.append(
                    Violation(inst.iid, MEM_LOAD, str(inst.addr), value_trace(f, inst.addr))
                )
        elif isinstance(inst, Store):
            if tainted_value(f, inst.addr):
                report.violations.append(
                    Violation(inst.iid, MEM_STORE, str(inst.addr), value_trace(f, inst.addr))
                )
        elif isinstance(inst, BinOp) and inst.op in DIVISION_OPS and config.check_varlat:
            for op in (inst.lhs, inst.rhs):
                if tainted_value(f, op):
                    report.violations.append(
                        Violation(inst.iid, VARLAT, str(op), value_trace(f, op))
                    )
                    break
        elif isinstance(inst, Call) and m.extern(inst.callee) is not None:
            hit = _tainted_extern_arg(f, inst, taint, pts, trace)
            if hit is not None:
                operand, path = hit
                report.violations.append(Violation(inst.iid, EXTERN_CALL, operand, path))

    return report


def _tainted_extern_arg(fn: str, inst: Call, taint: TaintState, pts: PointsToMap, trace):
    """First argument tainted by value or through its pointee, with its trace."""
    for arg in inst.args:
        if isinstance(arg, ValueRef) and taint.is_value_tainted(fn, arg.name):
            node = ValueNode(fn, arg.name)
            return str(arg), tuple(trace.path_to(node)) if trace.has(node) else (node,)
    for arg in inst.args:
        for obj in sorted(pts.of_operand(fn, arg), key=lambda o: o.site):
            if taint.is_object_tainted(obj):
                node = ObjectNode(obj)
                path = tuple(trace.path_to(node)) if trace.has(node) else (node,)
                return str(arg), path
    return None

"""Context sensitivity by function cloning.

Shared functions mix taint across call sites: one tainted caller poisons the
return value (and forward calls) of every other caller. The fix is to clone a
function per distinct call-site taint signature and retarget only the tainted
sites, then rerun taint propagation, repeating until no call site needs a new
target.

A signature records, per parameter, whether the argument is tainted by value
and/or through its pointee. Per-site signatures are joined monotonically
across rounds, which bounds the rounds by the (finite) number of distinct
(function, signature) pairs. A per-function clone budget guards against
signature blowups; beyond it the function falls back to context-insensitive
handling (its own parameters are seeded with the union of all requested
signatures, which over-taints but stays sound).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import AnalysisConfig
from .ir import (
    Call,
    Diagnostic,
    InstId,
    Module,
    PtrType,
    ValueRef,
    copy_function,
    copy_module,
)
from .pointsto import PointsToMap, analyze as solve_pointsto
from .taint import TaintState, TaintTrace, propagate, seed_sources
from .vfg import ValueFlowGraph, ValueNode, build

# ((by_value, pointee), ...) one pair per parameter
TaintSignature = tuple[tuple[bool, bool], ...]


def zero_signature(nparams: int) -> TaintSignature:
    return ((False, False),) * nparams


def join_signatures(a: TaintSignature, b: TaintSignature) -> TaintSignature:
    return tuple((av or bv, ap or bp) for (av, ap), (bv, bp) in zip(a, b))


def is_zero(sig: TaintSignature) -> bool:
    return not any(v or p for v, p in sig)


def signature_at(m: Module, call: InstId, taint: TaintState, pts: PointsToMap) -> TaintSignature:
    """Taint signature of one call site under the current taint fixpoint."""
    fn = m.function(call.function)
    inst = fn.block(call.block).instructions[call.index]
    assert isinstance(inst, Call)
    sig = []
    for arg in inst.args:
        by_value = isinstance(arg, ValueRef) and taint.is_value_tainted(
            call.function, arg.name
        )
        pointee = any(
            taint.is_object_tainted(obj) for obj in pts.of_operand(call.function, arg)
        )
        sig.append((by_value, pointee))
    return tuple(sig)


@dataclass
class CloneRegistry:
    clones: dict = field(default_factory=dict)  # (orig, sig) -> clone name
    counters: dict = field(default_factory=dict)  # orig -> clones made
    originals: dict = field(default_factory=dict)  # clone name -> orig
    site_sigs: dict = field(default_factory=dict)  # call InstId -> joined sig
    ci_taint: dict = field(default_factory=dict)  # orig -> merged signature
    pristine: dict = field(default_factory=dict)  # orig -> untouched Function copy

    def original_of(self, name: str) -> str:
        return self.originals.get(name, name)

    def is_clone(self, name: str) -> bool:
        return name in self.originals

    def clone_functions(self) -> frozenset:
        return frozenset(self.originals)


def clone_round(
    m: Module,
    taint: TaintState,
    reg: CloneRegistry,
    pts: PointsToMap,
    config: AnalysisConfig | None = None,
) -> tuple[Module, CloneRegistry, bool]:
    """One cloning pass: retarget call sites whose (joined) signature is new.

    Returns the rewritten module (a fresh copy when anything changed), the
    updated registry, and a change flag. Clone bodies are copies of the
    original function, so taint inside a clone's own calls is handled by the
    next round.
    """
    config = config or AnalysisConfig()
    out = copy_module(m)
    changed = False

    for fn in list(out.functions):  # clones append to out.functions mid-loop
        for block in fn.blocks:
            for inst in block.instructions:
                if not isinstance(inst, Call) or out.function(inst.callee) is None:
                    continue
                sig = signature_at(out, inst.iid, taint, pts)
                joined = join_signatures(reg.site_sigs.get(inst.iid, sig), sig)
                reg.site_sigs[inst.iid] = joined
                if is_zero(joined):
                    continue
                orig = reg.original_of(inst.callee)
                desired = _resolve_target(out, orig, joined, reg, config)
                if desired is None:  # context-insensitive fallback grew
                    desired = orig
                    changed = True
                if inst.callee != desired:
                    inst.callee = desired
                    changed = True

    return (out, reg, True) if changed else (m, reg, False)


def _resolve_target(
    m: Module, orig: str, sig: TaintSignature, reg: CloneRegistry, config: AnalysisConfig
) -> str | None:
    if orig in reg.ci_taint:
        merged = join_signatures(reg.ci_taint[orig], sig)
        if merged != reg.ci_taint[orig]:
            reg.ci_taint[orig] = merged
            return None
        return orig
    key = (orig, sig)
    if key in reg.clones:
        return reg.clones[key]
    count = reg.counters.get(orig, 0)
    if count >= config.clone_budget:
        merged = sig
        for (o, s), _ in list(reg.clones.items()):
            if o == orig:
                merged = join_signatures(merged, s)
        reg.ci_taint[orig] = merged
        return None
    clone_name = f"{orig}#{count + 1}"
    reg.counters[orig] = count + 1
    reg.clones[key] = clone_name
    reg.originals[clone_name] = orig
    # Clone bodies come from a snapshot of the original so retargets applied
    # to the original's own call sites never leak into new clones.
    if orig not in reg.pristine:
        reg.pristine[orig] = copy_function(m.function(orig))
    clone = copy_function(reg.pristine[orig], clone_name)
    for p, (by_value, pointee) in zip(clone.params, sig):
        p.blinded = p.blinded or by_value or pointee
    m.functions.append(clone)
    return clone_name


def _ci_seeds(m: Module, reg: CloneRegistry, pts: PointsToMap) -> TaintState:
    values = set()
    objects = set()
    for fname, sig in reg.ci_taint.items():
        fn = m.function(fname)
        if fn is None:
            continue
        for p, (by_value, pointee) in zip(fn.params, sig):
            if by_value:
                values.add(ValueNode(fname, p.name))
            if pointee:
                objects.update(pts.of_value(fname, p.name))
    return TaintState(frozenset(values), frozenset(objects))


@dataclass
class AnalysisResult:
    module: Module
    taint: TaintState
    trace: TaintTrace
    registry: CloneRegistry
    pts: PointsToMap
    graph: ValueFlowGraph
    diagnostics: list[Diagnostic]
    rounds: int


def analyze_to_fixpoint(m: Module, config: AnalysisConfig | None = None) -> AnalysisResult:
    """The full analysis loop: points-to, value flow, taint, clone, repeat.

    With cloning disabled this is a single propagation round over the original
    module (the sound-but-imprecise fallback mode).
    """
    config = config or AnalysisConfig()
    reg = CloneRegistry()
    for f in m.functions:
        reg.pristine[f.name] = copy_function(f)
    module = m
    diagnostics: list[Diagnostic] = []
    rounds = 0

    while True:
        rounds += 1
        pts = solve_pointsto(module)
        graph = build(module, pts)
        seeds, warns = seed_sources(module, pts, skip_functions=reg.clone_functions())
        seeds = seeds.union(_ci_seeds(module, reg, pts))
        state, trace = propagate(graph, seeds)
        if rounds == 1:
            diagnostics.extend(warns)
        if not config.cloning:
            break
        rewritten, reg, changed = clone_round(module, state, reg, pts, config)
        if not changed:
            break
        if rounds >= config.max_rounds:
            diagnostics.append(
                Diagnostic(
                    "warning",
                    f"clone rounds exhausted after {rounds}; result may over-taint",
                )
            )
            break
        module = rewritten

    return AnalysisResult(module, state, trace, reg, pts, graph, diagnostics, rounds)

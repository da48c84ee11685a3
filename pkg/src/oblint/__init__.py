"""oblint: static linter and dynamic taint oracle for data-oblivious execution.

The pipeline mirrors how the analysis runs end to end:

    parse_module -> validate_module -> analyze_to_fixpoint -> policy.validate

and the dynamic side:

    load_harness -> dynoracle.run -> subset_check
"""

from .cloning import (
    AnalysisResult,
    CloneRegistry,
    analyze_to_fixpoint,
    clone_round,
    signature_at,
)
from .config import AnalysisConfig
from .dynoracle import DynReport, Machine, Pointer, SubsetVerdict, Trap, run, subset_check
from .harness import ArgSpec, Harness, HarnessError, harness_from_dict, load_harness, resolve
from .ir import (
    Diagnostic,
    InstId,
    Module,
    ParseError,
    emit_annotated,
    emit_module,
    parse_module,
    validate_module,
)
from .pointsto import (
    AbstractObject,
    Constraint,
    PointsToMap,
    collect_constraints,
    solve,
)
from .policy import Violation, ViolationReport, validate
from .taint import TaintState, TaintTrace, propagate, seed_sources
from .vfg import ObjectNode, ValueFlowGraph, ValueNode, build, reachable

__version__ = "0.1.0"

__all__ = [
    "AbstractObject", "AnalysisConfig", "AnalysisResult", "ArgSpec", "CloneRegistry",
    "Constraint", "Diagnostic", "DynReport", "Harness", "HarnessError", "InstId",
    "Machine", "Module", "ObjectNode", "ParseError", "Pointer", "PointsToMap",
    "SubsetVerdict", "TaintState", "TaintTrace", "Trap", "ValueFlowGraph",
    "ValueNode", "Violation", "ViolationReport", "analyze_to_fixpoint", "build",
    "clone_round", "collect_constraints", "emit_annotated", "emit_module",
    "harness_from_dict", "load_harness", "parse_module", "propagate", "reachable",
    "resolve", "run", "seed_sources", "signature_at", "solve", "subset_check",
    "validate", "validate_module",
]

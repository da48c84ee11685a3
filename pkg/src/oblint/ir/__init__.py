"""SSA intermediate representation: types, parser, validator, printer."""

from .core import (
    Addr,
    Alloca,
    BINARY_OPS,
    BinOp,
    Block,
    Br,
    Call,
    Cast,
    Diagnostic,
    DIVISION_OPS,
    ExternDecl,
    Function,
    GlobalDef,
    GlobalRef,
    ICMP_PREDS,
    ICmp,
    InstId,
    Instr,
    IntConst,
    Jmp,
    Load,
    Module,
    Operand,
    Param,
    Phi,
    Ret,
    Select,
    Store,
    ValueRef,
    assign_ids,
    copy_function,
    copy_module,
    has_errors,
    is_terminator,
    operands_of,
    result_of,
)
from .parser import ParseError, parse_module, parse_type
from .printer import emit_annotated, emit_module
from .types import (
    ArrayType,
    I1,
    I8,
    I32,
    I64,
    IntType,
    PTR,
    PtrType,
    StructType,
    Type,
    field_offset,
    is_scalar,
    size_of,
)
from .validator import (
    block_predecessors,
    block_successors,
    compute_dominators,
    reachable_blocks,
    validate_module,
    value_types,
)

__all__ = [
    "Addr", "Alloca", "ArrayType", "BINARY_OPS", "BinOp", "Block", "Br", "Call",
    "Cast", "DIVISION_OPS", "Diagnostic", "ExternDecl", "Function", "GlobalDef",
    "GlobalRef", "I1", "I8", "I32", "I64", "ICMP_PREDS", "ICmp", "InstId", "Instr",
    "IntConst", "IntType", "Jmp", "Load", "Module", "Operand", "PTR", "Param",
    "ParseError", "Phi", "PtrType", "Ret", "Select", "Store", "StructType", "Type",
    "ValueRef", "assign_ids", "block_predecessors", "block_successors",
    "compute_dominators", "copy_function", "copy_module", "emit_annotated",
    "emit_module", "field_offset", "has_errors", "is_scalar", "is_terminator",
    "operands_of", "parse_module", "parse_type", "reachable_blocks", "result_of",
    "size_of", "validate_module", "value_types",
]

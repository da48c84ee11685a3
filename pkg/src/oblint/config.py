"""Analysis and interpreter configuration knobs."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class AnalysisConfig:
    cloning: bool = True
    max_rounds: int = 32
    clone_budget: int = 64
    check_varlat: bool = False
    output_format: str = "text"  # "text" | "structured"
    emit_annotated_ir: bool = False
    dump_graph: bool = False
    max_steps: int = 200_000

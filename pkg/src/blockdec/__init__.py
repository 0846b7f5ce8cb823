"""Block-based decoding framework for dynamic logical circuits.

Compile a logical circuit into per-operation decoding blocks, decode blocks
independently with a weighted union-find decoder, fuse partial results at
combination boundaries, and drive the whole thing from a runtime coordinator
that supports feed-forward branching. A phenomenological noise simulator and
a CLI close the loop for accuracy and scheduling experiments.
"""

from .blocks import DecodingBlock, block_type, combination_boundary, merge_blocks
from .circuit import LogicalCircuit, QecSetting, parse_circuit, parse_setting
from .compiler import CompiledCircuit, compile_circuit, enumerate_paths, generate_blocks
from .decoder import Correction, Syndrome, decode, exhaustive_min_weight, syndrome_of
from .fusion import BlockDecodeResult, decode_block, finalize, fuse
from .graph import (
    DecodingGraph,
    ErrorSource,
    graphs_identical,
    merge_graphs,
    weight_from_probability,
)

__version__ = "0.1.0"

__all__ = [
    "BlockDecodeResult",
    "CompiledCircuit",
    "Correction",
    "DecodingBlock",
    "DecodingGraph",
    "ErrorSource",
    "LogicalCircuit",
    "QecSetting",
    "Syndrome",
    "block_type",
    "combination_boundary",
    "compile_circuit",
    "decode",
    "decode_block",
    "enumerate_paths",
    "exhaustive_min_weight",
    "finalize",
    "fuse",
    "generate_blocks",
    "graphs_identical",
    "merge_blocks",
    "merge_graphs",
    "parse_circuit",
    "parse_setting",
    "syndrome_of",
    "weight_from_probability",
]

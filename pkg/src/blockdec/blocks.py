"""Decoding blocks: a per-operation decoding graph plus combination boundaries.

A block pairs the decoding graph contributed by one logical operation (or a
merged run of operations) with the detector sets it shares with each
neighboring operation. Two blocks can be merged by uniting their graphs and
dissolving the boundary between them; blocks with identical graphs (up to
id translation) share a type key and can share a specialized decoder.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .errors import CompileError
from .graph import DecodingGraph, canonical_key, key_digest, merge_graphs


@dataclass(frozen=True)
class DecodingBlock:
    """One unit of decoding work.

    ``boundaries`` maps each neighbor's op-instance id to the shared
    detector set (the intersection of the two vertex sets). Merged blocks
    get a fresh ``op_instance_id`` and record the original instances they
    cover in ``covered_ops``.
    """

    op_instance_id: int
    graph: DecodingGraph
    boundaries: Mapping[int, frozenset[int]] = field(default_factory=dict)
    covered_ops: frozenset[int] = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "boundaries",
            {int(k): frozenset(v) for k, v in self.boundaries.items()},
        )
        if self.covered_ops is None:
            object.__setattr__(self, "covered_ops", frozenset({self.op_instance_id}))
        else:
            object.__setattr__(self, "covered_ops", frozenset(self.covered_ops))
        for neighbor, shared in self.boundaries.items():
            if neighbor in self.covered_ops:
                raise CompileError(
                    f"block {self.op_instance_id} declares a boundary to itself"
                )
            if not shared <= self.graph.vertices:
                raise CompileError(
                    f"block {self.op_instance_id} boundary to {neighbor} leaves "
                    "its own vertex set"
                )

    @property
    def boundary_vertices(self) -> frozenset[int]:
        """Union of all combination boundaries of this block."""
        out: frozenset[int] = frozenset()
        for shared in self.boundaries.values():
            out |= shared
        return out


def combination_boundary(b1: DecodingBlock, b2: DecodingBlock) -> frozenset[int]:
    """Shared detectors of two blocks: the intersection of their vertex sets.

    Symmetric; non-empty exactly when the blocks' operations touch the same
    patch at adjacent rounds under the compiler's id packing.
    """
    return b1.graph.vertices & b2.graph.vertices


def block_type(block: DecodingBlock) -> str:
    """Type key of a block: the canonical serialization of its graph.

    Two blocks share a key iff their graphs are identical up to the
    time/space translation of the id packing.
    """
    return canonical_key(block.graph)


def block_type_digest(block: DecodingBlock) -> str:
    """Short digest of :func:`block_type`, used in files and reports."""
    return key_digest(block_type(block))


def merge_blocks(
    b1: DecodingBlock, b2: DecodingBlock, new_id: int | None = None
) -> DecodingBlock:
    """Merge two blocks at their combination boundary.

    The merged graph is the union graph; the mutual boundary entries
    disappear and entries toward any common third neighbor are unioned.
    ``new_id`` names the merged block; it defaults to one past the largest
    covered id (callers that manage an id space should pass one explicitly).

    Raises:
        CompileError: if the recorded boundaries are inconsistent with the
            actual vertex intersection.
    """
    actual = combination_boundary(b1, b2)
    declared_1 = frozenset().union(
        *(b1.boundaries.get(op, frozenset()) for op in b2.covered_ops)
    )
    declared_2 = frozenset().union(
        *(b2.boundaries.get(op, frozenset()) for op in b1.covered_ops)
    )
    if declared_1 != actual or declared_2 != actual:
        raise CompileError(
            f"boundary mismatch merging blocks {b1.op_instance_id} and "
            f"{b2.op_instance_id}: recorded {sorted(declared_1)} / "
            f"{sorted(declared_2)}, actual {sorted(actual)}"
        )
    covered = b1.covered_ops | b2.covered_ops
    merged: dict[int, frozenset[int]] = {}
    for source in (b1, b2):
        for neighbor, shared in source.boundaries.items():
            if neighbor in covered:
                continue
            merged[neighbor] = merged.get(neighbor, frozenset()) | shared
    if new_id is None:
        new_id = max(covered) + 1
    return DecodingBlock(
        op_instance_id=new_id,
        graph=merge_graphs(b1.graph, b2.graph),
        boundaries=merged,
        covered_ops=covered,
    )

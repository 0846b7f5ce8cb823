"""Fusion-based decoding: independent block decodes merged at boundaries.

Each block is decoded with its combination boundaries treated as *virtual*
open boundaries: clusters freeze on contact instead of growing across.
Fusing two partial results unites their graphs and cluster states at the
shared detectors, strips the virtual status from the fused boundary, and
resumes growth for any cluster that lost its freeze. Peeling is deferred
entirely to :func:`finalize`, after every boundary of a result has been
fused (or discarded because its neighbor sits on an untaken branch).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .blocks import DecodingBlock
from .decoder import ClusterState, Correction, Syndrome, observable_flips
from .errors import FusionError
from .graph import DecodingGraph, merge_graphs


@dataclass
class BlockDecodeResult:
    """Quiescent partial decode of one or more fused blocks.

    ``boundaries`` maps each not-yet-fused neighbor block to the shared
    detector set; their union is exactly the virtual vertex set of the
    cluster state. Results are single-owner: ``fuse`` consumes both inputs.
    """

    blocks: frozenset[int]
    covered_ops: frozenset[int]
    graph: DecodingGraph
    state: ClusterState
    boundaries: dict[int, frozenset[int]] = field(default_factory=dict)

    @property
    def virtual_vertices(self) -> frozenset[int]:
        return frozenset(self.state.virtual)

    @property
    def defects(self) -> frozenset[int]:
        return frozenset(self.state.defects)

    def _sync_virtual(self) -> None:
        """Re-derive the virtual set from the remaining boundaries and
        resume growth for clusters that lost their freeze."""
        keep: set[int] = set()
        for shared in self.boundaries.values():
            keep |= shared
        dropped = self.state.virtual - keep
        if dropped:
            self.state.devirtualize(dropped)
            self.state.grow()


def decode_block(block: DecodingBlock, syndrome: Syndrome) -> BlockDecodeResult:
    """Decode one block with its combination boundaries virtual.

    The result is quiescent (every cluster frozen) and carries no
    correction yet; peeling happens at :func:`finalize`.
    """
    state = ClusterState(block.graph, syndrome, virtual=block.boundary_vertices)
    state.grow()
    return BlockDecodeResult(
        blocks=frozenset({block.op_instance_id}),
        covered_ops=block.covered_ops,
        graph=block.graph,
        state=state,
        boundaries=dict(block.boundaries),
    )


def fuse(
    r1: BlockDecodeResult,
    r2: BlockDecodeResult,
    boundary: frozenset[int] | None = None,
) -> BlockDecodeResult:
    """Fuse two partial results at their recorded combination boundary.

    ``boundary`` may be passed to cross-check against the recorded entry.
    Boundary vertices stop being virtual unless another unfused boundary of
    the merged result still contains them; clusters whose freeze depended on
    them regrow to quiescence.

    Raises:
        FusionError: if the inputs overlap, are not neighbors, or the given
            boundary disagrees with the recorded one.
    """
    if r1.blocks & r2.blocks:
        raise FusionError(f"results overlap on blocks {sorted(r1.blocks & r2.blocks)}")
    recorded: frozenset[int] = frozenset()
    for bid in r2.blocks:
        recorded |= r1.boundaries.get(bid, frozenset())
    symmetric: frozenset[int] = frozenset()
    for bid in r1.blocks:
        symmetric |= r2.boundaries.get(bid, frozenset())
    if recorded != symmetric:
        raise FusionError("asymmetric boundary records between fusion inputs")
    if not recorded:
        raise FusionError("results share no recorded combination boundary")
    if boundary is not None and frozenset(boundary) != recorded:
        raise FusionError(
            f"given boundary {sorted(boundary)} does not match the recorded "
            f"{sorted(recorded)}"
        )

    graph = merge_graphs(r1.graph, r2.graph)
    state = r1.state
    state.absorb(r2.state, graph)
    merged_boundaries: dict[int, frozenset[int]] = {}
    covered_blocks = r1.blocks | r2.blocks
    for source in (r1, r2):
        for neighbor, shared in source.boundaries.items():
            if neighbor in covered_blocks:
                continue
            merged_boundaries[neighbor] = (
                merged_boundaries.get(neighbor, frozenset()) | shared
            )
    result = BlockDecodeResult(
        blocks=covered_blocks,
        covered_ops=r1.covered_ops | r2.covered_ops,
        graph=graph,
        state=state,
        boundaries=merged_boundaries,
    )
    result._sync_virtual()
    return result


def discard_boundary(result: BlockDecodeResult, neighbor_block: int) -> None:
    """Drop the boundary toward a neighbor that will never decode.

    Used when branch resolution prunes the neighbor's subtree; clusters
    frozen only by that boundary regrow in place.
    """
    if neighbor_block in result.boundaries:
        del result.boundaries[neighbor_block]
        result._sync_virtual()


def extract_correction(result: BlockDecodeResult) -> Correction:
    """Peel the current state into a correction for the merged-so-far graph.

    Valid for the partial decoding problem even when boundaries remain:
    any leftover odd parity exits through a virtual vertex. Within a fully
    fused patch component the returned edges are final.
    """
    edges = result.state.peel()
    return Correction(edges, observable_flips(result.graph, edges))


def finalize(result: BlockDecodeResult) -> Correction:
    """Extract the correction of a fully fused result.

    Raises:
        FusionError: if any combination boundary remains unfused.
    """
    if result.boundaries:
        raise FusionError(
            "finalize before fusing boundaries toward blocks "
            f"{sorted(result.boundaries)}"
        )
    if result.state.virtual:
        raise FusionError("internal: virtual vertices without boundaries")
    return extract_correction(result)

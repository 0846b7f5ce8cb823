"""Offline compiler: logical circuit + QEC setting -> decoding blocks.

The compiler walks the program tree once to lay out every operation
instance on its patch's round clock, derives the decoding graph each
instance contributes, links same-patch neighbors (whose shared detector
layer forms the combination boundary), and finally coalesces consecutive
instances into larger blocks according to the granularity knob.

Id packing
----------
Detector ids are ``round * stride + patch_offset + position``: ``stride``
is the total detector count per round across all declared patches, each
patch owns a contiguous position range, and ``round`` is the patch's
cumulative round counter. Two operations therefore share detectors exactly
when they touch the same patch at adjacent rounds. Edge ids are assigned
in instance order and are independent of granularity, so merging blocks of
a path reproduces the monolithic graph edge for edge.

Interface rule
--------------
The first detector layer of an instance also belongs to its same-lifetime
predecessor's vertex set, with the connecting measurement-error edges owned
by the predecessor. A ``measure`` ends the lifetime: no boundary crosses a
measure -> init seam, because a reset carries no error correlations.
"""

from __future__ import annotations

import copy
import itertools
from dataclasses import dataclass, field, replace
from functools import cached_property

from .blocks import DecodingBlock, block_type_digest, merge_blocks
from .circuit import (
    Conditional,
    LogicalCircuit,
    Operation,
    QecSetting,
    Statement,
    _op_rounds,
    validate_circuit,
)
from .codes import CodeLayout, layout_for
from .errors import CircuitError, CompileError, UnsupportedOperationError
from .graph import DecodingGraph, ErrorSource, compose_probabilities

DEFAULT_MAX_PATHS = 1024


@dataclass(frozen=True)
class OpInstance:
    """One operation occurrence in the program tree.

    ``cond_path`` records the conditional outcomes that make this instance
    reachable; instances before any conditional have an empty path.
    ``mask_obs`` is the observable whose mask sits on this instance's
    data-error edges (set for every op of a measured patch lifetime).
    """

    op_id: int
    kind: str
    patch: str
    start_round: int
    end_round: int
    label: str | None = None
    obs_index: int | None = None
    mask_obs: int | None = None
    has_next: bool = False
    cond_path: tuple[tuple[int, bool], ...] = ()

    @property
    def rounds(self) -> int:
        return self.end_round - self.start_round


@dataclass(frozen=True)
class ConditionalInfo:
    cond_id: int
    labels: tuple[str, ...]
    cond_path: tuple[tuple[int, bool], ...] = ()


@dataclass(frozen=True)
class OpNode:
    op_id: int


@dataclass(frozen=True)
class CondNode:
    cond_id: int
    then_nodes: tuple["ProgramNode", ...]
    else_nodes: tuple["ProgramNode", ...]


ProgramNode = OpNode | CondNode


@dataclass(frozen=True)
class ObservableInfo:
    index: int
    patch: str
    ordinal: int


@dataclass(frozen=True)
class ExecutionPath:
    """One complete assignment of branch outcomes and its op sequence."""

    path_id: int
    choices: tuple[tuple[int, bool], ...]
    ops: tuple[int, ...]
    blocks: tuple[int, ...] = ()


@dataclass(frozen=True)
class PatchLayout:
    name: str
    family: str
    distance: int
    offset: int
    layout: CodeLayout

    @property
    def detectors_per_round(self) -> int:
        return self.layout.detectors_per_round


@dataclass(frozen=True)
class CompiledCircuit:
    """Everything the runtime needs: blocks, paths, layout and op metadata."""

    setting: QecSetting
    granularity: int
    stride: int
    patches: dict[str, PatchLayout]
    observables: tuple[ObservableInfo, ...]
    instances: dict[int, OpInstance]
    conditionals: dict[int, ConditionalInfo]
    program: tuple[ProgramNode, ...]
    blocks: dict[int, DecodingBlock]
    block_of_op: dict[int, int]
    paths: tuple[ExecutionPath, ...]

    @property
    def observable_count(self) -> int:
        return len(self.observables)

    def layer_detectors(self, patch: str, round_index: int) -> tuple[int, ...]:
        """Detector ids of one patch round, in layout-position order."""
        pl = self.patches[patch]
        base = round_index * self.stride + pl.offset
        return tuple(base + i for i in range(pl.detectors_per_round))

    def type_table(self) -> dict[str, list[int]]:
        """Block-type digest -> sorted block ids of that type."""
        table: dict[str, list[int]] = {}
        for bid in sorted(self.blocks):
            table.setdefault(block_type_digest(self.blocks[bid]), []).append(bid)
        return table

    def boundary_pairs(self) -> list[tuple[int, int, frozenset[int]]]:
        """All recorded block-level boundaries as (low id, high id, shared)."""
        out = []
        for bid in sorted(self.blocks):
            for nid, shared in sorted(self.blocks[bid].boundaries.items()):
                if bid < nid:
                    out.append((bid, nid, shared))
        return out

    @cached_property
    def _mask_table(self) -> dict[int, frozenset[int]]:
        found: dict[int, set[int]] = {o.index: set() for o in self.observables}
        for bid, block in self.blocks.items():
            for e in block.graph.edges:
                for obs in e.observables:
                    found[obs].add(bid)
        for op in self.instances.values():
            if op.obs_index is not None:
                found[op.obs_index].add(self.block_of_op[op.op_id])
        return {obs: frozenset(bids) for obs, bids in found.items()}

    def mask_blocks(self, obs_index: int) -> frozenset[int]:
        """Blocks whose graphs carry the observable's mask, plus the
        measuring block (so a readout is never declared complete before its
        raw parity exists, even in noiseless compilations)."""
        return self._mask_table[obs_index]

    @cached_property
    def measure_ops(self) -> dict[int, tuple[int, ...]]:
        """Observable index -> ids of measure instances reporting it
        (one per path through the measuring conditional structure)."""
        table: dict[int, list[int]] = {o.index: [] for o in self.observables}
        for op_id in sorted(self.instances):
            op = self.instances[op_id]
            if op.obs_index is not None:
                table[op.obs_index].append(op_id)
        return {obs: tuple(ids) for obs, ids in table.items()}


# ---------------------------------------------------------------------------
# Pass 1: program skeleton (ids only; shared with path enumeration)


def _build_skeleton(
    circuit: LogicalCircuit,
) -> tuple[tuple[ProgramNode, ...], dict[int, Operation], dict[int, Conditional]]:
    op_stmts: dict[int, Operation] = {}
    cond_stmts: dict[int, Conditional] = {}
    counter = itertools.count()
    cond_counter = itertools.count()

    def walk(body: tuple[Statement, ...]) -> tuple[ProgramNode, ...]:
        nodes: list[ProgramNode] = []
        for stmt in body:
            if isinstance(stmt, Operation):
                op_id = next(counter)
                op_stmts[op_id] = stmt
                nodes.append(OpNode(op_id))
            else:
                cond_id = next(cond_counter)
                cond_stmts[cond_id] = stmt
                then_nodes = walk(stmt.then_body)
                else_nodes = walk(stmt.else_body)
                nodes.append(CondNode(cond_id, then_nodes, else_nodes))
        return tuple(nodes)

    return walk(circuit.body), op_stmts, cond_stmts


def _count_paths(nodes: tuple[ProgramNode, ...]) -> int:
    total = 1
    for node in nodes:
        if isinstance(node, CondNode):
            total *= _count_paths(node.then_nodes) + _count_paths(node.else_nodes)
    return total


def _expand_paths(
    nodes: tuple[ProgramNode, ...]
) -> list[tuple[dict[int, bool], list[int]]]:
    combos: list[tuple[dict[int, bool], list[int]]] = [({}, [])]
    for node in nodes:
        if isinstance(node, OpNode):
            for _, ops in combos:
                ops.append(node.op_id)
        else:
            grown: list[tuple[dict[int, bool], list[int]]] = []
            then_tails = _expand_paths(node.then_nodes)
            else_tails = _expand_paths(node.else_nodes)
            for choices, ops in combos:
                for taken, tails in ((True, then_tails), (False, else_tails)):
                    for tail_choices, tail_ops in tails:
                        grown.append(
                            (
                                {**choices, node.cond_id: taken, **tail_choices},
                                ops + tail_ops,
                            )
                        )
            combos = grown
    return combos


def enumerate_paths(
    circuit: LogicalCircuit, max_paths: int = DEFAULT_MAX_PATHS
) -> list[ExecutionPath]:
    """All execution paths, depth-first with the then-branch first.

    Raises:
        CompileError: when the path count exceeds ``max_paths``.
    """
    nodes, op_stmts, _ = _build_skeleton(circuit)
    total = _count_paths(nodes)
    if total > max_paths:
        raise CompileError(
            f"circuit has {total} execution paths, above the cap of {max_paths}"
        )
    paths = []
    for path_id, (choices, ops) in enumerate(_expand_paths(nodes)):
        labels = [op_stmts[o].label for o in ops if op_stmts[o].kind == "measure"]
        dupes = {lbl for lbl in labels if labels.count(lbl) > 1}
        if dupes:
            raise CircuitError(
                f"measurement label(s) {sorted(dupes)} reused on one path"
            )
        paths.append(
            ExecutionPath(path_id, tuple(sorted(choices.items())), tuple(ops))
        )
    return paths


# ---------------------------------------------------------------------------
# Pass 2: timing, lifetimes, masks, links


@dataclass
class _OpRec:
    op_id: int
    kind: str
    patch: str
    start_round: int
    end_round: int
    label: str | None
    cond_path: tuple[tuple[int, bool], ...]
    obs_index: int | None = None
    mask_obs: int | None = None
    has_next: bool = False


@dataclass
class _Ctx:
    clock: dict[str, int] = field(default_factory=dict)
    alive: dict[str, bool] = field(default_factory=dict)
    ordinal: dict[str, int] = field(default_factory=dict)
    lifetime: dict[str, list[int]] = field(default_factory=dict)
    frontier: dict[str, list[int]] = field(default_factory=dict)


def _join_ctx(parent: _Ctx, then_ctx: _Ctx, else_ctx: _Ctx) -> None:
    for name in set(then_ctx.clock) | set(else_ctx.clock):
        fields = (
            (then_ctx.clock.get(name, 0), else_ctx.clock.get(name, 0)),
            (then_ctx.alive.get(name, False), else_ctx.alive.get(name, False)),
            (then_ctx.ordinal.get(name, 0), else_ctx.ordinal.get(name, 0)),
        )
        if any(a != b for a, b in fields):
            raise CompileError(
                f"internal: branches diverge on patch {name!r} despite validation"
            )
    parent.clock = then_ctx.clock
    parent.alive = then_ctx.alive
    parent.ordinal = then_ctx.ordinal
    for store, t_map, e_map in (
        (parent.lifetime, then_ctx.lifetime, else_ctx.lifetime),
        (parent.frontier, then_ctx.frontier, else_ctx.frontier),
    ):
        store.clear()
        for name in set(t_map) | set(e_map):
            seen: list[int] = []
            for op_id in t_map.get(name, []) + e_map.get(name, []):
                if op_id not in seen:
                    seen.append(op_id)
            store[name] = seen


class _Walker:
    def __init__(self, circuit: LogicalCircuit, setting: QecSetting):
        self.circuit = circuit
        self.setting = setting
        self.recs: dict[int, _OpRec] = {}
        self.cond_infos: dict[int, ConditionalInfo] = {}
        self.links: list[tuple[int, int]] = []
        self.obs_registry: dict[tuple[str, int], int] = {}

    def run(self, nodes: tuple[ProgramNode, ...], op_stmts, cond_stmts) -> None:
        self._walk(nodes, op_stmts, cond_stmts, _Ctx(), ())

    def _walk(self, nodes, op_stmts, cond_stmts, ctx: _Ctx, cond_path) -> None:
        for node in nodes:
            if isinstance(node, OpNode):
                self._visit_op(node.op_id, op_stmts[node.op_id], ctx, cond_path)
            else:
                stmt = cond_stmts[node.cond_id]
                self.cond_infos[node.cond_id] = ConditionalInfo(
                    node.cond_id, stmt.labels, cond_path
                )
                then_ctx = copy.deepcopy(ctx)
                else_ctx = copy.deepcopy(ctx)
                self._walk(
                    node.then_nodes, op_stmts, cond_stmts, then_ctx,
                    cond_path + ((node.cond_id, True),),
                )
                self._walk(
                    node.else_nodes, op_stmts, cond_stmts, else_ctx,
                    cond_path + ((node.cond_id, False),),
                )
                _join_ctx(ctx, then_ctx, else_ctx)

    def _visit_op(self, op_id: int, stmt: Operation, ctx: _Ctx, cond_path) -> None:
        if stmt.kind == "merge":
            raise UnsupportedOperationError(
                "multi-patch merge is a reserved operation kind and is not "
                "supported by this compiler"
            )
        patch = stmt.patch
        rounds = _op_rounds(stmt, self.setting)
        start = ctx.clock.get(patch, 0)
        rec = _OpRec(
            op_id, stmt.kind, patch, start, start + rounds, stmt.label, cond_path
        )
        self.recs[op_id] = rec
        if stmt.kind == "init":
            ctx.lifetime[patch] = [op_id]
            ctx.frontier[patch] = [op_id]
            ctx.alive[patch] = True
        else:
            for prev in ctx.frontier.get(patch, []):
                self.links.append((prev, op_id))
            ctx.lifetime.setdefault(patch, []).append(op_id)
            ctx.frontier[patch] = [op_id]
        ctx.clock[patch] = start + rounds
        if stmt.kind == "measure":
            ordinal = ctx.ordinal.get(patch, 0)
            ctx.ordinal[patch] = ordinal + 1
            key = (patch, ordinal)
            if key not in self.obs_registry:
                self.obs_registry[key] = len(self.obs_registry)
            obs = self.obs_registry[key]
            rec.obs_index = obs
            for member in ctx.lifetime.get(patch, []):
                owner = self.recs[member]
                if owner.mask_obs is not None and owner.mask_obs != obs:
                    raise CompileError(
                        f"internal: op {member} masked for two observables"
                    )
                owner.mask_obs = obs
            ctx.lifetime[patch] = []
            ctx.frontier[patch] = []
            ctx.alive[patch] = False


# ---------------------------------------------------------------------------
# Per-instance decoding graphs


def _proto_edges(
    rec: OpInstance | _OpRec,
    layout: CodeLayout,
    setting: QecSetting,
    stride: int,
    offset: int,
    include_interface: bool,
) -> list[tuple[tuple[int, ...], float, frozenset[int]]]:
    """Ordered (detectors, probability, observables) triples for one op."""

    def det(round_index: int, position: int) -> int:
        return round_index * stride + offset + position

    p_d = setting.data_error_rate
    p_m = setting.measurement_error_rate
    mask = frozenset() if rec.mask_obs is None else frozenset({rec.mask_obs})
    protos: list[tuple[tuple[int, ...], float, frozenset[int]]] = []

    if p_d > 0.0:
        for t in range(rec.start_round, rec.end_round):
            for qubit in layout.qubits:
                dets = tuple(det(t, pos) for pos in qubit.detectors)
                protos.append((dets, p_d, mask if qubit.in_support else frozenset()))
    if p_m > 0.0 and rec.kind != "measure":
        last_gap = rec.end_round if include_interface else rec.end_round - 1
        for t in range(rec.start_round, last_gap):
            for pos in range(layout.detectors_per_round):
                protos.append(((det(t, pos), det(t + 1, pos)), p_m, frozenset()))
    return protos


def _compose_protos(protos):
    """Merge duplicate (detectors, observables) entries by probability
    composition, keeping first-occurrence order."""
    merged: dict[tuple[frozenset[int], frozenset[int]], int] = {}
    out: list[list] = []
    for dets, p, obs in protos:
        key = (frozenset(dets), obs)
        if key in merged:
            slot = out[merged[key]]
            slot[1] = compose_probabilities(slot[1], p)
        else:
            merged[key] = len(out)
            out.append([dets, p, obs])
    return [(tuple(dets), p, obs) for dets, p, obs in out]


def _instance_vertices(
    rec: OpInstance | _OpRec, layout: CodeLayout, stride: int, offset: int,
    include_interface: bool,
) -> frozenset[int]:
    top = rec.end_round + 1 if include_interface else rec.end_round
    return frozenset(
        t * stride + offset + pos
        for t in range(rec.start_round, top)
        for pos in range(layout.detectors_per_round)
    )


def _build_instance_graph(
    rec: OpInstance | _OpRec,
    layout: CodeLayout,
    setting: QecSetting,
    stride: int,
    offset: int,
    include_interface: bool,
    observable_count: int,
    edge_id_start: int,
) -> tuple[DecodingGraph, int]:
    protos = _compose_protos(
        _proto_edges(rec, layout, setting, stride, offset, include_interface)
    )
    edges = tuple(
        ErrorSource(edge_id_start + i, frozenset(dets), p, obs)
        for i, (dets, p, obs) in enumerate(protos)
    )
    graph = DecodingGraph(
        vertices=_instance_vertices(rec, layout, stride, offset, include_interface),
        edges=edges,
        observable_count=observable_count,
    )
    return graph, edge_id_start + len(edges)


def op_decoding_graph(
    op: Operation,
    setting: QecSetting,
    round_offset: int,
    *,
    include_interface: bool = False,
    distance: int | None = None,
    observable: int | None = None,
    observable_count: int | None = None,
    edge_id_start: int = 0,
) -> DecodingGraph:
    """Decoding graph contributed by a single operation, standalone.

    Uses a single-patch id packing (stride = detectors per round, offset 0).
    ``include_interface`` adds the first layer of a same-patch successor and
    the measurement-error edges reaching into it. ``observable`` puts that
    observable's mask on the data-error edges of the support column.
    """
    if op.kind == "merge":
        raise UnsupportedOperationError(
            "multi-patch merge is a reserved operation kind and is not supported"
        )
    layout = layout_for(setting.code_family, distance or setting.distance)
    rec = _OpRec(
        op_id=0,
        kind=op.kind,
        patch=op.patch,
        start_round=round_offset,
        end_round=round_offset + _op_rounds(op, setting),
        label=op.label,
        cond_path=(),
        mask_obs=observable,
    )
    if observable_count is None:
        observable_count = 0 if observable is None else observable + 1
    graph, _ = _build_instance_graph(
        rec,
        layout,
        setting,
        stride=layout.detectors_per_round,
        offset=0,
        include_interface=include_interface,
        observable_count=observable_count,
        edge_id_start=edge_id_start,
    )
    return graph


# ---------------------------------------------------------------------------
# Full compilation


def _segments(nodes: tuple[ProgramNode, ...]) -> list[list[int]]:
    """Maximal runs of consecutive op nodes, recursing into conditionals."""
    segments: list[list[int]] = []
    run: list[int] = []
    for node in nodes:
        if isinstance(node, OpNode):
            run.append(node.op_id)
        else:
            if run:
                segments.append(run)
                run = []
            segments.extend(_segments(node.then_nodes))
            segments.extend(_segments(node.else_nodes))
    if run:
        segments.append(run)
    return segments


def compile_circuit(
    circuit: LogicalCircuit,
    setting: QecSetting,
    granularity: int = 1,
    max_paths: int = DEFAULT_MAX_PATHS,
) -> CompiledCircuit:
    """Compile a logical circuit into decoding blocks at a given granularity.

    Granularity ``g`` coalesces runs of up to ``g`` consecutive operation
    instances within a program segment (never across a conditional) into one
    block. Output is deterministic: identical inputs give identical blocks,
    ids and files.
    """
    if granularity < 1:
        raise CompileError(f"granularity must be positive, got {granularity}")
    validate_circuit(circuit, setting)
    nodes, op_stmts, cond_stmts = _build_skeleton(circuit)
    total_paths = _count_paths(nodes)
    if total_paths > max_paths:
        raise CompileError(
            f"circuit has {total_paths} execution paths, above the cap of {max_paths}"
        )

    # Patch layout table: contiguous position ranges in declaration order.
    patches: dict[str, PatchLayout] = {}
    offset = 0
    for decl in circuit.patches:
        family, distance = decl.resolve(setting)
        layout = layout_for(family, distance)
        patches[decl.name] = PatchLayout(decl.name, family, distance, offset, layout)
        offset += layout.detectors_per_round
    stride = offset

    walker = _Walker(circuit, setting)
    walker.run(nodes, op_stmts, cond_stmts)

    for prev, _ in walker.links:
        walker.recs[prev].has_next = True

    observables = tuple(
        ObservableInfo(index, patch, ordinal)
        for (patch, ordinal), index in sorted(
            walker.obs_registry.items(), key=lambda kv: kv[1]
        )
    )
    observable_count = len(observables)

    # Per-instance graphs, in id order so edge ids are granularity-independent.
    instances: dict[int, OpInstance] = {}
    graphs: dict[int, DecodingGraph] = {}
    edge_counter = 0
    for op_id in sorted(walker.recs):
        rec = walker.recs[op_id]
        pl = patches[rec.patch]
        graphs[op_id], edge_counter = _build_instance_graph(
            rec,
            pl.layout,
            setting,
            stride=stride,
            offset=pl.offset,
            include_interface=rec.has_next,
            observable_count=observable_count,
            edge_id_start=edge_counter,
        )
        instances[op_id] = OpInstance(
            op_id=rec.op_id,
            kind=rec.kind,
            patch=rec.patch,
            start_round=rec.start_round,
            end_round=rec.end_round,
            label=rec.label,
            obs_index=rec.obs_index,
            mask_obs=rec.mask_obs,
            has_next=rec.has_next,
            cond_path=rec.cond_path,
        )

    # Op-level boundary maps from the recorded neighbor links.
    op_boundaries: dict[int, dict[int, frozenset[int]]] = {o: {} for o in instances}
    for prev, nxt in walker.links:
        shared = frozenset(
            _layer_ids(patches[instances[nxt].patch], stride, instances[nxt].start_round)
        )
        if instances[prev].end_round != instances[nxt].start_round:
            raise CompileError(
                f"internal: ops {prev} and {nxt} are linked but not adjacent"
            )
        op_boundaries[prev][nxt] = shared
        op_boundaries[nxt][prev] = shared

    unit_blocks = {
        op_id: DecodingBlock(op_id, graphs[op_id], op_boundaries[op_id])
        for op_id in instances
    }

    # Coalesce segment runs of up to `granularity` ops.
    id_counter = itertools.count(max(instances, default=-1) + 1)
    final_blocks: dict[int, DecodingBlock] = {}
    block_of_op: dict[int, int] = {}
    for segment in _segments(nodes):
        for i in range(0, len(segment), granularity):
            group = segment[i : i + granularity]
            block = unit_blocks[group[0]]
            for op_id in group[1:]:
                block = merge_blocks(block, unit_blocks[op_id], next(id_counter))
            final_blocks[block.op_instance_id] = block
            for op_id in group:
                block_of_op[op_id] = block.op_instance_id

    # Rewire boundary keys from op ids to final block ids.
    rewired: dict[int, DecodingBlock] = {}
    for bid, block in final_blocks.items():
        merged: dict[int, frozenset[int]] = {}
        for op_key, shared in block.boundaries.items():
            neighbor = block_of_op[op_key]
            if neighbor == bid:
                raise CompileError(f"internal: block {bid} borders itself")
            merged[neighbor] = merged.get(neighbor, frozenset()) | shared
        rewired[bid] = replace(block, boundaries=merged)
    final_blocks = rewired

    for bid, block in final_blocks.items():
        for nid, shared in block.boundaries.items():
            other = final_blocks[nid].boundaries.get(bid)
            actual = block.graph.vertices & final_blocks[nid].graph.vertices
            if other != shared or actual != shared:
                raise CompileError(
                    f"internal: asymmetric boundary between blocks {bid} and {nid}"
                )

    paths = []
    for path_id, (choices, ops) in enumerate(_expand_paths(nodes)):
        labels = [instances[o].label for o in ops if instances[o].kind == "measure"]
        dupes = {lbl for lbl in labels if labels.count(lbl) > 1}
        if dupes:
            raise CircuitError(
                f"measurement label(s) {sorted(dupes)} reused on one path"
            )
        block_seq: list[int] = []
        for op_id in ops:
            bid = block_of_op[op_id]
            if not block_seq or block_seq[-1] != bid:
                block_seq.append(bid)
        paths.append(
            ExecutionPath(
                path_id, tuple(sorted(choices.items())), tuple(ops), tuple(block_seq)
            )
        )

    return CompiledCircuit(
        setting=setting,
        granularity=granularity,
        stride=stride,
        patches=patches,
        observables=observables,
        instances=instances,
        conditionals=walker.cond_infos,
        program=nodes,
        blocks=final_blocks,
        block_of_op=block_of_op,
        paths=tuple(paths),
    )


def _layer_ids(pl: PatchLayout, stride: int, round_index: int) -> list[int]:
    base = round_index * stride + pl.offset
    return [base + i for i in range(pl.detectors_per_round)]


def generate_blocks(
    circuit: LogicalCircuit,
    setting: QecSetting,
    granularity: int = 1,
    max_paths: int = DEFAULT_MAX_PATHS,
) -> tuple[list[DecodingBlock], list[ExecutionPath], dict[int, tuple[int, ...]]]:
    """Blocks, execution paths, and the path -> block-sequence table."""
    compiled = compile_circuit(circuit, setting, granularity, max_paths)
    blocks = [compiled.blocks[bid] for bid in sorted(compiled.blocks)]
    table = {path.path_id: path.blocks for path in compiled.paths}
    return blocks, list(compiled.paths), table

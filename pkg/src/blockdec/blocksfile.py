"""Line-oriented text format for compiled decoding blocks.

The file is self-sufficient for runtime replay: it carries the id-packing
layout table, observable registry, operation instances, the program tree,
every block's graph and boundaries, the execution-path table and the
block-type table. Probabilities are stored, weights recomputed on load.
Output is byte-deterministic for identical compilations.
"""

from __future__ import annotations

from dataclasses import replace

from .blocks import DecodingBlock, block_type_digest
from .circuit import QecSetting
from .compiler import (
    CompiledCircuit,
    CondNode,
    ConditionalInfo,
    ExecutionPath,
    ObservableInfo,
    OpInstance,
    OpNode,
    PatchLayout,
    ProgramNode,
)
from .codes import layout_for
from .errors import CompileError
from .graph import DecodingGraph, ErrorSource

BLOCKS_MAGIC = "blockdec-blocks v1"


def _csv(values) -> str:
    return ",".join(str(v) for v in values) if values else "-"


def _uncsv(text: str) -> list[int]:
    if text == "-":
        return []
    return [int(v) for v in text.split(",")]


def format_blocks(compiled: CompiledCircuit) -> str:
    s = compiled.setting
    lines = [BLOCKS_MAGIC]
    lines.append(
        "setting "
        f"code_family={s.code_family} distance={s.distance} "
        f"data_error_rate={s.data_error_rate!r} "
        f"measurement_error_rate={s.measurement_error_rate!r} "
        f"rounds_per_op={s.rounds_per_op}"
    )
    lines.append(f"granularity {compiled.granularity}")
    lines.append(f"stride {compiled.stride}")
    for name in sorted(compiled.patches, key=lambda n: compiled.patches[n].offset):
        pl = compiled.patches[name]
        lines.append(
            f"patch {pl.name} family={pl.family} distance={pl.distance} "
            f"offset={pl.offset} detectors={pl.detectors_per_round}"
        )
    lines.append(f"observable_count {compiled.observable_count}")
    for obs in compiled.observables:
        lines.append(f"observable {obs.index} patch={obs.patch} ordinal={obs.ordinal}")
    for op_id in sorted(compiled.instances):
        op = compiled.instances[op_id]
        parts = [
            f"op {op.op_id}",
            f"kind={op.kind}",
            f"patch={op.patch}",
            f"start={op.start_round}",
            f"end={op.end_round}",
            f"next={int(op.has_next)}",
        ]
        if op.label is not None:
            parts.append(f"label={op.label}")
        if op.obs_index is not None:
            parts.append(f"obs={op.obs_index}")
        if op.mask_obs is not None:
            parts.append(f"mask={op.mask_obs}")
        if op.cond_path:
            parts.append(
                "when=" + ",".join(f"{cid}:{int(taken)}" for cid, taken in op.cond_path)
            )
        lines.append(" ".join(parts))
    for cond_id in sorted(compiled.conditionals):
        cond = compiled.conditionals[cond_id]
        parts = [f"cond {cond.cond_id}", "labels=" + ",".join(cond.labels)]
        if cond.cond_path:
            parts.append(
                "when=" + ",".join(f"{cid}:{int(taken)}" for cid, taken in cond.cond_path)
            )
        lines.append(" ".join(parts))
    lines.append("program")
    _format_program(compiled.program, lines)
    lines.append("end")
    for bid in sorted(compiled.blocks):
        block = compiled.blocks[bid]
        lines.append(
            f"block {bid} covers={_csv(sorted(block.covered_ops))} "
            f"type={block_type_digest(block)}"
        )
        lines.append(f"bvertices {bid} {_csv(sorted(block.graph.vertices))}")
        for e in sorted(block.graph.edges, key=lambda e: e.edge_id):
            lines.append(
                f"bedge {bid} {e.edge_id} d={_csv(sorted(e.detectors))} "
                f"p={e.probability!r} obs={_csv(sorted(e.observables))}"
            )
        for nid in sorted(block.boundaries):
            lines.append(f"bboundary {bid} {nid} {_csv(sorted(block.boundaries[nid]))}")
    for path in compiled.paths:
        choices = ",".join(f"{cid}:{int(taken)}" for cid, taken in path.choices)
        lines.append(
            f"path {path.path_id} choices={choices or '-'} "
            f"ops={_csv(path.ops)} blocks={_csv(path.blocks)}"
        )
    for digest, bids in sorted(compiled.type_table().items()):
        lines.append(f"type {digest} blocks={_csv(bids)}")
    return "\n".join(lines) + "\n"


def _format_program(nodes: tuple[ProgramNode, ...], lines: list[str]) -> None:
    for node in nodes:
        if isinstance(node, OpNode):
            lines.append(f"  do {node.op_id}")
        else:
            lines.append(f"  branch {node.cond_id}")
            _format_program(node.then_nodes, lines)
            lines.append("  orelse")
            _format_program(node.else_nodes, lines)
            lines.append("  endbranch")


def write_blocks(compiled: CompiledCircuit, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_blocks(compiled))


def _kv(parts: list[str]) -> dict[str, str]:
    out = {}
    for part in parts:
        key, _, value = part.partition("=")
        out[key] = value
    return out


def parse_blocks(text: str) -> CompiledCircuit:
    """Reconstruct a compiled circuit from its blocks file.

    Raises:
        CompileError: on malformed content or a missing format line.
    """
    raw = text.splitlines()
    if not raw or raw[0].strip() != BLOCKS_MAGIC:
        raise CompileError(f"blocks file must start with {BLOCKS_MAGIC!r}")

    setting: QecSetting | None = None
    granularity = 1
    stride = 0
    patches: dict[str, PatchLayout] = {}
    observables: list[ObservableInfo] = []
    observable_count = 0
    instances: dict[int, OpInstance] = {}
    conditionals: dict[int, ConditionalInfo] = {}
    program_tokens: list[str] = []
    block_meta: dict[int, dict] = {}
    paths: list[ExecutionPath] = []
    in_program = False

    def parse_when(text_value: str) -> tuple[tuple[int, bool], ...]:
        out = []
        for item in text_value.split(","):
            cid, _, taken = item.partition(":")
            out.append((int(cid), bool(int(taken))))
        return tuple(out)

    for lineno, line in enumerate(raw[1:], start=2):
        stripped = line.strip()
        if not stripped:
            continue
        if in_program:
            if stripped == "end":
                in_program = False
            else:
                program_tokens.append(stripped)
            continue
        words = stripped.split()
        head = words[0]
        try:
            if head == "setting":
                kv = _kv(words[1:])
                setting = QecSetting(
                    code_family=kv["code_family"],
                    distance=int(kv["distance"]),
                    data_error_rate=float(kv["data_error_rate"]),
                    measurement_error_rate=float(kv["measurement_error_rate"]),
                    rounds_per_op=int(kv["rounds_per_op"]),
                )
            elif head == "granularity":
                granularity = int(words[1])
            elif head == "stride":
                stride = int(words[1])
            elif head == "patch":
                kv = _kv(words[2:])
                name = words[1]
                patches[name] = PatchLayout(
                    name,
                    kv["family"],
                    int(kv["distance"]),
                    int(kv["offset"]),
                    layout_for(kv["family"], int(kv["distance"])),
                )
            elif head == "observable_count":
                observable_count = int(words[1])
            elif head == "observable":
                kv = _kv(words[2:])
                observables.append(
                    ObservableInfo(int(words[1]), kv["patch"], int(kv["ordinal"]))
                )
            elif head == "op":
                kv = _kv(words[2:])
                instances[int(words[1])] = OpInstance(
                    op_id=int(words[1]),
                    kind=kv["kind"],
                    patch=kv["patch"],
                    start_round=int(kv["start"]),
                    end_round=int(kv["end"]),
                    label=kv.get("label"),
                    obs_index=int(kv["obs"]) if "obs" in kv else None,
                    mask_obs=int(kv["mask"]) if "mask" in kv else None,
                    has_next=bool(int(kv["next"])),
                    cond_path=parse_when(kv["when"]) if "when" in kv else (),
                )
            elif head == "cond":
                kv = _kv(words[2:])
                conditionals[int(words[1])] = ConditionalInfo(
                    int(words[1]),
                    tuple(kv["labels"].split(",")),
                    parse_when(kv["when"]) if "when" in kv else (),
                )
            elif head == "program":
                in_program = True
            elif head == "block":
                kv = _kv(words[2:])
                block_meta[int(words[1])] = {
                    "covers": _uncsv(kv["covers"]),
                    "vertices": [],
                    "edges": [],
                    "boundaries": {},
                }
            elif head == "bvertices":
                block_meta[int(words[1])]["vertices"] = _uncsv(words[2])
            elif head == "bedge":
                kv = _kv(words[3:])
                block_meta[int(words[1])]["edges"].append(
                    ErrorSource(
                        int(words[2]),
                        frozenset(_uncsv(kv["d"])),
                        float(kv["p"]),
                        frozenset(_uncsv(kv["obs"])),
                    )
                )
            elif head == "bboundary":
                block_meta[int(words[1])]["boundaries"][int(words[2])] = frozenset(
                    _uncsv(words[3])
                )
            elif head == "path":
                kv = _kv(words[2:])
                choices = (
                    parse_when(kv["choices"]) if kv["choices"] != "-" else ()
                )
                paths.append(
                    ExecutionPath(
                        int(words[1]),
                        choices,
                        tuple(_uncsv(kv["ops"])),
                        tuple(_uncsv(kv["blocks"])),
                    )
                )
            elif head == "type":
                pass  # derivable; verified against recomputation below
            else:
                raise CompileError(f"unknown record {head!r}")
        except (KeyError, ValueError, IndexError) as exc:
            raise CompileError(f"blocks file line {lineno}: {exc}") from exc

    if setting is None:
        raise CompileError("blocks file has no setting record")

    blocks: dict[int, DecodingBlock] = {}
    block_of_op: dict[int, int] = {}
    for bid, meta in block_meta.items():
        graph = DecodingGraph(
            frozenset(meta["vertices"]), tuple(meta["edges"]), observable_count
        )
        blocks[bid] = DecodingBlock(
            bid, graph, meta["boundaries"], frozenset(meta["covers"])
        )
        for op_id in meta["covers"]:
            block_of_op[op_id] = bid

    program = _parse_program(program_tokens)
    return CompiledCircuit(
        setting=setting,
        granularity=granularity,
        stride=stride,
        patches=patches,
        observables=tuple(observables),
        instances=instances,
        conditionals=conditionals,
        program=program,
        blocks=blocks,
        block_of_op=block_of_op,
        paths=tuple(paths),
    )


def _parse_program(tokens: list[str]) -> tuple[ProgramNode, ...]:
    pos = 0

    def parse_nodes(terminators: tuple[str, ...]) -> tuple[ProgramNode, ...]:
        nonlocal pos
        nodes: list[ProgramNode] = []
        while pos < len(tokens):
            words = tokens[pos].split()
            if words[0] in terminators:
                return tuple(nodes)
            pos += 1
            if words[0] == "do":
                nodes.append(OpNode(int(words[1])))
            elif words[0] == "branch":
                cond_id = int(words[1])
                then_nodes = parse_nodes(("orelse",))
                pos += 1
                else_nodes = parse_nodes(("endbranch",))
                pos += 1
                nodes.append(CondNode(cond_id, then_nodes, else_nodes))
            else:
                raise CompileError(f"bad program record {tokens[pos - 1]!r}")
        if terminators:
            raise CompileError("unterminated program branch")
        return tuple(nodes)

    return parse_nodes(())


def read_blocks(path: str) -> CompiledCircuit:
    with open(path, encoding="utf-8") as fh:
        return parse_blocks(fh.read())

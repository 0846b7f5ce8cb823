"""Runtime coordinator: readout events in, corrected logical readouts out.

The coordinator consumes the physical controller's event stream (operation
start/finish, per-round syndrome chunks, branch queries from the logic
controller), turns finished blocks into decode tasks, fuses partial results
as boundaries become available, and emits a logical readout as soon as
every block carrying the observable's mask has been decoded and fused.
Branch queries are answered from emitted readouts; the untaken branch's
blocks are pruned and any boundary toward them discarded.

Timing is modeled in abstract ticks on one clock: events arrive at their
wall round, a block decode costs one tick per edge of its graph, a fusion
one tick per boundary detector. Tasks are list-scheduled greedily onto a
worker pool at the moment they become ready. Results themselves are
computed eagerly, so scheduling ticks are pure bookkeeping and every run
is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

from .blocks import block_type_digest
from .compiler import CompiledCircuit, OpInstance
from .decoder import Syndrome
from .errors import CapabilityError, ProtocolError, StateError
from .fusion import (
    BlockDecodeResult,
    decode_block,
    discard_boundary,
    extract_correction,
    fuse,
)

TRACE_MAGIC = "blockdec-trace v1"
LOG_MAGIC = "blockdec-decodelog v1"


# ---------------------------------------------------------------------------
# Events


@dataclass(frozen=True)
class OpStarted:
    op_id: int
    wall_round: int


@dataclass(frozen=True)
class SyndromeChunk:
    op_id: int
    round_index: int
    flipped_positions: tuple[int, ...]  # layout positions within the round


@dataclass(frozen=True)
class OpFinished:
    op_id: int
    raw_parity: int | None = None  # required for measure instances


@dataclass(frozen=True)
class BranchQuery:
    cond_id: int
    labels: tuple[str, ...]


DecodeEvent = OpStarted | SyndromeChunk | OpFinished | BranchQuery


@dataclass(frozen=True)
class WorkerSpec:
    """A decoder in the pool; ``supported`` limits it to block-type digests
    (None means fully programmable). Fusions run on any worker."""

    index: int
    supported: frozenset[str] | None = None


@dataclass
class DecodingTask:
    task_id: int
    kind: str  # "block-decode" | "fuse"
    targets: tuple[int, ...]  # block id, or the two fused results' min blocks
    cost: int
    ready: int
    start: int = 0
    end: int = 0
    worker: int = -1
    inputs: tuple[int, ...] = ()  # task ids this one consumes


@dataclass(frozen=True)
class LogicalReadout:
    label: str
    obs_index: int
    raw_parity: int
    corrected_parity: int
    commit_tick: int


@dataclass(frozen=True)
class ReadoutLatency:
    label: str
    obs_index: int
    last_chunk_tick: int
    commit_tick: int

    @property
    def latency(self) -> int:
        return self.commit_tick - self.last_chunk_tick


@dataclass(frozen=True)
class LatencyReport:
    makespan: int
    total_cost: int
    critical_path: int
    worker_busy: tuple[int, ...]
    readouts: tuple[ReadoutLatency, ...]

    @property
    def utilization(self) -> float:
        if self.makespan == 0:
            return 0.0
        return self.total_cost / (len(self.worker_busy) * self.makespan)

    @property
    def per_worker_utilization(self) -> tuple[float, ...]:
        if self.makespan == 0:
            return tuple(0.0 for _ in self.worker_busy)
        return tuple(b / self.makespan for b in self.worker_busy)


class _ResultBox:
    """A live partial result plus its producing task's bookkeeping."""

    __slots__ = ("result", "task_id", "end_tick")

    def __init__(self, result: BlockDecodeResult, task_id: int, end_tick: int):
        self.result = result
        self.task_id = task_id
        self.end_tick = end_tick


class Coordinator:
    """Single-owner event loop over one compiled circuit."""

    def __init__(self, compiled: CompiledCircuit, workers: int | list[WorkerSpec] = 1):
        if isinstance(workers, int):
            if workers < 1:
                raise CapabilityError("worker pool must have at least one worker")
            workers = [WorkerSpec(i) for i in range(workers)]
        self.compiled = compiled
        self.workers = list(workers)
        self.clock = 0
        self.tasks: list[DecodingTask] = []
        self.log: list[str] = []
        self.readouts: dict[int, LogicalReadout] = {}
        self.choices: dict[int, bool] = {}
        self.pending_queries: list[BranchQuery] = []
        self._worker_free = [0] * len(self.workers)
        self._worker_busy = [0] * len(self.workers)
        self._next_round: dict[int, int] = {}
        self._last_chunk: dict[int, int] = {}
        self._finish_tick: dict[int, int] = {}
        self._raw: dict[int, int] = {}
        self._defects: dict[int, set[int]] = {}
        self._finished: set[int] = set()
        self._results: dict[int, _ResultBox] = {}
        self._result_of_block: dict[int, int] = {}
        self._result_counter = 0
        self._pruned_blocks: set[int] = set()
        self._emitted_obs: set[int] = set()

    # -- liveness under the resolved branch prefix

    def _op_live(self, op: OpInstance) -> bool:
        return all(
            self.choices.get(cid, taken) == taken for cid, taken in op.cond_path
        )

    def _op_resolved_live(self, op: OpInstance) -> bool:
        return all(
            cid in self.choices and self.choices[cid] == taken
            for cid, taken in op.cond_path
        )

    def _block_live(self, bid: int) -> bool:
        block = self.compiled.blocks[bid]
        return all(
            self._op_live(self.compiled.instances[o]) for o in block.covered_ops
        )

    # -- event entry point

    def on_event(
        self, event: DecodeEvent
    ) -> tuple[list[DecodingTask], list[LogicalReadout]]:
        """Apply one event; returns task transitions and readouts it caused."""
        first_task = len(self.tasks)
        first_readout = len(self.readouts)
        if isinstance(event, OpStarted):
            self._on_started(event)
        elif isinstance(event, SyndromeChunk):
            self._on_chunk(event)
        elif isinstance(event, OpFinished):
            self._on_finished(event)
        elif isinstance(event, BranchQuery):
            self._on_query(event)
        else:
            raise ProtocolError(f"unknown event {event!r}")
        new_tasks = self.tasks[first_task:]
        new_readouts = list(self.readouts.values())[first_readout:]
        return new_tasks, new_readouts

    def replay(
        self, events: list[DecodeEvent]
    ) -> tuple[list[DecodingTask], list[LogicalReadout]]:
        for event in events:
            self.on_event(event)
        if self.pending_queries:
            raise ProtocolError(
                "event stream ended with unanswered branch queries "
                f"{[q.cond_id for q in self.pending_queries]}"
            )
        return self.tasks, list(self.readouts.values())

    # -- event handlers

    def _lookup_op(self, op_id: int, what: str) -> OpInstance:
        op = self.compiled.instances.get(op_id)
        if op is None:
            raise ProtocolError(f"{what} for unknown op instance {op_id}")
        if not self._op_live(op):
            raise ProtocolError(f"{what} for op instance {op_id} on an untaken branch")
        if not self._op_resolved_live(op):
            raise ProtocolError(
                f"{what} for op instance {op_id} before its conditional resolved"
            )
        return op

    def _on_started(self, event: OpStarted) -> None:
        op = self._lookup_op(event.op_id, "start")
        if event.wall_round != op.start_round:
            raise ProtocolError(
                f"op instance {op.op_id} started at round {event.wall_round}, "
                f"compiled for {op.start_round}"
            )
        self.clock = max(self.clock, op.start_round)
        self._next_round.setdefault(op.op_id, op.start_round)
        self._defects.setdefault(op.op_id, set())

    def _on_chunk(self, event: SyndromeChunk) -> None:
        op = self._lookup_op(event.op_id, "syndrome chunk")
        expected = self._next_round.setdefault(op.op_id, op.start_round)
        if event.round_index != expected:
            raise ProtocolError(
                f"op instance {op.op_id}: expected round {expected}, "
                f"got {event.round_index}"
            )
        if not op.start_round <= event.round_index < op.end_round:
            raise ProtocolError(
                f"op instance {op.op_id}: round {event.round_index} outside "
                f"[{op.start_round}, {op.end_round})"
            )
        layer = self.compiled.layer_detectors(op.patch, event.round_index)
        defects = self._defects.setdefault(op.op_id, set())
        for pos in event.flipped_positions:
            if not 0 <= pos < len(layer):
                raise ProtocolError(
                    f"op instance {op.op_id}: detector position {pos} outside layout"
                )
            defects.add(layer[pos])
        self._next_round[op.op_id] = event.round_index + 1
        self.clock = max(self.clock, event.round_index + 1)
        self._last_chunk[op.op_id] = event.round_index + 1

    def _on_finished(self, event: OpFinished) -> None:
        op = self._lookup_op(event.op_id, "finish")
        if op.op_id in self._finished:
            raise ProtocolError(f"op instance {op.op_id} finished twice")
        got = self._next_round.get(op.op_id, op.start_round)
        if got != op.end_round:
            raise ProtocolError(
                f"op instance {op.op_id} finished after round {got - 1}, "
                f"expected rounds up to {op.end_round - 1}"
            )
        if op.kind == "measure":
            if event.raw_parity is None:
                raise ProtocolError(
                    f"measure instance {op.op_id} finished without a raw parity"
                )
            self._raw[op.op_id] = event.raw_parity & 1
        elif event.raw_parity is not None:
            raise ProtocolError(
                f"non-measure instance {op.op_id} carries a raw parity"
            )
        self._finished.add(op.op_id)
        self.clock = max(self.clock, op.end_round)
        self._finish_tick[op.op_id] = self.clock
        bid = self.compiled.block_of_op[op.op_id]
        block = self.compiled.blocks[bid]
        if all(o in self._finished for o in block.covered_ops):
            self._run_block_decode(bid)
            self._fusion_scan()
            self._readout_scan()
            self._answer_pending()

    def _on_query(self, event: BranchQuery) -> None:
        cond = self.compiled.conditionals.get(event.cond_id)
        if cond is None:
            raise ProtocolError(f"query for unknown conditional {event.cond_id}")
        if event.cond_id in self.choices:
            raise ProtocolError(f"conditional {event.cond_id} queried twice")
        if not all(
            cid in self.choices and self.choices[cid] == taken
            for cid, taken in cond.cond_path
        ):
            raise ProtocolError(
                f"conditional {event.cond_id} queried outside its resolved branch"
            )
        if set(event.labels) != set(cond.labels):
            raise ProtocolError(
                f"conditional {event.cond_id} queried with labels "
                f"{sorted(event.labels)}, compiled with {sorted(cond.labels)}"
            )
        for label in event.labels:
            self._measure_op_for_label(label)  # raises if unmeasured
        self.pending_queries.append(event)
        self._answer_pending()

    def _measure_op_for_label(self, label: str) -> OpInstance:
        candidates = [
            op
            for op in self.compiled.instances.values()
            if op.kind == "measure"
            and op.label == label
            and self._op_resolved_live(op)
            and op.op_id in self._finished
        ]
        if not candidates:
            raise ProtocolError(f"branch query for unmeasured label {label!r}")
        if len(candidates) > 1:
            raise ProtocolError(f"label {label!r} is ambiguous on the active path")
        return candidates[0]

    # -- scheduling and execution

    def _assign(
        self, kind: str, targets: tuple[int, ...], cost: int, ready: int,
        inputs: tuple[int, ...], type_digest: str | None,
    ) -> DecodingTask:
        compatible = [
            w
            for w in self.workers
            if kind == "fuse" or w.supported is None
            or (type_digest is not None and type_digest in w.supported)
        ]
        if not compatible:
            raise CapabilityError(
                f"no worker supports block type {type_digest} for task on "
                f"blocks {targets}"
            )
        best = min(
            compatible, key=lambda w: (max(ready, self._worker_free[w.index]), w.index)
        )
        start = max(ready, self._worker_free[best.index])
        task = DecodingTask(
            task_id=len(self.tasks),
            kind=kind,
            targets=targets,
            cost=cost,
            ready=ready,
            start=start,
            end=start + cost,
            worker=best.index,
            inputs=inputs,
        )
        self._worker_free[best.index] = task.end
        self._worker_busy[best.index] += cost
        self.tasks.append(task)
        self.log.append(
            f"task {task.task_id} kind={task.kind} targets={_csv(task.targets)} "
            f"ready={task.ready} start={task.start} end={task.end} "
            f"worker={task.worker} cost={task.cost}"
        )
        return task

    def _run_block_decode(self, bid: int) -> None:
        block = self.compiled.blocks[bid]
        syndrome: set[int] = set()
        for op_id in block.covered_ops:
            syndrome |= self._defects.get(op_id, set())
        ready = max(self._finish_tick[o] for o in block.covered_ops)
        task = self._assign(
            "block-decode",
            (bid,),
            cost=len(block.graph.edges),
            ready=ready,
            inputs=(),
            type_digest=block_type_digest(block),
        )
        result = decode_block(block, Syndrome(frozenset(syndrome)))
        for neighbor in sorted(result.boundaries):
            if neighbor in self._pruned_blocks:
                discard_boundary(result, neighbor)
        rid = self._result_counter
        self._result_counter += 1
        self._results[rid] = _ResultBox(result, task.task_id, task.end)
        self._result_of_block[bid] = rid

    def _fusion_scan(self) -> None:
        while True:
            pair = self._next_fusable_pair()
            if pair is None:
                return
            rid1, rid2, boundary = pair
            box1, box2 = self._results[rid1], self._results[rid2]
            ready = max(box1.end_tick, box2.end_tick)
            task = self._assign(
                "fuse",
                (min(box1.result.blocks), min(box2.result.blocks)),
                cost=len(boundary),
                ready=ready,
                inputs=(box1.task_id, box2.task_id),
                type_digest=None,
            )
            merged = fuse(box1.result, box2.result, boundary)
            rid = self._result_counter
            self._result_counter += 1
            self._results[rid] = _ResultBox(merged, task.task_id, task.end)
            del self._results[rid1], self._results[rid2]
            for bid in merged.blocks:
                self._result_of_block[bid] = rid

    def _next_fusable_pair(self) -> tuple[int, int, frozenset[int]] | None:
        best = None
        for rid in sorted(self._results):
            result = self._results[rid].result
            for neighbor_bid in sorted(result.boundaries):
                other_rid = self._result_of_block.get(neighbor_bid)
                if other_rid is None or other_rid == rid:
                    continue
                key = (min(min(result.blocks), neighbor_bid), rid, other_rid)
                if best is None or key < best[0]:
                    boundary: frozenset[int] = frozenset()
                    other_blocks = self._results[other_rid].result.blocks
                    for bid in other_blocks:
                        boundary |= result.boundaries.get(bid, frozenset())
                    best = (key, rid, other_rid, boundary)
        if best is None:
            return None
        return best[1], best[2], best[3]

    # -- readout emission

    def _readout_scan(self) -> None:
        for info in self.compiled.observables:
            obs = info.index
            if obs in self._emitted_obs:
                continue
            measured = [
                op_id
                for op_id in self.compiled.measure_ops[obs]
                if self._op_resolved_live(self.compiled.instances[op_id])
                and op_id in self._finished
            ]
            if not measured:
                continue
            measure_op = measured[0]
            required = [
                bid
                for bid in sorted(self.compiled.mask_blocks(obs))
                if bid not in self._pruned_blocks and self._block_live(bid)
            ]
            rids = {self._result_of_block.get(bid) for bid in required}
            if None in rids or len(rids) != 1:
                continue
            box = self._results[next(iter(rids))]
            correction = extract_correction(box.result)
            raw = self._raw[measure_op]
            corrected = raw ^ (1 if obs in correction.observable_flips else 0)
            commit = max(self.clock, box.end_tick, self._finish_tick[measure_op])
            label = self.compiled.instances[measure_op].label or f"obs{obs}"
            readout = LogicalReadout(label, obs, raw, corrected, commit)
            self.readouts[obs] = readout
            self._emitted_obs.add(obs)
            self.log.append(
                f"readout {label} obs={obs} raw={raw} corrected={corrected} "
                f"commit={commit}"
            )

    def _answer_pending(self) -> None:
        answered = []
        for query in self.pending_queries:
            readouts = []
            for label in query.labels:
                op = self._measure_op_for_label(label)
                readout = self.readouts.get(op.obs_index)
                if readout is None:
                    break
                readouts.append(readout)
            else:
                parity = 0
                tick = self.clock
                for r in readouts:
                    parity ^= r.corrected_parity
                    tick = max(tick, r.commit_tick)
                taken_then = parity == 1
                self.choices[query.cond_id] = taken_then
                self.log.append(
                    f"branch {query.cond_id} taken={'then' if taken_then else 'else'} "
                    f"tick={tick}"
                )
                self._prune_untaken()
                answered.append(query)
        if answered:
            self.pending_queries = [
                q for q in self.pending_queries if q not in answered
            ]
            self._readout_scan()

    def _prune_untaken(self) -> None:
        for bid in sorted(self.compiled.blocks):
            if bid in self._pruned_blocks or self._block_live(bid):
                continue
            self._pruned_blocks.add(bid)
            for box in self._results.values():
                discard_boundary(box.result, bid)

    # -- reporting

    def run_complete(self) -> bool:
        if self.pending_queries:
            return False
        for bid, block in self.compiled.blocks.items():
            if bid in self._pruned_blocks or not self._block_live(bid):
                continue
            reachable = all(
                cid in self.choices
                for op_id in block.covered_ops
                for cid, _ in self.compiled.instances[op_id].cond_path
            )
            if not reachable:
                return False
            if bid not in self._result_of_block:
                return False
        return all(not box.result.boundaries for box in self._results.values())

    def latency_report(self) -> LatencyReport:
        """Timing summary of a completed run.

        Raises:
            StateError: if blocks on the taken path are still undecoded or
                queries are unanswered.
        """
        if not self.run_complete():
            raise StateError("latency report requires a completed run")
        if self.tasks:
            makespan = max(t.end for t in self.tasks) - min(t.start for t in self.tasks)
        else:
            makespan = 0
        cp: dict[int, int] = {}
        for task in self.tasks:  # inputs always precede, ids are topological
            cp[task.task_id] = task.cost + max(
                (cp[i] for i in task.inputs), default=0
            )
        latencies = []
        for obs in sorted(self._emitted_obs):
            readout = self.readouts[obs]
            ops = set()
            for bid in self.compiled.mask_blocks(obs):
                if bid in self._pruned_blocks or not self._block_live(bid):
                    continue
                ops |= self.compiled.blocks[bid].covered_ops
            last_chunk = max(
                (self._last_chunk.get(o, 0) for o in ops), default=0
            )
            latencies.append(
                ReadoutLatency(readout.label, obs, last_chunk, readout.commit_tick)
            )
        return LatencyReport(
            makespan=makespan,
            total_cost=sum(t.cost for t in self.tasks),
            critical_path=max(cp.values(), default=0),
            worker_busy=tuple(self._worker_busy),
            readouts=tuple(latencies),
        )

    def format_log(self) -> str:
        lines = [LOG_MAGIC]
        lines.extend(self.log)
        report = self.latency_report()
        lines.append(
            f"summary makespan={report.makespan} busy={report.total_cost} "
            f"critical_path={report.critical_path} "
            f"utilization={report.utilization:.6f}"
        )
        return "\n".join(lines) + "\n"


def _csv(values) -> str:
    return ",".join(str(v) for v in values)


# ---------------------------------------------------------------------------
# Trace files


def format_trace(events: list[DecodeEvent], compiled: CompiledCircuit) -> str:
    lines = [TRACE_MAGIC]
    for event in events:
        if isinstance(event, OpStarted):
            lines.append(f"start {event.op_id} {event.wall_round}")
        elif isinstance(event, SyndromeChunk):
            op = compiled.instances[event.op_id]
            width = compiled.patches[op.patch].detectors_per_round
            bits = ["0"] * width
            for pos in event.flipped_positions:
                bits[pos] = "1"
            lines.append(f"chunk {event.op_id} {event.round_index} {''.join(bits)}")
        elif isinstance(event, OpFinished):
            if event.raw_parity is None:
                lines.append(f"finish {event.op_id}")
            else:
                lines.append(f"finish {event.op_id} raw={event.raw_parity}")
        elif isinstance(event, BranchQuery):
            lines.append(f"query {event.cond_id} {','.join(event.labels)}")
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> list[DecodeEvent]:
    raw = text.splitlines()
    if not raw or raw[0].strip() != TRACE_MAGIC:
        raise ProtocolError(f"trace file must start with {TRACE_MAGIC!r}")
    events: list[DecodeEvent] = []
    for lineno, line in enumerate(raw[1:], start=2):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        words = stripped.split()
        try:
            if words[0] == "start":
                events.append(OpStarted(int(words[1]), int(words[2])))
            elif words[0] == "chunk":
                bits = words[3]
                if set(bits) - {"0", "1"}:
                    raise ValueError(f"bad bit string {bits!r}")
                flipped = tuple(i for i, b in enumerate(bits) if b == "1")
                events.append(SyndromeChunk(int(words[1]), int(words[2]), flipped))
            elif words[0] == "finish":
                raw_parity = None
                if len(words) > 2 and words[2].startswith("raw="):
                    raw_parity = int(words[2][4:])
                events.append(OpFinished(int(words[1]), raw_parity))
            elif words[0] == "query":
                events.append(BranchQuery(int(words[1]), tuple(words[2].split(","))))
            else:
                raise ValueError(f"unknown event {words[0]!r}")
        except (ValueError, IndexError) as exc:
            raise ProtocolError(f"trace line {lineno}: {exc}") from exc
    return events

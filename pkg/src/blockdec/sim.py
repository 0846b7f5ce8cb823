"""Phenomenological noise sampling and Monte Carlo accuracy runs.

Error sampling is counter-based: whether edge ``e`` fires in shot ``s`` of a
run seeded with ``seed`` is a pure function of ``(seed, s, e)`` (a splitmix64
finisher over the three), so a merged graph and any block partition of it
sample identical error sets, and runs are replayable bit for bit.

The Monte Carlo driver walks the compiled program tree like the physical
and logic controllers would: it streams per-round syndrome chunks into a
:class:`~blockdec.coordinator.Coordinator`, asks a branch query at each
conditional, follows the corrected readout it gets back, and finally scores
every observable's corrected parity against the sampled ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .compiler import CompiledCircuit, OpNode, ProgramNode
from .coordinator import (
    BranchQuery,
    Coordinator,
    DecodeEvent,
    LatencyReport,
    LogicalReadout,
    OpFinished,
    OpStarted,
    SyndromeChunk,
    WorkerSpec,
)
from .decoder import Syndrome
from .errors import ProtocolError, StateError
from .graph import DecodingGraph

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_SHOT_SALT = _U64(0xC2B2AE3D27D4EB4F)
_SEED_SALT = _U64(0x632BE59BD9B4E019)


def _mix64(x: np.ndarray | np.uint64) -> np.ndarray | np.uint64:
    """splitmix64 finisher; a well-mixed 64-bit hash of its input."""
    x = (x ^ (x >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> _U64(27))) * _U64(0x94D049BB133111EB)
    return x ^ (x >> _U64(31))


def _threshold(p: float) -> tuple[np.uint64, bool]:
    """(uint64 threshold, always-fire flag) for trigger probability p."""
    if p >= 1.0:
        return _U64(0), True
    if p <= 0.0:
        return _U64(0), False
    return _U64(int(p * 2.0**64)), False


class EdgeSampler:
    """Counter-based trigger sampling over a fixed edge set.

    ``overrides`` maps edge ids to replacement probabilities (a test hook;
    values outside (0, 0.5] such as 0 and 1 are allowed here).
    """

    def __init__(
        self,
        edges: list,  # ErrorSource sequence
        seed: int,
        overrides: dict[int, float] | None = None,
    ):
        overrides = overrides or {}
        self.edge_ids = np.array([e.edge_id for e in edges], dtype=np.uint64)
        thresholds = []
        always = []
        for e in edges:
            thr, alw = _threshold(overrides.get(e.edge_id, e.probability))
            thresholds.append(thr)
            always.append(alw)
        self.thresholds = np.array(thresholds, dtype=np.uint64)
        self.always = np.array(always, dtype=bool)
        seed_key = _mix64(_U64(seed & (2**64 - 1)) + _SEED_SALT)
        self.edge_keys = _mix64(seed_key ^ ((self.edge_ids + _U64(1)) * _GOLDEN))
        self._seed_key = seed_key

    def shot_matrix(self, first_shot: int, count: int) -> np.ndarray:
        """Boolean (count, n_edges) trigger matrix for a shot range."""
        shots = np.arange(first_shot, first_shot + count, dtype=np.uint64)
        shot_keys = _mix64(self._seed_key ^ ((shots + _U64(1)) * _SHOT_SALT))
        u = _mix64(self.edge_keys[None, :] + shot_keys[:, None])
        return (u < self.thresholds[None, :]) | self.always[None, :]

    def triggered(self, shot: int) -> frozenset[int]:
        """Edge ids firing in one shot."""
        row = self.shot_matrix(shot, 1)[0]
        return frozenset(int(e) for e in self.edge_ids[row])


@dataclass(frozen=True)
class ErrorSample:
    """One sampled error configuration over a graph or block set."""

    seed: int
    shot: int
    triggered: frozenset[int]
    syndromes: dict[int, Syndrome]  # block id (or 0 for a bare graph) -> syndrome
    true_flips: frozenset[int]


def sample(
    target: DecodingGraph | dict,  # graph, or {block_id: DecodingBlock}
    seed: int,
    shot: int = 0,
    overrides: dict[int, float] | None = None,
) -> ErrorSample:
    """Sample one shot over a merged graph or a block partition.

    Partition independence: the same (seed, shot, edge) fires identically
    however the edges are grouped. Per-block syndromes restrict the global
    symmetric difference to each block's own vertices.
    """
    if isinstance(target, DecodingGraph):
        blocks = {0: None}
        edges = sorted(target.edges, key=lambda e: e.edge_id)
        vertex_sets = {0: target.vertices}
        obs_of = {e.edge_id: e.observables for e in edges}
    else:
        edges_by_id = {}
        vertex_sets = {}
        for bid, block in target.items():
            vertex_sets[bid] = block.graph.vertices
            for e in block.graph.edges:
                edges_by_id[e.edge_id] = e
        edges = [edges_by_id[eid] for eid in sorted(edges_by_id)]
        obs_of = {e.edge_id: e.observables for e in edges}
        blocks = target
    sampler = EdgeSampler(edges, seed, overrides)
    triggered = sampler.triggered(shot)
    flipped: set[int] = set()
    flips: frozenset[int] = frozenset()
    by_edge = {e.edge_id: e for e in edges}
    for eid in sorted(triggered):
        flipped ^= by_edge[eid].detectors
        flips ^= obs_of[eid]
    syndromes = {
        bid: Syndrome(frozenset(flipped) & frozenset(vertices))
        for bid, vertices in vertex_sets.items()
    }
    return ErrorSample(seed, shot, triggered, syndromes, flips)


# ---------------------------------------------------------------------------
# Per-shot circuit driver


@dataclass(frozen=True)
class ShotOutcome:
    shot: int
    readouts: dict[int, LogicalReadout]
    truth: dict[int, int]
    choices: dict[int, bool]
    report: LatencyReport
    events: tuple[DecodeEvent, ...] | None = None

    @property
    def failed_observables(self) -> frozenset[int]:
        return frozenset(
            obs
            for obs, readout in self.readouts.items()
            if readout.corrected_parity != readout.raw_parity ^ self.truth[obs]
        )


class CircuitDriver:
    """Replays sampled shots through a coordinator, one shot at a time.

    Precomputes per-instance edge tables once; ``run_shot`` then costs one
    tree walk plus the decode work of the shot.
    """

    def __init__(
        self,
        compiled: CompiledCircuit,
        seed: int,
        overrides: dict[int, float] | None = None,
    ):
        self.compiled = compiled
        self.seed = seed
        owner = _edge_owner_table(compiled)
        edges_by_id = {}
        for block in compiled.blocks.values():
            for e in block.graph.edges:
                edges_by_id[e.edge_id] = e
        self._edges = [edges_by_id[eid] for eid in sorted(edges_by_id)]
        self.sampler = EdgeSampler(self._edges, seed, overrides)
        self._op_edge_idx: dict[int, list[int]] = {o: [] for o in compiled.instances}
        for idx, e in enumerate(self._edges):
            self._op_edge_idx[owner[e.edge_id]].append(idx)
        self._matrix: np.ndarray | None = None
        self._matrix_base = 0

    def _row(self, shot: int) -> np.ndarray:
        chunk = 4096
        if (
            self._matrix is None
            or not self._matrix_base <= shot < self._matrix_base + len(self._matrix)
        ):
            self._matrix_base = (shot // chunk) * chunk
            self._matrix = self.sampler.shot_matrix(self._matrix_base, chunk)
        return self._matrix[shot - self._matrix_base]

    def run_shot(
        self,
        shot: int,
        workers: int | list[WorkerSpec] = 1,
        scripted_raws: dict[str, int] | None = None,
        record_trace: bool = False,
    ) -> ShotOutcome:
        compiled = self.compiled
        row = self._row(shot)
        coord = Coordinator(compiled, workers)
        events: list[DecodeEvent] = []
        defects: set[int] = set()
        truth: dict[int, int] = {info.index: 0 for info in compiled.observables}

        def emit(event: DecodeEvent) -> None:
            if record_trace:
                events.append(event)
            coord.on_event(event)

        def run_op(op_id: int) -> None:
            op = compiled.instances[op_id]
            emit(OpStarted(op_id, op.start_round))
            for idx in self._op_edge_idx[op_id]:
                if row[idx]:
                    edge = self._edges[idx]
                    defects.symmetric_difference_update(edge.detectors)
                    for obs in edge.observables:
                        truth[obs] ^= 1
            for round_index in range(op.start_round, op.end_round):
                layer = compiled.layer_detectors(op.patch, round_index)
                flipped = tuple(
                    pos for pos, det in enumerate(layer) if det in defects
                )
                emit(SyndromeChunk(op_id, round_index, flipped))
            raw = None
            if op.kind == "measure":
                raw = truth[op.obs_index]
                if scripted_raws is not None and op.label in scripted_raws:
                    raw = scripted_raws[op.label] & 1
            emit(OpFinished(op_id, raw))

        def walk(nodes: tuple[ProgramNode, ...]) -> None:
            for node in nodes:
                if isinstance(node, OpNode):
                    run_op(node.op_id)
                else:
                    cond = compiled.conditionals[node.cond_id]
                    emit(BranchQuery(node.cond_id, cond.labels))
                    taken = coord.choices.get(node.cond_id)
                    if taken is None:
                        raise ProtocolError(
                            f"conditional {node.cond_id} left unanswered"
                        )
                    walk(node.then_nodes if taken else node.else_nodes)

        walk(compiled.program)
        if not coord.run_complete():
            raise StateError("internal: shot replay ended incomplete")
        report = coord.latency_report()
        _check_schedule_bounds(report)
        return ShotOutcome(
            shot=shot,
            readouts=dict(coord.readouts),
            truth=truth,
            choices=dict(coord.choices),
            report=report,
            events=tuple(events) if record_trace else None,
        )


def _edge_owner_table(compiled: CompiledCircuit) -> dict[int, int]:
    """Edge id -> owning op instance, recovered from block coverage.

    An edge belongs to the covered op whose own rounds contain the edge's
    earliest detector layer on that patch.
    """
    patch_by_offset = sorted(
        compiled.patches.values(), key=lambda pl: pl.offset
    )

    def locate(det: int) -> tuple[str, int]:
        position = det % compiled.stride
        round_index = det // compiled.stride
        for pl in patch_by_offset:
            if pl.offset <= position < pl.offset + pl.detectors_per_round:
                return pl.name, round_index
        raise StateError(f"detector {det} outside the layout table")

    owner: dict[int, int] = {}
    for block in compiled.blocks.values():
        ops = [compiled.instances[o] for o in sorted(block.covered_ops)]
        for e in block.graph.edges:
            patch, round_index = locate(min(e.detectors))
            for op in ops:
                if op.patch == patch and op.start_round <= round_index < op.end_round:
                    owner[e.edge_id] = op.op_id
                    break
            else:
                raise StateError(
                    f"edge {e.edge_id} has no owning op in its block"
                )
    return owner


def _check_schedule_bounds(report: LatencyReport) -> None:
    workers = len(report.worker_busy)
    lower = max(
        report.critical_path,
        -(-report.total_cost // workers),  # ceil division
    )
    if report.makespan < lower:
        raise StateError(
            f"schedule invariant violated: makespan {report.makespan} below "
            f"lower bound {lower}"
        )


# ---------------------------------------------------------------------------
# Monte Carlo aggregation


def wilson_interval(failures: int, shots: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson 95% score interval for a binomial proportion."""
    if shots == 0:
        return 0.0, 1.0
    phat = failures / shots
    denom = 1.0 + z * z / shots
    center = (phat + z * z / (2 * shots)) / denom
    half = z * sqrt(phat * (1.0 - phat) / shots + z * z / (4.0 * shots * shots)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class ObservableStats:
    obs_index: int
    patch: str
    ordinal: int
    labels: tuple[str, ...]
    shots: int
    failures: int
    mean_latency: float
    max_latency: int

    @property
    def ler(self) -> float:
        return self.failures / self.shots if self.shots else 0.0

    @property
    def wilson(self) -> tuple[float, float]:
        return wilson_interval(self.failures, self.shots)


@dataclass(frozen=True)
class MonteCarloResult:
    shots: int
    seed: int
    granularity: int
    workers: int
    observables: tuple[ObservableStats, ...]
    mean_makespan: float
    max_makespan: int
    mean_utilization: float
    max_critical_path: int

    def to_json_dict(self) -> dict:
        return {
            "shots": self.shots,
            "seed": self.seed,
            "granularity": self.granularity,
            "workers": self.workers,
            "observables": [
                {
                    "obs_index": s.obs_index,
                    "patch": s.patch,
                    "ordinal": s.ordinal,
                    "labels": list(s.labels),
                    "shots": s.shots,
                    "failures": s.failures,
                    "ler": s.ler,
                    "wilson_low": s.wilson[0],
                    "wilson_high": s.wilson[1],
                    "mean_latency": s.mean_latency,
                    "max_latency": s.max_latency,
                }
                for s in self.observables
            ],
            "schedule": {
                "mean_makespan": self.mean_makespan,
                "max_makespan": self.max_makespan,
                "mean_utilization": self.mean_utilization,
                "max_critical_path": self.max_critical_path,
            },
        }


def monte_carlo(
    compiled: CompiledCircuit,
    shots: int,
    seed: int,
    workers: int = 1,
    overrides: dict[int, float] | None = None,
) -> MonteCarloResult:
    """Sample, replay and score ``shots`` independent shots.

    Fully deterministic in (compiled circuit, shots, seed, workers).
    """
    if shots < 1:
        raise StateError(f"shots must be >= 1, got {shots}")
    driver = CircuitDriver(compiled, seed, overrides)
    failures = {info.index: 0 for info in compiled.observables}
    latency_sum = {info.index: 0 for info in compiled.observables}
    latency_max = {info.index: 0 for info in compiled.observables}
    counts = {info.index: 0 for info in compiled.observables}
    labels_seen: dict[int, set[str]] = {info.index: set() for info in compiled.observables}
    makespan_sum = 0
    makespan_max = 0
    util_sum = 0.0
    cp_max = 0
    for shot in range(shots):
        outcome = driver.run_shot(shot, workers=workers)
        for obs in outcome.failed_observables:
            failures[obs] += 1
        for obs, readout in outcome.readouts.items():
            counts[obs] += 1
            labels_seen[obs].add(readout.label)
        for lat in outcome.report.readouts:
            latency_sum[lat.obs_index] += lat.latency
            latency_max[lat.obs_index] = max(latency_max[lat.obs_index], lat.latency)
        makespan_sum += outcome.report.makespan
        makespan_max = max(makespan_max, outcome.report.makespan)
        util_sum += outcome.report.utilization
        cp_max = max(cp_max, outcome.report.critical_path)
    missing = [obs for obs, n in counts.items() if n != shots]
    if missing:
        raise StateError(f"observables {missing} not reported on every shot")
    stats = []
    for info in compiled.observables:
        obs = info.index
        stats.append(
            ObservableStats(
                obs_index=obs,
                patch=info.patch,
                ordinal=info.ordinal,
                labels=tuple(sorted(labels_seen[obs])),
                shots=shots,
                failures=failures[obs],
                mean_latency=latency_sum[obs] / shots,
                max_latency=latency_max[obs],
            )
        )
    return MonteCarloResult(
        shots=shots,
        seed=seed,
        granularity=compiled.granularity,
        workers=workers,
        observables=tuple(stats),
        mean_makespan=makespan_sum / shots,
        max_makespan=makespan_max,
        mean_utilization=util_sum / shots,
        max_critical_path=cp_max,
    )


def format_results_table(result: MonteCarloResult) -> str:
    """Tab-separated results table, one row per observable."""
    lines = ["blockdec-results v1"]
    lines.append(
        "observable\tpatch\tordinal\tlabels\tshots\tfailures\tler"
        "\twilson_low\twilson_high\tmean_latency\tmax_latency"
    )
    for s in result.observables:
        lo, hi = s.wilson
        lines.append(
            f"{s.obs_index}\t{s.patch}\t{s.ordinal}\t{'|'.join(s.labels)}"
            f"\t{s.shots}\t{s.failures}\t{s.ler:.6g}\t{lo:.6g}\t{hi:.6g}"
            f"\t{s.mean_latency:.6g}\t{s.max_latency}"
        )
    lines.append(
        f"# schedule: workers={result.workers} "
        f"mean_makespan={result.mean_makespan:.6g} "
        f"max_makespan={result.max_makespan} "
        f"mean_utilization={result.mean_utilization:.6g} "
        f"max_critical_path={result.max_critical_path}"
    )
    return "\n".join(lines) + "\n"

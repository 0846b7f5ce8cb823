"""Decoding graphs: detectors (vertices) and error sources (weighted edges).

A decoding problem is a weighted (hyper)graph. Vertices are integer detector
ids; each edge is an independent error mechanism that flips the detectors in
its set and possibly some logical observables. Detector ids pack time and
space as ``round * stride + layout_position`` (the compiler emits the layout
table), so id order is the canonical tie-breaking order everywhere.

Graphs are immutable after validation and safe to share across concurrent
decoding tasks.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

from .errors import GraphError

#: Tolerance for comparing edge weights in equality checks.
WEIGHT_TOL = 1e-9


def weight_from_probability(p: float) -> float:
    """Log-likelihood weight ``ln((1-p)/p)`` of an error source.

    Monotonically decreasing in ``p``; zero at ``p = 0.5``.

    Raises:
        ValueError: if ``p`` is outside ``(0, 0.5]``.
    """
    if not 0.0 < p <= 0.5:
        raise ValueError(f"error probability must be in (0, 0.5], got {p!r}")
    return math.log((1.0 - p) / p)


def compose_probabilities(p1: float, p2: float) -> float:
    """Probability that exactly one of two independent mechanisms fires.

    Used to pre-merge duplicate edges (same detectors, same observables)
    during graph construction.
    """
    return p1 * (1.0 - p2) + p2 * (1.0 - p1)


@dataclass(frozen=True)
class ErrorSource:
    """One independent error mechanism.

    ``detectors`` of size 1 is a boundary edge, size 2 a normal edge and
    size >= 3 a hyperedge (representable, but rejected by the shipped
    union-find decoder). ``observables`` lists the logical observables
    flipped when this error occurs.
    """

    edge_id: int
    detectors: frozenset[int]
    probability: float
    observables: frozenset[int] = frozenset()
    weight: float = field(init=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "detectors", frozenset(self.detectors))
        object.__setattr__(self, "observables", frozenset(self.observables))
        if self.edge_id < 0:
            raise GraphError(f"edge_id must be non-negative, got {self.edge_id}")
        if not self.detectors:
            raise GraphError(f"edge {self.edge_id} has an empty detector set")
        object.__setattr__(self, "weight", weight_from_probability(self.probability))

    @property
    def is_boundary(self) -> bool:
        return len(self.detectors) == 1

    @property
    def is_hyper(self) -> bool:
        return len(self.detectors) > 2


@dataclass(frozen=True)
class DecodingGraph:
    """An immutable decoding graph.

    Invariants checked at construction: every edge endpoint is a declared
    vertex, edge ids are unique, no two edges share both detector set and
    observable set, and observable indices are below ``observable_count``.
    """

    vertices: frozenset[int]
    edges: tuple[ErrorSource, ...]
    observable_count: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", frozenset(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        seen_ids: set[int] = set()
        seen_shape: set[tuple[frozenset[int], frozenset[int]]] = set()
        for e in self.edges:
            if e.edge_id in seen_ids:
                raise GraphError(f"duplicate edge_id {e.edge_id}")
            seen_ids.add(e.edge_id)
            shape = (e.detectors, e.observables)
            if shape in seen_shape:
                raise GraphError(
                    f"edge {e.edge_id} duplicates another edge's detectors and "
                    "observables; compose probabilities before constructing"
                )
            seen_shape.add(shape)
            if not e.detectors <= self.vertices:
                raise GraphError(
                    f"edge {e.edge_id} references detectors outside the vertex set"
                )
            for obs in e.observables:
                if not 0 <= obs < self.observable_count:
                    raise GraphError(
                        f"edge {e.edge_id} observable {obs} out of range "
                        f"[0, {self.observable_count})"
                    )

    @cached_property
    def edge_by_id(self) -> dict[int, ErrorSource]:
        return {e.edge_id: e for e in self.edges}

    @cached_property
    def adjacency(self) -> dict[int, tuple[int, ...]]:
        """Vertex id -> sorted ids of incident edges."""
        adj: dict[int, list[int]] = {v: [] for v in self.vertices}
        for e in self.edges:
            for v in e.detectors:
                adj[v].append(e.edge_id)
        return {v: tuple(sorted(ids)) for v, ids in adj.items()}

    @property
    def has_hyperedges(self) -> bool:
        return any(e.is_hyper for e in self.edges)

    def __len__(self) -> int:
        return len(self.vertices)


EMPTY_GRAPH = DecodingGraph(frozenset(), (), 0)


def merge_graphs(g1: DecodingGraph, g2: DecodingGraph) -> DecodingGraph:
    """Union two decoding graphs that share vertices but not edges.

    The vertex set is the union of both, the edge list the disjoint union.
    Edges are owned by exactly one operation's graph, so overlapping edge
    ids indicate a construction bug.

    Raises:
        GraphError: on duplicate edge ids or observable-count mismatch.
    """
    if g1.observable_count != g2.observable_count:
        raise GraphError(
            f"observable_count mismatch: {g1.observable_count} vs {g2.observable_count}"
        )
    overlap = set(g1.edge_by_id) & set(g2.edge_by_id)
    if overlap:
        raise GraphError(f"edge ids present in both graphs: {sorted(overlap)[:8]}")
    return DecodingGraph(
        vertices=g1.vertices | g2.vertices,
        edges=g1.edges + g2.edges,
        observable_count=g1.observable_count,
    )


def canonical_form(
    graph: DecodingGraph,
) -> tuple[int, tuple[tuple[tuple[int, ...], tuple[int, ...], float], ...]]:
    """Translation-invariant normal form of a graph.

    Vertices are relabeled ``0..|V|-1`` in sorted-id order, which erases the
    time/space offsets of the id packing; edges are sorted by (relabeled
    detector set, observables, weight).
    """
    rank = {v: i for i, v in enumerate(sorted(graph.vertices))}
    edges = sorted(
        (
            tuple(sorted(rank[v] for v in e.detectors)),
            tuple(sorted(e.observables)),
            e.weight,
        )
        for e in graph.edges
    )
    return len(graph.vertices), tuple(edges)


def graphs_identical(g1: DecodingGraph, g2: DecodingGraph) -> bool:
    """True iff the graphs are equal up to translation of the id packing.

    Structure and observables must match exactly; weights are compared with
    tolerance ``WEIGHT_TOL``.
    """
    n1, e1 = canonical_form(g1)
    n2, e2 = canonical_form(g2)
    if n1 != n2 or len(e1) != len(e2):
        return False
    for (d1, o1, w1), (d2, o2, w2) in zip(e1, e2):
        if d1 != d2 or o1 != o2 or abs(w1 - w2) > WEIGHT_TOL:
            return False
    return True


def canonical_key(graph: DecodingGraph) -> str:
    """Stable serialization of :func:`canonical_form`.

    Weights are rounded to 9 decimals, matching the comparison tolerance of
    :func:`graphs_identical` for graphs built from the same probability
    values.
    """
    n, edges = canonical_form(graph)
    parts = [f"v{n}"]
    for dets, obs, w in edges:
        parts.append(
            ",".join(map(str, dets)) + "|" + ",".join(map(str, obs)) + f"|{w:.9f}"
        )
    return ";".join(parts)


def key_digest(key: str) -> str:
    """Short hex digest of a canonical key, for display and file output."""
    return hashlib.sha256(key.encode()).hexdigest()[:12]

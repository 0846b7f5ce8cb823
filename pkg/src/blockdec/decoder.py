"""Weighted union-find decoder and a brute-force minimum-weight test oracle.

The decoder grows clusters around syndrome defects in an event-driven way:
all unfrozen clusters advance their frontier edges simultaneously by the
minimum remaining edge slack, newly filled edges union their endpoint
clusters, and a cluster freezes once its defect parity is even or it has
absorbed a boundary. A correction is then peeled out of each cluster's
spanning forest.

Two kinds of boundary exist: the single open boundary of the graph (all
size-1 edges attach to it) and, during block decoding, *virtual* vertices
on not-yet-fused combination boundaries. Both freeze a cluster on contact;
virtual vertices can later be de-virtualized and growth resumed, which is
what fusion does.

Ties are always broken by ascending integer id, so identical inputs give
identical corrections.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import DecodeError, InfeasibleSyndromeError
from .graph import DecodingGraph, ErrorSource

#: Union-find key of the single open boundary of a graph.
BOUNDARY = -1

_SLACK_EPS = 1e-12


@dataclass(frozen=True)
class Syndrome:
    """The set of detectors that read 1."""

    flipped: frozenset[int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "flipped", frozenset(self.flipped))

    def __len__(self) -> int:
        return len(self.flipped)


@dataclass(frozen=True)
class Correction:
    """A chosen edge set and the logical observables it flips."""

    edges: frozenset[int]
    observable_flips: frozenset[int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", frozenset(self.edges))
        object.__setattr__(self, "observable_flips", frozenset(self.observable_flips))


def correction_weight(graph: DecodingGraph, correction: Correction) -> float:
    return sum(graph.edge_by_id[e].weight for e in sorted(correction.edges))


def observable_flips(graph: DecodingGraph, edges: Iterable[int]) -> frozenset[int]:
    """Symmetric difference of the observables of the given edges."""
    flips: set[int] = set()
    for eid in edges:
        flips ^= graph.edge_by_id[eid].observables
    return frozenset(flips)


def syndrome_of(graph: DecodingGraph, edges: Iterable[int]) -> Syndrome:
    """Syndrome produced when exactly the given edges fire.

    The symmetric difference of the edges' detector sets; the open boundary
    absorbs the dangling end of size-1 edges and is excluded.
    """
    flipped: set[int] = set()
    for eid in edges:
        edge = graph.edge_by_id.get(eid)
        if edge is None:
            raise DecodeError(f"unknown edge id {eid}")
        flipped ^= edge.detectors
    return Syndrome(frozenset(flipped))


# ---------------------------------------------------------------------------
# Cluster state


class ClusterState:
    """Mutable union-find state over one (possibly merged) decoding graph.

    Tracks, per cluster root: defect parity, contact with the open
    boundary, and the number of virtual (fusion-boundary) vertices it
    contains. A cluster is frozen iff its parity is even or it touches
    either kind of boundary. Per-edge growth lives in ``[0, weight]`` and is
    preserved across freezes, so fusion can resume growth exactly where a
    block decode stopped.

    States are single-owner: a decode call mutates its own state only, and
    fusion consumes both inputs.
    """

    def __init__(
        self,
        graph: DecodingGraph,
        syndrome: Syndrome,
        virtual: frozenset[int] = frozenset(),
    ):
        for e in graph.edges:
            if len(e.detectors) > 2:
                raise DecodeError(
                    f"edge {e.edge_id} is a hyperedge; the union-find decoder "
                    "handles at most 2 detectors per edge"
                )
        unknown = syndrome.flipped - graph.vertices
        if unknown:
            raise DecodeError(
                f"syndrome refers to detectors outside the graph: {sorted(unknown)[:8]}"
            )
        if not virtual <= graph.vertices:
            raise DecodeError("virtual vertices must be graph vertices")
        self.graph = graph
        self.adjacency: dict[int, list[int]] = {}
        for e in graph.edges:
            for v in e.detectors:
                self.adjacency.setdefault(v, []).append(e.edge_id)
        self.defects: set[int] = set(syndrome.flipped)
        self.virtual: set[int] = set(virtual)
        self.growth: dict[int, float] = {}
        self.full: set[int] = set()
        # Union-find books; vertices enter lazily as clusters reach them.
        self.parent: dict[int, int] = {}
        self.members: dict[int, list[int]] = {}
        self.parity: dict[int, int] = {}
        self.on_boundary: dict[int, bool] = {}
        self.virtual_count: dict[int, int] = {}
        for v in sorted(self.defects):
            self._add_vertex(v, defect=True)

    # -- union-find plumbing

    def _add_vertex(self, v: int, defect: bool = False) -> None:
        if v in self.parent:
            return
        self.parent[v] = v
        self.members[v] = [v]
        self.parity[v] = 1 if defect else 0
        self.on_boundary[v] = v == BOUNDARY
        self.virtual_count[v] = 1 if v in self.virtual else 0

    def find(self, v: int) -> int:
        root = v
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[v] != root:
            self.parent[v], v = root, self.parent[v]
        return root

    def _union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        # Larger member list wins; ties go to the smaller id.
        if (len(self.members[rb]), ra) < (len(self.members[ra]), rb):
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.members[ra].extend(self.members.pop(rb))
        self.parity[ra] = (self.parity[ra] + self.parity.pop(rb)) % 2
        self.on_boundary[ra] = self.on_boundary[ra] or self.on_boundary.pop(rb)
        self.virtual_count[ra] += self.virtual_count.pop(rb)
        return ra

    def _frozen(self, root: int) -> bool:
        return (
            self.parity[root] == 0
            or self.on_boundary[root]
            or self.virtual_count[root] > 0
        )

    def active_roots(self) -> list[int]:
        return sorted(
            r for r in self.members if self.find(r) == r and not self._frozen(r)
        )

    @property
    def quiescent(self) -> bool:
        return not self.active_roots()

    def cluster_view(self) -> dict[int, tuple[tuple[int, ...], int, bool, int]]:
        """Root -> (sorted members, parity, boundary flag, virtual count).

        A normalized snapshot for tests and locality checks.
        """
        out = {}
        for r in self.members:
            if self.find(r) != r:
                continue
            out[min(self.members[r])] = (
                tuple(sorted(self.members[r])),
                self.parity[r],
                self.on_boundary[r],
                self.virtual_count[r],
            )
        return out

    # -- growth

    def _edge_ends(self, edge: ErrorSource) -> tuple[int, int]:
        dets = sorted(edge.detectors)
        if len(dets) == 1:
            return dets[0], BOUNDARY
        return dets[0], dets[1]

    def _frontier(self) -> list[tuple[int, ErrorSource, int]]:
        """(edge id, edge, fill rate) for growable edges of active clusters."""
        active = set(self.active_roots())
        if not active:
            return []
        out = []
        for eid in sorted(self.graph.edge_by_id):
            if eid in self.full:
                continue
            edge = self.graph.edge_by_id[eid]
            u, v = self._edge_ends(edge)
            ru = self.find(u) if u in self.parent else None
            rv = self.find(v) if v in self.parent else None
            if ru is not None and ru == rv:
                continue  # internal to one cluster; can never fill
            rate = (ru in active) + (rv in active)
            if rate:
                out.append((eid, edge, rate))
        return out

    def grow(self) -> None:
        """Run event-driven growth until every cluster is frozen.

        Raises:
            InfeasibleSyndromeError: if an odd cluster has nowhere left to
                grow (disconnected component without boundary access).
        """
        while True:
            frontier = self._frontier()
            if not frontier:
                if self.active_roots():
                    raise InfeasibleSyndromeError(
                        "odd cluster cannot reach a boundary or partner defect"
                    )
                return
            step = min(
                (e.weight - self.growth.get(eid, 0.0)) / rate
                for eid, e, rate in frontier
            )
            filled: list[tuple[int, ErrorSource]] = []
            for eid, edge, rate in frontier:
                grown = self.growth.get(eid, 0.0) + rate * step
                self.growth[eid] = min(grown, edge.weight)
                if grown >= edge.weight - _SLACK_EPS:
                    filled.append((eid, edge))
            for eid, edge in filled:  # frontier is id-sorted already
                self.full.add(eid)
                u, v = self._edge_ends(edge)
                self._add_vertex(u)
                self._add_vertex(v)
                self._union(u, v)

    # -- fusion support

    def absorb(self, other: "ClusterState", merged_graph: DecodingGraph) -> None:
        """Merge another state into this one over the union graph.

        Shared vertices (the combination boundary) union the clusters that
        contain them on either side; everything else carries over untouched.
        """
        self.graph = merged_graph
        for e in other.graph.edges:
            for v in e.detectors:
                self.adjacency.setdefault(v, []).append(e.edge_id)
        self.defects |= other.defects
        self.virtual |= other.virtual
        self.growth.update(other.growth)
        self.full |= other.full
        # Replay other's clusters; iterate deterministically. Vertices new to
        # this state enter with zeroed accounting and receive the other
        # side's root totals once per cluster, so shared (boundary) vertices
        # are never double-counted.
        clusters = sorted(
            (min(ms), root, ms)
            for root, ms in other.members.items()
            if other.find(root) == root
        )
        for _, root, ms in clusters:
            fresh = [v for v in ms if v not in self.parent]
            for v in fresh:
                self.parent[v] = v
                self.members[v] = [v]
                self.parity[v] = 0
                self.on_boundary[v] = v == BOUNDARY
                self.virtual_count[v] = 0
            anchor = ms[0]
            for v in ms[1:]:
                self._union(anchor, v)
            r = self.find(anchor)
            self.parity[r] = (self.parity[r] + other.parity[root]) % 2
            self.on_boundary[r] = self.on_boundary[r] or other.on_boundary[root]
            self.virtual_count[r] += sum(1 for v in fresh if v in self.virtual)

    def devirtualize(self, vertices: Iterable[int]) -> None:
        """Strip virtual status; affected odd clusters become growable."""
        for v in sorted(set(vertices)):
            if v not in self.virtual:
                continue
            self.virtual.remove(v)
            if v in self.parent:
                self.virtual_count[self.find(v)] -= 1

    # -- peeling

    def peel(self) -> frozenset[int]:
        """Extract a correction from the grown clusters.

        Pure: repeated calls return the same edge set. Each cluster's fully
        grown edges form a connected subgraph; a spanning tree rooted at the
        boundary (or at a virtual vertex, which absorbs leftover parity
        during partial decodes) is peeled leaf-first, keeping the tree edge
        whenever the leaf carries a defect.
        """
        chosen: set[int] = set()
        roots = sorted(
            (min(self.members[r]), r)
            for r in self.members
            if self.find(r) == r
        )
        for _, root in roots:
            ms = self.members[root]
            if not (self.defects & set(ms)):
                continue
            vertices = set(ms)
            adj: dict[int, list[tuple[int, int]]] = {v: [] for v in vertices}
            for eid in sorted(self.full):
                edge = self.graph.edge_by_id.get(eid)
                if edge is None:
                    continue
                u, v = self._edge_ends(edge)
                if u in vertices and v in vertices:
                    adj[u].append((v, eid))
                    adj[v].append((u, eid))
            tree_root = BOUNDARY if BOUNDARY in vertices else None
            if tree_root is None:
                virt = sorted(v for v in vertices if v in self.virtual)
                tree_root = virt[0] if virt else min(vertices)
            order = [tree_root]
            tree_edge: dict[int, int] = {}
            parent_of: dict[int, int] = {tree_root: tree_root}
            for v in order:  # BFS; adjacency sorted for determinism
                for w, eid in sorted(adj[v]):
                    if w not in parent_of:
                        parent_of[w] = v
                        tree_edge[w] = eid
                        order.append(w)
            if len(order) != len(vertices):
                raise DecodeError(
                    "internal: cluster's grown edges do not span its vertices"
                )
            defect = {v: v in self.defects for v in vertices}
            for v in reversed(order[1:]):
                if defect[v]:
                    chosen.add(tree_edge[v])
                    p = parent_of[v]
                    defect[p] = not defect[p]
                    defect[v] = False
            if defect.get(tree_root) and tree_root != BOUNDARY and tree_root not in self.virtual:
                raise DecodeError("internal: unfrozen parity left after peeling")
        return frozenset(chosen)


# ---------------------------------------------------------------------------
# Whole-graph decoding


def decode(graph: DecodingGraph, syndrome: Syndrome) -> Correction:
    """Decode a syndrome on a full graph with the union-find decoder.

    The returned edges annihilate the syndrome: the symmetric difference of
    their detector sets equals ``syndrome.flipped``. Deterministic for a
    fixed input. Not minimum-weight in general.

    Raises:
        DecodeError: on hyperedges or syndrome bits outside the graph.
        InfeasibleSyndromeError: if no edge subset can annihilate.
    """
    state = ClusterState(graph, syndrome)
    state.grow()
    edges = state.peel()
    return Correction(edges, observable_flips(graph, edges))


def exhaustive_min_weight(graph: DecodingGraph, syndrome: Syndrome) -> Correction:
    """Minimum-weight annihilating edge set by exhaustive enumeration.

    Test oracle: enumerates all 2^|E| subsets (|E| <= 20), handles
    hyperedges, and breaks weight ties by lexicographic edge-id order.
    """
    edges = sorted(graph.edges, key=lambda e: e.edge_id)
    if len(edges) > 20:
        raise DecodeError(
            f"exhaustive oracle limited to 20 edges, graph has {len(edges)}"
        )
    unknown = syndrome.flipped - graph.vertices
    if unknown:
        raise DecodeError(
            f"syndrome refers to detectors outside the graph: {sorted(unknown)[:8]}"
        )
    target = syndrome.flipped
    best: tuple[float, tuple[int, ...]] | None = None
    for bits in range(1 << len(edges)):
        flipped: frozenset[int] = frozenset()
        weight = 0.0
        chosen = []
        for i, edge in enumerate(edges):
            if bits >> i & 1:
                flipped ^= edge.detectors
                weight += edge.weight
                chosen.append(edge.edge_id)
        if flipped != target:
            continue
        key = (weight, tuple(chosen))
        if best is None or key[0] < best[0] - _SLACK_EPS:
            best = key
        elif abs(key[0] - best[0]) <= _SLACK_EPS and key[1] < best[1]:
            best = key
    if best is None:
        raise InfeasibleSyndromeError("no edge subset annihilates the syndrome")
    chosen_set = frozenset(best[1])
    return Correction(chosen_set, observable_flips(graph, chosen_set))


def annihilates(graph: DecodingGraph, correction: Correction, syndrome: Syndrome) -> bool:
    """Check the decode contract: chosen edges reproduce the syndrome."""
    return syndrome_of(graph, correction.edges).flipped == syndrome.flipped

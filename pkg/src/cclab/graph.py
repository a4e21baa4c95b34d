"""Directed graphs, vertex clusterings, and structural predicates.

Vertices are integers ``0..n-1``.  An edge ``(j, i)`` is a directed link from
``j`` to ``i``, matching the convention that a coupling entry ``A[i, j] > 0``
means agent ``i`` listens to agent ``j``.

A clustering partitions the vertex set into K nonempty, pairwise disjoint
groups.  The predicates below are the structural hypotheses of the
cluster-consensus criteria:

* *cluster spanning trees*: each cluster ``C_p`` has a root vertex (which may
  lie outside ``C_p``) with directed paths to every vertex of ``C_p``;
* *cluster scrambling*: every same-cluster pair of vertices has a common
  in-neighbor;
* *common-link property*: for every ordered pair of clusters ``(p, q)``,
  either there are no links from ``C_q`` into ``C_p``, or every vertex of
  ``C_p`` has at least one in-neighbor in ``C_q``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

Edge = tuple[int, int]


@dataclass(frozen=True)
class DirectedGraph:
    """Immutable directed graph; ``edges`` holds ordered pairs ``(src, dst)``."""

    n: int
    edges: frozenset[Edge]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one vertex")
        normalized = frozenset((int(j), int(i)) for j, i in self.edges)
        for j, i in normalized:
            if not (0 <= j < self.n and 0 <= i < self.n):
                raise ValueError(f"edge ({j}, {i}) out of range for n={self.n}")
        object.__setattr__(self, "edges", normalized)

    def successors(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n)]
        for j, i in self.edges:
            out[j].append(i)
        return out

    def in_neighbors(self) -> list[set[int]]:
        inn: list[set[int]] = [set() for _ in range(self.n)]
        for j, i in self.edges:
            inn[i].add(j)
        return inn


@dataclass(frozen=True)
class Clustering:
    """Ordered partition of ``0..n-1`` into K nonempty clusters."""

    n: int
    clusters: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        clusters = tuple(tuple(sorted(int(v) for v in c)) for c in self.clusters)
        object.__setattr__(self, "clusters", clusters)
        if not clusters:
            raise ValueError("clustering needs at least one cluster")
        seen: set[int] = set()
        for c in clusters:
            if not c:
                raise ValueError("empty cluster")
            for v in c:
                if not 0 <= v < self.n:
                    raise ValueError(f"vertex {v} out of range for n={self.n}")
                if v in seen:
                    raise ValueError(f"vertex {v} appears in two clusters")
                seen.add(v)
        if len(seen) != self.n:
            missing = sorted(set(range(self.n)) - seen)
            raise ValueError(f"vertices not covered by any cluster: {missing}")
        labels = [0] * self.n
        for p, c in enumerate(clusters):
            for v in c:
                labels[v] = p
        object.__setattr__(self, "_labels", tuple(labels))

    @classmethod
    def from_sizes(cls, sizes: Sequence[int]) -> "Clustering":
        """Contiguous clustering: the first ``sizes[0]`` vertices, and so on."""
        n = int(sum(sizes))
        clusters = []
        start = 0
        for s in sizes:
            clusters.append(tuple(range(start, start + int(s))))
            start += int(s)
        return cls(n, tuple(clusters))

    @property
    def k(self) -> int:
        return len(self.clusters)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.clusters)

    def index_of(self, v: int) -> int:
        return self._labels[v]

    def labels(self) -> np.ndarray:
        return np.array(self._labels, dtype=np.intp)


def graph_of_matrix(a: np.ndarray, zero_tol: float = 1e-12) -> DirectedGraph:
    """Support graph of a square matrix: edge ``(j, i)`` iff ``a[i, j] > zero_tol``."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    src, dst = np.nonzero(a.T > zero_tol)
    return DirectedGraph(a.shape[0], frozenset(zip(src.tolist(), dst.tolist())))


def has_self_links(g: DirectedGraph) -> bool:
    return all((v, v) in g.edges for v in range(g.n))


def reachable_set(g: DirectedGraph, v: int) -> set[int]:
    """Vertices reachable from ``v`` by directed paths; always contains ``v``."""
    if not 0 <= v < g.n:
        raise ValueError(f"vertex {v} out of range")
    succ = g.successors()
    seen = {v}
    queue = deque([v])
    while queue:
        u = queue.popleft()
        for w in succ[u]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def cluster_spanning_tree_roots(
    g: DirectedGraph, clustering: Clustering
) -> Optional[list[int]]:
    """One valid root per cluster, or None if some cluster has no root.

    A root of cluster ``C_p`` is any vertex whose reachable set covers
    ``C_p``; it may lie outside ``C_p`` and may serve several clusters.
    Candidates are scanned in descending vertex order and the first valid
    one is returned, which makes the output deterministic.
    """
    reach = {v: reachable_set(g, v) for v in range(g.n)}
    roots: list[int] = []
    for members in clustering.clusters:
        target = set(members)
        root = next(
            (v for v in range(g.n - 1, -1, -1) if target <= reach[v]), None
        )
        if root is None:
            return None
        roots.append(root)
    return roots


def rootless_clusters(g: DirectedGraph, clustering: Clustering) -> list[int]:
    """Indices of clusters for which no vertex reaches every member."""
    out = []
    for p, members in enumerate(clustering.clusters):
        target = set(members)
        if not any(target <= reachable_set(g, v) for v in range(g.n)):
            out.append(p)
    return out


def is_cluster_scrambling(g: DirectedGraph, clustering: Clustering) -> bool:
    """True iff every same-cluster pair of vertices has a common in-neighbor.

    Pairs with ``i == j`` are included: each vertex needs at least one
    in-neighbor (a self-loop suffices).
    """
    inn = g.in_neighbors()
    for members in clustering.clusters:
        for a_idx, i in enumerate(members):
            if not inn[i]:
                return False
            for j in members[a_idx + 1 :]:
                if inn[i].isdisjoint(inn[j]):
                    return False
    return True


def common_link_violations(
    g: DirectedGraph, clustering: Clustering
) -> list[tuple[int, int, int]]:
    """Triples ``(p, q, v)``: cluster pair with some cross links where vertex
    ``v`` of ``C_p`` has no in-neighbor in ``C_q``."""
    inn = g.in_neighbors()
    violations = []
    for p, targets in enumerate(clustering.clusters):
        for q, sources in enumerate(clustering.clusters):
            src = set(sources)
            covered = [v for v in targets if inn[v] & src]
            if covered and len(covered) < len(targets):
                hit = set(covered)
                violations.extend((p, q, v) for v in targets if v not in hit)
    return violations


def has_common_link_property(g: DirectedGraph, clustering: Clustering) -> bool:
    """All-or-nothing cross links: for every ordered cluster pair ``(p, q)``,
    either no links go from ``C_q`` into ``C_p`` or every vertex of ``C_p``
    has one."""
    return not common_link_violations(g, clustering)


def union_graph(graphs: Iterable[DirectedGraph]) -> DirectedGraph:
    """Edge union of graphs over a common vertex set."""
    graphs = list(graphs)
    if not graphs:
        raise ValueError("union of zero graphs")
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise ValueError("graphs have mismatched vertex counts")
    edges: set[Edge] = set()
    for g in graphs:
        edges |= g.edges
    return DirectedGraph(n, frozenset(edges))

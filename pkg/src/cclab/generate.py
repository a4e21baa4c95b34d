"""Seeded generation of compliant instances, plus the two bundled examples.

The generator works top-down: pick (or accept) a K-by-K quotient matrix,
realize a support graph whose cross-cluster links follow the quotient's
sparsity pattern with the all-or-nothing coverage the common-link property
demands, then spread each block mass over the in-neighbors so the full matrix
has inter-cluster common influence exactly.  Everything is re-verified post
hoc rather than assumed.

Randomness is consumed from child streams of a single seed, so any generated
object is a pure function of its spec.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .graph import (
    Clustering,
    DirectedGraph,
    cluster_spanning_tree_roots,
    graph_of_matrix,
    has_common_link_property,
    has_self_links,
    union_graph,
)
from .signals import ClusterOffsets, PeriodicInput
from .stochastic import MatrixSchedule, has_common_influence, quotient_matrix, validate
from .dynamics import System


class InfeasibleError(ValueError):
    """The requested structure cannot be realized."""


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters for seeded instance generation.

    ``entry_floor`` bounds every generated positive entry from below (random
    split mode); it must not exceed ``1/n`` or no stochastic row could honor
    it.  ``density`` drives how many optional blocks and extra edges appear:
    0 gives the minimal tree construction, 1 the complete graph.
    """

    cluster_sizes: tuple[int, ...]
    seed: int
    quotient: Optional[np.ndarray] = None
    entry_floor: float = 0.05
    density: float = 0.3

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.cluster_sizes)
        object.__setattr__(self, "cluster_sizes", sizes)
        if not sizes or any(s < 1 for s in sizes):
            raise ValueError("cluster sizes must be positive")
        if not 0.0 <= self.density <= 1.0:
            raise ValueError("density must lie in [0, 1]")
        if not 0.0 < self.entry_floor <= 1.0 / self.n:
            raise ValueError(
                f"entry floor must lie in (0, 1/n] = (0, {1.0 / self.n:.4f}]"
            )
        if self.quotient is not None:
            q = validate(np.asarray(self.quotient, dtype=float))
            if q.shape[0] != len(sizes):
                raise ValueError("quotient size does not match the cluster count")
            q.setflags(write=False)
            object.__setattr__(self, "quotient", q)

    @property
    def n(self) -> int:
        return sum(self.cluster_sizes)

    def clustering(self) -> Clustering:
        return Clustering.from_sizes(self.cluster_sizes)


def _streams(seed: int) -> dict[str, np.random.SeedSequence]:
    children = np.random.SeedSequence(seed).spawn(5)
    return dict(zip(("quotient", "graph", "matrix", "schedule", "state"), children))


def resolve_quotient(spec: GeneratorSpec) -> np.ndarray:
    """The recipe's quotient, or a seeded random one on a density-driven support.

    Generated masses satisfy ``B[p, q] >= entry_floor * |C_q|`` on every
    active block so that any later in-neighbor pattern can be floored.
    """
    if spec.quotient is not None:
        return spec.quotient.copy()
    rng = np.random.default_rng(_streams(spec.seed)["quotient"])
    k = len(spec.cluster_sizes)
    sizes = np.array(spec.cluster_sizes, dtype=float)
    support = rng.random((k, k)) < spec.density
    np.fill_diagonal(support, True)
    b = np.zeros((k, k))
    e = spec.entry_floor
    for p in range(k):
        act = np.nonzero(support[p])[0]
        base = e * sizes[act]
        b[p, act] = base + (1.0 - base.sum()) * rng.dirichlet(np.ones(act.size))
    return validate(b)


def gen_graph_with_cluster_trees(spec: GeneratorSpec) -> DirectedGraph:
    """Seeded graph with self-links, cluster spanning trees, and the
    common-link property, with extra edges per ``density``.

    Every cluster gets an internal random arborescence (its head is then a
    root), every active quotient block gets full in-coverage, and extra
    edges are confined to active blocks so the all-or-nothing rule survives.
    """
    b = resolve_quotient(spec)
    clus = spec.clustering()
    rng = np.random.default_rng(_streams(spec.seed)["graph"])
    edges = {(v, v) for v in range(spec.n)}
    for members in clus.clusters:
        order = [members[i] for i in rng.permutation(len(members))]
        for idx in range(1, len(order)):
            parent = order[int(rng.integers(idx))]
            edges.add((parent, order[idx]))
    e = spec.entry_floor
    for p, targets in enumerate(clus.clusters):
        for q, sources in enumerate(clus.clusters):
            if b[p, q] <= 0:
                continue
            cap = int(b[p, q] / e)  # max in-degree the floor allows per row
            for v in targets:
                have = [u for u in sources if (u, v) in edges]
                if not have and p != q:
                    u = sources[int(rng.integers(len(sources)))]
                    edges.add((u, v))
                    have.append(u)
                room = cap - len(have)
                if room <= 0 or spec.density == 0.0:
                    continue
                candidates = [u for u in sources if (u, v) not in edges]
                picks = [u for u in candidates if rng.random() < spec.density]
                edges.update((u, v) for u in picks[:room])
    g = DirectedGraph(spec.n, frozenset(edges))
    if cluster_spanning_tree_roots(g, clus) is None or not has_common_link_property(g, clus):
        raise RuntimeError("generated graph failed its own structural checks")
    return g


def _matrix_on_graph(
    b: np.ndarray,
    clus: Clustering,
    g: DirectedGraph,
    entry_floor: float,
    mode: str,
    rng: np.random.Generator,
) -> np.ndarray:
    inn = g.in_neighbors()
    n = clus.n
    a = np.zeros((n, n))
    for i in range(n):
        p = clus.index_of(i)
        for q, sources in enumerate(clus.clusters):
            mass = float(b[p, q])
            nbrs = sorted(inn[i] & set(sources))
            if mass <= 0.0:
                if nbrs:
                    raise InfeasibleError(
                        f"graph links cluster {q} into vertex {i} but the quotient"
                        f" gives that block zero mass"
                    )
                continue
            if not nbrs:
                raise InfeasibleError(
                    f"vertex {i} has no in-neighbor in cluster {q}, required by the quotient"
                )
            d = len(nbrs)
            if mode == "equal":
                a[i, nbrs] = mass / d
            else:
                if mass < entry_floor * d - 1e-12:
                    raise InfeasibleError(
                        f"block mass {mass:.4f} cannot give {d} in-neighbors of vertex"
                        f" {i} at least {entry_floor} each"
                    )
                a[i, nbrs] = entry_floor + (mass - entry_floor * d) * rng.dirichlet(
                    np.ones(d)
                )
    a = validate(a)
    if not has_common_influence(a, clus, tol=1e-12):
        raise RuntimeError("generated matrix failed the common-influence check")
    if graph_of_matrix(a).edges != g.edges:
        raise RuntimeError("generated matrix support does not match the graph")
    return a


def gen_common_influence_matrix(
    spec: GeneratorSpec, g: DirectedGraph, mode: str = "random"
) -> np.ndarray:
    """Stochastic matrix supported exactly on ``g`` whose quotient is the
    spec's (resolved) quotient.

    ``mode="random"`` floors every positive entry at ``spec.entry_floor`` and
    splits the remaining block mass by a seeded symmetric Dirichlet draw;
    ``mode="equal"`` divides each block mass evenly over the in-neighbors.
    """
    if mode not in ("random", "equal"):
        raise ValueError(f"unknown split mode {mode!r}")
    b = resolve_quotient(spec)
    rng = np.random.default_rng(_streams(spec.seed)["matrix"])
    return _matrix_on_graph(b, spec.clustering(), g, spec.entry_floor, mode, rng)


def gen_switching_schedule(
    spec: GeneratorSpec, m: int, window: int, mode: str = "random"
) -> MatrixSchedule:
    """Periodic schedule of ``m`` matrices sharing one static quotient.

    No single graph has cluster spanning trees, yet the union over any
    ``window`` consecutive steps does (``window >= m``, so each window sees
    every graph).  Rootlessness is anchored in clusters whose quotient row is
    diagonal-only: they receive no cross-cluster links, so a dropped
    arborescence edge leaves its child unreachable in that graph.  Each graph
    drops one anchor edge round-robin; with at least two anchor edges, every
    edge survives in some other graph and the union keeps its trees.
    """
    if m < 1:
        raise ValueError("need at least one matrix")
    if window < m:
        raise ValueError("window must cover the whole schedule period")
    clus = spec.clustering()
    b = resolve_quotient(spec)
    if m == 1:
        g = gen_graph_with_cluster_trees(spec)
        rng = np.random.default_rng(_streams(spec.seed)["matrix"])
        return MatrixSchedule(
            (_matrix_on_graph(b, clus, g, spec.entry_floor, mode, rng),),
            floor=spec.entry_floor,
        )
    rng = np.random.default_rng(_streams(spec.seed)["schedule"])

    def anchors(q: np.ndarray) -> list[int]:
        return [
            p
            for p in range(clus.k)
            if clus.sizes[p] >= 2
            and all(q[p, j] <= 0.0 for j in range(clus.k) if j != p)
        ]

    if spec.quotient is None:
        # grow the anchor pool by zeroing rows, largest clusters first
        for p in sorted(range(clus.k), key=lambda p: -clus.sizes[p]):
            if sum(clus.sizes[a] - 1 for a in anchors(b)) >= 2:
                break
            if clus.sizes[p] >= 2:
                b[p] = 0.0
                b[p, p] = 1.0
    pool_size = sum(clus.sizes[a] - 1 for a in anchors(b))
    if pool_size < 2:
        raise InfeasibleError(
            "cannot split tree edges across graphs: need at least two"
            " arborescence edges inside clusters without incoming"
            f" cross-blocks (diagonal-only quotient rows); spec has {pool_size}"
        )

    trees: list[list[tuple[int, int]]] = []
    for members in clus.clusters:
        order = [members[i] for i in rng.permutation(len(members))]
        trees.append(
            [
                (order[int(rng.integers(idx))], order[idx])
                for idx in range(1, len(order))
            ]
        )
    pool = [(p, j) for p in anchors(b) for j in range(len(trees[p]))]
    order = rng.permutation(len(pool))
    drops = [pool[order[l % len(pool)]] for l in range(m)]

    graphs = []
    for l in range(m):
        edges = {(v, v) for v in range(spec.n)}
        for p, tree in enumerate(trees):
            edges.update(e for j, e in enumerate(tree) if (p, j) != drops[l])
        for p, targets in enumerate(clus.clusters):
            for q, sources in enumerate(clus.clusters):
                if b[p, q] <= 0 or p == q:
                    continue
                cap = int(b[p, q] / spec.entry_floor)
                for v in targets:
                    have = [u for u in sources if (u, v) in edges]
                    if not have:
                        u = sources[int(rng.integers(len(sources)))]
                        edges.add((u, v))
                        have.append(u)
                    room = cap - len(have)
                    if room <= 0 or spec.density == 0.0:
                        continue
                    candidates = [u for u in sources if (u, v) not in edges]
                    picks = [u for u in candidates if rng.random() < spec.density]
                    edges.update((u, v) for u in picks[:room])
        graphs.append(DirectedGraph(spec.n, frozenset(edges)))

    for l, g in enumerate(graphs):
        if cluster_spanning_tree_roots(g, clus) is not None:
            raise RuntimeError(f"schedule graph {l} unexpectedly has cluster trees")
    if cluster_spanning_tree_roots(union_graph(graphs), clus) is None:
        raise RuntimeError("schedule union lost its cluster spanning trees")
    mats = tuple(
        _matrix_on_graph(b, clus, g, spec.entry_floor, mode, rng) for g in graphs
    )
    return MatrixSchedule(mats, floor=spec.entry_floor)


# ---------------------------------------------------------------------------
# Random ensemble helpers (used by the property suites and the verifier).


def random_clustering(
    rng: np.random.Generator, n_max: int = 10, k_max: int = 4, n_min: int = 2
) -> Clustering:
    """Random partition of a random-size vertex set into at most ``k_max`` clusters."""
    n = int(rng.integers(n_min, n_max + 1))
    k = int(rng.integers(1, min(k_max, n) + 1))
    perm = rng.permutation(n)
    cuts = np.sort(rng.choice(np.arange(1, n), size=k - 1, replace=False)) if k > 1 else []
    parts = np.split(perm, cuts)
    return Clustering(n, tuple(tuple(int(v) for v in part) for part in parts))


def random_stochastic(rng: np.random.Generator, n: int) -> np.ndarray:
    """Dense random stochastic matrix with Dirichlet rows."""
    return rng.dirichlet(np.ones(n), size=n)


def random_common_influence(
    rng: np.random.Generator, clustering: Clustering, sparse: bool = False
) -> np.ndarray:
    """Random matrix with exact inter-cluster common influence.

    Draws a random quotient (optionally with a sparse support) and splits
    each block mass over the full target block by a Dirichlet draw.
    """
    k = clustering.k
    n = clustering.n
    b = np.zeros((k, k))
    for p in range(k):
        if sparse:
            active = np.nonzero(rng.random(k) < 0.6)[0]
            if active.size == 0:
                active = np.array([int(rng.integers(k))])
        else:
            active = np.arange(k)
        b[p, active] = rng.dirichlet(np.ones(active.size))
    a = np.zeros((n, n))
    for p, targets in enumerate(clustering.clusters):
        for q, sources in enumerate(clustering.clusters):
            if b[p, q] <= 0:
                continue
            for i in targets:
                a[i, list(sources)] = b[p, q] * rng.dirichlet(np.ones(len(sources)))
    return validate(a)


def random_clustered_tree_matrix(
    rng: np.random.Generator, clustering: Clustering, density: float = 0.2
) -> np.ndarray:
    """Random stochastic matrix whose graph has self-links and cluster
    spanning trees (arbitrary extra edges allowed)."""
    n = clustering.n
    edges = {(v, v) for v in range(n)}
    for members in clustering.clusters:
        order = [members[i] for i in rng.permutation(len(members))]
        for idx in range(1, len(order)):
            parent = order[int(rng.integers(idx))]
            edges.add((parent, order[idx]))
    extra = rng.random((n, n)) < density
    for u in range(n):
        for v in range(n):
            if extra[u, v]:
                edges.add((u, v))
    a = np.zeros((n, n))
    for i in range(n):
        nbrs = sorted(u for (u, w) in edges if w == i)
        d = len(nbrs)
        # Mix a uniform floor into the Dirichlet draw so no entry degenerates.
        a[i, nbrs] = 0.5 / d + 0.5 * rng.dirichlet(np.ones(d))
    return validate(a)


# ---------------------------------------------------------------------------
# Bundled examples: nine agents in three clusters of three.


def example_clustering() -> Clustering:
    return Clustering.from_sizes((3, 3, 3))


def example_quotient() -> np.ndarray:
    return np.array(
        [[1.0, 0.0, 0.0], [0.0, 0.5, 0.5], [0.0, 0.5, 0.5]]
    )


def example_signal() -> PeriodicInput:
    """Alternating unit signal of period two."""
    return PeriodicInput(period=2, free_values=(-1.0,))


def example_alphas() -> tuple[float, ...]:
    return (1.0, 0.5, -0.5)


def example_graph_static() -> DirectedGraph:
    """Fixed-topology example: cluster 1 is led by vertex 2; vertex 6 roots
    both trailing clusters through mutual cross-cluster coverage."""
    edges = {(v, v) for v in range(9)}
    edges |= {(2, 0), (2, 1)}
    edges |= {(6, 3), (6, 4), (6, 5)}
    edges |= {(3, 6), (4, 7), (5, 8)}
    return DirectedGraph(9, frozenset(edges))


def example_graphs_switching() -> tuple[DirectedGraph, DirectedGraph, DirectedGraph]:
    """Three graphs, each missing cluster spanning trees, whose union has
    them; all share the static quotient of :func:`example_quotient`."""
    common = {(v, v) for v in range(9)} | {(3, 6), (4, 7), (5, 8)}
    g1 = DirectedGraph(
        9, frozenset(common | {(2, 0), (6, 3), (7, 4), (8, 5)})
    )
    g2 = DirectedGraph(
        9, frozenset(common | {(2, 1), (6, 3), (6, 4), (7, 4), (8, 5)})
    )
    g3 = DirectedGraph(
        9, frozenset(common | {(6, 3), (6, 5), (7, 4)})
    )
    return g1, g2, g3


def _example_matrix(g: DirectedGraph) -> np.ndarray:
    clus = example_clustering()
    b = example_quotient()
    rng = np.random.default_rng(0)  # equal mode draws nothing
    return _matrix_on_graph(b, clus, g, entry_floor=0.1, mode="equal", rng=rng)


def example_matrix_static() -> np.ndarray:
    return _example_matrix(example_graph_static())


def example_schedule_switching() -> MatrixSchedule:
    mats = tuple(_example_matrix(g) for g in example_graphs_switching())
    return MatrixSchedule(mats, floor=0.1)


def example_learning_flags() -> np.ndarray:
    """Zero-sum two-state flags: leading cluster pro state 1, trailing anti."""
    return np.array([[1.0, -1.0], [0.0, 0.0], [-1.0, 1.0]])


EXAMPLE_WINDOW = 3
EXAMPLE_LEARNING_STRENGTH = 0.01


def examples() -> tuple[System, System]:
    """The bundled fixed-topology and switching systems."""
    clus = example_clustering()
    offsets = ClusterOffsets(clus, example_alphas())
    sig = example_signal()
    static = System(
        coupling=example_matrix_static(), clustering=clus, offsets=offsets, signal=sig
    )
    switching = System(
        coupling=example_schedule_switching(),
        clustering=clus,
        offsets=offsets,
        signal=sig,
    )
    return static, switching

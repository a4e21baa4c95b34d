"""Hypothesis checkers and outcome reconciliation.

Four sufficient-condition sets make up the claim catalog:

1. fixed coupling, intra-cluster synchronization: bounded signal and partial
   sums, inter-cluster common influence, cluster spanning trees, positive
   diagonal;
2. fixed coupling, cluster consensus: self-links, common-link property,
   cluster spanning trees, driven by a zero-sum periodic signal;
3. switching coupling, intra-cluster synchronization: uniform all-or-nothing
   cross links (property A), entry and diagonal floors, per-step common
   influence, spanning trees in every window union;
4. switching coupling, cluster consensus: as 3 but with one static quotient
   and a zero-sum periodic signal.

The sets are sufficient, not necessary, so reconciliation distinguishes a
vacuous pass (hypotheses unmet) from a genuine failure (guarantee given,
behavior absent) and from degeneracy (consensus guaranteed generically, but
the separation collapsed for this data).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .dynamics import (
    PeriodicLimit,
    System,
    Trajectory,
    detect_periodic_limit,
    separation_metric,
    simulate,
)
from .generate import GeneratorSpec, gen_common_influence_matrix, gen_graph_with_cluster_trees, gen_switching_schedule
from .graph import (
    Clustering,
    common_link_violations,
    cluster_spanning_tree_roots,
    graph_of_matrix,
    rootless_clusters,
    union_graph,
)
from .signals import ClusterOffsets, PeriodicInput, partial_sum_bound
from .stochastic import (
    MatrixSchedule,
    common_influence_deviation,
    quotient_matrix,
    state_diameter,
)

PERIOD_SUM_NOTE = (
    "zero-sum convention: the signal's full period t=0..T-1 sums to zero;"
    " the interior sum over t=1..T-1 is reported alongside for comparison"
)


@dataclass(frozen=True)
class Thresholds:
    sync_scale: float = 1e-8
    separation: float = 1e-6
    periodic: float = 1e-8
    common_influence: float = 1e-9
    zero: float = 1e-12

    def sync_threshold(self, x0: np.ndarray) -> float:
        return self.sync_scale * (1.0 + float(np.abs(x0).max()))


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass(frozen=True)
class HypothesisReport:
    """Per-condition verdicts with the outcome the claim catalog predicts.

    ``predicted`` is one of ``intra-sync``, ``cluster-consensus`` or
    ``no-guarantee``; ``sync_ok``/``consensus_ok`` are None when that claim
    was not evaluated by the producing checker.
    """

    claim: str
    conditions: tuple[ConditionCheck, ...]
    predicted: str
    sync_ok: Optional[bool] = None
    consensus_ok: Optional[bool] = None
    notes: tuple[str, ...] = ()

    def condition(self, name: str) -> ConditionCheck:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "claim": self.claim,
            "predicted": self.predicted,
            "sync_hypotheses_ok": self.sync_ok,
            "consensus_hypotheses_ok": self.consensus_ok,
            "conditions": [c.to_dict() for c in self.conditions],
            "notes": list(self.notes),
        }


def _trees_check(g, clus: Clustering) -> ConditionCheck:
    roots = cluster_spanning_tree_roots(g, clus)
    if roots is not None:
        detail = f"roots {tuple(r + 1 for r in roots)} (1-based)"
    else:
        bad = [p + 1 for p in rootless_clusters(g, clus)]
        detail = f"clusters without roots (1-based): {bad}"
    return ConditionCheck("cluster-spanning-trees", roots is not None, detail)


def _input_bounded_check(sys: System, horizon: Optional[int]) -> ConditionCheck:
    if not sys.driven():
        return ConditionCheck(
            "input-bounded", True, "undriven system: the signal term is absent"
        )
    sig = sys.signal
    if isinstance(sig, PeriodicInput):
        max_u, max_partial = partial_sum_bound(sig, 2 * sig.period)
        return ConditionCheck(
            "input-bounded",
            True,
            f"periodic zero-sum signal: |u| <= {max_u:.6g},"
            f" |partial sums| <= {max_partial:.6g}",
        )
    span = horizon if horizon is not None else 1000
    try:
        max_u, max_partial = partial_sum_bound(sig, span)
    except IndexError:
        return ConditionCheck(
            "input-bounded", False, f"signal undefined across horizon {span}"
        )
    _, half_peak = partial_sum_bound(sig, span // 2)
    growing = max_partial > half_peak * (1 + 1e-9)
    return ConditionCheck(
        "input-bounded",
        not growing,
        f"empirical over 0..{span}: |u| <= {max_u:.6g}, |partial sums| <="
        f" {max_partial:.6g}" + ("; still growing in the tail" if growing else ""),
    )


def _zero_sum_input_check(sys: System) -> ConditionCheck:
    if not sys.driven():
        return ConditionCheck(
            "periodic-zero-sum-input", False, "system is undriven; no separating input"
        )
    sig = sys.signal
    if not isinstance(sig, PeriodicInput):
        return ConditionCheck(
            "periodic-zero-sum-input", False, "signal is not a zero-sum periodic input"
        )
    full = sum(sig.value(t) for t in range(sig.period))
    interior = sum(sig.value(t) for t in range(1, sig.period))
    return ConditionCheck(
        "periodic-zero-sum-input",
        True,
        f"period {sig.period}; full-period sum {full:.3g}, interior sum"
        f" {interior:.3g}",
    )


def check_theorem_static_sync(
    sys: System,
    horizon: Optional[int] = None,
    thresholds: Thresholds = Thresholds(),
) -> HypothesisReport:
    """Hypotheses for intra-cluster synchronization under a fixed coupling."""
    if sys.is_switching:
        raise ValueError("fixed-coupling check called on a switching system")
    a = sys.coupling
    clus = sys.clustering
    g = graph_of_matrix(a, zero_tol=thresholds.zero)
    conditions = [_input_bounded_check(sys, horizon)]
    dev = common_influence_deviation(a, clus)
    conditions.append(
        ConditionCheck(
            "common-influence",
            dev <= thresholds.common_influence,
            f"worst block-sum spread {dev:.3e} (tolerance {thresholds.common_influence:.1e})",
        )
    )
    conditions.append(_trees_check(g, clus))
    min_diag = float(np.diag(a).min())
    conditions.append(
        ConditionCheck(
            "positive-diagonal",
            min_diag > 0.0,
            f"smallest diagonal entry {min_diag:.6g}",
        )
    )
    ok = all(c.passed for c in conditions)
    return HypothesisReport(
        claim="static-sync",
        conditions=tuple(conditions),
        predicted="intra-sync" if ok else "no-guarantee",
        sync_ok=ok,
    )


def check_theorem_static_consensus(
    sys: System,
    thresholds: Thresholds = Thresholds(),
) -> HypothesisReport:
    """Hypotheses for cluster consensus under a fixed coupling."""
    if sys.is_switching:
        raise ValueError("fixed-coupling check called on a switching system")
    a = sys.coupling
    clus = sys.clustering
    g = graph_of_matrix(a, zero_tol=thresholds.zero)
    missing = [v + 1 for v in range(g.n) if (v, v) not in g.edges]
    conditions = [
        ConditionCheck(
            "self-links",
            not missing,
            "every vertex has a self-loop" if not missing
            else f"vertices missing self-loops (1-based): {missing}",
        )
    ]
    violations = common_link_violations(g, clus)
    shown = [(p + 1, q + 1, v + 1) for p, q, v in violations[:5]]
    conditions.append(
        ConditionCheck(
            "common-link-property",
            not violations,
            "cross links are all-or-nothing per cluster pair" if not violations
            else f"uncovered (cluster, source cluster, vertex) triples (1-based): {shown}",
        )
    )
    conditions.append(_trees_check(g, clus))
    conditions.append(_zero_sum_input_check(sys))
    ok = all(c.passed for c in conditions)
    return HypothesisReport(
        claim="static-consensus",
        conditions=tuple(conditions),
        predicted="cluster-consensus" if ok else "no-guarantee",
        consensus_ok=ok,
        notes=(PERIOD_SUM_NOTE,),
    )


def check_switching(
    sys: System,
    window: Optional[int] = None,
    floor: Optional[float] = None,
    horizon: Optional[int] = None,
    thresholds: Thresholds = Thresholds(),
) -> HypothesisReport:
    """Hypotheses for the switching-coupling claims (sync and consensus)."""
    if isinstance(sys.coupling, MatrixSchedule):
        schedule = sys.coupling
    else:
        schedule = MatrixSchedule((sys.coupling,), floor=floor)
    clus = sys.clustering
    window = schedule.period if window is None else int(window)
    if window < 1:
        raise ValueError("window must be at least 1")
    graphs = [graph_of_matrix(m, zero_tol=thresholds.zero) for m in schedule.matrices]

    conditions = [_input_bounded_check(sys, horizon)]

    # Property A: per ordered cluster pair, the cross-link branch (absent vs
    # full coverage) must be the same in every graph of the set.
    prop_a_bad: list[str] = []
    for p in range(clus.k):
        for q in range(clus.k):
            branches = set()
            for l, g in enumerate(graphs):
                inn = g.in_neighbors()
                src = set(clus.clusters[q])
                covered = sum(1 for v in clus.clusters[p] if inn[v] & src)
                if covered == 0:
                    branches.add("none")
                elif covered == len(clus.clusters[p]):
                    branches.add("all")
                else:
                    branches.add("partial")
                    prop_a_bad.append(
                        f"graph {l + 1}: cluster pair ({p + 1}, {q + 1}) partially covered"
                    )
            if len(branches - {"partial"}) > 1:
                prop_a_bad.append(
                    f"cluster pair ({p + 1}, {q + 1}) switches between link branches"
                )
    conditions.append(
        ConditionCheck(
            "property-a-uniform-links",
            not prop_a_bad,
            "cross-link structure is uniform across the schedule" if not prop_a_bad
            else "; ".join(prop_a_bad[:4]),
        )
    )

    if floor is not None and floor != schedule.floor:
        schedule = MatrixSchedule(schedule.matrices, floor=floor)
    fr = schedule.floor_report()
    conditions.append(
        ConditionCheck(
            "entry-floor-b1",
            fr["entry_floor_ok"],
            f"min positive entry {fr['min_positive_entry']:.6g} vs floor {fr['floor']:.6g}",
        )
    )
    conditions.append(
        ConditionCheck(
            "diagonal-floor-b2",
            fr["diagonal_floor_ok"],
            f"min diagonal entry {fr['min_diagonal_entry']:.6g} vs floor {fr['floor']:.6g}",
        )
    )

    devs = [common_influence_deviation(m, clus) for m in schedule.matrices]
    b3_ok = max(devs) <= thresholds.common_influence
    conditions.append(
        ConditionCheck(
            "common-influence-b3",
            b3_ok,
            f"worst per-step block-sum spread {max(devs):.3e}",
        )
    )

    if b3_ok:
        quotients = [
            quotient_matrix(m, clus, tol=thresholds.common_influence)
            for m in schedule.matrices
        ]
        spread = max(
            float(np.abs(q - quotients[0]).max()) for q in quotients
        )
        static_ok = spread <= max(thresholds.common_influence, 1e-12) * 10
        detail = f"largest quotient deviation across steps {spread:.3e}"
    else:
        static_ok = False
        detail = "not evaluated: per-step common influence fails"
    conditions.append(ConditionCheck("static-quotient-b3star", static_ok, detail))

    bad_windows = []
    for t in range(schedule.period):
        union = union_graph([graphs[(t + i) % schedule.period] for i in range(window)])
        if cluster_spanning_tree_roots(union, clus) is None:
            bad_windows.append(t)
    conditions.append(
        ConditionCheck(
            "window-union-spanning-trees",
            not bad_windows,
            f"every union over {window} consecutive steps has cluster spanning trees"
            if not bad_windows
            else f"windows starting at {bad_windows} lack cluster spanning trees",
        )
    )

    conditions.append(_zero_sum_input_check(sys))

    by_name = {c.name: c.passed for c in conditions}
    sync_ok = all(
        by_name[n]
        for n in (
            "property-a-uniform-links",
            "entry-floor-b1",
            "diagonal-floor-b2",
            "common-influence-b3",
            "window-union-spanning-trees",
        )
    )
    consensus_ok = sync_ok and by_name["static-quotient-b3star"] and by_name[
        "periodic-zero-sum-input"
    ]
    predicted = (
        "cluster-consensus" if consensus_ok
        else "intra-sync" if sync_ok
        else "no-guarantee"
    )
    return HypothesisReport(
        claim="switching",
        conditions=tuple(conditions),
        predicted=predicted,
        sync_ok=sync_ok,
        consensus_ok=consensus_ok,
        notes=(PERIOD_SUM_NOTE,),
    )


def assess_system(
    sys: System,
    window: Optional[int] = None,
    horizon: Optional[int] = None,
    thresholds: Thresholds = Thresholds(),
) -> HypothesisReport:
    """Combined report with the strongest applicable prediction.

    For fixed couplings the consensus prediction additionally requires the
    synchronization hypotheses: the separation argument runs through the
    quotient matrix, which needs common influence to exist.
    """
    if sys.is_switching:
        return check_switching(sys, window=window, horizon=horizon, thresholds=thresholds)
    sync = check_theorem_static_sync(sys, horizon=horizon, thresholds=thresholds)
    cons = check_theorem_static_consensus(sys, thresholds=thresholds)
    seen = {c.name for c in sync.conditions}
    merged = sync.conditions + tuple(
        c for c in cons.conditions if c.name not in seen
    )
    consensus_ok = bool(cons.consensus_ok and sync.sync_ok)
    predicted = (
        "cluster-consensus" if consensus_ok
        else "intra-sync" if sync.sync_ok
        else "no-guarantee"
    )
    return HypothesisReport(
        claim="static-combined",
        conditions=merged,
        predicted=predicted,
        sync_ok=sync.sync_ok,
        consensus_ok=consensus_ok,
        notes=cons.notes,
    )


@dataclass(frozen=True)
class ReconcileResult:
    """Prediction versus observation.

    PASS: predicted behavior observed.  PASS-VACUOUS: no prediction (the
    hypotheses are sufficient only) regardless of what the run did.
    DEGENERATE: consensus predicted generically, synchronization observed,
    but some cluster pair failed to separate.  FAIL: a guaranteed behavior
    did not show up.
    """

    status: str
    predicted: str
    final_diameter: float
    sync_threshold: float
    min_separation: Optional[float]
    separation_threshold: float
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "predicted": self.predicted,
            "final_intra_diameter": self.final_diameter,
            "sync_threshold": self.sync_threshold,
            "min_separation": self.min_separation,
            "separation_threshold": self.separation_threshold,
            "notes": list(self.notes),
        }


def reconcile(
    report: HypothesisReport,
    sys: System,
    traj: Trajectory,
    limit: Optional[PeriodicLimit] = None,
    thresholds: Thresholds = Thresholds(),
) -> ReconcileResult:
    clus = sys.clustering
    final_diam = state_diameter(traj.states[-1], clus)
    sync_thr = thresholds.sync_threshold(traj.states[0])
    intra_ok = final_diam < sync_thr

    min_sep: Optional[float] = None
    if limit is not None and clus.k > 1:
        sep = separation_metric(limit)
        off = sep[~np.eye(clus.k, dtype=bool)]
        min_sep = float(off.min())

    if report.predicted == "no-guarantee":
        note = (
            "hypotheses unmet; observed "
            + ("synchronization" if intra_ok else "no synchronization")
        )
        return ReconcileResult(
            "PASS-VACUOUS", report.predicted, final_diam, sync_thr, min_sep,
            thresholds.separation, (note,),
        )
    if not intra_ok:
        return ReconcileResult(
            "FAIL", report.predicted, final_diam, sync_thr, min_sep,
            thresholds.separation,
            (f"final intra-cluster diameter {final_diam:.3e} >= {sync_thr:.3e}",),
        )
    if report.predicted == "intra-sync":
        return ReconcileResult(
            "PASS", report.predicted, final_diam, sync_thr, min_sep,
            thresholds.separation,
        )
    # cluster consensus predicted
    if clus.k == 1:
        return ReconcileResult(
            "PASS", report.predicted, final_diam, sync_thr, min_sep,
            thresholds.separation, ("single cluster: separation vacuous",),
        )
    if limit is None:
        return ReconcileResult(
            "DEGENERATE", report.predicted, final_diam, sync_thr, min_sep,
            thresholds.separation,
            ("no periodic limit detected at the horizon; separation unverified",),
        )
    if min_sep is not None and min_sep > thresholds.separation:
        return ReconcileResult(
            "PASS", report.predicted, final_diam, sync_thr, min_sep,
            thresholds.separation,
        )
    return ReconcileResult(
        "DEGENERATE", report.predicted, final_diam, sync_thr, min_sep,
        thresholds.separation,
        (f"smallest cluster-pair separation {min_sep:.3e} <="
         f" {thresholds.separation:.1e}",),
    )


# ---------------------------------------------------------------------------
# Seeded ensembles.


@dataclass(frozen=True)
class EnsembleSummary:
    total: int
    counts: dict
    exceptions: tuple[str, ...] = ()

    def rate(self, status: str) -> float:
        return self.counts.get(status, 0) / self.total if self.total else 0.0


def _worker_count(workers: Optional[int]) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get("CC_LAB_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _distinct_alphas(rng: np.random.Generator, k: int) -> tuple[float, ...]:
    gaps = rng.uniform(0.3, 1.0, size=k)
    vals = rng.uniform(-1.0, 1.0) + np.cumsum(gaps)
    return tuple(float(v) for v in vals[rng.permutation(k)])


def _random_sizes(rng: np.random.Generator, min_tree_edges: int = 0) -> tuple[int, ...]:
    while True:
        k = int(rng.integers(2, 5))
        sizes = tuple(int(s) for s in rng.integers(1, 5, size=k))
        if sum(sizes) <= 12 and sum(s - 1 for s in sizes) >= min_tree_edges:
            return sizes


def run_ensemble(
    theorem: int,
    count: int,
    seed: int,
    horizon: Optional[int] = None,
    workers: Optional[int] = None,
    thresholds: Thresholds = Thresholds(),
) -> EnsembleSummary:
    """Reconcile ``count`` seeded random instances built to satisfy the
    hypotheses of the given claim (1-4); returns status counts."""
    if theorem not in (1, 2, 3, 4):
        raise ValueError("claim number must be 1, 2, 3 or 4")
    switching = theorem in (3, 4)
    span = horizon if horizon is not None else (5000 if switching else 2000)
    seeds = np.random.default_rng(seed).integers(2**62, size=count)

    def one(inst_seed: int) -> str:
        rng = np.random.default_rng(inst_seed)
        m = int(rng.integers(2, 4)) if switching else 1
        sizes = _random_sizes(rng, min_tree_edges=2 if switching else 0)
        spec = GeneratorSpec(
            cluster_sizes=sizes,
            seed=int(rng.integers(2**62)),
            entry_floor=0.05,
            density=float(rng.uniform(0.4, 0.9)),
        )
        clus = spec.clustering()
        if switching:
            coupling = gen_switching_schedule(spec, m=m, window=m)
        else:
            coupling = gen_common_influence_matrix(
                spec, gen_graph_with_cluster_trees(spec)
            )
        T = int(rng.integers(2, 5))
        free = rng.uniform(0.4, 1.6, size=T - 1) * rng.choice([-1.0, 1.0], size=T - 1)
        sig = PeriodicInput(T, tuple(free))
        offsets = ClusterOffsets(clus, _distinct_alphas(rng, clus.k))
        sys = System(coupling=coupling, clustering=clus, offsets=offsets, signal=sig)
        if theorem == 1:
            report = check_theorem_static_sync(sys, horizon=span, thresholds=thresholds)
        elif theorem == 2:
            report = check_theorem_static_consensus(sys, thresholds=thresholds)
        elif theorem == 3:
            report = check_switching(sys, window=m, horizon=span, thresholds=thresholds)
            report = replace(report, predicted="intra-sync" if report.sync_ok else "no-guarantee")
        else:
            report = check_switching(sys, window=m, horizon=span, thresholds=thresholds)
        x0 = rng.uniform(-1.0, 1.0, size=clus.n)
        traj = simulate(sys, x0, span)
        limit = None
        if report.predicted == "cluster-consensus":
            limit = detect_periodic_limit(traj, clus, T, tol=thresholds.periodic)
        return reconcile(report, sys, traj, limit, thresholds).status

    counts: dict[str, int] = {}
    errors: list[str] = []
    with ThreadPoolExecutor(max_workers=_worker_count(workers)) as pool:
        for result in pool.map(lambda s: _safe(one, int(s)), seeds):
            if isinstance(result, Exception):
                errors.append(repr(result))
            else:
                counts[result] = counts.get(result, 0) + 1
    return EnsembleSummary(total=count, counts=counts, exceptions=tuple(errors))


def _safe(fn, arg):
    try:
        return fn(arg)
    except Exception as exc:  # surfaced in the summary, not swallowed
        return exc

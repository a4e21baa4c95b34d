"""Cluster-consensus lab: simulation and condition checking for clustered
multi-agent averaging dynamics under fixed and switching topologies.

The package covers the full pipeline: structural graph predicates, stochastic
matrix analytics, driven simulation, hypothesis checking with reconciliation,
seeded instance generation, and a simplified social-learning layer on top.
"""

from .dynamics import (
    BoundReport,
    DivergenceError,
    PeriodicLimit,
    System,
    Trajectory,
    boundedness_report,
    detect_periodic_limit,
    quotient_simulate,
    separation_metric,
    simulate,
    step,
    z_limits,
)
from .generate import (
    GeneratorSpec,
    InfeasibleError,
    examples,
    gen_common_influence_matrix,
    gen_graph_with_cluster_trees,
    gen_switching_schedule,
)
from .graph import (
    Clustering,
    DirectedGraph,
    cluster_spanning_tree_roots,
    graph_of_matrix,
    has_common_link_property,
    has_self_links,
    is_cluster_scrambling,
    reachable_set,
    union_graph,
)
from .learning import (
    BeliefProfile,
    BeliefRangeError,
    CulturalFlags,
    LearningRun,
    learn_simulate,
    learn_step,
    zeta_metric,
)
from .signals import ClusterOffsets, PeriodicInput, SequenceInput, eval_u, input_vector, partial_sum_bound
from .stochastic import (
    MatrixSchedule,
    diameter_growth_rate,
    ergodicity_coefficient,
    hajnal_diameter,
    has_common_influence,
    power_limit,
    product_range,
    quotient_matrix,
    state_diameter,
    validate,
)
from .verifier import (
    HypothesisReport,
    ReconcileResult,
    Thresholds,
    assess_system,
    check_switching,
    check_theorem_static_consensus,
    check_theorem_static_sync,
    reconcile,
    run_ensemble,
)

__version__ = "0.1.0"

__all__ = [
    "BeliefProfile",
    "BeliefRangeError",
    "BoundReport",
    "ClusterOffsets",
    "Clustering",
    "CulturalFlags",
    "DirectedGraph",
    "DivergenceError",
    "GeneratorSpec",
    "HypothesisReport",
    "InfeasibleError",
    "LearningRun",
    "MatrixSchedule",
    "PeriodicInput",
    "PeriodicLimit",
    "ReconcileResult",
    "SequenceInput",
    "System",
    "Thresholds",
    "Trajectory",
    "assess_system",
    "boundedness_report",
    "check_switching",
    "check_theorem_static_consensus",
    "check_theorem_static_sync",
    "cluster_spanning_tree_roots",
    "detect_periodic_limit",
    "diameter_growth_rate",
    "ergodicity_coefficient",
    "eval_u",
    "examples",
    "gen_common_influence_matrix",
    "gen_graph_with_cluster_trees",
    "gen_switching_schedule",
    "graph_of_matrix",
    "hajnal_diameter",
    "has_common_influence",
    "has_common_link_property",
    "has_self_links",
    "input_vector",
    "is_cluster_scrambling",
    "learn_simulate",
    "learn_step",
    "power_limit",
    "product_range",
    "quotient_matrix",
    "quotient_simulate",
    "reachable_set",
    "reconcile",
    "run_ensemble",
    "separation_metric",
    "simulate",
    "state_diameter",
    "step",
    "union_graph",
    "validate",
    "z_limits",
    "zeta_metric",
]

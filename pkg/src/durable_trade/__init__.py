"""Barter exchange of durable goods on dynamic trading graphs."""

from .assignment import (
    BipartiteWeightedGraph,
    CapExceeded,
    Matching,
    NoPerfectMatching,
    enumerate_max_weight_matchings,
    enumerate_perfect_matchings,
    max_weight_perfect_matching,
)
from .audit import (
    DeviationReport,
    approximation_ratio,
    audit_strategyproofness,
    audit_tie_consistency,
)
from .dynamic import (
    LimitExceeded,
    SearchLimits,
    SearchResult,
    enumerate_simple_cycles,
    exact_dynamic_optimal,
    exact_generalized_optimal,
    greedy_dynamic,
    pareto_check,
)
from .instances import (
    ParseError,
    ThreeDMInstance,
    export_dot,
    from_json,
    gen_3dm_reduction,
    gen_claim32,
    gen_fig1,
    gen_greedy_family,
    gen_pareto,
    gen_random,
    gen_thm41,
    gen_utility_path,
    solve_3dm_bruteforce,
    to_json,
)
from .model import (
    BarterError,
    Cycle,
    Execution,
    GeneralizedUtilityParams,
    Instance,
    InvalidCycle,
    InvalidCycleAt,
    PartitionViolation,
    SelfDemand,
    TradingGraph,
    UnknownId,
    apply_cycle,
    generalized_welfare,
    initial_graph,
    new_instance,
    replay,
    replay_relaxed,
    reverse_instance,
    social_welfare,
    utility,
)
from .static_solver import (
    PerturbationOrder,
    build_edge_graph,
    build_perturbed_edge_graph,
    execution_to_matching,
    matching_to_execution,
    solve_As,
    solve_static_optimal,
    solve_static_tiebroken,
)

__all__ = [name for name in dir() if not name.startswith("_")]

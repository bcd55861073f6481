"""Auditors for mechanism properties.

* :func:`audit_strategyproofness` sweeps every misreport of one agent within
  a bounded space and scores each against the agent's true sets.
* :func:`audit_tie_consistency` checks that all maximum matchings of the edge
  graph give every agent the same items.
* :func:`approximation_ratio` compares an algorithm with the exact optimum.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from itertools import chain, combinations

from .assignment import CapExceeded, enumerate_max_weight_matchings
from .dynamic import SearchLimits, exact_dynamic_optimal, greedy_dynamic
from .model import AgentId, Execution, Instance, ItemId, TradingGraph, graph_from_reports, initial_graph, true_utility
from .static_solver import (
    build_edge_graph,
    build_perturbed_edge_graph,
    matching_to_execution,
    solve_As,
    solve_static_optimal,
    validate_reports,
)

Reports = Mapping[AgentId, tuple[frozenset[ItemId], frozenset[ItemId]]]
Mechanism = Callable[[Reports, Instance], Execution]


def mechanism_as(reports: Reports, instance: Instance) -> Execution:
    """The tie-broken static mechanism."""
    return solve_As(reports, instance)


def mechanism_static(reports: Reports, instance: Instance) -> Execution:
    """Optimal static execution on the reports, with the matcher's own tie-breaking."""
    clean = validate_reports(reports, instance)
    return solve_static_optimal(graph_from_reports(instance, clean))


MECHANISMS: dict[str, Mechanism] = {"as": mechanism_as, "static": mechanism_static}


@dataclass(frozen=True)
class DeviationReport:
    agent: AgentId
    truthful_utility: int
    best_misreport: tuple[tuple[ItemId, ...], tuple[ItemId, ...]]
    best_utility: int
    gain: int
    misreports_tried: int
    monotonicity_violations: int = 0

    @property
    def profitable(self) -> bool:
        return self.gain > 0


def _subsets(items):
    items = list(items)
    return chain.from_iterable(combinations(items, k) for k in range(len(items) + 1))


def misreport_space(instance: Instance, agent: AgentId, *, full_supersets: bool = False):
    """Yield ``(demand, supply)`` reports in sweep order, truthful report first.

    Demand subsets are crossed with supply subsets. On top of that come
    single extra demanded items (the item is neither wanted nor owned), or
    with ``full_supersets`` every set of extra items.
    """
    D = instance.sorted_items(instance.demand[agent])
    S = instance.sorted_items(instance.supply[agent])
    foreign = [j for j in instance.items if j not in instance.demand[agent] and j not in instance.supply[agent]]
    truth = (frozenset(D), frozenset(S))
    yield truth
    extras = list(_subsets(foreign)) if full_supersets else [()]
    for extra in extras:
        for d in _subsets(D):
            for s in _subsets(S):
                report = (frozenset(d) | frozenset(extra), frozenset(s))
                if report != truth:
                    yield report
    if not full_supersets:
        for j in foreign:
            yield (frozenset(D) | {j}, frozenset(S))


def audit_strategyproofness(
    mechanism: Mechanism | str,
    instance: Instance,
    agent: AgentId,
    caps: int = 8,
    *,
    full_supersets: bool = False,
) -> DeviationReport:
    """Best gain ``agent`` can get by misreporting while everyone else is truthful.

    ``caps`` bounds ``|D_i| + |S_i|`` (plus the number of extra items when
    ``full_supersets`` is set). Utilities use the true sets, so receiving an
    item outside the true demand set scores ``-n*m``. Along the way the
    demand-monotonicity property is checked for every reported demand subset
    and the count of failures is returned.
    """
    if isinstance(mechanism, str):
        mechanism = MECHANISMS[mechanism]
    if agent not in instance.agent_index:
        raise KeyError(agent)
    D, S = instance.demand[agent], instance.supply[agent]
    foreign = instance.m - len(D) - len(S)
    size = len(D) + len(S) + (foreign if full_supersets else 0)
    if size > caps:
        raise CapExceeded(f"agent {agent!r} has a report space of 2^{size}, above the cap 2^{caps}")

    others = {a: (instance.demand[a], instance.supply[a]) for a in instance.agents if a != agent}
    scores: dict[tuple[frozenset, frozenset], int] = {}
    truthful = None
    best_report, best = None, None
    tried = 0
    for report in misreport_space(instance, agent, full_supersets=full_supersets):
        execution = mechanism({**others, agent: report}, instance)
        u = true_utility(instance, execution, agent)
        scores[report] = u
        tried += 1
        if truthful is None:
            truthful = u
            continue
        if best is None or u > best:
            best, best_report = u, report
    if best is None:
        best, best_report = truthful, (frozenset(D), frozenset(S))

    violations = 0
    for (d, s), u in scores.items():
        if not d <= D:
            continue
        for j in d:
            smaller = (d - {j}, s)
            if smaller in scores and scores[smaller] > u:
                violations += 1

    return DeviationReport(
        agent,
        truthful,
        (tuple(instance.sorted_items(best_report[0])), tuple(instance.sorted_items(best_report[1]))),
        best,
        best - truthful,
        tried,
        violations,
    )


def audit_all_agents(mechanism: Mechanism | str, instance: Instance, caps: int = 8, **kw) -> list[DeviationReport]:
    return [audit_strategyproofness(mechanism, instance, a, caps, **kw) for a in instance.agents]


def expected_misreports(instance: Instance, agent: AgentId) -> int:
    """Size of the default sweep, truthful report included."""
    d, s = len(instance.demand[agent]), len(instance.supply[agent])
    return 2 ** d * 2 ** s + (instance.m - d - s)


def tie_outcomes(
    instance: Instance | TradingGraph,
    *,
    perturbed: bool = True,
    cap: int = 100_000,
) -> tuple[int, set[tuple[tuple[ItemId, ...], ...]]]:
    """(number of maximum matchings, distinct per-agent received-item profiles)."""
    graph = instance if isinstance(instance, TradingGraph) else initial_graph(instance)
    h = build_perturbed_edge_graph(graph) if perturbed else build_edge_graph(graph)
    matchings = enumerate_max_weight_matchings(h, cap)
    profiles = set()
    for mt in matchings:
        ex = matching_to_execution(graph, mt)
        profiles.add(tuple(tuple(sorted(ex.received[a])) for a in graph.agents))
    return len(matchings), profiles


def audit_tie_consistency(instance: Instance | TradingGraph, *, perturbed: bool = True, cap: int = 100_000) -> bool:
    """True iff every maximum matching gives each agent the same items."""
    return len(tie_outcomes(instance, perturbed=perturbed, cap=cap)[1]) == 1


def tie_utilities(instance: Instance | TradingGraph, *, perturbed: bool = True, cap: int = 100_000) -> set[tuple[int, ...]]:
    """Distinct utility vectors over all maximum matchings."""
    return {tuple(len(r) for r in p) for p in tie_outcomes(instance, perturbed=perturbed, cap=cap)[1]}


ALGORITHMS: dict[str, Callable[[Instance], Execution]] = {
    "static": solve_static_optimal,
    "as": lambda inst: solve_As({a: (inst.demand[a], inst.supply[a]) for a in inst.agents}, inst),
    "greedy": greedy_dynamic,
}


def ratio_of(optimum: int, achieved: int) -> Fraction | float:
    """``optimum / achieved``; ``0/0`` is 1 and ``x/0`` is infinite."""
    if achieved == 0:
        return Fraction(1) if optimum == 0 else math.inf
    return Fraction(optimum, achieved)


def approximation_ratio(
    instance: Instance,
    algorithm: Callable[[Instance], Execution] | str,
    limits: SearchLimits | None = None,
) -> Fraction | float:
    """Exact optimum over the algorithm's welfare, as an exact fraction."""
    if isinstance(algorithm, str):
        algorithm = ALGORITHMS[algorithm]
    best = exact_dynamic_optimal(instance, limits, strict=True)
    return ratio_of(best.size, algorithm(instance).size)

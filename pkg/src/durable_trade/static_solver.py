"""Optimal static executions through edge-graph matchings.

Every trading-graph edge ``e`` becomes two nodes ``(e, 0)`` and ``(e, 1)``.
A node ``(e, 0)`` can be matched to its own copy (weight 0, edge unused) or
to ``(e', 1)`` for an edge ``e'`` that continues ``e`` (weight 1). Perfect
matchings then correspond to edge-disjoint cycle covers, and a maximum one
to an optimal static execution.

The tie-broken variant adds ``2**-rank`` to each continuation edge, where
``rank`` is the position of the agent-item pair of ``e`` in a fixed order.
All weights are scaled by ``2**(n*m)`` so they stay integers.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from typing import NamedTuple

from .assignment import BipartiteWeightedGraph, Matching, matching_from_pairs, max_weight_perfect_matching
from .model import (
    AgentId,
    BarterError,
    Cycle,
    Execution,
    Instance,
    InvalidCycleAt,
    ItemId,
    TradingGraph,
    graph_from_reports,
    initial_graph,
    replay,
)

Edge = tuple[str, str]
Report = tuple[Iterable[ItemId], Iterable[ItemId]]


class MalformedMatching(BarterError):
    pass


class NotStatic(BarterError):
    pass


class InvalidExecution(BarterError):
    pass


class InvalidReports(BarterError):
    pass


class EdgeNode(NamedTuple):
    edge: Edge
    side: int


@dataclass(frozen=True)
class PerturbationOrder:
    """Bijection from agent-item pairs onto ``1..n*m``."""

    rank: Mapping[tuple[AgentId, ItemId], int]

    def __post_init__(self):
        values = sorted(self.rank.values())
        if values != list(range(1, len(values) + 1)):
            raise BarterError("ranks must be exactly 1..n*m")

    @classmethod
    def canonical(cls, agents, items) -> PerturbationOrder:
        m = len(items)
        return cls({(a, j): ai * m + ji + 1 for ai, a in enumerate(agents) for ji, j in enumerate(items)})

    @classmethod
    def from_sequence(cls, pairs: Iterable[tuple[AgentId, ItemId]]) -> PerturbationOrder:
        return cls({p: k + 1 for k, p in enumerate(pairs)})


def agent_item_pair(graph: TradingGraph, edge: Edge) -> tuple[AgentId, ItemId]:
    if edge[0] in graph.agent_index:
        return edge[0], edge[1]
    return edge[1], edge[0]


def scale_bits(graph: TradingGraph) -> int:
    return len(graph.agents) * len(graph.items)


def _continuations(graph: TradingGraph) -> list[tuple[Edge, Edge]]:
    edges = graph.edges()
    out: dict[str, list[Edge]] = {}
    for e in edges:
        out.setdefault(e[0], []).append(e)
    return [(e, f) for e in edges for f in out.get(e[1], ())]


def _edge_graph(graph: TradingGraph, order: PerturbationOrder | None) -> BipartiteWeightedGraph:
    bits = scale_bits(graph)
    edges = graph.edges()
    weights = {(EdgeNode(e, 0), EdgeNode(e, 1)): 0 for e in edges}
    one = 1 << bits
    for e, f in _continuations(graph):
        w = one
        if order is not None:
            w += 1 << (bits - order.rank[agent_item_pair(graph, e)])
        weights[EdgeNode(e, 0), EdgeNode(f, 1)] = w
    return BipartiteWeightedGraph(
        tuple(EdgeNode(e, 0) for e in edges),
        tuple(EdgeNode(e, 1) for e in edges),
        weights,
        bits,
    )


def build_edge_graph(graph: TradingGraph) -> BipartiteWeightedGraph:
    """H(G): self-copies weigh 0, continuations weigh ``2**P`` (P = n*m)."""
    return _edge_graph(graph, None)


def build_perturbed_edge_graph(graph: TradingGraph, order: PerturbationOrder | None = None) -> BipartiteWeightedGraph:
    """H'(G): a continuation leaving ``e`` weighs ``2**P + 2**(P - rank(pair(e)))``.

    The rank is looked up by the agent-item pair of ``e`` whichever way ``e``
    points, so both the demand edge ``(i, j)`` and a supply edge ``(j, i)``
    would use ``rank((i, j))``.
    """
    if order is None:
        order = PerturbationOrder.canonical(graph.agents, graph.items)
    return _edge_graph(graph, order)


def _node_key(graph: TradingGraph, node: str):
    if node in graph.agent_index:
        return (0, graph.agent_index[node])
    return (1, graph.item_index[node])


def decompose_simple_cycles(graph: TradingGraph, edges: Iterable[Edge]) -> list[Cycle]:
    """Split a balanced edge set into simple cycles.

    Walks start from the first agent (canonical order) that still has unused
    out-edges and always take the first unused out-edge; a cycle is cut off
    as soon as the walk revisits a node on its current path.
    """
    out: dict[str, list[str]] = {}
    for u, v in edges:
        out.setdefault(u, []).append(v)
    for u in out:
        out[u].sort(key=lambda v: _node_key(graph, v), reverse=True)  # pop() takes the smallest
    cycles: list[Cycle] = []
    for start in graph.agents:
        while out.get(start):
            path = [start]
            pos = {start: 0}
            cur = start
            while out.get(cur):
                nxt = out[cur].pop()
                if nxt not in pos:
                    pos[nxt] = len(path)
                    path.append(nxt)
                    cur = nxt
                    continue
                cut = pos[nxt]
                loop = path[cut:]
                for node in loop[1:]:
                    del pos[node]
                del path[cut + 1:]
                k = next(i for i, x in enumerate(loop) if x in graph.agent_index)
                cycles.append(_rotate_min_agent(graph, Cycle.of(*loop[k:], *loop[:k])))
                cur = nxt
    return cycles


def _rotate_min_agent(graph: TradingGraph, cycle: Cycle) -> Cycle:
    ai = graph.agent_index
    k = min(range(len(cycle)), key=lambda t: ai[cycle.agents[t]])
    return Cycle(cycle.agents[k:] + cycle.agents[:k], cycle.items[k:] + cycle.items[:k])


def used_edges(matching: Matching) -> list[Edge]:
    """Edges whose copy ``(e, 0)`` is matched away from ``(e, 1)``."""
    return [u.edge for u, v in matching.pairs if u.side == 0 and v.edge != u.edge]


def matching_to_execution(graph: TradingGraph, matching: Matching) -> Execution:
    """Decode a perfect matching of H(G) or H'(G) into a static execution."""
    ec = used_edges(matching)
    indeg: dict[str, int] = {}
    outdeg: dict[str, int] = {}
    for u, v in ec:
        outdeg[u] = outdeg.get(u, 0) + 1
        indeg[v] = indeg.get(v, 0) + 1
    for node in set(indeg) | set(outdeg):
        if indeg.get(node, 0) != outdeg.get(node, 0):
            raise MalformedMatching(f"node {node!r} has unbalanced degree in the used edges")
    cycles = decompose_simple_cycles(graph, ec)
    try:
        return replay(graph, cycles)
    except InvalidCycleAt as exc:  # pragma: no cover - means a decoding bug
        raise MalformedMatching(str(exc)) from exc


def execution_to_matching(graph: TradingGraph, execution: Execution, *, perturbed: bool = False) -> Matching:
    """Encode a static execution as a perfect matching of H(G) (or H'(G))."""
    original = set(graph.demand_edges) | set(graph.supply_edges)
    seen: set[Edge] = set()
    pairs = []
    for cycle in execution.cycles:
        nodes = cycle.nodes()
        k = len(nodes)
        cyc_edges = [(nodes[t], nodes[(t + 1) % k]) for t in range(k)]
        for t, e in enumerate(cyc_edges):
            if e not in original:
                if e[0] in graph.item_index and (e[1], e[0]) in graph.demand_edges:
                    raise NotStatic(f"edge {e} only exists after ({e[1]}, {e[0]}) flips")
                raise InvalidExecution(f"edge {e} is not in the trading graph")
            if e in seen:
                raise NotStatic(f"edge {e} used twice")
            seen.add(e)
            pairs.append((EdgeNode(e, 0), EdgeNode(cyc_edges[(t + 1) % k], 1)))
    for e in graph.edges():
        if e not in seen:
            pairs.append((EdgeNode(e, 0), EdgeNode(e, 1)))
    h = build_perturbed_edge_graph(graph) if perturbed else build_edge_graph(graph)
    return matching_from_pairs(h, pairs)


def _as_graph(instance_or_graph: Instance | TradingGraph) -> TradingGraph:
    if isinstance(instance_or_graph, TradingGraph):
        return instance_or_graph
    return initial_graph(instance_or_graph)


def solve_static_optimal(instance_or_graph: Instance | TradingGraph) -> Execution:
    """An optimal static execution via a maximum matching of H(G)."""
    graph = _as_graph(instance_or_graph)
    return matching_to_execution(graph, max_weight_perfect_matching(build_edge_graph(graph)))


def solve_static_tiebroken(instance_or_graph: Instance | TradingGraph, order: PerturbationOrder | None = None) -> Execution:
    """Optimal static execution chosen through H'(G)."""
    graph = _as_graph(instance_or_graph)
    h = build_perturbed_edge_graph(graph, order)
    return matching_to_execution(graph, max_weight_perfect_matching(h))


def truthful_reports(instance: Instance) -> dict[AgentId, tuple[frozenset[ItemId], frozenset[ItemId]]]:
    return {a: (instance.demand[a], instance.supply[a]) for a in instance.agents}


def reversed_reports(reports: Mapping[AgentId, Report]) -> dict[AgentId, tuple[frozenset[ItemId], frozenset[ItemId]]]:
    return {a: (frozenset(s), frozenset(d)) for a, (d, s) in reports.items()}


def validate_reports(reports: Mapping[AgentId, Report], instance: Instance) -> dict[AgentId, tuple[frozenset, frozenset]]:
    """Normalise reports against the known universe.

    Declared supply must be part of what the agent really holds, since the
    operator knows ownership; declared demand may be any other item.
    """
    clean = {}
    items = set(instance.items)
    for a, (d, s) in reports.items():
        if a not in instance.agent_index:
            raise InvalidReports(f"report from unknown agent {a!r}")
        d, s = frozenset(d), frozenset(s)
        if not (d | s) <= items:
            raise InvalidReports(f"{a!r} reports unknown items {sorted((d | s) - items)}")
        if d & s:
            raise InvalidReports(f"{a!r} reports demanding items it supplies")
        if not s <= instance.supply[a]:
            raise InvalidReports(f"{a!r} claims items it does not own: {sorted(s - instance.supply[a])}")
        clean[a] = (d, s)
    if not instance.relaxed:
        claimed: dict[ItemId, AgentId] = {}
        for a in instance.agents:
            if a not in clean:
                continue
            for j in clean[a][1]:
                if j in claimed:
                    raise InvalidReports(f"{j!r} claimed by {claimed[j]!r} and {a!r}")
                claimed[j] = a
    return clean


def solve_As(
    reports: Mapping[AgentId, Report],
    instance: Instance,
    order: PerturbationOrder | None = None,
) -> Execution:
    """The strategyproof mechanism: tie-broken optimal static execution on reported sets.

    ``instance`` fixes the agent/item universe, canonical order and real
    ownership; agents absent from ``reports`` report truthfully.
    """
    clean = validate_reports(reports, instance)
    graph = graph_from_reports(instance, clean)
    return solve_static_tiebroken(graph, order)


def solve_As_truthful(instance: Instance) -> Execution:
    return solve_As(truthful_reports(instance), instance)

"""Reference answers computed without the package's solvers.

Cycles come from networkx; everything else is naive recursion.
"""

from __future__ import annotations

from functools import lru_cache

import networkx as nx

from durable_trade.model import Instance


def _digraph(edges) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_edges_from(edges)
    return g


def _cycle_edges(nodes: list[str]) -> frozenset[tuple[str, str]]:
    k = len(nodes)
    return frozenset((nodes[t], nodes[(t + 1) % k]) for t in range(k))


def start_edges(instance: Instance) -> tuple[frozenset, frozenset]:
    demand = frozenset((a, j) for a in instance.agents for j in instance.demand[a])
    supply = frozenset((j, a) for a in instance.agents for j in instance.supply[a])
    return demand, supply


def nx_cycles(demand, supply) -> list[list[str]]:
    return [list(c) for c in nx.simple_cycles(_digraph([*demand, *supply]))]


def brute_static_optimum(instance: Instance) -> int:
    """Largest total length of edge-disjoint simple cycles in the original graph."""
    demand, supply = start_edges(instance)
    cycles = [_cycle_edges(c) for c in nx_cycles(demand, supply)]
    cycles.sort(key=len, reverse=True)

    best = 0

    def rec(k: int, used: frozenset, total: int):
        nonlocal best
        if total > best:
            best = total
        if k == len(cycles):
            return
        c = cycles[k]
        if not (c & used):
            rec(k + 1, used | c, total + len(c) // 2)
        rec(k + 1, used, total)

    rec(0, frozenset(), 0)
    return best


def brute_dynamic_optimum(instance: Instance) -> int:
    """Plain memoised search over every cycle choice, no pruning at all."""

    @lru_cache(maxsize=None)
    def solve(demand: frozenset, supply: frozenset) -> int:
        best = 0
        for nodes in nx_cycles(demand, supply):
            edges = _cycle_edges(nodes)
            used_d = {e for e in edges if e in demand}
            nd = demand - used_d
            ns = (supply - edges) | {(j, a) for a, j in used_d}
            best = max(best, len(used_d) + solve(nd, ns))
        return best

    return solve(*start_edges(instance))


def count_perfect_matchings(left, right, edges) -> int:
    """Counts perfect matchings by expanding on the first left node."""
    adj = {u: [v for (x, v) in edges if x == u] for u in left}

    def rec(k: int, taken: frozenset) -> int:
        if k == len(left):
            return 1
        return sum(rec(k + 1, taken | {v}) for v in adj[left[k]] if v not in taken)

    return rec(0, frozenset())

"""Exact maximum-weight perfect matching on bipartite graphs.

Weights are Python integers, so nothing is ever rounded. The solver is the
shortest-augmenting-path form of the Hungarian method with dual potentials,
O(V^3). Two brute-force enumerators back it up in tests and audits.
"""

from __future__ import annotations

from collections.abc import Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass

from .model import BarterError

Node = Hashable


class NoPerfectMatching(BarterError):
    pass


class CapExceeded(BarterError):
    pass


@dataclass(frozen=True)
class BipartiteWeightedGraph:
    """Left/right node lists of equal length and integer edge weights.

    ``scale_bits`` records that weights were multiplied by ``2**scale_bits``
    so that fractional perturbations stay integral.
    """

    left: tuple[Node, ...]
    right: tuple[Node, ...]
    weights: Mapping[tuple[Node, Node], int]
    scale_bits: int = 0

    def __post_init__(self):
        if len(self.left) != len(self.right):
            raise BarterError("both sides need the same number of nodes")
        lset, rset = set(self.left), set(self.right)
        for (u, v), w in self.weights.items():
            if u not in lset or v not in rset:
                raise BarterError(f"edge ({u!r}, {v!r}) leaves the node sets")
            if w < 0:
                raise BarterError("weights must be nonnegative")

    @property
    def size(self) -> int:
        return len(self.left)

    def neighbours(self) -> dict[Node, list[tuple[Node, int]]]:
        """Left node -> [(right node, weight)] in right-node order."""
        ridx = {v: k for k, v in enumerate(self.right)}
        out: dict[Node, list[tuple[Node, int]]] = {u: [] for u in self.left}
        for (u, v), w in self.weights.items():
            out[u].append((v, w))
        for lst in out.values():
            lst.sort(key=lambda p: ridx[p[0]])
        return out


@dataclass(frozen=True)
class Matching:
    pairs: frozenset[tuple[Node, Node]]
    weight: int
    scale_bits: int = 0

    @property
    def unscaled_weight(self) -> int:
        """Integer part of the weight before scaling (floor)."""
        return self.weight >> self.scale_bits

    def mate(self) -> dict[Node, Node]:
        return dict(self.pairs)


def matching_from_pairs(graph: BipartiteWeightedGraph, pairs: Iterable[tuple[Node, Node]]) -> Matching:
    pairs = frozenset(pairs)
    lefts = [u for u, _ in pairs]
    rights = [v for _, v in pairs]
    if len(set(lefts)) != len(lefts) or len(set(rights)) != len(rights):
        raise BarterError("a node is matched twice")
    if set(lefts) != set(graph.left) or set(rights) != set(graph.right):
        raise BarterError("matching is not perfect")
    try:
        weight = sum(graph.weights[p] for p in pairs)
    except KeyError as exc:
        raise BarterError(f"pair {exc.args[0]!r} is not an edge") from None
    return Matching(pairs, weight, graph.scale_bits)


def max_weight_perfect_matching(graph: BipartiteWeightedGraph) -> Matching:
    """Maximum-weight perfect matching.

    Raises :class:`NoPerfectMatching` when the edges admit no perfect
    matching. Left nodes are inserted in order and ties go to the first
    right node, so the result is deterministic.
    """
    n = graph.size
    if n == 0:
        return Matching(frozenset(), 0, graph.scale_bits)
    ridx = {v: k for k, v in enumerate(graph.right)}
    lidx = {u: k for k, u in enumerate(graph.left)}
    top = max(graph.weights.values(), default=0)
    # Missing edges get a cost no perfect matching of real edges can reach.
    forbidden = (top + 1) * (n + 1)
    cost = [[forbidden] * (n + 1) for _ in range(n + 1)]
    for (u, v), w in graph.weights.items():
        cost[lidx[u] + 1][ridx[v] + 1] = top - w

    inf = float("inf")
    u_pot = [0] * (n + 1)
    v_pot = [0] * (n + 1)
    match_of_col = [0] * (n + 1)
    way = [0] * (n + 1)
    for row in range(1, n + 1):
        match_of_col[0] = row
        col0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[col0] = True
            r0 = match_of_col[col0]
            delta = inf
            col1 = 0
            crow = cost[r0]
            ur0 = u_pot[r0]
            for col in range(1, n + 1):
                if not used[col]:
                    cur = crow[col] - ur0 - v_pot[col]
                    if cur < minv[col]:
                        minv[col] = cur
                        way[col] = col0
                    if minv[col] < delta:
                        delta = minv[col]
                        col1 = col
            for col in range(n + 1):
                if used[col]:
                    u_pot[match_of_col[col]] += delta
                    v_pot[col] -= delta
                else:
                    minv[col] -= delta
            col0 = col1
            if match_of_col[col0] == 0:
                break
        while col0:
            col1 = way[col0]
            match_of_col[col0] = match_of_col[col1]
            col0 = col1

    pairs = []
    for col in range(1, n + 1):
        r = match_of_col[col]
        if cost[r][col] == forbidden:
            raise NoPerfectMatching("graph has no perfect matching")
        pairs.append((graph.left[r - 1], graph.right[col - 1]))
    return matching_from_pairs(graph, pairs)


def _enumerate(graph: BipartiteWeightedGraph, cap: int, prune: bool) -> list[Matching]:
    nbrs = graph.neighbours()
    order = sorted(graph.left, key=lambda u: len(nbrs[u]))  # most constrained first
    best_edge = {u: max((w for _, w in nbrs[u]), default=0) for u in order}
    # suffix[k] bounds the weight still obtainable from order[k:].
    suffix = [0] * (len(order) + 1)
    for k in range(len(order) - 1, -1, -1):
        suffix[k] = suffix[k + 1] + best_edge[order[k]]

    found: list[tuple[int, list[tuple[Node, Node]]]] = []
    best = [-1]
    taken: set[Node] = set()
    chosen: list[tuple[Node, Node]] = []

    def rec(k: int, acc: int):
        if prune and acc + suffix[k] < best[0]:
            return
        if k == len(order):
            if prune:
                if acc > best[0]:
                    best[0] = acc
                    found.clear()
                if acc < best[0]:
                    return
            found.append((acc, list(chosen)))
            if len(found) > cap:
                raise CapExceeded(f"more than {cap} matchings")
            return
        u = order[k]
        for v, w in nbrs[u]:
            if v in taken:
                continue
            taken.add(v)
            chosen.append((u, v))
            rec(k + 1, acc + w)
            chosen.pop()
            taken.discard(v)

    rec(0, 0)
    return [Matching(frozenset(p), w, graph.scale_bits) for w, p in found]


def enumerate_perfect_matchings(graph: BipartiteWeightedGraph, cap: int = 100_000) -> list[Matching]:
    """Every perfect matching with its exact weight; raises CapExceeded past ``cap``."""
    return _enumerate(graph, cap, prune=False)


def enumerate_max_weight_matchings(graph: BipartiteWeightedGraph, cap: int = 100_000) -> list[Matching]:
    """Every maximum-weight perfect matching, found by branch and bound.

    Independent of :func:`max_weight_perfect_matching`; it only uses the
    per-node best-edge bound.
    """
    return _enumerate(graph, cap, prune=True)


def complete_graph(weights: Sequence[Sequence[int]]) -> BipartiteWeightedGraph:
    """Square weight matrix -> complete bipartite graph on ``L0.. / R0..``."""
    n = len(weights)
    left = tuple(f"L{i}" for i in range(n))
    right = tuple(f"R{j}" for j in range(n))
    return BipartiteWeightedGraph(
        left, right, {(left[i], right[j]): weights[i][j] for i in range(n) for j in range(n)}
    )


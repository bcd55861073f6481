"""Dynamic executions: cycle enumeration, greedy rounds and exhaustive search.

The exhaustive search works on bit masks over a fixed edge universe: every
original demand edge, every original supply edge and the flipped copy of
each demand edge. Two facts keep it small:

* Strongly connected components of the trading graph only ever split. A
  flipped edge joins two nodes that were already on a common cycle, and
  every other change deletes edges. Edges between components are therefore
  dead for good and can be dropped.
* Once dead edges are gone, components evolve independently, so the optimum
  of a state is the sum of the optima of its components, each memoised on
  its own edge mask.
"""

from __future__ import annotations

import time
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .model import (
    AgentId,
    BarterError,
    Cycle,
    Execution,
    GeneralizedUtilityParams,
    Instance,
    TradingGraph,
    apply_cycle,
    initial_graph,
    replay,
    replay_relaxed,
)
from .static_solver import solve_static_optimal


class LimitExceeded(BarterError):
    """A search ran out of states or time; ``best`` holds the incumbent."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class SearchLimits:
    max_states: int = 1_000_000
    max_cycle_len: int | None = None
    time_budget: float | None = None  # seconds

    def __post_init__(self):
        if self.max_states < 1:
            raise BarterError("max_states must be at least 1")
        if self.max_cycle_len is not None and self.max_cycle_len < 1:
            raise BarterError("max_cycle_len must be at least 1")


@dataclass(frozen=True)
class SearchResult:
    execution: Execution
    optimal: bool
    states: int = 0

    @property
    def size(self) -> int:
        return self.execution.size

    @property
    def cycles(self) -> tuple[Cycle, ...]:
        return self.execution.cycles


class _Budget:
    def __init__(self, limits: SearchLimits):
        self.limits = limits
        self.states = 0
        self.deadline = None if limits.time_budget is None else time.monotonic() + limits.time_budget

    def tick(self):
        self.states += 1
        if self.states > self.limits.max_states:
            raise LimitExceeded(f"more than {self.limits.max_states} states")
        if self.deadline is not None and self.states % 256 in (0, 1) and time.monotonic() > self.deadline:
            raise LimitExceeded(f"time budget of {self.limits.time_budget}s spent")


# ---------------------------------------------------------------- cycles


def _scc(nodes: Sequence[int], succ: Mapping[int, Sequence[int]]) -> dict[int, int]:
    """Tarjan, iterative. Returns node -> component id."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    comp: dict[int, int] = {}
    stack: list[int] = []
    on_stack: set[int] = set()
    counter = 0
    ncomp = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ.get(root, ())))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            pushed = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ.get(w, ()))))
                    pushed = True
                    break
                if w in on_stack and index[w] < low[v]:
                    low[v] = index[w]
            if pushed:
                continue
            work.pop()
            if work and low[v] < low[work[-1][0]]:
                low[work[-1][0]] = low[v]
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
    return comp


def _johnson(succ: Mapping[int, Sequence[int]]) -> Iterator[list[int]]:
    """Johnson's circuit enumeration; each cycle starts at its smallest node."""
    for s in sorted(succ):
        sub = {u: [w for w in vs if w >= s] for u, vs in succ.items() if u >= s}
        comp = _scc(sorted(sub), sub)
        members = {u for u in sub if comp[u] == comp[s]}
        if len(members) < 2:
            continue
        blocked: set[int] = set()
        holds: dict[int, set[int]] = {}
        path = [s]

        def unblock(u: int):
            todo = [u]
            while todo:
                x = todo.pop()
                if x in blocked:
                    blocked.discard(x)
                    todo.extend(holds.pop(x, ()))

        def circuit(v: int):
            closed = False
            blocked.add(v)
            for w in sub[v]:
                if w not in members:
                    continue
                if w == s:
                    yield list(path)
                    closed = True
                elif w not in blocked:
                    path.append(w)
                    if (yield from circuit(w)):
                        closed = True
                    path.pop()
            if closed:
                unblock(v)
            else:
                for w in sub[v]:
                    if w in members:
                        holds.setdefault(w, set()).add(v)
            return closed

        yield from circuit(s)


def _bounded_cycles(succ: Mapping[int, Sequence[int]], max_nodes: int) -> Iterator[list[int]]:
    """Plain DFS over simple paths, cycles of at most ``max_nodes`` nodes."""
    for s in sorted(succ):
        path = [s]
        on_path = {s}

        def dfs(v: int):
            for w in succ.get(v, ()):
                if w == s:
                    yield list(path)
                elif w > s and w not in on_path and len(path) < max_nodes:
                    path.append(w)
                    on_path.add(w)
                    yield from dfs(w)
                    on_path.discard(w)
                    path.pop()

        yield from dfs(s)


def _cycles_of(succ: Mapping[int, Sequence[int]], max_cycle_len: int | None) -> Iterator[list[int]]:
    if max_cycle_len is None:
        return _johnson(succ)
    return _bounded_cycles(succ, 2 * max_cycle_len)


class _Indexer:
    """Agents get ids 0..n-1 and items n..n+m-1, so cycles start at an agent."""

    def __init__(self, graph: TradingGraph):
        self.graph = graph
        self.names = [*graph.agents, *graph.items]
        self.id = {x: k for k, x in enumerate(self.names)}

    def cycle(self, nodes: Sequence[int]) -> Cycle:
        return Cycle.of(*(self.names[v] for v in nodes))


def enumerate_simple_cycles(graph: TradingGraph | Instance, limits: SearchLimits | None = None) -> list[Cycle]:
    """Every simple alternating cycle of ``graph``.

    Cycles start at their first agent in canonical order and are sorted by
    their node sequence in canonical order. ``max_cycle_len`` (agents per
    cycle) drops longer cycles; ``max_states`` caps how many are listed.
    """
    if isinstance(graph, Instance):
        graph = initial_graph(graph)
    limits = limits or SearchLimits()
    ix = _Indexer(graph)
    succ: dict[int, list[int]] = {k: [] for k in range(len(ix.names))}
    for u, v in graph.edges():
        succ[ix.id[u]].append(ix.id[v])
    for vs in succ.values():
        vs.sort()
    found = []
    budget = _Budget(limits)
    for nodes in _cycles_of(succ, limits.max_cycle_len):
        budget.tick()
        found.append(nodes)
    found.sort()
    return [ix.cycle(c) for c in found]


# ---------------------------------------------------------------- greedy


def greedy_dynamic(instance: Instance | TradingGraph) -> Execution:
    """Run an optimal static execution, update the graph, repeat until stuck."""
    start = instance if isinstance(instance, TradingGraph) else initial_graph(instance)
    graph = start
    cycles: list[Cycle] = []
    while True:
        round_ = solve_static_optimal(graph)
        if round_.size == 0:
            break
        before = len(graph.demand_edges)
        for c in round_.cycles:
            graph = apply_cycle(graph, c)
        # every exchange burns a demand edge, so this loop ends
        assert len(graph.demand_edges) < before
        cycles.extend(round_.cycles)
    return replay(start, cycles)


# ---------------------------------------------------------------- exact search


class _EdgeSpace:
    """Fixed edge universe of a trading graph, addressed by bit position."""

    def __init__(self, graph: TradingGraph):
        self.ix = _Indexer(graph)
        nid = self.ix.id
        self.u: list[int] = []
        self.v: list[int] = []
        self.flip: list[int] = []  # demand edge -> its flipped id; -1 otherwise
        self.by_pair: dict[tuple[int, int], int] = {}
        demand = graph.sorted_demand_edges()
        for a, j in demand:
            self._add(nid[a], nid[j])
        for j, a in graph.sorted_supply_edges():
            self._add(nid[j], nid[a])
        for a, j in demand:
            e = self.by_pair[nid[a], nid[j]]
            key = (nid[j], nid[a])
            self.flip[e] = self.by_pair[key] if key in self.by_pair else self._add(*key)
        self.demand_mask = (1 << len(demand)) - 1
        self.start = (1 << (len(demand) + len(graph.supply_edges))) - 1
        self.n_agents = len(graph.agents)

    def _add(self, u: int, v: int) -> int:
        e = len(self.u)
        self.u.append(u)
        self.v.append(v)
        self.flip.append(-1)
        self.by_pair[u, v] = e
        return e

    def edges_of(self, mask: int) -> Iterator[int]:
        while mask:
            low = mask & -mask
            yield low.bit_length() - 1
            mask ^= low

    def components(self, mask: int) -> list[int]:
        """Split ``mask`` into per-SCC edge masks, dropping dead edges."""
        succ: dict[int, list[int]] = {}
        edges = list(self.edges_of(mask))
        for e in edges:
            succ.setdefault(self.u[e], []).append(self.v[e])
        comp = _scc(sorted(succ), succ)
        parts: dict[int, int] = {}
        for e in edges:
            cu = comp[self.u[e]]
            if cu == comp.get(self.v[e], -1):
                parts[cu] = parts.get(cu, 0) | (1 << e)
        return sorted(parts.values())

    def cycles(self, mask: int, max_cycle_len: int | None) -> Iterator[tuple[int, list[int]]]:
        """(edge mask, node list) for each simple cycle inside ``mask``."""
        succ: dict[int, list[int]] = {}
        for e in self.edges_of(mask):
            succ.setdefault(self.u[e], []).append(self.v[e])
            succ.setdefault(self.v[e], [])
        for vs in succ.values():
            vs.sort()
        for nodes in _cycles_of(succ, max_cycle_len):
            k = len(nodes)
            cmask = 0
            for t in range(k):
                cmask |= 1 << self.by_pair[nodes[t], nodes[(t + 1) % k]]
            yield cmask, nodes

    def step(self, mask: int, cmask: int) -> int:
        out = mask & ~cmask
        for e in self.edges_of(cmask & self.demand_mask):
            out |= 1 << self.flip[e]
        return out

    def demand_count(self, mask: int) -> int:
        return (mask & self.demand_mask).bit_count()


def _plan(space: _EdgeSpace, choice: Mapping[int, tuple[int, list[int]] | None], mask: int) -> list[list[int]]:
    """Rebuild the cycle sequence stored in ``choice`` for one component."""
    out: list[list[int]] = []
    todo = [mask]
    while todo:
        comp = todo.pop(0)
        pick = choice.get(comp)
        if pick is None:
            continue
        cmask, nodes = pick
        out.append(nodes)
        todo[:0] = space.components(space.step(comp, cmask))
    return out


def _as_graph(instance: Instance | TradingGraph) -> TradingGraph:
    return instance if isinstance(instance, TradingGraph) else initial_graph(instance)


def exact_dynamic_optimal(
    instance: Instance | TradingGraph,
    limits: SearchLimits | None = None,
    *,
    memo: bool = True,
    strict: bool = False,
) -> SearchResult:
    """A welfare-maximising execution by exhaustive search.

    Branches over the simple cycles of each live component, bounded by the
    number of demand edges still present. When a limit is hit the greedy
    execution is returned with ``optimal=False``; with ``strict`` a
    :class:`LimitExceeded` carrying that result is raised instead.
    """
    graph = _as_graph(instance)
    limits = limits or SearchLimits()
    space = _EdgeSpace(graph)
    budget = _Budget(limits)
    value: dict[int, int] = {}
    choice: dict[int, tuple[int, list[int]] | None] = {}

    def solve(comp: int) -> int:
        if memo and comp in value:
            return value[comp]
        budget.tick()
        bound = space.demand_count(comp)
        best, pick = 0, None
        for cmask, nodes in space.cycles(comp, limits.max_cycle_len):
            gain = len(nodes) // 2
            parts = space.components(space.step(comp, cmask))
            if gain + sum(space.demand_count(p) for p in parts) <= best:
                continue
            total = gain + sum(solve(p) for p in parts)
            if total > best:
                best, pick = total, (cmask, nodes)
                if best == bound:
                    break
        value[comp] = best
        choice[comp] = pick
        return best

    try:
        roots = space.components(space.start)
        for comp in roots:
            solve(comp)
    except LimitExceeded as exc:
        fallback = SearchResult(greedy_dynamic(graph), False, budget.states)
        if strict:
            raise LimitExceeded(str(exc), fallback) from None
        return fallback
    cycles = [space.ix.cycle(nodes) for comp in roots for nodes in _plan(space, choice, comp)]
    return SearchResult(replay(graph, cycles), True, budget.states)


# ---------------------------------------------------------------- Pareto


class ParetoVerdict(NamedTuple):
    efficient: bool
    witness: Execution | None


def _prune(front: dict[tuple[int, ...], list]) -> dict[tuple[int, ...], list]:
    keys = sorted(front, reverse=True)
    kept: list[tuple[int, ...]] = []
    for v in keys:
        if not any(all(a >= b for a, b in zip(w, v)) for w in kept):
            kept.append(v)
    return {v: front[v] for v in kept}


def utility_frontier(
    instance: Instance | TradingGraph,
    limits: SearchLimits | None = None,
) -> dict[tuple[int, ...], Execution]:
    """Pareto-maximal utility vectors over all executions, each with a witness.

    Vectors list utilities in canonical agent order.
    """
    graph = _as_graph(instance)
    limits = limits or SearchLimits()
    space = _EdgeSpace(graph)
    budget = _Budget(limits)
    n = len(graph.agents)
    zero = (0,) * n
    table: dict[int, dict[tuple[int, ...], list]] = {}

    def combine(parts: list[int]) -> dict[tuple[int, ...], list]:
        acc: dict[tuple[int, ...], list] = {zero: []}
        for p in parts:
            sub = frontier(p)
            acc = _prune({
                tuple(x + y for x, y in zip(v, w)): pv + pw
                for v, pv in acc.items() for w, pw in sub.items()
            })
        return acc

    def frontier(comp: int) -> dict[tuple[int, ...], list]:
        if comp in table:
            return table[comp]
        budget.tick()
        front: dict[tuple[int, ...], list] = {zero: []}
        for cmask, nodes in space.cycles(comp, limits.max_cycle_len):
            gain = [0] * n
            for a in nodes[0::2]:
                gain[a] += 1
            for v, plan in combine(space.components(space.step(comp, cmask))).items():
                key = tuple(g + x for g, x in zip(gain, v))
                if key not in front:
                    front[key] = [nodes, *plan]
            front = _prune(front)
        table[comp] = front
        return front

    final = combine(space.components(space.start))
    return {v: replay(graph, [space.ix.cycle(c) for c in plan]) for v, plan in final.items()}


def pareto_check(
    instance: Instance | TradingGraph,
    execution: Execution,
    limits: SearchLimits | None = None,
) -> ParetoVerdict:
    """Is ``execution`` Pareto efficient among all executions of ``instance``?

    If not, the witness is an execution that is at least as good for every
    agent and strictly better for one.
    """
    graph = _as_graph(instance)
    target = tuple(len(execution.received.get(a, ())) for a in graph.agents)
    for v, witness in utility_frontier(graph, limits).items():
        if v != target and all(x >= y for x, y in zip(v, target)):
            return ParetoVerdict(False, witness)
    return ParetoVerdict(True, None)


# ---------------------------------------------------------------- relaxed search


@dataclass(frozen=True)
class GeneralizedResult:
    execution: Execution
    welfare: Fraction
    optimal: bool
    states: int = 0


def exact_generalized_optimal(
    instance: Instance,
    params: GeneralizedUtilityParams,
    limits: SearchLimits | None = None,
    *,
    hop_budget: int | None = None,
) -> GeneralizedResult:
    """Maximise generalized welfare when agents may accept undemanded items.

    A relaxed cycle lets an agent receive any item it does not hold right
    now. Receipts along a demand edge score 1, a repeat of an item already
    demanded scores 0, anything else costs ``c``. At most ``hop_budget``
    (default: number of agents) relaxed receipts are allowed in total, which
    keeps the search finite even for ``c = 0``. Meant for small instances.
    """
    graph = initial_graph(instance)
    limits = limits or SearchLimits()
    budget = _Budget(limits)
    hops = instance.n if hop_budget is None else hop_budget
    ix = _Indexer(graph)
    n = instance.n
    agents, items = range(n), range(n, n + instance.m)
    wanted = {ix.id[a]: {ix.id[j] for j in instance.demand[a]} for a in instance.agents}
    c = params.c
    memo: dict[tuple[frozenset, frozenset, int], tuple[Fraction, tuple | None]] = {}

    def solve(demand: frozenset, supply: frozenset, left: int):
        key = (demand, supply, left)
        if key in memo:
            return memo[key][0]
        budget.tick()
        succ: dict[int, list[int]] = {v: [] for v in range(n + instance.m)}
        held = {(v, u) for u, v in supply}  # (agent, item)
        for j, a in supply:
            succ[j].append(a)
        for a in agents:
            for j in items:
                if (a, j) in demand or (left > 0 and (a, j) not in held):
                    succ[a].append(j)
        for vs in succ.values():
            vs.sort()
        best: Fraction = Fraction(0)
        pick = None
        for nodes in _cycles_of(succ, limits.max_cycle_len):
            k = len(nodes)
            used = [(nodes[t], nodes[t + 1]) for t in range(0, k, 2)]
            relaxed = [e for e in used if e not in demand]
            if len(relaxed) > left:
                continue
            gain = Fraction(len(used) - len(relaxed))
            gain -= c * sum(1 for a, j in relaxed if j not in wanted[a])
            gives = {(nodes[(t + 1) % k], nodes[(t + 2) % k]) for t in range(0, k, 2)}
            nd = demand - set(used)
            ns = (supply - gives) | {(j, a) for a, j in used}
            total = gain + solve(nd, ns, left - len(relaxed))
            if total > best:
                best, pick = total, (nodes, nd, ns, left - len(relaxed))
        memo[key] = (best, pick)
        return best

    d0 = frozenset((ix.id[a], ix.id[j]) for a, j in graph.demand_edges)
    s0 = frozenset((ix.id[j], ix.id[a]) for j, a in graph.supply_edges)
    total = solve(d0, s0, hops)
    cycles = []
    key = (d0, s0, hops)
    while memo[key][1] is not None:
        nodes, nd, ns, left = memo[key][1]
        cycles.append(ix.cycle(nodes))
        key = (nd, ns, left)
    return GeneralizedResult(replay_relaxed(graph, cycles), total, True, budget.states)

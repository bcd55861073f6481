"""Instances, trading graphs, cycle steps and executions.

Agents and items are plain string ids. Their canonical order is the order in
which they appear in the instance; every iteration and tie-break in the
package derives from it.

A trading graph has a demand edge ``(agent, item)`` for every item an agent
wants and a supply edge ``(item, agent)`` for every item an agent holds.
Executing a cycle flips its demand edges into supply edges and deletes its
supply edges.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

AgentId = str
ItemId = str


class BarterError(ValueError):
    """Base class for every error raised by this package."""


class PartitionViolation(BarterError):
    pass


class SelfDemand(BarterError):
    pass


class UnknownId(BarterError):
    pass


class UnknownAgent(UnknownId):
    pass


class DuplicateId(BarterError):
    pass


class InvalidCycle(BarterError):
    pass


class InvalidCycleAt(InvalidCycle):
    def __init__(self, index: int, reason: str):
        super().__init__(f"cycle {index}: {reason}")
        self.index = index
        self.reason = reason


@dataclass(frozen=True)
class Instance:
    """An exchange problem: who wants what and who holds what.

    ``relaxed`` instances may have items with zero or several owners. They
    arise from reversing an instance, from partial reports, and from the
    3D-matching reduction; graph-level algorithms accept them.
    """

    agents: tuple[AgentId, ...]
    items: tuple[ItemId, ...]
    demand: Mapping[AgentId, frozenset[ItemId]]
    supply: Mapping[AgentId, frozenset[ItemId]]
    relaxed: bool = False

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def m(self) -> int:
        return len(self.items)

    @property
    def l(self) -> int:  # noqa: E743
        """Largest demand set size (0 for an instance without demand)."""
        return max((len(d) for d in self.demand.values()), default=0)

    @cached_property
    def agent_index(self) -> dict[AgentId, int]:
        return {a: k for k, a in enumerate(self.agents)}

    @cached_property
    def item_index(self) -> dict[ItemId, int]:
        return {j: k for k, j in enumerate(self.items)}

    def owners(self, item: ItemId) -> list[AgentId]:
        return [a for a in self.agents if item in self.supply[a]]

    def sorted_items(self, items: Iterable[ItemId]) -> list[ItemId]:
        idx = self.item_index
        return sorted(items, key=idx.__getitem__)

    def total_demand(self) -> int:
        return sum(len(d) for d in self.demand.values())

    def with_sets(
        self,
        demand: Mapping[AgentId, Iterable[ItemId]] | None = None,
        supply: Mapping[AgentId, Iterable[ItemId]] | None = None,
        relaxed: bool | None = None,
    ) -> Instance:
        """Copy with some agents' sets replaced (unlisted agents keep theirs)."""
        d = dict(self.demand)
        s = dict(self.supply)
        d.update({a: frozenset(v) for a, v in (demand or {}).items()})
        s.update({a: frozenset(v) for a, v in (supply or {}).items()})
        return new_instance(
            self.agents, self.items, d, s,
            relaxed=self.relaxed if relaxed is None else relaxed,
        )


def new_instance(
    agents: Sequence[AgentId],
    items: Sequence[ItemId],
    demand: Mapping[AgentId, Iterable[ItemId]],
    supply: Mapping[AgentId, Iterable[ItemId]],
    *,
    relaxed: bool = False,
) -> Instance:
    """Validate raw sets and build an :class:`Instance`.

    Agents missing from ``demand``/``supply`` get empty sets. Unless
    ``relaxed`` is set, every item must have exactly one owner.
    """
    agents = tuple(agents)
    items = tuple(items)
    if len(set(agents)) != len(agents):
        raise DuplicateId("duplicate agent id")
    if len(set(items)) != len(items):
        raise DuplicateId("duplicate item id")
    if set(agents) & set(items):
        raise DuplicateId(f"ids used as both agent and item: {sorted(set(agents) & set(items))}")

    known_agents = set(agents)
    known_items = set(items)
    for label, sets in (("demand", demand), ("supply", supply)):
        for a, its in sets.items():
            if a not in known_agents:
                raise UnknownId(f"{label} set given for unknown agent {a!r}")
            missing = set(its) - known_items
            if missing:
                raise UnknownId(f"{label} of {a!r} names unknown items {sorted(missing)}")

    d = {a: frozenset(demand.get(a, ())) for a in agents}
    s = {a: frozenset(supply.get(a, ())) for a in agents}
    for a in agents:
        both = d[a] & s[a]
        if both:
            raise SelfDemand(f"agent {a!r} demands items it owns: {sorted(both)}")

    if not relaxed:
        owner_count = {j: 0 for j in items}
        for a in agents:
            for j in s[a]:
                owner_count[j] += 1
        bad = [j for j in items if owner_count[j] != 1]
        if bad:
            j = bad[0]
            raise PartitionViolation(f"item {j!r} has {owner_count[j]} owners")
    return Instance(agents, items, d, s, relaxed)


def reverse_instance(instance: Instance) -> Instance:
    """Swap every agent's demand and supply sets.

    The result is always relaxed: several agents may have demanded the same
    item, and they all own it after the swap.
    """
    return Instance(
        instance.agents,
        instance.items,
        dict(instance.supply),
        dict(instance.demand),
        relaxed=True,
    )


@dataclass(frozen=True)
class TradingGraph:
    agents: tuple[AgentId, ...]
    items: tuple[ItemId, ...]
    demand_edges: frozenset[tuple[AgentId, ItemId]]
    supply_edges: frozenset[tuple[ItemId, AgentId]]

    @cached_property
    def agent_index(self) -> dict[AgentId, int]:
        return {a: k for k, a in enumerate(self.agents)}

    @cached_property
    def item_index(self) -> dict[ItemId, int]:
        return {j: k for k, j in enumerate(self.items)}

    @property
    def num_edges(self) -> int:
        return len(self.demand_edges) + len(self.supply_edges)

    def sorted_demand_edges(self) -> list[tuple[AgentId, ItemId]]:
        ai, ji = self.agent_index, self.item_index
        return sorted(self.demand_edges, key=lambda e: (ai[e[0]], ji[e[1]]))

    def sorted_supply_edges(self) -> list[tuple[ItemId, AgentId]]:
        ai, ji = self.agent_index, self.item_index
        return sorted(self.supply_edges, key=lambda e: (ji[e[0]], ai[e[1]]))

    def edges(self) -> list[tuple[str, str]]:
        """All edges in canonical order: demand edges first, then supply edges."""
        return [*self.sorted_demand_edges(), *self.sorted_supply_edges()]

    def is_demand(self, edge: tuple[str, str]) -> bool:
        return edge in self.demand_edges

    def reversed(self) -> TradingGraph:
        return TradingGraph(
            self.agents,
            self.items,
            frozenset((a, j) for j, a in self.supply_edges),
            frozenset((j, a) for a, j in self.demand_edges),
        )


def initial_graph(instance: Instance) -> TradingGraph:
    return TradingGraph(
        instance.agents,
        instance.items,
        frozenset((a, j) for a in instance.agents for j in instance.demand[a]),
        frozenset((j, a) for a in instance.agents for j in instance.supply[a]),
    )


def graph_from_reports(
    instance: Instance,
    reports: Mapping[AgentId, tuple[Iterable[ItemId], Iterable[ItemId]]],
) -> TradingGraph:
    """Trading graph induced by declared ``(demand, supply)`` pairs.

    Agents missing from ``reports`` are treated as reporting truthfully.
    No ownership check is made here; callers validate reports.
    """
    demand = set()
    supply = set()
    for a in instance.agents:
        d, s = reports.get(a, (instance.demand[a], instance.supply[a]))
        demand.update((a, j) for j in d)
        supply.update((j, a) for j in s)
    return TradingGraph(instance.agents, instance.items, frozenset(demand), frozenset(supply))


@dataclass(frozen=True, eq=False)
class Cycle:
    """An alternating cycle ``a_1, j_1, a_2, j_2, ..., a_k, j_k`` (closing to ``a_1``).

    Agent ``a_t`` receives ``j_t`` from ``a_{t+1}``. Equality ignores rotation.
    """

    agents: tuple[AgentId, ...]
    items: tuple[ItemId, ...]

    def __post_init__(self):
        if len(self.agents) != len(self.items) or not self.agents:
            raise InvalidCycle("a cycle needs k >= 1 agents and exactly k items")

    @classmethod
    def of(cls, *nodes: str) -> Cycle:
        """Build from an alternating node list, e.g. ``Cycle.of("b", "y", "c", "x", "b")``.

        Repeating the first agent at the end is optional.
        """
        seq = list(nodes)
        if len(seq) > 2 and len(seq) % 2 == 1 and seq[0] == seq[-1]:
            seq.pop()
        if len(seq) % 2:
            raise InvalidCycle(f"alternation broken in {nodes}")
        return cls(tuple(seq[0::2]), tuple(seq[1::2]))

    def __len__(self) -> int:
        return len(self.agents)

    def nodes(self) -> list[str]:
        out = []
        for a, j in zip(self.agents, self.items):
            out += [a, j]
        return out

    def demand_edges(self) -> list[tuple[AgentId, ItemId]]:
        return list(zip(self.agents, self.items))

    def supply_edges(self) -> list[tuple[ItemId, AgentId]]:
        k = len(self.agents)
        return [(self.items[t], self.agents[(t + 1) % k]) for t in range(k)]

    def receipts(self) -> list[tuple[AgentId, ItemId]]:
        """(receiver, item) pairs."""
        return self.demand_edges()

    def gifts(self) -> list[tuple[AgentId, ItemId]]:
        """(giver, item) pairs."""
        return [(a, j) for j, a in self.supply_edges()]

    def _key(self) -> tuple[str, ...]:
        k = self.agents.index(min(self.agents))
        return (*self.agents[k:], *self.agents[:k], *self.items[k:], *self.items[:k])

    def __eq__(self, other):
        if not isinstance(other, Cycle):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return "Cycle(" + ",".join([*self.nodes(), self.agents[0]]) + ")"


def check_cycle(graph: TradingGraph, cycle: Cycle, *, relaxed: bool = False) -> str | None:
    """Return why ``cycle`` cannot run on ``graph``, or None if it can.

    In relaxed mode a receipt needs no demand edge, only that the receiver
    does not already hold the item.
    """
    if len(set(cycle.agents)) != len(cycle.agents) or len(set(cycle.items)) != len(cycle.items):
        return "repeated node"
    ai, ji = graph.agent_index, graph.item_index
    for a in cycle.agents:
        if a not in ai:
            return f"unknown agent {a!r}"
    for j in cycle.items:
        if j not in ji:
            return f"unknown item {j!r}"
    for a, j in cycle.demand_edges():
        if (a, j) in graph.demand_edges:
            continue
        if relaxed and (j, a) not in graph.supply_edges:
            continue
        return f"missing demand edge ({a}, {j})"
    for j, a in cycle.supply_edges():
        if (j, a) not in graph.supply_edges:
            return f"missing supply edge ({j}, {a})"
    return None


def apply_cycle(graph: TradingGraph, cycle: Cycle, *, relaxed: bool = False) -> TradingGraph:
    """Execute one cycle step and return the resulting graph."""
    reason = check_cycle(graph, cycle, relaxed=relaxed)
    if reason is not None:
        raise InvalidCycle(reason)
    used_demand = set(cycle.demand_edges())
    return TradingGraph(
        graph.agents,
        graph.items,
        graph.demand_edges - used_demand,
        (graph.supply_edges - set(cycle.supply_edges())) | {(j, a) for a, j in used_demand},
    )


@dataclass(frozen=True)
class Execution:
    """A validated sequence of cycle steps with per-agent ledgers.

    ``undemanded`` lists receipts that were not backed by a demand edge; it
    is only ever non-empty for executions built by :func:`replay_relaxed`.
    """

    cycles: tuple[Cycle, ...]
    received: Mapping[AgentId, tuple[ItemId, ...]]
    given: Mapping[AgentId, tuple[ItemId, ...]]
    undemanded: Mapping[AgentId, tuple[ItemId, ...]] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return sum(len(c) for c in self.cycles)

    def __len__(self) -> int:
        return self.size

    def utilities(self) -> dict[AgentId, int]:
        return {a: len(r) for a, r in self.received.items()}


def _ledgers(agents: Sequence[AgentId], cycles: Sequence[Cycle]):
    received: dict[AgentId, list[ItemId]] = {a: [] for a in agents}
    given: dict[AgentId, list[ItemId]] = {a: [] for a in agents}
    for c in cycles:
        for a, j in c.receipts():
            received[a].append(j)
        for a, j in c.gifts():
            given[a].append(j)
    return received, given


def execution_from_cycles(
    agents: Sequence[AgentId],
    cycles: Sequence[Cycle],
    undemanded: Mapping[AgentId, Sequence[ItemId]] | None = None,
) -> Execution:
    """Assemble ledgers for cycles already known to be valid."""
    received, given = _ledgers(agents, cycles)
    return Execution(
        tuple(cycles),
        {a: tuple(v) for a, v in received.items()},
        {a: tuple(v) for a, v in given.items()},
        {a: tuple(v) for a, v in (undemanded or {}).items() if v},
    )


def _replay(start: TradingGraph, cycles: Sequence[Cycle], relaxed: bool):
    graph = start
    undemanded: dict[AgentId, list[ItemId]] = {}
    for index, cycle in enumerate(cycles):
        reason = check_cycle(graph, cycle, relaxed=relaxed)
        if reason is not None:
            raise InvalidCycleAt(index, reason)
        for a, j in cycle.demand_edges():
            if (a, j) not in graph.demand_edges:
                undemanded.setdefault(a, []).append(j)
        graph = apply_cycle(graph, cycle, relaxed=relaxed)
    return execution_from_cycles(start.agents, cycles, undemanded), graph


def replay(instance: Instance | TradingGraph, cycles: Sequence[Cycle]) -> Execution:
    """Validate ``cycles`` step by step from the initial graph.

    Raises :class:`InvalidCycleAt` naming the first cycle that cannot run.
    """
    start = instance if isinstance(instance, TradingGraph) else initial_graph(instance)
    return _replay(start, cycles, relaxed=False)[0]


def replay_relaxed(instance: Instance | TradingGraph, cycles: Sequence[Cycle]) -> Execution:
    """Like :func:`replay`, but agents may receive items they do not demand."""
    start = instance if isinstance(instance, TradingGraph) else initial_graph(instance)
    return _replay(start, cycles, relaxed=True)[0]


def final_graph(instance: Instance | TradingGraph, cycles: Sequence[Cycle], *, relaxed: bool = False) -> TradingGraph:
    start = instance if isinstance(instance, TradingGraph) else initial_graph(instance)
    return _replay(start, cycles, relaxed=relaxed)[1]


def utility(execution: Execution, agent: AgentId) -> int:
    if agent not in execution.received:
        raise UnknownAgent(agent)
    return len(execution.received[agent])


def social_welfare(execution: Execution) -> int:
    return sum(len(r) for r in execution.received.values())


def true_utility(instance: Instance, execution: Execution, agent: AgentId) -> int:
    """Utility measured against the agent's true sets.

    An agent that received an item outside its true demand set, or gave an
    item outside its true supply set, scores ``-n*m``.
    """
    if agent not in instance.agent_index:
        raise UnknownAgent(agent)
    got = execution.received.get(agent, ())
    gave = execution.given.get(agent, ())
    if any(j not in instance.demand[agent] for j in got) or any(
        j not in instance.supply[agent] for j in gave
    ):
        return -instance.n * instance.m
    return len(got)


@dataclass(frozen=True)
class GeneralizedUtilityParams:
    """Penalty ``c`` charged per undemanded item received."""

    c: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "c", Fraction(self.c))
        if self.c < 0:
            raise BarterError("penalty c must be nonnegative")


def generalized_utility(
    instance: Instance,
    received: Sequence[ItemId],
    agent: AgentId,
    params: GeneralizedUtilityParams,
) -> Fraction:
    if agent not in instance.agent_index:
        raise UnknownAgent(agent)
    unknown = set(received) - set(instance.items)
    if unknown:
        raise UnknownId(f"unknown items {sorted(unknown)}")
    wanted = instance.demand[agent]
    hits = len(wanted & set(received))
    misses = sum(1 for j in received if j not in wanted)
    return hits - params.c * misses


def generalized_welfare(
    instance: Instance,
    execution_or_allocation: Execution | Mapping[AgentId, Sequence[ItemId]],
    params: GeneralizedUtilityParams,
) -> Fraction:
    """Sum over agents of ``|D_i & A_i| - c * |A_i - D_i|``, exactly."""
    if isinstance(execution_or_allocation, Execution):
        allocation = execution_or_allocation.received
    else:
        allocation = execution_or_allocation
    for a in allocation:
        if a not in instance.agent_index:
            raise UnknownAgent(a)
    return sum(
        (generalized_utility(instance, allocation.get(a, ()), a, params) for a in instance.agents),
        Fraction(0),
    )

from __future__ import annotations

from fractions import Fraction

import pytest
from conftest import small_instances
from hypothesis import given, settings

from durable_trade.dynamic import enumerate_simple_cycles
from durable_trade.instances import gen_utility_path, utility_path_cycle
from durable_trade.model import (
    BarterError,
    Cycle,
    DuplicateId,
    GeneralizedUtilityParams,
    InvalidCycle,
    InvalidCycleAt,
    PartitionViolation,
    SelfDemand,
    UnknownAgent,
    UnknownId,
    apply_cycle,
    generalized_utility,
    generalized_welfare,
    initial_graph,
    new_instance,
    replay,
    replay_relaxed,
    reverse_instance,
    social_welfare,
    true_utility,
    utility,
)

C1 = Cycle.of("b", "y", "c", "x", "b")
C2 = Cycle.of("a", "x", "c", "z", "a")
STATIC = Cycle.of("a", "x", "b", "y", "c", "z", "a")


class TestInstance:
    def test_fig1_validates(self, fig1):
        assert fig1.n == 3 and fig1.m == 3 and fig1.l == 2
        assert fig1.demand["c"] == {"x", "z"}

    def test_empty(self):
        inst = new_instance([], [], {}, {})
        assert inst.n == 0 and inst.l == 0
        assert initial_graph(inst).num_edges == 0

    def test_two_owners(self):
        with pytest.raises(PartitionViolation):
            new_instance(["a", "b"], ["x"], {}, {"a": ["x"], "b": ["x"]})

    def test_unowned_item(self):
        with pytest.raises(PartitionViolation):
            new_instance(["a"], ["x"], {}, {})

    def test_self_demand(self):
        with pytest.raises(SelfDemand):
            new_instance(["a"], ["x"], {"a": ["x"]}, {"a": ["x"]})

    def test_unknown_ids(self):
        with pytest.raises(UnknownId):
            new_instance(["a"], ["x"], {"a": ["q"]}, {"a": ["x"]})
        with pytest.raises(UnknownId):
            new_instance(["a"], ["x"], {"zz": ["x"]}, {"a": ["x"]})

    def test_duplicates(self):
        with pytest.raises(DuplicateId):
            new_instance(["a", "a"], [], {}, {})
        with pytest.raises(DuplicateId):
            new_instance(["a"], ["a"], {}, {"a": ["a"]})

    def test_errors_are_value_errors(self):
        assert issubclass(PartitionViolation, ValueError)
        assert issubclass(InvalidCycleAt, BarterError)

    def test_relaxed_allows_multiple_owners(self):
        inst = new_instance(["a", "b"], ["x"], {}, {"a": ["x"], "b": ["x"]}, relaxed=True)
        assert inst.owners("x") == ["a", "b"]


class TestGraph:
    def test_fig1_edges(self, fig1):
        g = initial_graph(fig1)
        assert len(g.demand_edges) == 4 and len(g.supply_edges) == 3
        assert g.edges()[:4] == [("a", "x"), ("b", "y"), ("c", "x"), ("c", "z")]

    def test_reverse_swaps_directions(self, fig1):
        rev = reverse_instance(fig1)
        assert rev.demand["a"] == {"z"} and rev.supply["a"] == {"x"}
        assert rev.relaxed
        assert initial_graph(rev) == initial_graph(fig1).reversed()

    def test_reverse_is_involution(self, fig1):
        twice = reverse_instance(reverse_instance(fig1))
        assert twice.demand == fig1.demand and twice.supply == fig1.supply


class TestCycleStep:
    def test_fig1_sequence(self, fig1):
        g1 = apply_cycle(initial_graph(fig1), C1)
        assert ("c", "x") not in g1.demand_edges
        assert ("x", "c") in g1.supply_edges
        assert ("y", "c") not in g1.supply_edges
        g2 = apply_cycle(g1, C2)
        assert enumerate_simple_cycles(g2) == []

    def test_twice_fails(self, fig1):
        g1 = apply_cycle(initial_graph(fig1), C1)
        with pytest.raises(InvalidCycle):
            apply_cycle(g1, C1)

    def test_repeated_node(self, fig1):
        with pytest.raises(InvalidCycle, match="repeated"):
            apply_cycle(initial_graph(fig1), Cycle(("a", "a"), ("x", "y")))

    def test_alternation(self):
        with pytest.raises(InvalidCycle):
            Cycle.of("a", "x", "b")

    def test_rotation_equality(self):
        assert C1 == Cycle.of("c", "x", "b", "y")
        assert hash(C1) == hash(Cycle.of("c", "x", "b", "y"))
        assert C1 != Cycle.of("b", "x", "c", "y")


class TestReplay:
    def test_fig1_dynamic(self, fig1):
        ex = replay(fig1, [C1, C2])
        assert ex.size == 4
        assert ex.received == {"a": ("x",), "b": ("y",), "c": ("x", "z")}
        assert [utility(ex, a) for a in "abc"] == [1, 1, 2]
        assert social_welfare(ex) == 4

    def test_static_cycle(self, fig1):
        assert social_welfare(replay(fig1, [STATIC])) == 3

    def test_empty(self, fig1):
        ex = replay(fig1, [])
        assert ex.size == 0 and all(v == 0 for v in ex.utilities().values())

    def test_wrong_order(self, fig1):
        with pytest.raises(InvalidCycleAt) as info:
            replay(fig1, [C2])
        assert info.value.index == 0
        with pytest.raises(InvalidCycleAt) as info:
            replay(fig1, [C1, C1])
        assert info.value.index == 1

    def test_unknown_agent(self, fig1):
        with pytest.raises(UnknownAgent):
            utility(replay(fig1, []), "nobody")

    def test_true_utility_penalty(self, fig1):
        ex = replay_relaxed(fig1, [Cycle.of("a", "x", "b", "z")])
        assert ex.undemanded == {"b": ("z",)}
        assert true_utility(fig1, ex, "a") == 1
        assert true_utility(fig1, ex, "b") == -9


class TestGeneralized:
    def test_path_closing_cycle(self):
        inst = gen_utility_path(3)
        cycle = utility_path_cycle(3)
        with pytest.raises(InvalidCycleAt):
            replay(inst, [cycle])
        ex = replay_relaxed(inst, [cycle])
        assert generalized_welfare(inst, ex, GeneralizedUtilityParams(1)) == 1
        assert generalized_welfare(inst, ex, GeneralizedUtilityParams(Fraction(1, 3))) == Fraction(5, 3)

    def test_zero_penalty(self, fig1):
        params = GeneralizedUtilityParams(0)
        assert generalized_utility(fig1, ["x", "y"], "a", params) == 1

    def test_matches_welfare_on_valid_execution(self, fig1):
        ex = replay(fig1, [C1, C2])
        assert generalized_welfare(fig1, ex, GeneralizedUtilityParams(Fraction(7, 2))) == 4

    def test_errors(self, fig1):
        with pytest.raises(BarterError):
            GeneralizedUtilityParams(-1)
        with pytest.raises(UnknownId):
            generalized_welfare(fig1, {"a": ["nope"]}, GeneralizedUtilityParams(1))
        with pytest.raises(UnknownId):
            generalized_welfare(fig1, {"q": []}, GeneralizedUtilityParams(1))


@settings(max_examples=60, deadline=None)
@given(small_instances())
def test_step_invariants(inst):
    g = initial_graph(inst)
    cycles = []
    while True:
        options = enumerate_simple_cycles(g)
        if not options:
            break
        c = options[len(cycles) % len(options)]
        nxt = apply_cycle(g, c)
        assert nxt.num_edges == g.num_edges - len(c)
        owners = [j for j, _ in nxt.supply_edges]
        assert len(owners) == len(set(owners))
        assert not any((j, a) in nxt.supply_edges for a, j in nxt.demand_edges)
        cycles.append(c)
        g = nxt
    ex = replay(inst, cycles)
    assert ex == replay(inst, cycles)
    assert ex.size == sum(map(len, ex.received.values())) == sum(map(len, ex.given.values()))
    assert social_welfare(ex) == ex.size

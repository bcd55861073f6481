from __future__ import annotations

import math
from fractions import Fraction

import pytest
from conftest import small_instances
from hypothesis import given, settings

from durable_trade.assignment import CapExceeded
from durable_trade.audit import (
    approximation_ratio,
    audit_all_agents,
    audit_strategyproofness,
    audit_tie_consistency,
    expected_misreports,
    mechanism_as,
    mechanism_static,
    misreport_space,
    ratio_of,
    tie_outcomes,
)
from durable_trade.dynamic import LimitExceeded, SearchLimits
from durable_trade.instances import gen_claim32, gen_greedy_family, gen_thm41
from durable_trade.model import new_instance, true_utility
from durable_trade.static_solver import truthful_reports


class TestSweep:
    def test_fig1_truthful_is_best(self, fig1):
        for rep in audit_all_agents("as", fig1):
            assert rep.gain <= 0
            assert rep.misreports_tried == expected_misreports(fig1, rep.agent)
            assert rep.monotonicity_violations == 0

    def test_fig1_counts(self, fig1):
        # c: D={x,z}, S={y}; no foreign items left
        assert expected_misreports(fig1, "c") == 8
        # a: D={x}, S={z}; y is foreign
        assert expected_misreports(fig1, "a") == 5

    def test_space_is_complete_and_distinct(self, fig1):
        space = list(misreport_space(fig1, "a"))
        assert space[0] == (frozenset({"x"}), frozenset({"z"}))
        assert len(space) == len(set(space)) == 5
        assert (frozenset({"x", "y"}), frozenset({"z"})) in space

    def test_full_supersets(self, fig1):
        space = list(misreport_space(fig1, "a", full_supersets=True))
        assert len(space) == len(set(space)) == 8
        rep = audit_strategyproofness("as", fig1, "a", full_supersets=True)
        assert rep.misreports_tried == 8 and rep.gain <= 0

    def test_cap(self, fig1):
        with pytest.raises(CapExceeded):
            audit_strategyproofness("as", fig1, "c", caps=2)

    def test_unknown_agent(self, fig1):
        with pytest.raises(KeyError):
            audit_strategyproofness("as", fig1, "q")

    def test_custom_mechanism(self, fig1):
        calls = []

        def nothing(reports, inst):
            calls.append(reports)
            return mechanism_as({a: (frozenset(), frozenset()) for a in inst.agents}, inst)

        rep = audit_strategyproofness(nothing, fig1, "b")
        assert rep.gain == 0 and rep.truthful_utility == 0
        assert len(calls) == rep.misreports_tried

    def test_static_mechanism_runs_on_lower_bound_family(self):
        # tie-breaking here is the matcher's, so the outcome is only illustrative
        inst = gen_thm41(2, 2)
        reps = audit_all_agents(mechanism_static, inst)
        assert len(reps) == inst.n


@settings(max_examples=40, deadline=None)
@given(small_instances(max_agents=3, max_items=4, max_demand=2))
def test_as_is_strategyproof_on_small_instances(inst):
    for rep in audit_all_agents("as", inst):
        assert rep.gain <= 0
        assert rep.monotonicity_violations == 0


@settings(max_examples=40, deadline=None)
@given(small_instances(max_agents=3, max_items=4, max_demand=2))
def test_unused_report_items_do_not_matter(inst):
    """Dropping items an agent neither got nor gave leaves its utility alone."""
    truth = truthful_reports(inst)
    ex = mechanism_as(truth, inst)
    for a in inst.agents:
        got, gave = set(ex.received[a]), set(ex.given[a])
        trimmed = {**truth, a: (frozenset(got), frozenset(gave))}
        again = mechanism_as(trimmed, inst)
        assert true_utility(inst, again, a) == true_utility(inst, ex, a)


class TestTies:
    def test_plain_ties_differ(self):
        inst = new_instance(
            ["a", "b", "c"], ["x", "y", "z"],
            {"a": ["z"], "b": ["z"], "c": ["x", "y"]},
            {"a": ["x"], "b": ["y"], "c": ["z"]},
        )
        count, profiles = tie_outcomes(inst, perturbed=False)
        assert count == 2 and len(profiles) == 2
        count, profiles = tie_outcomes(inst)
        assert count == 1 and len(profiles) == 1

    def test_empty(self):
        assert audit_tie_consistency(new_instance(["a"], [], {}, {}))

    @settings(max_examples=40, deadline=None)
    @given(small_instances(max_agents=3, max_items=4))
    def test_perturbed_always_consistent(self, inst):
        assert audit_tie_consistency(inst)


class TestRatio:
    def test_conventions(self):
        assert ratio_of(0, 0) == 1
        assert ratio_of(3, 0) == math.inf
        assert ratio_of(6, 4) == Fraction(3, 2)

    def test_fig1(self, fig1):
        assert approximation_ratio(fig1, "static") == Fraction(4, 3)
        assert approximation_ratio(fig1, "greedy") == Fraction(4, 3)  # greedy opens with the static cycle
        assert approximation_ratio(fig1, lambda inst: mechanism_as(truthful_reports(inst), inst)) == Fraction(4, 3)

    def test_claim_family(self):
        assert approximation_ratio(gen_claim32(3), "as") == 3

    def test_limit_is_loud(self):
        with pytest.raises(LimitExceeded):
            approximation_ratio(gen_greedy_family(2, 2), "static", SearchLimits(max_states=1))

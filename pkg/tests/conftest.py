from __future__ import annotations

import sys
from collections.abc import Iterator
from itertools import combinations, product
from pathlib import Path

import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from durable_trade.instances import ThreeDMInstance, gen_random, tdm  # noqa: E402
from durable_trade.model import Instance, new_instance  # noqa: E402


def duality_instances() -> list[Instance]:
    """50 seeded instances, at most 5 agents, 5 items, density at most 0.6."""
    out = []
    for seed in range(50):
        n = 2 + seed % 4
        m = 2 + (seed // 4) % 4
        density = (0.3, 0.45, 0.6)[seed % 3]
        out.append(gen_random(n, m, density, seed))
    return out


def sp_instances() -> list[Instance]:
    """25 seeded instances whose demand and supply sets have at most 3 items."""
    out = []
    for seed in range(25):
        n = 2 + seed % 4
        m = min(3 * n, 3 + seed % 4)
        out.append(gen_random(n, m, 0.6, 1000 + seed, max_demand=3))
    return out


def reduction_cases() -> Iterator[ThreeDMInstance]:
    """Every 3DM instance with n <= 2 and |T| <= 5."""
    yield tdm(1, [])
    yield tdm(1, [(1, 1, 1)])
    every = list(product((1, 2), repeat=3))
    for size in range(6):
        for subset in combinations(every, size):
            yield tdm(2, subset)


@st.composite
def small_instances(draw, max_agents: int = 4, max_items: int = 4, max_demand: int = 3) -> Instance:
    n = draw(st.integers(1, max_agents))
    m = draw(st.integers(0, max_items))
    agents = [f"a{k}" for k in range(n)]
    items = [f"j{k}" for k in range(m)]
    owner = {j: draw(st.sampled_from(agents)) for j in items}
    supply = {a: [j for j in items if owner[j] == a] for a in agents}
    demand = {}
    for a in agents:
        foreign = [j for j in items if owner[j] != a]
        picked = draw(st.lists(st.sampled_from(foreign), max_size=max_demand, unique=True)) if foreign else []
        demand[a] = picked
    return new_instance(agents, items, demand, supply)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def fig1() -> Instance:
    from durable_trade.instances import gen_fig1

    return gen_fig1()

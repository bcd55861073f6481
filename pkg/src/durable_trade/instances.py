"""Instance families, the 3D-matching reduction, random instances and I/O."""

from __future__ import annotations

import json
import random
from collections.abc import Iterable
from dataclasses import dataclass
from itertools import combinations

from .assignment import CapExceeded
from .model import BarterError, Cycle, Instance, TradingGraph, new_instance


class InvalidTDM(BarterError):
    pass


class ParseError(BarterError):
    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{location}: {message}")
        self.location = location


def gen_fig1() -> Instance:
    """Three agents: c wants x and z, a wants x, b wants y."""
    return new_instance(
        ["a", "b", "c"],
        ["x", "y", "z"],
        {"a": ["x"], "b": ["y"], "c": ["x", "z"]},
        {"a": ["z"], "b": ["x"], "c": ["y"]},
    )


def gen_claim32(l: int) -> Instance:  # noqa: E741
    """``l+1`` agents, agent ``k`` owns item ``k`` and wants all the others."""
    if l < 1:
        raise BarterError("l must be at least 1")
    agents = [f"i{k}" for k in range(1, l + 2)]
    items = [f"j{k}" for k in range(1, l + 2)]
    return new_instance(
        agents,
        items,
        {a: [j for j in items if j != items[k]] for k, a in enumerate(agents)},
        {a: [items[k]] for k, a in enumerate(agents)},
    )


def thm41_path_len(l: int) -> int:  # noqa: E741
    return (l + 1) * (l * l + l) // 2


def gen_thm41(l: int, path_len: int = 2, *, paper_exact: bool = False, deviator: int | None = None) -> Instance:  # noqa: E741
    """Swap pairs ``i_k``/``i'_k`` over ``M'``, a shared pool ``M`` and ``l`` feeder chains.

    ``i_k`` owns ``j'_k`` and wants all of ``M``; ``i'_k`` owns ``j_k`` and
    wants ``j'_k``. Chain ``k`` has agents ``i_k^1..i_k^T``: ``i_k^t`` owns
    ``j_k^t`` and wants ``j_k^{t+1}``, the last one wants ``j'_k``.
    ``paper_exact`` sets ``T = (l+1)(l^2+l)/2``. ``deviator=k`` adds
    ``j_k^1`` to the demand of ``i_k``, closing a giant cycle.
    """
    if l < 1 or path_len < 1:
        raise BarterError("l and path_len must be at least 1")
    if paper_exact:
        path_len = thm41_path_len(l)
    ks = range(1, l + 1)
    agents = [f"i{k}" for k in ks] + [f"i'{k}" for k in ks]
    items = [f"j{k}" for k in ks] + [f"j'{k}" for k in ks]
    pool = [f"j{k}" for k in ks]
    demand: dict[str, list[str]] = {}
    supply: dict[str, list[str]] = {}
    for k in ks:
        demand[f"i{k}"] = list(pool)
        supply[f"i{k}"] = [f"j'{k}"]
        demand[f"i'{k}"] = [f"j'{k}"]
        supply[f"i'{k}"] = [f"j{k}"]
    for k in ks:
        for t in range(1, path_len + 1):
            a, j = f"i{k}^{t}", f"j{k}^{t}"
            agents.append(a)
            items.append(j)
            supply[a] = [j]
            demand[a] = [f"j{k}^{t + 1}" if t < path_len else f"j'{k}"]
    if deviator is not None:
        if deviator not in ks:
            raise BarterError(f"deviator must be in 1..{l}")
        demand[f"i{deviator}"].append(f"j{deviator}^1")
    return new_instance(agents, items, demand, supply)


def gen_pareto(n: int, *, deviate: bool = False) -> Instance:
    """``i1`` owns c and wants a, b; ``i2`` owns a and wants b; ``i3`` owns b and wants c.

    A chain ``p1..p_{n-3}`` runs from item ``p'1`` to item c: ``p_t`` owns
    ``p't`` and wants ``p'_{t+1}``, the last one wants c. ``deviate`` adds
    ``p'1`` to the demand of ``i1``.
    """
    if n < 4:
        raise BarterError("n must be at least 4")
    chain = n - 3
    agents = ["i1", "i2", "i3"] + [f"p{t}" for t in range(1, chain + 1)]
    items = ["a", "b", "c"] + [f"p'{t}" for t in range(1, chain + 1)]
    demand = {"i1": ["a", "b"], "i2": ["b"], "i3": ["c"]}
    supply = {"i1": ["c"], "i2": ["a"], "i3": ["b"]}
    for t in range(1, chain + 1):
        supply[f"p{t}"] = [f"p'{t}"]
        demand[f"p{t}"] = [f"p'{t + 1}" if t < chain else "c"]
    if deviate:
        demand["i1"].append("p'1")
    return new_instance(agents, items, demand, supply)


def pareto_cycles() -> tuple[Cycle, Cycle]:
    """The two cycles ``(i1, b, i3, c)`` and ``(i1, a, i2, b)``, in execution order."""
    return Cycle.of("i1", "b", "i3", "c"), Cycle.of("i1", "a", "i2", "b")


def pareto_giant_cycle(n: int) -> Cycle:
    chain = n - 3
    nodes = ["i1", "p'1"]
    for t in range(1, chain + 1):
        nodes += [f"p{t}", f"p'{t + 1}" if t < chain else "c"]
    return Cycle.of(*nodes)


def gen_greedy_family(d: int, l: int) -> Instance:  # noqa: E741
    """``d`` blocks of ``l`` agents; one giant cycle starves everything else.

    Agent ``i^k_y`` owns ``j^k_y``. Block 1 agents want only ``j^k_2``.
    Middle blocks want the rest of their own block plus ``j^k_{y+1}``; the
    last block wants the rest of its block plus ``j^{k+1 mod l}_1``.
    """
    if d < 2 or l < 2:
        raise BarterError("d and l must be at least 2")
    agents, items = [], []
    for y in range(1, d + 1):
        for k in range(1, l + 1):
            agents.append(f"i{k}_{y}")
            items.append(f"j{k}_{y}")
    demand: dict[str, list[str]] = {}
    supply: dict[str, list[str]] = {}
    for y in range(1, d + 1):
        block = [f"j{k}_{y}" for k in range(1, l + 1)]
        for k in range(1, l + 1):
            a = f"i{k}_{y}"
            supply[a] = [f"j{k}_{y}"]
            own_block = [] if y == 1 else [j for j in block if j != f"j{k}_{y}"]
            nxt = f"j{k}_{y + 1}" if y < d else f"j{k % l + 1}_1"
            demand[a] = own_block + [nxt]
    return new_instance(agents, items, demand, supply)


def greedy_giant_cycle(d: int, l: int) -> Cycle:  # noqa: E741
    nodes = []
    for k in range(1, l + 1):
        for y in range(1, d + 1):
            nxt = f"j{k}_{y + 1}" if y < d else f"j{k % l + 1}_1"
            nodes += [f"i{k}_{y}", nxt]
    return Cycle.of(*nodes)


# ---------------------------------------------------------------- 3D matching


@dataclass(frozen=True)
class ThreeDMInstance:
    X: tuple[str, ...]
    Y: tuple[str, ...]
    Z: tuple[str, ...]
    T: tuple[tuple[str, str, str], ...]

    def __post_init__(self):
        sets = [set(self.X), set(self.Y), set(self.Z)]
        if any(len(s) != len(v) for s, v in zip(sets, (self.X, self.Y, self.Z))):
            raise InvalidTDM("repeated element")
        if len(self.X) != len(self.Y) or len(self.Y) != len(self.Z):
            raise InvalidTDM("X, Y and Z must have the same size")
        if sets[0] & sets[1] or sets[0] & sets[2] or sets[1] & sets[2]:
            raise InvalidTDM("X, Y and Z must be disjoint")
        if len(set(self.T)) != len(self.T):
            raise InvalidTDM("repeated triplet")
        for t in self.T:
            if len(t) != 3 or t[0] not in sets[0] or t[1] not in sets[1] or t[2] not in sets[2]:
                raise InvalidTDM(f"bad triplet {t!r}")

    @property
    def n(self) -> int:
        return len(self.X)


def tdm(n: int, triplets: Iterable[tuple[int, int, int]]) -> ThreeDMInstance:
    """Shorthand: elements ``x1..xn`` etc., triplets given by 1-based indices."""
    return ThreeDMInstance(
        tuple(f"x{k}" for k in range(1, n + 1)),
        tuple(f"y{k}" for k in range(1, n + 1)),
        tuple(f"z{k}" for k in range(1, n + 1)),
        tuple((f"x{a}", f"y{b}", f"z{c}") for a, b, c in triplets),
    )


LABELS = tuple(f"E{k}" for k in range(8))


@dataclass(frozen=True)
class ReductionLabel:
    """Demand edge -> class ``E0``..``E7``."""

    classes: dict[tuple[str, str], str]

    def of(self, edge: tuple[str, str]) -> str:
        return self.classes[edge]

    def sizes(self) -> tuple[int, ...]:
        return tuple(sum(1 for c in self.classes.values() if c == lab) for lab in LABELS)


def _tri(t: tuple[str, str, str], k: int) -> str:
    return f"({''.join(t)}){k}"


def gen_3dm_reduction(tdm_: ThreeDMInstance) -> tuple[Instance, ReductionLabel]:
    """Trading instance whose optimum is ``8n`` exactly when a perfect 3D matching exists.

    Every ``x1`` owns every ``z2``, so items ``z2`` have several owners and
    the instance is relaxed.
    """
    if not isinstance(tdm_, ThreeDMInstance):
        raise InvalidTDM("expected a ThreeDMInstance")
    agents: list[str] = []
    items: list[str] = []
    demand: dict[str, list[str]] = {}
    supply: dict[str, list[str]] = {}
    label: dict[tuple[str, str], str] = {}

    def want(a: str, j: str, lab: str):
        demand.setdefault(a, []).append(j)
        label[a, j] = lab

    for t in tdm_.T:
        agents += [_tri(t, 2), _tri(t, 4), _tri(t, 6)]
        items += [_tri(t, 1), _tri(t, 3), _tri(t, 5), _tri(t, 7)]
    for y in tdm_.Y:
        items.append(f"{y}_1")
        agents.append(f"{y}_2")
    for z in tdm_.Z:
        agents.append(f"{z}_1")
        items.append(f"{z}_2")
    for x in tdm_.X:
        items.append(f"{x}_2")
        agents += [f"{x}_1", f"{x}_3"]

    for t in tdm_.T:
        x, y, z = t
        supply[_tri(t, 2)] = [_tri(t, 1)]
        want(_tri(t, 2), _tri(t, 3), "E2")
        want(_tri(t, 2), _tri(t, 7), "E6")
        supply[_tri(t, 4)] = [_tri(t, 3)]
        want(_tri(t, 4), f"{y}_1", "E3")
        supply[_tri(t, 6)] = [_tri(t, 5)]
        want(_tri(t, 6), _tri(t, 7), "E5")
    for y in tdm_.Y:
        supply[f"{y}_2"] = [f"{y}_1"]
        for t in tdm_.T:
            if t[1] == y:
                want(f"{y}_2", _tri(t, 5), "E4")
    for z in tdm_.Z:
        want(f"{z}_1", f"{z}_2", "E7")
        supply[f"{z}_1"] = [_tri(t, 7) for t in tdm_.T if t[2] == z]
    for x in tdm_.X:
        want(f"{x}_1", f"{x}_2", "E0")
        supply[f"{x}_1"] = [f"{z}_2" for z in tdm_.Z]
        supply[f"{x}_3"] = [f"{x}_2"]
        for t in tdm_.T:
            if t[0] == x:
                want(f"{x}_3", _tri(t, 1), "E1")
    inst = new_instance(agents, items, demand, supply, relaxed=True)
    return inst, ReductionLabel(label)


def classify_cycle(cycle: Cycle, label: ReductionLabel) -> str:
    """``small-X``, ``large-X`` or ``Y`` (``Y`` = no E0 edge)."""
    classes = [label.classes.get(e) for e in cycle.demand_edges()]
    if "E0" in classes:
        return "small-X" if "E6" in classes else "large-X"
    return "Y"


def cycle_label_profile(cycle: Cycle, label: ReductionLabel) -> tuple[str, ...]:
    """Sorted classes of the demand edges a cycle uses (``flip`` for flipped ones)."""
    return tuple(sorted(label.classes.get(e, "flip") for e in cycle.demand_edges()))


def split_x_cycles(cycles: Iterable[Cycle], label: ReductionLabel) -> list[Cycle]:
    """Cut every X-cycle with several E0 edges into one cycle per E0 edge.

    Each piece starts at an ``x1`` agent and ends with some ``z1`` taking a
    ``z2`` item. Every ``x1`` owns every ``z2``, so the piece can close on its
    own ``x1`` instead of the next one; the exchanges are unchanged.
    """
    out = []
    for c in cycles:
        starts = [t for t, e in enumerate(c.demand_edges()) if label.classes.get(e) == "E0"]
        if len(starts) < 2:
            out.append(c)
            continue
        k = len(c)
        for s, nxt in zip(starts, starts[1:] + [starts[0] + k]):
            idx = [t % k for t in range(s, nxt)]
            out.append(Cycle(tuple(c.agents[t] for t in idx), tuple(c.items[t] for t in idx)))
    return out


def solve_3dm_bruteforce(tdm_: ThreeDMInstance, cap: int = 1_000_000) -> int:
    """Largest set of pairwise disjoint triplets, by exhaustive search."""
    triplets = list(tdm_.T)
    if 2 ** len(triplets) > cap:
        raise CapExceeded(f"{len(triplets)} triplets exceed the cap of {cap} subsets")
    best = 0
    for size in range(1, min(len(triplets), tdm_.n) + 1):
        for subset in combinations(triplets, size):
            if all(len({t[c] for t in subset}) == size for c in range(3)):
                best = size
                break
        if best < size:
            break
    return best


# ---------------------------------------------------------------- other families


def gen_utility_path(k: int) -> Instance:
    """``a_t`` owns ``j_t`` and wants ``j_{t+1}``; ``a_k`` wants nothing.

    The only way to close a cycle is for ``a_k`` to accept ``j_1``.
    """
    if k < 2:
        raise BarterError("k must be at least 2")
    agents = [f"a{t}" for t in range(1, k + 1)]
    items = [f"j{t}" for t in range(1, k + 1)]
    return new_instance(
        agents,
        items,
        {agents[t]: [items[t + 1]] for t in range(k - 1)},
        {agents[t]: [items[t]] for t in range(k)},
    )


def utility_path_cycle(k: int) -> Cycle:
    nodes = []
    for t in range(1, k + 1):
        nodes += [f"a{t}", f"j{t % k + 1}"]
    return Cycle.of(*nodes)


def gen_random(
    n_agents: int,
    n_items: int,
    demand_density: float,
    seed: int,
    max_demand: int | None = None,
) -> Instance:
    """Owners round-robin; each agent wants ``round(density * |foreign items|)`` of them.

    ``max_demand`` caps each demand set. The whole instance is a function of
    the arguments.
    """
    if n_agents < 0 or n_items < 0:
        raise BarterError("sizes must be nonnegative")
    if n_items and not n_agents:
        raise BarterError("items need at least one owner")
    if not 0 <= demand_density <= 1:
        raise BarterError("density must lie in [0, 1]")
    rng = random.Random(seed)
    agents = [f"a{k}" for k in range(n_agents)]
    items = [f"j{k}" for k in range(n_items)]
    supply = {a: [] for a in agents}
    for k, j in enumerate(items):
        supply[agents[k % n_agents]].append(j)
    demand = {}
    for a in agents:
        foreign = [j for j in items if j not in supply[a]]
        want = round(demand_density * len(foreign))
        if max_demand is not None:
            want = min(want, max_demand)
        demand[a] = sorted(rng.sample(foreign, want), key=items.index)
    return new_instance(agents, items, demand, supply)


# ---------------------------------------------------------------- serialization


def to_json(instance: Instance) -> str:
    doc = {
        "agents": [
            {
                "id": a,
                "demand": instance.sorted_items(instance.demand[a]),
                "supply": instance.sorted_items(instance.supply[a]),
            }
            for a in instance.agents
        ],
        "items": list(instance.items),
    }
    if instance.relaxed:
        doc["relaxed"] = True
    return json.dumps(doc, indent=2) + "\n"


def _str_list(value, where: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise ParseError("expected a list of strings", where)
    return value


def from_json(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    if not isinstance(doc, dict):
        raise ParseError("expected an object")
    for key in ("agents", "items"):
        if key not in doc:
            raise ParseError(f"missing key {key!r}")
    unknown = set(doc) - {"agents", "items", "relaxed"}
    if unknown:
        raise ParseError(f"unexpected keys {sorted(unknown)}")
    items = _str_list(doc["items"], "$.items")
    relaxed = doc.get("relaxed", False)
    if not isinstance(relaxed, bool):
        raise ParseError("expected true or false", "$.relaxed")
    if not isinstance(doc["agents"], list):
        raise ParseError("expected a list", "$.agents")
    agents, demand, supply = [], {}, {}
    for k, entry in enumerate(doc["agents"]):
        where = f"$.agents[{k}]"
        if not isinstance(entry, dict) or not isinstance(entry.get("id"), str):
            raise ParseError("expected an object with a string id", where)
        extra = set(entry) - {"id", "demand", "supply"}
        if extra:
            raise ParseError(f"unexpected keys {sorted(extra)}", where)
        a = entry["id"]
        agents.append(a)
        demand[a] = _str_list(entry.get("demand", []), f"{where}.demand")
        supply[a] = _str_list(entry.get("supply", []), f"{where}.supply")
    try:
        return new_instance(agents, items, demand, supply, relaxed=relaxed)
    except BarterError as exc:
        raise ParseError(str(exc)) from exc


def _dot_id(x: str) -> str:
    return '"' + x.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(graph: TradingGraph, name: str = "trading") -> str:
    """Graphviz text: agents as circles, items as boxes, dashed supply edges."""
    lines = [f"digraph {_dot_id(name)} {{"]
    lines += [f"  {_dot_id(a)} [shape=circle];" for a in graph.agents]
    lines += [f"  {_dot_id(j)} [shape=box];" for j in graph.items]
    lines += [f"  {_dot_id(a)} -> {_dot_id(j)};" for a, j in graph.sorted_demand_edges()]
    lines += [f"  {_dot_id(j)} -> {_dot_id(a)} [style=dashed];" for j, a in graph.sorted_supply_edges()]
    lines.append("}")
    return "\n".join(lines) + "\n"


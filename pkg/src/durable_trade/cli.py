"""Command-line front end.

Results go to stdout as JSON (sorted keys, so identical runs print identical
bytes); timings and errors go to stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path

from .audit import MECHANISMS, audit_strategyproofness, ratio_of
from .dynamic import LimitExceeded, SearchLimits, exact_dynamic_optimal, greedy_dynamic
from .instances import (
    ParseError,
    export_dot,
    from_json,
    gen_3dm_reduction,
    gen_claim32,
    gen_fig1,
    gen_greedy_family,
    gen_pareto,
    gen_random,
    gen_thm41,
    gen_utility_path,
    tdm,
    to_json,
)
from .model import BarterError, Execution, Instance, apply_cycle, initial_graph
from .static_solver import solve_As_truthful, solve_static_optimal

FAMILIES = ("fig1", "claim32", "thm41", "pareto", "greedy", "3dm", "utility-path", "random")
ALGOS = ("static", "as", "greedy", "exact")


class BadParams(BarterError):
    pass


def _emit(doc) -> None:
    sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _read_instance(path: str | None) -> Instance:
    if path is None:
        raise BadParams("--in is required")
    text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    return from_json(text)


def digest(instance: Instance) -> str:
    return hashlib.sha256(to_json(instance).encode()).hexdigest()[:16]


def _parse_triplets(text: str) -> list[tuple[int, int, int]]:
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 3 or not all(p.strip().isdigit() for p in parts):
            raise BadParams(f"bad triplet {chunk!r}; expected x,y,z with 1-based indices")
        out.append(tuple(int(p) for p in parts))
    return out


def build_family(args) -> Instance:
    fam = args.family

    def need(name: str):
        value = getattr(args, name)
        if value is None:
            raise BadParams(f"{fam} needs --{name.replace('_', '-')}")
        return value

    if fam == "fig1":
        return gen_fig1()
    if fam == "claim32":
        return gen_claim32(need("l"))
    if fam == "thm41":
        return gen_thm41(need("l"), args.path_len or 2, paper_exact=args.paper_exact, deviator=args.deviator)
    if fam == "pareto":
        return gen_pareto(need("n"), deviate=args.deviator is not None)
    if fam == "greedy":
        return gen_greedy_family(need("d"), need("l"))
    if fam == "3dm":
        return gen_3dm_reduction(tdm(need("n"), _parse_triplets(need("triplets"))))[0]
    if fam == "utility-path":
        return gen_utility_path(need("k"))
    if fam == "random":
        return gen_random(need("agents"), need("items"), args.density, args.seed, args.max_demand)
    raise BadParams(f"unknown family {fam!r}")  # pragma: no cover - argparse restricts choices


def execution_doc(execution: Execution, instance: Instance) -> dict:
    return {
        "cycles": [[*c.nodes(), c.agents[0]] for c in execution.cycles],
        "received": {a: list(execution.received[a]) for a in instance.agents},
        "given": {a: list(execution.given[a]) for a in instance.agents},
    }


def _limits(args) -> SearchLimits:
    return SearchLimits(max_states=args.max_states)


def run_algorithm(name: str, instance: Instance, limits: SearchLimits, strict: bool) -> tuple[Execution, bool]:
    if name == "static":
        return solve_static_optimal(instance), True
    if name == "as":
        return solve_As_truthful(instance), True
    if name == "greedy":
        return greedy_dynamic(instance), True
    result = exact_dynamic_optimal(instance, limits, strict=strict)
    return result.execution, result.optimal


def cmd_gen(args) -> int:
    instance = build_family(args)
    text = to_json(instance)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        _note(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_solve(args) -> int:
    instance = _read_instance(args.inp)
    t0 = time.perf_counter()
    try:
        execution, optimal = run_algorithm(args.algo, instance, _limits(args), args.strict)
    except LimitExceeded as exc:
        _note(f"error: {exc}")
        return 3
    _note(f"{args.algo}: {time.perf_counter() - t0:.3f}s")
    report = {
        "instance": digest(instance),
        "algorithm": args.algo,
        "size": execution.size,
        "welfare": execution.size,
        "optimal": optimal,
        **execution_doc(execution, instance),
    }
    if args.dot_out:
        out = Path(args.dot_out)
        out.mkdir(parents=True, exist_ok=True)
        graph = initial_graph(instance)
        (out / "step_000.dot").write_text(export_dot(graph, "step 0"), encoding="utf-8")
        for k, cycle in enumerate(execution.cycles, 1):
            graph = apply_cycle(graph, cycle)
            (out / f"step_{k:03d}.dot").write_text(export_dot(graph, f"step {k}"), encoding="utf-8")
        _note(f"wrote {len(execution.cycles) + 1} graphs to {out}")
    _emit(report)
    return 0


def cmd_audit(args) -> int:
    instance = _read_instance(args.inp)
    if args.mechanism not in MECHANISMS:
        raise BadParams(f"mechanism must be one of {sorted(MECHANISMS)}")
    agents = [args.agent] if args.agent else list(instance.agents)
    for a in agents:
        if a not in instance.agent_index:
            raise BadParams(f"unknown agent {a!r}")
    t0 = time.perf_counter()
    reports = [
        audit_strategyproofness(args.mechanism, instance, a, args.caps, full_supersets=args.full_supersets)
        for a in agents
    ]
    _note(f"audit: {time.perf_counter() - t0:.3f}s")
    docs = []
    for r in reports:
        doc = asdict(r)
        doc["best_misreport"] = {"demand": list(r.best_misreport[0]), "supply": list(r.best_misreport[1])}
        docs.append(doc)
    _emit({
        "instance": digest(instance),
        "mechanism": args.mechanism,
        "max_gain": max((r.gain for r in reports), default=0),
        "reports": docs,
    })
    return 0


def cmd_ratio(args) -> int:
    instance = _read_instance(args.inp)
    if args.algo == "exact":
        raise BadParams("compare a polynomial algorithm: static, as or greedy")
    t0 = time.perf_counter()
    try:
        best = exact_dynamic_optimal(instance, _limits(args), strict=True)
    except LimitExceeded as exc:
        _note(f"error: exact optimum unavailable ({exc})")
        return 3
    achieved, _ = run_algorithm(args.algo, instance, _limits(args), True)
    _note(f"ratio: {time.perf_counter() - t0:.3f}s")
    ratio = ratio_of(best.size, achieved.size)
    shown = "inf" if ratio == math.inf else str(ratio)
    _emit({
        "instance": digest(instance),
        "algorithm": args.algo,
        "optimum": best.size,
        "achieved": achieved.size,
        "ratio": shown,
        "display": f"{best.size}/{achieved.size} = {shown}",
    })
    return 0


def cmd_export_dot(args) -> int:
    instance = _read_instance(args.inp)
    text = export_dot(initial_graph(instance))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        _note(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="durable-trade", description="Barter exchange of durable goods.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a generated instance as JSON")
    g.add_argument("family", choices=FAMILIES)
    g.add_argument("--out")
    g.add_argument("--l", type=int)
    g.add_argument("--d", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--k", type=int)
    g.add_argument("--path-len", type=int)
    g.add_argument("--paper-exact", action="store_true", help="thm41: use the full chain length")
    g.add_argument("--deviator", type=int, help="thm41/pareto: add the deviating demand")
    g.add_argument("--triplets", help='3dm: e.g. "1,1,1;2,2,2"')
    g.add_argument("--agents", type=int)
    g.add_argument("--items", type=int)
    g.add_argument("--density", type=float, default=0.5)
    g.add_argument("--max-demand", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="run one algorithm")
    s.add_argument("--in", dest="inp")
    s.add_argument("--algo", choices=ALGOS, default="as")
    s.add_argument("--max-states", type=int, default=1_000_000)
    s.add_argument("--strict", action="store_true", help="fail instead of returning a non-optimal result")
    s.add_argument("--dot-out", help="directory for one DOT file per step")
    s.set_defaults(func=cmd_solve)

    a = sub.add_parser("audit", help="sweep misreports")
    a.add_argument("--in", dest="inp")
    a.add_argument("--mechanism", "--algo", dest="mechanism", default="as")
    a.add_argument("--agent")
    a.add_argument("--caps", type=int, default=8)
    a.add_argument("--full-supersets", action="store_true")
    a.set_defaults(func=cmd_audit)

    r = sub.add_parser("ratio", help="exact optimum over an algorithm's welfare")
    r.add_argument("--in", dest="inp")
    r.add_argument("--algo", choices=ALGOS, default="static")
    r.add_argument("--max-states", type=int, default=1_000_000)
    r.set_defaults(func=cmd_ratio)

    e = sub.add_parser("export-dot", help="trading graph in DOT")
    e.add_argument("--in", dest="inp")
    e.add_argument("--out")
    e.set_defaults(func=cmd_export_dot)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BarterError, OSError) as exc:
        _note(f"error: {exc}")
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

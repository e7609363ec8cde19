"""Command line entry point: ``shcroute <verb> ...``."""

from __future__ import annotations

import argparse
import io
import json
import sys
from fractions import Fraction
from typing import List, Optional

from .core import (VertexTrie, build_hypercube_style, build_random_shc, format_label,
                   make_rng, read_graph, read_vertices, write_graph, write_vertices)
from .dynroute import DynDetRouter, RouterError
from .embed import PruneOblivRouter, parse_host_token, read_embedding, read_host
from .harness import (ADVERSARIES, RANDOM_EDGE, SCRIPTED, ConfigError, PruneConfig,
                      format_op, parse_script, run_dynroute_script, run_embed_script,
                      run_prune_experiment, suggest_parameters)
from .lowerbound import build_hard_instance, hard_demand
from .prune import EXPERIMENTAL, STRICT, ParameterError
from .route import SamplingError, measure_congestion, sample_path_with_attempts
from .validate import validate

EXIT_FAILURE = 1
EXIT_INPUT = 2


class InputError(Exception):
    pass


def _global_options(parser, suppress: bool) -> None:
    default = argparse.SUPPRESS
    parser.add_argument("--seed", type=int, default=default if suppress else 0)
    parser.add_argument("--mode", choices=(STRICT, EXPERIMENTAL), default=default if suppress else STRICT)
    parser.add_argument("--out", default=default if suppress else None,
                        help="output file (stdout when omitted)")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="shcroute", description="Semi-hypercube routing and pruning tools.")
    _global_options(top, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, suppress=True)
    verbs = top.add_subparsers(dest="verb", required=True)

    gen = verbs.add_parser("gen", help="generate a graph").add_subparsers(dest="kind", required=True)
    for kind in ("random", "hypercube", "hard"):
        p = gen.add_parser(kind, parents=[common])
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--d", type=int, required=True)
        if kind == "hard":
            p.add_argument("--d0", type=int, required=True)
            p.add_argument("--tau", default=None)

    p = verbs.add_parser("validate", parents=[common], help="check the structural conditions")
    p.add_argument("--graph", required=True)
    p.add_argument("--removed")
    p.add_argument("--tau", required=True)

    route = verbs.add_parser("route").add_subparsers(dest="action", required=True)
    p = route.add_parser("sample", parents=[common], help="sample oblivious paths for pairs")
    p.add_argument("--graph", required=True)
    p.add_argument("--removed")
    p.add_argument("--pairs", required=True)
    p.add_argument("--tau", default="1/4")
    p.add_argument("--congestion", help="per-edge congestion CSV (default OUT.congestion.csv)")

    prune = verbs.add_parser("prune").add_subparsers(dest="action", required=True)
    p = prune.add_parser("run", parents=[common], help="run an adversary against the pruner")
    p.add_argument("--graph", required=True)
    p.add_argument("--adversary", choices=[a for a in ADVERSARIES if a != RANDOM_EDGE], default="random")
    p.add_argument("--script")
    p.add_argument("--tau")
    p.add_argument("--rho", type=int)
    p.add_argument("--budget", type=int)

    dyn = verbs.add_parser("dynroute").add_subparsers(dest="action", required=True)
    p = dyn.add_parser("sim", parents=[common], help="replay updates through the dynamic router")
    p.add_argument("--graph", required=True)
    p.add_argument("--removed")
    p.add_argument("--demand", required=True)
    p.add_argument("--script", required=True)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--tau", default="1/4")

    emb = verbs.add_parser("embed").add_subparsers(dest="action", required=True)
    p = emb.add_parser("prune", parents=[common], help="delete host edges through an embedding")
    p.add_argument("--graph", required=True, help="the embedded semi-hypercube")
    p.add_argument("--host", required=True)
    p.add_argument("--embedding", required=True)
    p.add_argument("--script", required=True)
    p.add_argument("--tau")
    p.add_argument("--rho", type=int)

    params = verbs.add_parser("params").add_subparsers(dest="action", required=True)
    p = params.add_parser("suggest", parents=[common], help="parameters for a target size")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    return top


# io helpers

def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(str(exc)) from exc


def _load_graph(path):
    return read_graph(io.StringIO(_read_text(path)))


def _load_vertices(G, path) -> VertexTrie:
    V = VertexTrie(G)
    if path:
        for v in read_vertices(G, io.StringIO(_read_text(path))):
            if v in V:
                V.remove(v)
    return V


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


# verbs

def cmd_gen(args) -> int:
    if args.kind == "random":
        G = build_random_shc(args.k, args.d, args.seed)
    elif args.kind == "hypercube":
        G = build_hypercube_style(args.k, args.d)
    else:
        if not args.out:
            raise InputError("gen hard writes three files and needs --out")
        inst = build_hard_instance(args.k, args.d, args.d0, args.tau)
        G = inst.G
        with open(args.out + ".removed", "w", encoding="utf-8", newline="\n") as fh:
            write_vertices(G, inst.removed, fh)
        with open(args.out + ".demand", "w", encoding="utf-8", newline="\n") as fh:
            for a, b, pid in hard_demand(inst):
                fh.write(f"{G.format(a)} {G.format(b)} {pid}\n")
        with open(args.out + ".hard", "w", encoding="utf-8", newline="\n") as fh:
            write_vertices(G, inst.hard, fh)
    buf = io.StringIO()
    write_graph(G, buf)
    _emit(args, buf.getvalue())
    return 0


def cmd_validate(args) -> int:
    G = _load_graph(args.graph)
    V = _load_vertices(G, args.removed)
    report = validate(G, V, args.tau)
    lines = []
    for sigma, kind, info in report.violations:
        lines.append(json.dumps({"cluster": format_label(sigma), "kind": kind, **_jsonable(info)},
                                sort_keys=True))
    lines.append(json.dumps({"valid": report.valid, "violations": len(report.violations),
                             "vertices": len(V)}, sort_keys=True))
    _emit(args, "\n".join(lines) + "\n")
    return 0 if report.valid else EXIT_FAILURE


def cmd_route_sample(args) -> int:
    G = _load_graph(args.graph)
    V = _load_vertices(G, args.removed)
    rng = make_rng(args.seed)
    rows = ["src,dst,length,attempts"]
    paths = []
    for line in _read_text(args.pairs).splitlines():
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        s, t = G.parse(parts[0]), G.parse(parts[1])
        try:
            path, attempts = sample_path_with_attempts(G, V, args.tau, s, t, rng)
        except SamplingError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FAILURE
        paths.append(path)
        rows.append(f"{G.format(s)},{G.format(t)},{len(path) - 1},{attempts}")
    _emit(args, "\n".join(rows) + "\n")
    cm = measure_congestion(paths)
    cong = ["u,w,count"] + [f"{G.format(u)},{G.format(w)},{c}" for (u, w), c in sorted(cm.counts.items())]
    target = args.congestion or (args.out + ".congestion.csv" if args.out else None)
    if target:
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(cong) + "\n")
    return 0


def _report_failure(failure, fmt) -> None:
    print(f"invariant failure at update {failure.update}: {failure.reason}", file=sys.stderr)
    print("minimal repro:", file=sys.stderr)
    for op in failure.repro:
        print("  " + format_op(op, fmt), file=sys.stderr)


def cmd_prune_run(args) -> int:
    G = _load_graph(args.graph)
    script = None
    if args.adversary == SCRIPTED:
        if not args.script:
            raise InputError("--adversary script needs --script FILE")
        script = parse_script(_read_text(args.script), G.parse)
    cfg = PruneConfig(graph=G, tau=args.tau, mode=args.mode, rho=args.rho,
                      adversary=args.adversary, seed=args.seed, script=script, budget=args.budget)
    result = run_prune_experiment(cfg)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    _emit(args, result.to_csv())
    if result.failure:
        _report_failure(result.failure, G.format)
        return EXIT_FAILURE
    return 0


def cmd_dynroute_sim(args) -> int:
    G = _load_graph(args.graph)
    V = _load_vertices(G, args.removed)
    demand = []
    for line in _read_text(args.demand).splitlines():
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if len(parts) != 3:
            raise InputError(f"bad demand line {line.strip()!r}")
        demand.append((G.parse(parts[0]), G.parse(parts[1]), int(parts[2])))
    script = parse_script(_read_text(args.script), G.parse)
    L = args.L
    if L is None:
        load = {}
        for a, b, _ in demand:
            load[a] = load.get(a, 0) + 1
            load[b] = load.get(b, 0) + 1
        L = max(load.values(), default=1)
    router = DynDetRouter(G, demand, tau=args.tau, L=L, V=V, mode=args.mode)
    result = run_dynroute_script(router, script, strict=args.mode == STRICT)
    _emit(args, result.to_csv())
    if result.failure:
        _report_failure(result.failure, G.format)
        return EXIT_FAILURE
    return 0


def cmd_embed_prune(args) -> int:
    H = _load_graph(args.graph)
    host = read_host(H, io.StringIO(_read_text(args.host)))
    pi = read_embedding(H, io.StringIO(_read_text(args.embedding)))
    script = parse_script(_read_text(args.script), lambda tok: parse_host_token(H, tok))
    router = PruneOblivRouter(host, H, pi, tau=args.tau, mode=args.mode, rho=args.rho)
    result = run_embed_script(router, script, strict=args.mode == STRICT)
    _emit(args, result.to_csv())
    if result.failure:
        _report_failure(result.failure, str)
        return EXIT_FAILURE
    return 0


def cmd_params_suggest(args) -> int:
    s = suggest_parameters(args.n, args.d)
    _emit(args, json.dumps({"k": s.k, "tau": str(s.tau), "rho": s.rho, "warnings": s.warnings},
                           sort_keys=True) + "\n")
    return 0


COMMANDS = {
    ("gen", None): cmd_gen,
    ("validate", None): cmd_validate,
    ("route", "sample"): cmd_route_sample,
    ("prune", "run"): cmd_prune_run,
    ("dynroute", "sim"): cmd_dynroute_sim,
    ("embed", "prune"): cmd_embed_prune,
    ("params", "suggest"): cmd_params_suggest,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = COMMANDS[(args.verb, getattr(args, "action", None))]
    try:
        return handler(args)
    except (InputError, ConfigError, ParameterError, RouterError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

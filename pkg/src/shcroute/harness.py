"""Adversaries, experiment drivers, CSV metrics and a delta-debugging shrinker."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .core import SemiHypercube, VertexTrie, build_random_shc, make_rng
from .dynroute import DynDetRouter, RouterError
from .prune import EXPERIMENTAL, STRICT, SelfPruner, strict_rho
from .route import SamplingError, measure_congestion, path_is_valid, sample_path
from .validate import coerce_tau, strict_tau_limit, validate

RANDOM_VERTEX = "random"
LARGEST_NONTARGET = "largest-nontarget"
RANDOM_EDGE = "random-edge"
SCRIPTED = "script"
ADVERSARIES = (RANDOM_VERTEX, LARGEST_NONTARGET, RANDOM_EDGE, SCRIPTED)

PRUNE_COLUMNS = ("update", "op", "deleted", "pruned_count", "remaining", "valid",
                 "max_mark_ratio", "bound_ok")
ROUTE_COLUMNS = ("update", "op", "deleted", "remaining", "valid", "max_congestion",
                 "max_length", "bound_ok")
DYNROUTE_COLUMNS = ("update", "op", "delta", "max_congestion", "max_length",
                    "recourse_bound_ok", "bound_ok")
EMBED_COLUMNS = ("update", "op", "affected", "removed", "trimmed", "remaining",
                 "bound_ok")


class ConfigError(ValueError):
    pass


# parameters

@dataclass
class ParamSuggestion:
    k: int
    tau: Fraction
    rho: int
    warnings: List[str] = field(default_factory=list)


def integer_root(n: int, d: int) -> int:
    """Largest k with k**d <= n."""
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    k = int(round(n ** (1.0 / d)))
    while k ** d > n:
        k -= 1
    while (k + 1) ** d <= n:
        k += 1
    return k


def suggest_parameters(n_target: int, d: int) -> ParamSuggestion:
    k = integer_root(n_target, d)
    tau = strict_tau_limit(d)
    warnings = []
    if k < 2:
        warnings.append(f"k={k} is below 2; no semi-hypercube exists")
        return ParamSuggestion(k, tau, 0, warnings)
    if k < 16 * d:
        warnings.append(f"k={k} < 16d={16 * d}: strict pruning preconditions fail")
    return ParamSuggestion(k, tau, strict_rho(k, d, tau), warnings)


# adversaries

@dataclass
class Adversary:
    """Deterministic deletion source; ``script`` holds ops for the scripted kind."""

    kind: str = RANDOM_VERTEX
    seed: int = 0
    script: Optional[List[tuple]] = None

    def __post_init__(self):
        if self.kind not in ADVERSARIES:
            raise ConfigError(f"unknown adversary {self.kind!r}")
        if self.kind == SCRIPTED and self.script is None:
            raise ConfigError("scripted adversary needs a script")
        self.rng = make_rng(self.seed)
        self.pos = 0

    def next_vertex(self, G: SemiHypercube, V: VertexTrie, target=None) -> Optional[int]:
        """Next vertex to delete, or None when exhausted."""
        if len(V) == 0:
            return None
        if self.kind == RANDOM_VERTEX:
            return V.sample((), self.rng)
        if self.kind == LARGEST_NONTARGET:
            return self._largest_nontarget(G, V, target)
        if self.kind == SCRIPTED:
            while self.pos < len(self.script):
                op = self.script[self.pos]
                self.pos += 1
                if op[0] == "del-vertex" and op[1] in V:
                    return op[1]
            return None
        raise ConfigError(f"{self.kind} adversary does not delete vertices")

    def _largest_nontarget(self, G, V, target):
        k, depth, num = G.k, 0, 0
        while depth < G.d:
            sizes = V.sizes[depth + 1][num * k:num * k + k]
            live = [i + 1 for i, s in enumerate(sizes) if s]
            t = target[depth][num] if target is not None else None
            others = [i for i in live if i != t] or live
            i = max(others, key=lambda c: (sizes[c - 1], -c))
            num = num * k + i - 1
            depth += 1
            if len(live) > 1:
                break
        return V.sample(G.cluster_of_num(depth, num), self.rng)

    def next_edge(self, edges: Sequence) -> Optional[tuple]:
        if self.kind == SCRIPTED:
            while self.pos < len(self.script):
                op = self.script[self.pos]
                self.pos += 1
                if op[0] == "del-edge":
                    return op[1:3]
            return None
        if not edges:
            return None
        return tuple(edges[int(self.rng.integers(len(edges)))])


# metrics

@dataclass
class MetricsRow:
    update: int
    op: str
    deleted: str = ""
    pruned_count: int = 0
    remaining: int = 0
    valid: bool = True
    max_mark_ratio: Fraction = Fraction(0)
    max_congestion: int = 0
    max_length: int = 0
    delta: int = 0
    affected: int = 0
    removed: int = 0
    trimmed: int = 0
    recourse_bound_ok: bool = True
    bound_ok: bool = True


def _cell(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    return str(x)


def rows_to_csv(rows: Sequence[MetricsRow], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        d = asdict(r)
        w.writerow([_cell(d[c]) for c in columns])
    return buf.getvalue()


@dataclass
class Failure:
    update: int
    reason: str
    repro: List[tuple]


@dataclass
class ExperimentResult:
    rows: List[MetricsRow]
    columns: Tuple[str, ...]
    failure: Optional[Failure] = None
    warnings: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failure is None

    def to_csv(self) -> str:
        return rows_to_csv(self.rows, self.columns)


# shrinking

def shrink(script: List, fails: Callable[[List], bool]) -> List:
    """Smallest failing subsequence found by prefix bisection then single-op removal."""
    if not fails(script):
        raise ValueError("script does not fail")
    lo, hi = 0, len(script)
    while lo < hi:
        mid = (lo + hi) // 2
        if fails(script[:mid]):
            hi = mid
        else:
            lo = mid + 1
    cur = list(script[:hi])
    i = len(cur) - 1
    while i >= 0:
        trial = cur[:i] + cur[i + 1:]
        if fails(trial):
            cur = trial
        i = min(i, len(cur)) - 1
    return cur


# pruning experiments

@dataclass
class PruneConfig:
    k: int = 4
    d: int = 2
    graph_seed: int = 0
    graph: Optional[SemiHypercube] = None
    tau: object = None
    mode: str = STRICT
    rho: Optional[int] = None
    adversary: str = RANDOM_VERTEX
    seed: int = 0
    script: Optional[List[tuple]] = None
    budget: Optional[int] = None
    check_validity: bool = True

    def build_graph(self) -> SemiHypercube:
        if self.graph is not None:
            return self.graph
        return build_random_shc(self.k, self.d, self.graph_seed)


def _prune_invariant_failure(pruner: SelfPruner, pruned: int, valid: bool) -> Optional[str]:
    if not valid:
        return "graph is not a valid semi-hypercube"
    if pruned > pruner.ratio_bound():
        return f"pruned {pruned} vertices, bound {pruner.ratio_bound()}"
    if pruner.max_mark_ratio() > Fraction(1, 20):
        return f"mark ratio {pruner.max_mark_ratio()} exceeds 1/20"
    return None


def make_pruner(config: PruneConfig, G: SemiHypercube, warnings: Optional[List[str]] = None) -> SelfPruner:
    """Strict runs below k = 16d keep strict tau and rho but relax the pruner's own check."""
    if config.mode == STRICT and G.k < 16 * G.d:
        if warnings is not None:
            warnings.append(f"k={G.k} < 16d={16 * G.d}: strict parameters without the pruner precondition")
        return SelfPruner(G, config.tau, mode=EXPERIMENTAL, rho=strict_rho(G.k, G.d, config.tau))
    return SelfPruner(G, config.tau, mode=config.mode, rho=config.rho)


def _replay_prune(config: PruneConfig, G: SemiHypercube, ops: List[tuple]) -> Optional[str]:
    pruner = make_pruner(config, G)
    for op in ops:
        v = op[1]
        if v not in pruner.V:
            continue
        pruned = pruner.delete(v)
        valid = validate(G, pruner.V, pruner.tau).valid
        reason = _prune_invariant_failure(pruner, len(pruned), valid)
        if reason:
            return reason
    return None


def run_prune_experiment(config: PruneConfig) -> ExperimentResult:
    """Delete vertices chosen by the adversary until the budget or the graph runs out."""
    G = config.build_graph()
    if config.tau is None:
        config.tau = strict_tau_limit(G.d)
    warnings: List[str] = []
    pruner = make_pruner(config, G, warnings)
    adv = Adversary(config.adversary, config.seed, config.script)
    rows: List[MetricsRow] = []
    history: List[tuple] = []
    budget = config.budget if config.budget is not None else G.n
    while len(rows) < budget:
        v = adv.next_vertex(G, pruner.V, pruner.target)
        if v is None:
            break
        history.append(("del-vertex", v))
        pruned = pruner.delete(v)
        valid = validate(G, pruner.V, pruner.tau).valid if config.check_validity else True
        ratio = pruner.max_mark_ratio()
        bound_ok = len(pruned) <= pruner.ratio_bound() and ratio <= Fraction(1, 20)
        rows.append(MetricsRow(len(rows) + 1, "del-vertex", deleted=G.format(v),
                               pruned_count=len(pruned), remaining=len(pruner.V),
                               valid=valid, max_mark_ratio=ratio, bound_ok=bound_ok))
        if config.mode == STRICT:
            reason = _prune_invariant_failure(pruner, len(pruned), valid)
            if reason:
                repro = shrink(history, lambda ops: _replay_prune(config, G, ops) is not None)
                return ExperimentResult(rows, PRUNE_COLUMNS, Failure(len(rows), reason, repro), warnings)
    return ExperimentResult(rows, PRUNE_COLUMNS, warnings=warnings)


# routing experiments

@dataclass
class RoutingConfig:
    k: int = 4
    d: int = 2
    graph_seed: int = 0
    graph: Optional[SemiHypercube] = None
    kind: str = "sample"
    tau: object = "1/4"
    mode: str = EXPERIMENTAL
    rho: Optional[int] = 1
    seed: int = 0
    deletions: int = 0
    pairs: int = 16
    L: int = 2
    steps: int = 20


def _sample_rows(config: RoutingConfig, G: SemiHypercube) -> ExperimentResult:
    rng = make_rng(config.seed)
    pruner = SelfPruner(G, config.tau, mode=config.mode, rho=config.rho)
    adv = Adversary(RANDOM_VERTEX, config.seed + 1)
    rows = []
    for update in range(config.deletions + 1):
        deleted = ""
        if update:
            v = adv.next_vertex(G, pruner.V)
            if v is None:
                break
            pruner.delete(v)
            deleted = G.format(v)
        V = pruner.V
        valid = validate(G, V, pruner.tau).valid
        row = MetricsRow(update, "init" if not update else "del-vertex", deleted=deleted,
                         remaining=len(V), valid=valid)
        if valid and len(V):
            paths = []
            ok = True
            for _ in range(config.pairs):
                s, t = V.sample((), rng), V.sample((), rng)
                try:
                    p = sample_path(G, V, pruner.tau, s, t, rng)
                except SamplingError:
                    ok = False
                    continue
                ok &= p[0] == s and p[-1] == t and path_is_valid(G, V, p)
                paths.append(p)
            cm = measure_congestion(paths)
            row.max_congestion = cm.max
            row.max_length = max((len(p) - 1 for p in paths), default=0)
            row.bound_ok = ok
        rows.append(row)
    return ExperimentResult(rows, ROUTE_COLUMNS)


def random_demand(G: SemiHypercube, V: VertexTrie, L: int, count: int, rng, start_id: int = 0,
                  load: Optional[Dict[int, int]] = None) -> List[Tuple[int, int, int]]:
    """Up to ``count`` random pairs keeping every vertex load at most L."""
    load = dict(load or {})
    out = []
    tries = 0
    while len(out) < count and tries < 20 * count and len(V) >= 1:
        tries += 1
        a, b = V.sample((), rng), V.sample((), rng)
        if load.get(a, 0) + 1 + (a == b) > L or load.get(b, 0) + 1 + (a == b) > L:
            continue
        load[a] = load.get(a, 0) + 1
        load[b] = load.get(b, 0) + 1
        out.append((a, b, start_id + len(out)))
    return out


def dynroute_row(router: DynDetRouter, update: int, op: str, changed, checks_from: int) -> MetricsRow:
    paths = router.routing()
    cm = measure_congestion(paths.values())
    longest = max((len(p) - 1 for p in paths.values()), default=0)
    valid = all(p[0] == router.demand[pid][0] and p[-1] == router.demand[pid][1]
                and path_is_valid(router.G, router.V, p, router.removed_edges)
                for pid, p in paths.items())
    recourse_ok = all(c.ok for c in router.level_checks[checks_from:])
    bound_ok = (valid and recourse_ok and cm.max <= router.congestion_bound()
                and longest <= router.length_bound())
    return MetricsRow(update, op, delta=len(changed), max_congestion=cm.max,
                      max_length=longest, recourse_bound_ok=recourse_ok, bound_ok=bound_ok)


def apply_dynroute_op(router: DynDetRouter, op: tuple) -> set:
    """Apply one script op; RouterError signals a rejected update."""
    kind = op[0]
    if kind == "del-vertex":
        return router.dynamic_update(**router.deletion_update(op[1]))
    if kind == "add-vertex":
        return router.dynamic_update(**router.addition_update(op[1]))
    if kind == "del-edge":
        u, w = op[1], op[2]
        return router.dynamic_update(E_minus=[(u, w)])
    if kind == "add-demand":
        return router.dynamic_update(D_plus=[op[1:4]])
    if kind == "remove-demand":
        return router.dynamic_update(D_minus=[op[1]])
    raise ConfigError(f"unknown op {kind!r}")


def _dynroute_rows(config: RoutingConfig, G: SemiHypercube) -> ExperimentResult:
    rng = make_rng(config.seed)
    V0 = VertexTrie(G)
    demand = random_demand(G, V0, config.L, config.pairs, rng)
    router = DynDetRouter(G, demand, tau=config.tau, L=config.L, mode=config.mode)
    rows = [dynroute_row(router, 0, "init", set(router.demand), 0)]
    next_id = len(demand)
    deleted: List[int] = []
    attempts = 0
    while len(rows) <= config.steps and attempts < 20 * config.steps:
        attempts += 1
        choice = int(rng.integers(4))
        if choice == 0 and len(router.V) > 1:
            op = ("del-vertex", router.V.sample((), rng))
        elif choice == 1 and deleted:
            op = ("add-vertex", deleted[int(rng.integers(len(deleted)))])
        elif choice == 2:
            load = router.loads(router.demand)
            new = random_demand(G, router.V, config.L, 1, rng, next_id, load)
            if not new:
                continue
            op = ("add-demand",) + new[0]
        elif router.demand:
            pids = sorted(router.demand)
            op = ("remove-demand", pids[int(rng.integers(len(pids)))])
        else:
            continue
        mark = len(router.level_checks)
        try:
            changed = apply_dynroute_op(router, op)
        except RouterError:
            continue
        if op[0] == "del-vertex":
            deleted.append(op[1])
        elif op[0] == "add-vertex":
            deleted.remove(op[1])
        elif op[0] == "add-demand":
            next_id += 1
        rows.append(dynroute_row(router, len(rows), op[0], changed, mark))
    return ExperimentResult(rows, DYNROUTE_COLUMNS)


def run_routing_experiment(config: RoutingConfig) -> ExperimentResult:
    """Sampler runs interleave deletions with path sampling; dynroute runs fuzz the router."""
    G = config.graph if config.graph is not None else build_random_shc(config.k, config.d, config.graph_seed)
    config.tau = coerce_tau(config.tau)
    if config.kind == "sample":
        return _sample_rows(config, G)
    if config.kind == "dynroute":
        return _dynroute_rows(config, G)
    raise ConfigError(f"unknown routing experiment {config.kind!r}")


def run_dynroute_script(router: DynDetRouter, script: List[tuple], strict: bool = True) -> ExperimentResult:
    """Replay a script of updates; rejected updates abort in strict mode."""
    rows = [dynroute_row(router, 0, "init", set(router.demand), 0)]
    for n, op in enumerate(script, start=1):
        mark = len(router.level_checks)
        try:
            changed = apply_dynroute_op(router, op)
        except (RouterError, KeyError, ValueError) as exc:
            if strict:
                return ExperimentResult(rows, DYNROUTE_COLUMNS, Failure(n, str(exc), script[:n]))
            rows.append(MetricsRow(n, op[0] + ":rejected", bound_ok=False))
            continue
        rows.append(dynroute_row(router, n, op[0], changed, mark))
        if strict and not rows[-1].bound_ok:
            return ExperimentResult(rows, DYNROUTE_COLUMNS, Failure(n, "bound check failed", script[:n]))
    return ExperimentResult(rows, DYNROUTE_COLUMNS)


def run_embed_script(router, script: List[tuple], strict: bool = True) -> ExperimentResult:
    """Delete host edges in order and record the per-step trim accounting."""
    rows = [MetricsRow(0, "init", remaining=len(router.alive))]
    adv = Adversary(SCRIPTED, script=script)
    n = 0
    while True:
        e = adv.next_edge(())
        if e is None:
            break
        n += 1
        try:
            trimmed = router.prune_step(e)
        except KeyError as exc:
            if strict:
                return ExperimentResult(rows, EMBED_COLUMNS, Failure(n, str(exc), script[:n]))
            rows.append(MetricsRow(n, "del-edge:rejected", bound_ok=False))
            continue
        last = router.last
        ok = (len(trimmed) <= (router.h + 1) * len(last["E_minus"])
              and len(last["affected"]) <= 2 * router.kappa)
        rows.append(MetricsRow(n, "del-edge", affected=len(last["affected"]),
                               removed=len(last["removed"]), trimmed=len(trimmed),
                               remaining=len(router.alive), bound_ok=ok))
        if strict and not ok:
            return ExperimentResult(rows, EMBED_COLUMNS, Failure(n, "trim bound failed", script[:n]))
    return ExperimentResult(rows, EMBED_COLUMNS)


# scripts

def parse_script(text: str, parse_vertex: Callable[[str], int]) -> List[tuple]:
    """Ops, one per line: del-vertex U | add-vertex U | del-edge U W |
    add-demand U W ID | remove-demand ID.  A bare label means del-vertex."""
    ops = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        kind, args = parts[0], parts[1:]
        try:
            if kind in ("del-vertex", "add-vertex") and len(args) == 1:
                ops.append((kind, parse_vertex(args[0])))
            elif kind == "del-edge" and len(args) == 2:
                ops.append((kind, parse_vertex(args[0]), parse_vertex(args[1])))
            elif kind == "add-demand" and len(args) == 3:
                ops.append((kind, parse_vertex(args[0]), parse_vertex(args[1]), int(args[2])))
            elif kind == "remove-demand" and len(args) == 1:
                ops.append((kind, int(args[0])))
            elif len(parts) == 1:
                ops.append(("del-vertex", parse_vertex(kind)))
            else:
                raise ConfigError(f"line {lineno}: cannot parse {line.strip()!r}")
        except (ValueError, KeyError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: {exc}") from exc
    return ops


def format_op(op: tuple, fmt: Callable[[int], str]) -> str:
    kind = op[0]
    if kind in ("del-vertex", "add-vertex"):
        return f"{kind} {fmt(op[1])}"
    if kind == "del-edge":
        return f"{kind} {fmt(op[1])} {fmt(op[2])}"
    if kind == "add-demand":
        return f"{kind} {fmt(op[1])} {fmt(op[2])} {op[3]}"
    return f"{kind} {op[1]}"

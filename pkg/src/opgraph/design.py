"""Algorithm design by iterated local search over graphs with intensified comparisons."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._seeding import derive_seed, make_rng
from .executor import RunConfig, run
from .graph import AlgorithmGraph, GraphConfig, GraphError, graph_hash, random_graph, random_move, validate

RunKey = tuple[int, int]  # (instance index, run index)

# favour operator swaps and parameter nudges over structural edits; order follows graph.MOVES
DESIGN_MOVE_WEIGHTS = (0.4, 0.25, 0.05, 0.2, 0.05, 0.05)
Estimator = Callable[[Sequence[AlgorithmGraph]], Sequence[float]]


class DesignError(RuntimeError):
    pass


@dataclass
class DesignTask:
    instances: list
    runs_per_instance: int = 10
    candidate_budget: int = 5000
    candidates_per_iteration: int = 10
    run_config: RunConfig = field(default_factory=RunConfig)
    seed: int = 0
    stagnation_limit: int = 5
    perturb_strength: int = 3
    n_initial: int = 300
    graph_config: GraphConfig = field(default_factory=lambda: GraphConfig(move_weights=DESIGN_MOVE_WEIGHTS))
    estimator: Estimator | None = None
    screen_fraction: float = 0.3
    validation_top: int = 5  # finalists re-run on fresh seeds before one is returned; 0 disables
    jobs: int = 1

    def __post_init__(self):
        if not self.instances:
            raise DesignError("a design task needs at least one instance")
        if self.runs_per_instance < 1 or self.candidates_per_iteration < 1:
            raise DesignError("run and candidate counts must be positive")
        if self.candidate_budget < 1:
            raise DesignError("the candidate budget does not cover a single intensification round")
        kinds = {p.kind for p in self.instances}
        if len(kinds) != 1:
            raise DesignError(f"instances mix problem kinds {sorted(kinds)}")

    @property
    def kind(self) -> str:
        return self.instances[0].kind

    def keys(self) -> list[RunKey]:
        """Round-robin order: first run on every instance, then the second, and so on."""
        return [(i, r) for r in range(self.runs_per_instance) for i in range(len(self.instances))]

    def validation_keys(self) -> list[RunKey]:
        """A second schedule of the same size on fresh run indices."""
        R = self.runs_per_instance
        return [(i, r) for r in range(R, 2 * R) for i in range(len(self.instances))]

    def run_seed(self, key: RunKey) -> int:
        # paired across graphs: every candidate meets the same seed on the same run
        return derive_seed("run", self.seed, key[0], key[1])


@dataclass
class PerformanceRecord:
    graph: AlgorithmGraph
    ledger: dict[RunKey, float] = field(default_factory=dict)

    @property
    def runs_completed(self) -> int:
        return len(self.ledger)

    @property
    def mean_fitness(self) -> float:
        return float(np.mean(list(self.ledger.values()))) if self.ledger else math.inf

    def mean_over(self, keys: Sequence[RunKey]) -> float:
        return float(np.mean([self.ledger[k] for k in keys]))


@dataclass
class TraceRow:
    candidate: int
    accepted: bool
    mean: float
    best_ever: float


@dataclass
class DesignState:
    incumbent: PerformanceRecord
    best_ever: PerformanceRecord
    candidates_evaluated: float = 0.0  # budget charged: runs used / full schedule, per candidate
    candidates_considered: int = 0
    runs_executed: int = 0
    trace: list[TraceRow] = field(default_factory=list)
    selected: PerformanceRecord | None = None  # returned graph, with its validation runs
    finalists: list[PerformanceRecord] = field(default_factory=list)

    def trace_csv(self) -> str:
        return design_trace_csv(self.trace)


def design_trace_csv(rows: Sequence[TraceRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["candidate", "accepted", "mean_fitness", "best_ever_mean"])
    for r in rows:
        w.writerow([r.candidate, int(r.accepted), repr(float(r.mean)), repr(float(r.best_ever))])
    return buf.getvalue()


def _one_run(args) -> float:
    graph, problem, config = args
    return run(graph, problem, config).best_fitness


class _Evaluator:
    """Executes runs for a task, reusing results of structurally identical graphs."""

    def __init__(self, task: DesignTask):
        self.task = task
        self.cache: dict[str, dict[RunKey, float]] = {}
        self.runs = 0
        self._pool = ProcessPoolExecutor(task.jobs) if task.jobs > 1 else None

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()

    def fill(self, record: PerformanceRecord, keys: Sequence[RunKey]) -> None:
        t = self.task
        h = graph_hash(record.graph)
        known = self.cache.setdefault(h, {})
        todo = [k for k in keys if k not in known]
        jobs = [(record.graph, t.instances[k[0]],
                 RunConfig(t.run_config.population_size, t.run_config.budget_fe, t.run_seed(k)))
                for k in todo]
        try:
            if self._pool is not None and len(jobs) > 1:
                values = list(self._pool.map(_one_run, jobs))
            else:
                values = [_one_run(j) for j in jobs]
        except Exception as exc:
            raise DesignError(f"graph {h} failed: {exc}") from exc
        self.runs += len(todo)
        known.update(zip(todo, values))
        for k in keys:
            record.ledger[k] = known[k]


def evaluate_full(graph: AlgorithmGraph, task: DesignTask, _ev: _Evaluator | None = None) -> PerformanceRecord:
    report = validate(graph, task.graph_config.max_pathway_ops, task.graph_config.max_pathways)
    if not report.ok:
        raise DesignError(f"graph {graph_hash(graph)} is invalid: {report}")
    ev = _ev or _Evaluator(task)
    rec = PerformanceRecord(graph)
    ev.fill(rec, task.keys())
    return rec


def _checkpoints(rounds: int) -> list[int]:
    out, c = [], 1
    while c < rounds:
        out.append(c)
        c *= 2
    return out + [rounds]


def intensify_compare(challenger: AlgorithmGraph, incumbent: PerformanceRecord, task: DesignTask,
                      _ev: _Evaluator | None = None) -> tuple[PerformanceRecord, PerformanceRecord, bool]:
    """Race a challenger against the incumbent on shared runs.

    Runs arrive in rounds of one run per instance; the challenger is checked after
    1, 2, 4, ... rounds and dropped as soon as its mean is worse than the incumbent's
    on the same runs. It wins only with a strictly lower mean over the full schedule.
    Returns (winner, challenger record, accepted).
    """
    if incumbent.runs_completed < 1:
        raise DesignError("incumbent has no recorded runs")
    keys = task.keys()
    if not set(keys) <= set(incumbent.ledger):
        raise DesignError("incumbent was evaluated on a different instance set")
    ev = _ev or _Evaluator(task)
    rec = PerformanceRecord(challenger)
    n_inst = len(task.instances)
    for rounds in _checkpoints(task.runs_per_instance):
        shared = keys[: rounds * n_inst]
        ev.fill(rec, shared)
        if rec.mean_over(shared) > incumbent.mean_over(shared):
            return incumbent, rec, False
    accepted = rec.mean_fitness < incumbent.mean_over(keys)
    return (rec if accepted else incumbent), rec, accepted


def perturb(graph: AlgorithmGraph, rng: np.random.Generator, strength: int = 3,
            config: GraphConfig = GraphConfig()) -> AlgorithmGraph:
    """Apply ``strength`` random valid moves in sequence."""
    g = graph
    for _ in range(strength):
        _, g = random_move(g, rng, config)
    if strength:
        g = g.with_metadata(move="perturb")
    return g


def _neighbours(graph, rng, task) -> list[AlgorithmGraph]:
    out = []
    for _ in range(task.candidates_per_iteration):
        move, g = random_move(graph, rng, task.graph_config)
        out.append(g.with_metadata(move=move))
    return out


def design(task: DesignTask, catalog=None) -> tuple[AlgorithmGraph, DesignState]:
    """Iterated local search in graph space. Returns the best-ever graph and the final state."""
    if catalog is not None and not list(catalog):
        raise DesignError("empty operator catalog")
    rng = make_rng("design", task.seed)
    ev = _Evaluator(task)
    try:
        return _design(task, catalog, rng, ev)
    finally:
        ev.close()


def _design(task, catalog, rng, ev):
    gcfg = task.graph_config
    start = random_graph(catalog, task.kind, rng, gcfg)
    inc = evaluate_full(start, task, ev)
    state = DesignState(inc, inc)
    state.trace.append(TraceRow(0, True, inc.mean_fitness, inc.mean_fitness))

    full = len(task.keys())
    reserve = task.validation_top if task.candidate_budget > 2 * task.validation_top else 0
    finalists = {graph_hash(inc.graph): inc}

    def budget_left():
        # a comparison may run the full schedule, so it starts only if that would still fit
        return state.candidates_evaluated + 1 <= task.candidate_budget - reserve + 1e-9

    def consider(graph) -> bool:
        state.candidates_considered += 1
        winner, rec, ok = intensify_compare(graph, state.incumbent, task, ev)
        state.candidates_evaluated += rec.runs_completed / full
        state.incumbent = winner
        if ok:
            finalists[graph_hash(winner.graph)] = winner
        if ok and winner.mean_fitness < state.best_ever.mean_fitness:
            state.best_ever = winner
        state.trace.append(TraceRow(state.candidates_considered, ok, rec.mean_over(list(rec.ledger)),
                                    state.best_ever.mean_fitness))
        return ok

    for _ in range(task.n_initial - 1):
        if not budget_left():
            break
        consider(random_graph(catalog, task.kind, rng, gcfg))

    stagnant = 0
    while budget_left():
        cands = _neighbours(state.incumbent.graph, rng, task)
        if task.estimator is not None:
            scores = np.asarray(task.estimator(cands), dtype=float)
            keep = max(1, math.ceil(task.screen_fraction * len(cands)))
            cands = [cands[i] for i in np.argsort(scores, kind="stable")[:keep]]
        changed = False
        for g in cands:
            if not budget_left():
                break
            changed |= consider(g)
        stagnant = 0 if changed else stagnant + 1
        if stagnant >= task.stagnation_limit and budget_left():
            # perturb the best graph found so far; the perturbed graph is taken unconditionally
            g = perturb(state.best_ever.graph, rng, task.perturb_strength, gcfg)
            state.candidates_considered += 1
            state.candidates_evaluated += 1
            state.incumbent = evaluate_full(g, task, ev)
            finalists[graph_hash(g)] = state.incumbent
            if state.incumbent.mean_fitness < state.best_ever.mean_fitness:
                state.best_ever = state.incumbent
            state.trace.append(TraceRow(state.candidates_considered, True, state.incumbent.mean_fitness,
                                        state.best_ever.mean_fitness))
            stagnant = 0
    state.selected = state.best_ever
    if reserve:
        # re-run the best fully evaluated graphs on fresh seeds to undo selection luck
        top = sorted(finalists.values(), key=lambda r: r.mean_fitness)[:reserve]
        vkeys = task.validation_keys()
        for rec in top:
            rec = PerformanceRecord(rec.graph, dict(rec.ledger))
            ev.fill(rec, vkeys)
            state.candidates_evaluated += 1
            state.finalists.append(rec)
        state.selected = min(state.finalists, key=lambda r: r.mean_fitness)
    state.runs_executed = ev.runs
    return state.selected.graph, state


def random_design(task: DesignTask, n_graphs: int, catalog=None) -> tuple[AlgorithmGraph, list[PerformanceRecord]]:
    """Reference: best of ``n_graphs`` random graphs, each fully evaluated on the task."""
    rng = make_rng("random-design", task.seed)
    ev = _Evaluator(task)
    try:
        recs = [evaluate_full(random_graph(catalog, task.kind, rng, task.graph_config), task, ev)
                for _ in range(n_graphs)]
    finally:
        ev.close()
    best = min(recs, key=lambda r: r.mean_fitness)
    return best.graph, recs


def heldout_mean(graph: AlgorithmGraph, instances: Sequence, runs: int, run_config: RunConfig,
                 seed: int) -> tuple[float, list[float]]:
    """Mean best fitness over ``runs`` seeded runs on each held-out instance."""
    vals = []
    for i, p in enumerate(instances):
        for r in range(runs):
            cfg = RunConfig(run_config.population_size, run_config.budget_fe, derive_seed("test", seed, i, r))
            vals.append(run(graph, p, cfg).best_fitness)
    return float(np.mean(vals)), vals

"""Runs an algorithm graph as an optimizer under the general prototype.

One outer iteration visits every pathway in order. A pathway activation is a
do-while loop over its route (choose, searches, update) that repeats until the
pathway's condition holds. Offspring are evaluated right before the update
vertex consumes them. The run stops once the evaluation budget is spent; the
check happens before each pass, so the last batch may overshoot by less than
one population.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from . import operators as ops
from .graph import (ALWAYS, BUDGET_CONSUMED, LOCAL_OPTIMUM, STAGNATION, AlgorithmGraph, ConditionSpec,
                    GraphError, InvalidGraphError, OperatorVertex, entry_condition, validate)
from .operators import CHOOSE, SEARCH, UPDATE
from .problems import CONTINUOUS, EvalCounter, SolutionSet, evaluate, random_solutions

ArchiveOp = Callable[[list, SolutionSet], list]


class ExecutionError(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    population_size: int = 20
    budget_fe: int = 5000
    seed: int = 0
    record_trace: bool = False

    def __post_init__(self):
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if self.budget_fe < self.population_size:
            raise ValueError(f"budget_fe={self.budget_fe} is below population_size={self.population_size}")


@dataclass(frozen=True)
class TraceEvent:
    iteration: int
    vertex: str
    fe: int
    best: float


@dataclass
class RunResult:
    best_fitness: float
    best_solution: np.ndarray
    history: list[float]
    evaluations_used: int
    iterations: int
    trace: list[TraceEvent] = field(default_factory=list)
    archives: list[list] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "best_fitness": float(self.best_fitness),
            "best_solution": np.asarray(self.best_solution).tolist(),
            "history": [float(h) for h in self.history],
            "evaluations_used": int(self.evaluations_used),
            "iterations": int(self.iterations),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def trace_csv(self) -> str:
        return trace_to_csv(self.trace)


def trace_to_csv(events: Sequence[TraceEvent]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "vertex", "fe", "best"])
    for e in events:
        w.writerow([e.iteration, e.vertex, e.fe, repr(float(e.best))])
    return buf.getvalue()


def _check_runnable(graph: AlgorithmGraph, problem) -> None:
    report = validate(graph, max_pathway_ops=10 ** 6, max_pathways=10 ** 6)
    if not report.ok:
        raise InvalidGraphError(report)
    if graph.kind != problem.kind:
        raise ops.KindMismatch(f"graph is built for {graph.kind}, problem is {problem.kind}")


def _blocks(n: int, q: int) -> list[np.ndarray]:
    return np.array_split(np.arange(n), q)


def _execute(graph: AlgorithmGraph, problem, config: RunConfig,
             archive_ops: Sequence[ArchiveOp] = ()) -> Iterator[TraceEvent]:
    _check_runnable(graph, problem)
    rng = np.random.default_rng(config.seed)
    counter = EvalCounter()
    budget = config.budget_fe
    S = evaluate(problem, random_solutions(problem, config.population_size, rng), counter)
    routes = [[graph.vertex(v) for v in r] for r in graph.routes()]
    conditions = [entry_condition(graph, e) for e in graph.pathways]
    states: dict[str, dict] = {v.instance_id: {} for v in graph.vertices}
    archives: list[list] = [[] for _ in archive_ops]
    best = S.best_fitness()
    best_x = S.decisions[S.best_index()].copy()
    history: list[float] = []
    iteration = 0
    yield TraceEvent(0, "init", counter.used, best)

    def one_pass(route: list[OperatorVertex], S_j: SolutionSet):
        nonlocal best, best_x
        X = S_j
        for v in route:
            entry = ops.get(v.op_id)
            if v.role == UPDATE:
                X = evaluate(problem, X, counter)
                X = ops.apply(entry, ops.OperatorIO(S_j, v.params, rng, problem, new=X, state=states[v.instance_id]))
                S_j = X
                i = S_j.best_index()
                if S_j.fitness[i] < best:
                    best = float(S_j.fitness[i])
                    best_x = S_j.decisions[i].copy()
                for a, op in enumerate(archive_ops):
                    archives[a] = op(archives[a], S_j)
            else:
                X = ops.apply(entry, ops.OperatorIO(X, v.params, rng, problem, state=states[v.instance_id]))
            yield TraceEvent(iteration, v.instance_id, counter.used, best)
        return S_j

    parallel = graph.schedule == "parallel"
    while counter.used < budget:
        iteration += 1
        blocks = _blocks(S.size, graph.q) if parallel else None
        for j, route in enumerate(routes):
            if counter.used >= budget:
                break
            S_j = S.take(blocks[j]) if parallel else S
            if S_j.size == 0:
                continue
            cond = conditions[j]
            start = counter.used
            stagnant = 0
            while True:
                before = S_j.best_fitness()
                S_j = yield from one_pass(route, S_j)
                improved = S_j.best_fitness() < before
                stagnant = 0 if improved else stagnant + 1
                if counter.used >= budget or _condition_met(cond, counter.used - start, stagnant, improved):
                    break
            if parallel:
                S = _write_back(S, blocks[j], S_j)
            else:
                S = S_j
        history.append(S.best_fitness())
    return RunResult(best, best_x, history, counter.used, iteration, archives=archives)


def _condition_met(cond: ConditionSpec, fe_spent: int, stagnant: int, improved: bool) -> bool:
    if cond.kind == ALWAYS:
        return True
    if cond.kind == BUDGET_CONSUMED:
        return fe_spent >= cond.threshold
    if cond.kind == STAGNATION:
        return stagnant >= cond.threshold
    if cond.kind == LOCAL_OPTIMUM:
        return not improved
    raise GraphError(f"unknown condition {cond.kind}")


def _write_back(S: SolutionSet, idx: np.ndarray, S_j: SolutionSet) -> SolutionSet:
    if S_j.size != idx.size:
        raise ExecutionError("a parallel pathway changed its subpopulation size")
    dec, fit, ev = S.decisions.copy(), S.fitness.copy(), S.evaluated.copy()
    dec[idx], fit[idx], ev[idx] = S_j.decisions, S_j.fitness, S_j.evaluated
    return SolutionSet(dec, fit, ev)


class _Trace:
    """Iterator over trace events that keeps the generator's final RunResult."""

    def __init__(self, gen):
        self._gen = gen
        self.result: RunResult | None = None

    def __iter__(self):
        return self

    def __next__(self) -> TraceEvent:
        try:
            return next(self._gen)
        except StopIteration as stop:
            self.result = stop.value
            raise


def step_trace(graph: AlgorithmGraph, problem, config: RunConfig = RunConfig(),
               archive_ops: Sequence[ArchiveOp] = ()) -> _Trace:
    """Yield one (iteration, vertex, FE, best-so-far) event per fired vertex."""
    return _Trace(_execute(graph, problem, config, archive_ops))


def run(graph: AlgorithmGraph, problem, config: RunConfig = RunConfig(),
        archive_ops: Sequence[ArchiveOp] = ()) -> RunResult:
    tr = step_trace(graph, problem, config, archive_ops)
    events = list(tr) if config.record_trace else None
    if events is None:
        for _ in tr:
            pass
    result = tr.result
    if events is not None:
        result.trace = events
    return result


# ---------------------------------------------------------------------------
# structure templates

TEMPLATES = ("serial", "variable_neighborhood", "iterated_local_search", "memetic", "parallel_ensemble")

OpSpec = str | tuple[str, Sequence[float]]


def _resolve(spec: OpSpec, role: str) -> tuple[str, tuple[float, ...]]:
    op_id, params = (spec, None) if isinstance(spec, str) else (spec[0], spec[1])
    entry = ops.get(op_id)
    if entry.role != role:
        raise GraphError(f"{entry.op_id} has role {entry.role}, template slot expects {role}")
    return entry.op_id, ops.check_params(entry, entry.defaults() if params is None else params)


def instantiate_structure(template: str, choose: OpSpec, searches: Sequence[OpSpec], update: OpSpec,
                          population_size: int = 20, kind: str = CONTINUOUS) -> AlgorithmGraph:
    """Build a graph for one of the classic metaheuristic structures.

    ``serial`` chains every search in one pathway. The other templates give
    each search its own pathway branching from a shared choose vertex and
    merging into a shared update vertex:

    * variable_neighborhood: every pathway loops until a local optimum;
    * iterated_local_search: local search until a local optimum, then one
      perturbation pass (``budget_consumed(population_size)``);
    * memetic: one pass of the first search, then the second until a local optimum;
    * parallel_ensemble: pathways run on disjoint slices of the population.
    """
    if template not in TEMPLATES:
        raise GraphError(f"unknown template {template!r}; choose from {TEMPLATES}")
    if not searches:
        raise GraphError("a template needs at least one search operator")
    c_id, c_par = _resolve(choose, CHOOSE)
    s_res = [_resolve(s, SEARCH) for s in searches]
    u_id, u_par = _resolve(update, UPDATE)
    n = len(s_res)

    if template == "serial":
        verts = [OperatorVertex("v0", CHOOSE, c_id, c_par, ConditionSpec(ALWAYS))]
        verts += [OperatorVertex(f"v{i + 1}", SEARCH, op, p) for i, (op, p) in enumerate(s_res)]
        verts.append(OperatorVertex(f"v{n + 1}", UPDATE, u_id, u_par))
        ids = [v.instance_id for v in verts]
        return AlgorithmGraph(tuple(verts), tuple(zip(ids[:-1], ids[1:])), ("v0",), kind=kind)

    if template == "iterated_local_search":
        if n != 2:
            raise GraphError("iterated_local_search needs exactly two searches (local, perturbation)")
        conds = [ConditionSpec(LOCAL_OPTIMUM), ConditionSpec(BUDGET_CONSUMED, population_size)]
    elif template == "memetic":
        if n != 2:
            raise GraphError("memetic needs exactly two searches (global, local)")
        conds = [ConditionSpec(BUDGET_CONSUMED, population_size), ConditionSpec(LOCAL_OPTIMUM)]
    elif template == "variable_neighborhood":
        conds = [ConditionSpec(LOCAL_OPTIMUM)] * n
    else:
        conds = [ConditionSpec(ALWAYS)] * n

    verts = [OperatorVertex("v0", CHOOSE, c_id, c_par)]
    verts += [OperatorVertex(f"v{i + 1}", SEARCH, op, p, conds[i]) for i, (op, p) in enumerate(s_res)]
    u = f"v{n + 1}"
    verts.append(OperatorVertex(u, UPDATE, u_id, u_par))
    edges = [("v0", f"v{i + 1}") for i in range(n)] + [(f"v{i + 1}", u) for i in range(n)]
    schedule = "parallel" if template == "parallel_ensemble" else "serial"
    return AlgorithmGraph(tuple(verts), tuple(edges), tuple(f"v{i + 1}" for i in range(n)),
                          kind=kind, schedule=schedule)

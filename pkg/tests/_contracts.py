"""Property checks shared by the operator tests and the acceptance run."""
from __future__ import annotations

import numpy as np

from opgraph import operators as ops
from opgraph.problems import BENCHMARKS, evaluate, make_beamform, make_benchmark, random_solutions

# parameter settings that should turn a search operator into the identity
IDENTITY_PARAMS = {
    "cross_arithmetic": (0.0,),
    "cross_sim_binary": (0.0, 20.0),
    "cross_point_one": (0.0,),
    "cross_point_two": (0.0,),
    "cross_point_n": (0.0, 3.0),
    "cross_point_uniform": (0.0,),
    "search_mu_cauchy": (1.0, 0.0),
    "search_mu_gaussian": (1.0, 0.0),
    "search_mu_polynomial": (0.0, 20.0),
    "search_mu_uniform": (0.0,),
    "search_pso": (0.0, 0.0, 0.0),
    "search_de_current": (0.0, 0.5),
    "search_de_current_best": (0.0, 0.5),
    "search_reset_rand": (0.0,),
    "search_reset_creep": (0.0,),
}


def _problem(kind: str, rng: np.random.Generator):
    if kind == "continuous":
        fid = sorted(BENCHMARKS)[int(rng.integers(len(BENCHMARKS)))]
        return make_benchmark(fid, int(rng.integers(1, 7)), int(rng.integers(1000)))
    return make_beamform(1, 1, int(rng.integers(1, 7)), int(rng.integers(1, 4)), seed=int(rng.integers(1000)))


def _params(entry, rng):
    return tuple(p.sample(rng) for p in entry.params)


def _rows_subset(out: np.ndarray, pool: np.ndarray) -> bool:
    return all((pool == row).all(axis=1).any() for row in out)


def operator_trial(entry: ops.OperatorCatalogEntry, kind: str, trial: int) -> list[str]:
    """One seeded trial: returns the list of violated properties (empty when clean)."""
    rng = np.random.default_rng([trial, sum(map(ord, entry.op_id))])
    problem = _problem(kind, rng)
    n = int(rng.integers(2, 9))
    S = evaluate(problem, random_solutions(problem, n, rng))
    params = _params(entry, rng)
    new = evaluate(problem, random_solutions(problem, n, rng)) if entry.role == "update" else None
    seed = int(rng.integers(2 ** 31))

    def call(p):
        io = ops.OperatorIO(S.take(np.arange(n)), p, np.random.default_rng(seed), problem,
                            new=None if new is None else new.take(np.arange(n)))
        return ops.apply(entry, io)

    bad = []
    out = call(params)
    if out.size != n:
        bad.append(f"size {out.size} != {n}")
    if not (np.all(out.decisions >= problem.lower) and np.all(out.decisions <= problem.upper)):
        bad.append("left the bounds")
    if kind == "discrete" and not np.issubdtype(out.decisions.dtype, np.integer):
        bad.append("discrete output is not integral")
    again = call(params)
    if not (np.array_equal(out.decisions, again.decisions) and np.array_equal(out.fitness, again.fitness)):
        bad.append("not deterministic under a fixed seed")

    if entry.role == "choose":
        if not _rows_subset(out.decisions, S.decisions):
            bad.append("chose a solution outside S")
        if entry.op_id == "choose_traverse" and not np.array_equal(out.decisions, S.decisions):
            bad.append("traverse reordered S")
    elif entry.role == "update":
        pool = np.concatenate([S.decisions, new.decisions])
        if not _rows_subset(out.decisions, pool) or not out.evaluated.all():
            bad.append("update produced a solution outside S and S_new")
        # every offspring strictly better than its parent must be accepted
        better = evaluate(problem, random_solutions(problem, n, rng))
        order = np.argsort(better.fitness)
        worse_S = S.take(np.arange(n))
        worse_S.fitness = better.fitness[order[-1]] + 1.0 + np.arange(n, dtype=float)
        io = ops.OperatorIO(worse_S, params, np.random.default_rng(seed), problem, new=better)
        res = ops.apply(entry, io)
        if entry.op_id == "update_round_robin":
            if res.fitness.min() != better.fitness.min():
                bad.append("round robin dropped the best solution")
        elif not np.array_equal(np.sort(res.fitness), np.sort(better.fitness)):
            bad.append("rejected an improving move")
    else:
        if out.evaluated.any():
            bad.append("search output marked as evaluated")
        ident = IDENTITY_PARAMS.get(entry.op_id)
        if ident is not None and not np.array_equal(call(ident).decisions, S.decisions):
            bad.append(f"{ident} is not the identity")
        if entry.op_id == "search_cma":
            flat = call((0.0,)).decisions
            if problem.dimension and not np.allclose(flat, flat[0]):
                bad.append("sigma 0 did not collapse onto the mean")
        if entry.op_id == "search_reset_one" and np.any((out.decisions != S.decisions).sum(axis=1) > 1):
            bad.append("reset_one changed more than one variable")
        if entry.op_id == "search_reset_creep" and np.any(np.abs(out.decisions - S.decisions) > 1):
            bad.append("creep moved more than one step")
    return bad


def operator_contract(entry: ops.OperatorCatalogEntry, kind: str, trials: int = 1000) -> list[str]:
    failures = []
    for t in range(trials):
        failures += [f"trial {t}: {m}" for m in operator_trial(entry, kind, t)]
        if len(failures) > 5:
            break
    return failures


def all_entries():
    seen = set()
    for kind in ("continuous", "discrete"):
        for e in ops.catalog(kind):
            if (e.op_id, kind) not in seen:
                seen.add((e.op_id, kind))
                yield kind, e


def graph_sweep(n_graphs: int, seed: int = 0) -> tuple[int, list[str]]:
    """Validate random graphs, their neighbours and perturbations; returns (checked, failures)."""
    from opgraph.design import perturb
    from opgraph.graph import GraphConfig, deserialize, neighbors, random_graph, serialize, validate

    rng = np.random.default_rng(seed)
    cfg = GraphConfig()
    checked, failures = 0, []
    for i in range(n_graphs):
        kind = ("continuous", "discrete")[i % 2]
        g = random_graph(None, kind, rng, cfg)
        batch = [g, *neighbors(g, rng, cfg, n=3), perturb(g, rng, 3, cfg)]
        for h in batch:
            checked += 1
            rep = validate(h)
            if not rep.ok:
                failures.append(f"graph {i}: {rep}")
            if deserialize(serialize(h)) != h:
                failures.append(f"graph {i}: serialization round trip changed the graph")
    return checked, failures


class StubProblem:
    """Continuous stub whose k-th evaluation batch scores -min(k, improving); later batches stall."""

    kind = "continuous"
    id = "stub"

    def __init__(self, dimension: int = 2, improving: int = 3):
        self.dimension = dimension
        self.lower = np.full(dimension, -1.0)
        self.upper = np.full(dimension, 1.0)
        self.improving = improving
        self.calls = 0
        self.name = "stub"

    def objective(self, X):
        k = self.calls
        self.calls += 1
        return np.full(np.atleast_2d(X).shape[0], -float(min(k, self.improving)))


def fired(graph, population: int, budget: int, improving: int = 3):
    """(vertex, fe) for every fired vertex on a fresh stub problem."""
    from opgraph.executor import RunConfig, step_trace

    tr = step_trace(graph, StubProblem(improving=improving), RunConfig(population, budget, seed=0))
    return [(e.vertex, e.fe) for e in tr], tr.result


SEARCHES = ["search_mu_gaussian", "search_mu_uniform"]


def expand(routes, passes, cost, start):
    """Expected (vertex, fe) events when pathway ``p`` makes one pass for each digit in ``passes``."""
    out, fe = [("init", start)], start
    for p in passes:
        route = routes[int(p)]
        for v in route[:-1]:
            out.append((v, fe))
        fe += cost
        out.append((route[-1], fe))
    return out


PAIR = [["v0", "v1", "v3"], ["v0", "v2", "v3"]]

# stub: evaluation batches 1-3 improve, all later batches stall
SCHEDULES = {
    "serial": ({}, 16, [["v0", "v1", "v2", "v3"]], "000", 4),
    # each neighbourhood until no improvement
    "variable_neighborhood": ({}, 36, PAIR, "0000" "1" "0" "1" "0", 4),
    # local search to a local optimum, then a kick of budget_consumed(8) = two passes
    "iterated_local_search": ({"population_size": 8}, 36, PAIR, "0000" "11" "0" "1", 4),
    # first search for budget_consumed(8), second to a local optimum
    "memetic": ({"population_size": 8}, 36, PAIR, "00" "11" "00" "1" "0", 4),
    # pathways on disjoint halves of the population, one pass each
    "parallel_ensemble": ({}, 36, PAIR, "01" * 8, 2),
}

"""Classic comparison algorithms as fixed graphs, plus two beamforming reference procedures."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .executor import RunConfig, RunResult, instantiate_structure, run
from .graph import AlgorithmGraph
from .problems import CONTINUOUS, DISCRETE, BeamformInstance

GRAPH_BASELINES = ("GA", "ILS", "SA", "DE", "PSO", "EDA", "CMA-ES", "random_search")
NATIVE_BASELINES = ("sequential_beamform", "random_beamform")


class BaselineError(ValueError):
    pass


@dataclass(frozen=True)
class BaselineSpec:
    name: str
    kind: str
    graph: AlgorithmGraph | None = None
    native: str | None = None
    params: dict = field(default_factory=dict)


def _mut_rate(dimension: int | None) -> float:
    return 0.1 if not dimension else min(1.0, 1.0 / dimension)


def baseline(name: str, problem_kind: str, dimension: int | None = None) -> BaselineSpec:
    """Return a runnable baseline. ``dimension`` sets per-gene mutation rates to 1/D when given."""
    if name in NATIVE_BASELINES:
        if problem_kind != DISCRETE:
            raise ops.KindMismatch(f"{name} only applies to beamforming instances")
        return BaselineSpec(name, problem_kind, native=name)
    pm = _mut_rate(dimension)
    disc = problem_kind == DISCRETE
    if name == "GA":
        mutation = ("search_reset_rand", (pm,)) if disc else ("search_mu_uniform", (pm,))
        g = instantiate_structure("serial", ("choose_tournament", (2,)),
                                  [("cross_point_one", (0.9,)), mutation], "update_pairwise",
                                  kind=problem_kind)
    elif name == "DE":
        _require(name, problem_kind, CONTINUOUS)
        g = instantiate_structure("serial", "choose_traverse", [("search_de_current", (0.5, 0.9))],
                                  "update_pairwise", kind=problem_kind)
    elif name == "PSO":
        _require(name, problem_kind, CONTINUOUS)
        g = instantiate_structure("serial", "choose_traverse", [("search_pso", (0.7298, 1.4962, 1.4962))],
                                  "update_always", kind=problem_kind)
    elif name == "EDA":
        _require(name, problem_kind, CONTINUOUS)
        g = instantiate_structure("serial", "choose_traverse", [("search_eda", (0.5,))],
                                  "update_always", kind=problem_kind)
    elif name == "CMA-ES":
        _require(name, problem_kind, CONTINUOUS)
        g = instantiate_structure("serial", "choose_traverse", [("search_cma", (0.3,))],
                                  "update_always", kind=problem_kind)
    elif name == "ILS":
        # one-coordinate moves for local search, a wider reset as the kick
        if disc:
            local, kick = ("search_reset_one", ()), ("search_reset_rand", (min(1.0, 3 * pm),))
        else:
            local, kick = ("search_mu_gaussian", (pm, 0.01)), ("search_mu_uniform", (min(1.0, 3 * pm),))
        g = instantiate_structure("iterated_local_search", "choose_traverse", [local, kick],
                                  "update_pairwise", kind=problem_kind)
    elif name == "SA":
        move = ("search_reset_one", ()) if disc else ("search_mu_gaussian", (pm, 0.05))
        g = instantiate_structure("serial", "choose_traverse", [move],
                                  ("update_simulated_annealing", (0.1, 0.95)), kind=problem_kind)
    elif name == "random_search":
        reinit = "reinit_discrete" if disc else "reinit_continuous"
        g = instantiate_structure("serial", "choose_traverse", [reinit], "update_greedy", kind=problem_kind)
    else:
        raise BaselineError(f"unknown baseline {name!r}; choose from {GRAPH_BASELINES + NATIVE_BASELINES}")
    return BaselineSpec(name, problem_kind, graph=g.with_metadata(name=name))


def _require(name: str, kind: str, needed: str) -> None:
    if kind != needed:
        raise ops.KindMismatch(f"{name} needs a {needed} problem, got {kind}")


def run_baseline(spec: BaselineSpec, problem, config: RunConfig) -> RunResult:
    if spec.graph is not None:
        return run(spec.graph, problem, config)
    rng = np.random.default_rng(config.seed)
    if spec.native == "sequential_beamform":
        x, f = sequential_beamform(problem, rng)
        used = problem.N * problem.levels + 1
    else:
        x, f = random_beamform(problem, config.budget_fe, rng)
        used = config.budget_fe
    return RunResult(f, x, [f], used, 1)


# ---------------------------------------------------------------------------
# beamforming references

def sequential_beamform(instance: BeamformInstance, rng: np.random.Generator | None = None,
                        start: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """One coordinate sweep: each element takes its best phase while the others stay fixed."""
    if start is None:
        rng = rng or np.random.default_rng(0)
        x = rng.integers(0, instance.levels, size=instance.N)
    else:
        x = np.asarray(start, dtype=np.int64).copy()
    levels = np.arange(instance.levels)
    f = float(instance.objective(x[None])[0])
    for n in range(instance.N):
        cand = np.repeat(x[None], levels.size, axis=0)
        cand[:, n] = levels
        vals = instance.objective(cand)
        k = int(np.argmin(vals))
        if vals[k] <= f:
            x, f = cand[k], float(vals[k])
    return x, f


def random_beamform(instance: BeamformInstance, samples: int,
                    rng: np.random.Generator) -> tuple[np.ndarray, float]:
    if samples < 1:
        raise BaselineError("random_beamform needs at least one sample")
    best_x, best_f = None, np.inf
    chunk = 4096
    for start in range(0, samples, chunk):
        X = rng.integers(0, instance.levels, size=(min(chunk, samples - start), instance.N))
        f = instance.objective(X)
        k = int(np.argmin(f))
        if f[k] < best_f:
            best_x, best_f = X[k].copy(), float(f[k])
    return best_x, best_f


def brute_force_beamform(instance: BeamformInstance) -> tuple[np.ndarray, float]:
    """Exhaustive enumeration; only sensible when alphabet**N is small."""
    total = instance.levels ** instance.N
    if total > 1 << 16:
        raise BaselineError(f"{total} configurations is too many to enumerate")
    idx = np.arange(total)
    X = np.stack([(idx // instance.levels ** n) % instance.levels
                  for n in range(instance.N)], axis=1)
    f = instance.objective(X)
    k = int(np.argmin(f))
    return X[k], float(f[k])

import itertools

import numpy as np
import pytest

from opgraph import library
from opgraph.baselines import (
    GRAPH_BASELINES, BaselineError, BaselineSpec, baseline, brute_force_beamform, random_beamform, run_baseline,
    sequential_beamform,
)
from opgraph.executor import RunConfig
from opgraph.graph import validate
from opgraph.operators import KindMismatch
from opgraph.problems import beamform_fitness, make_beamform, make_benchmark

SMALL = [(1, 1), (4, 1), (6, 2), (12, 1), (4, 3), (3, 4)]  # (N, b) with N*b <= 12


def _enumerate(inst):
    """Independent oracle: loop over every phase vector."""
    best = np.inf
    for x in itertools.product(range(2 ** inst.b), repeat=inst.N):
        best = min(best, beamform_fitness(inst, np.array(x)))
    return best


@pytest.mark.parametrize("N,b", SMALL)
def test_brute_force_matches_enumeration(N, b):
    inst = make_beamform(2, 2, N, b, seed=N * 10 + b)
    x, f = brute_force_beamform(inst)
    assert f == pytest.approx(_enumerate(inst), rel=1e-12)
    assert beamform_fitness(inst, x) == pytest.approx(f, rel=1e-12)


def test_brute_force_refuses_huge():
    with pytest.raises(BaselineError):
        brute_force_beamform(make_beamform(1, 1, 40, 1))


@pytest.mark.parametrize("b", [1, 2, 3])
def test_sequential_single_element_is_exact(b):
    for seed in range(5):
        inst = make_beamform(2, 4, 1, b, seed=seed)
        assert sequential_beamform(inst, np.random.default_rng(seed))[1] == brute_force_beamform(inst)[1]


@pytest.mark.parametrize("N,b", SMALL)
def test_nobody_beats_the_oracle(N, b):
    inst = make_beamform(2, 2, N, b, seed=1)
    oracle = brute_force_beamform(inst)[1]
    results = [sequential_beamform(inst, np.random.default_rng(0))[1],
               random_beamform(inst, 200, np.random.default_rng(0))[1]]
    for name in ("GA", "ILS", "SA", "random_search"):
        results.append(run_baseline(baseline(name, "discrete", N), inst, RunConfig(6, 120, 0)).best_fitness)
    for g in (library.beamform_design(), library.restoration_design()):
        results.append(run_baseline(BaselineSpec("designed", "discrete", graph=g), inst, RunConfig(6, 120, 0)).best_fitness)
    assert min(results) >= oracle - 1e-12


def test_sequential_never_worsens_start():
    inst = make_beamform(2, 4, 30, 2, seed=3)
    start = np.zeros(30, dtype=int)
    _, f = sequential_beamform(inst, start=start)
    assert f <= beamform_fitness(inst, start)


def test_random_beamform_is_best_of_samples():
    inst = make_beamform(2, 2, 5, 1, seed=0)
    x, f = random_beamform(inst, 10, np.random.default_rng(4))
    X = np.random.default_rng(4).integers(0, 2, size=(10, 5))
    assert f == pytest.approx(inst.objective(X).min())
    with pytest.raises(BaselineError):
        random_beamform(inst, 0, np.random.default_rng(0))


@pytest.mark.parametrize("name", GRAPH_BASELINES)
def test_graph_baselines_validate(name):
    spec = baseline(name, "continuous", 10)
    assert validate(spec.graph).ok
    assert spec.graph.metadata["name"] == name
    res = run_baseline(spec, make_benchmark("f1", 5, 0), RunConfig(10, 200, 0))
    assert res.evaluations_used >= 200


def test_discrete_only_where_meaningful():
    for name in ("DE", "PSO", "EDA", "CMA-ES"):
        with pytest.raises(KindMismatch):
            baseline(name, "discrete")
    for name in ("sequential_beamform", "random_beamform"):
        with pytest.raises(KindMismatch):
            baseline(name, "continuous")
    with pytest.raises(BaselineError):
        baseline("tabu", "continuous")


def test_mutation_rate_follows_dimension():
    ga = baseline("GA", "continuous", 20).graph
    assert [v.params for v in ga.vertices if v.op_id == "search_mu_uniform"] == [(0.05,)]
    ga = baseline("GA", "discrete").graph
    assert [v.params for v in ga.vertices if v.op_id == "search_reset_rand"] == [(0.1,)]


def test_native_baseline_result_shape():
    inst = make_beamform(2, 2, 6, 1, seed=0)
    res = run_baseline(baseline("random_beamform", "discrete"), inst, RunConfig(1, 64, 0))
    assert res.evaluations_used == 64
    res = run_baseline(baseline("sequential_beamform", "discrete"), inst, RunConfig(1, 64, 0))
    assert res.evaluations_used == 6 * 2 + 1


def test_cma_reaches_sphere_optimum():
    res = run_baseline(baseline("CMA-ES", "continuous", 5), make_benchmark("f1", 5, 0), RunConfig(20, 6000, 0))
    assert res.best_fitness - (-450.0) < 1e-2

import numpy as np
import pytest

from opgraph import library
from opgraph.executor import TEMPLATES, RunConfig, instantiate_structure, run, step_trace, trace_to_csv
from opgraph.graph import GraphError, InvalidGraphError, deserialize
from opgraph.operators import KindMismatch
from opgraph.problems import make_beamform, make_benchmark

from _contracts import SCHEDULES, SEARCHES, StubProblem, expand, fired

@pytest.mark.parametrize("template", TEMPLATES)
def test_template_schedules(template):
    kw, budget, routes, passes, cost = SCHEDULES[template]
    g = instantiate_structure(template, "choose_traverse", SEARCHES, "update_always", **kw)
    assert g.routes() == routes
    events, result = fired(g, 4, budget)
    assert events == expand(routes, passes, cost, 4)
    assert result.evaluations_used == budget


def test_f9_inner_loop_budget():
    # inner pathway rescaled to 50 FE; population 10 means five inner passes per outer pass
    g = library.designed_f9(inner_budget=50)
    events, result = fired(g, 10, 310, improving=100)
    routes = g.routes()
    assert events == expand(routes, ("0" + "1" * 5) * 5, 10, 10)
    spent, start, last = [], None, None
    for v, fe in events[1:] + [("v0", None)]:
        if v == "v0" and start is not None:
            spent.append(last - start)
        if v == "v2":
            start = fe
        if v == "v5":
            last = fe
    assert spent == [50] * 5
    assert result.evaluations_used == 310


def test_budget_checked_before_each_pass():
    g = instantiate_structure("serial", "choose_traverse", SEARCHES, "update_always")
    res = run(g, StubProblem(), RunConfig(4, 18, 0))
    # a pass starting below the budget may finish above it
    assert res.evaluations_used == 20


def test_stagnation_condition():
    g = deserialize("graph q=1 pathways=v0\nv0 choose choose_traverse cond=stagnation:2\n"
                    "v1 search search_mu_uniform 0.5\nv2 update update_always\nv0 -> v1\nv1 -> v2\n")
    events, _ = fired(g, 4, 24)
    # three improving passes, then two stalled ones end the pathway loop
    assert [v for v, _ in events if v == "v2"] == ["v2"] * 5
    assert events[-1] == ("v2", 24)


def test_template_shapes():
    g = instantiate_structure("iterated_local_search", "choose_traverse", SEARCHES, "update_pairwise", 20)
    assert [g.vertex(e).condition.text() for e in g.pathways] == ["local_optimum", "budget_consumed:20"]
    g = instantiate_structure("parallel_ensemble", "choose_traverse", SEARCHES, "update_pairwise")
    assert g.schedule == "parallel"
    assert instantiate_structure("serial", "choose_traverse", ["search_eda"], "update_greedy") == library.designed_f1()


def test_template_errors():
    with pytest.raises(GraphError):
        instantiate_structure("tabu", "choose_traverse", SEARCHES, "update_always")
    with pytest.raises(GraphError):
        instantiate_structure("serial", "choose_traverse", [], "update_always")
    with pytest.raises(GraphError):
        instantiate_structure("serial", "update_always", SEARCHES, "update_always")


def test_run_is_deterministic():
    p = make_benchmark("f9", 5, 0)
    g = library.designed_f2()
    a = run(g, p, RunConfig(10, 500, 3))
    b = run(g, p, RunConfig(10, 500, 3))
    assert a.best_fitness == b.best_fitness
    assert np.array_equal(a.best_solution, b.best_solution)
    assert a.history == b.history
    assert run(g, p, RunConfig(10, 500, 4)).best_fitness != a.best_fitness


def test_best_is_running_minimum():
    p = make_benchmark("f1", 5, 0)
    res = run(library.designed_f2(), p, RunConfig(10, 1000, 0, record_trace=True))
    bests = [e.best for e in res.trace]
    assert all(b <= a for a, b in zip(bests, bests[1:]))
    assert res.best_fitness == bests[-1]
    assert p.objective(res.best_solution[None])[0] == pytest.approx(res.best_fitness)
    assert len(res.history) == res.iterations


def test_trace_csv_and_json():
    res = run(library.designed_f1(), make_benchmark("f1", 3, 0), RunConfig(5, 20, 0, record_trace=True))
    lines = res.trace_csv().splitlines()
    assert lines[0] == "iteration,vertex,fe,best"
    assert lines[1].startswith("0,init,5,")
    assert trace_to_csv(res.trace) == res.trace_csv()
    assert '"evaluations_used": 20' in res.to_json()


def test_step_trace_exposes_result():
    tr = step_trace(library.designed_f1(), make_benchmark("f1", 3, 0), RunConfig(5, 20, 0))
    assert tr.result is None
    n = sum(1 for _ in tr)
    assert n == 1 + 3 * 3
    assert tr.result.evaluations_used == 20


def test_archive_hook_sees_every_update():
    seen = []

    def archive(arch, S):
        seen.append(S.size)
        return arch + [S.best_fitness()]

    res = run(library.designed_f1(), make_benchmark("f1", 3, 0), RunConfig(5, 20, 0), archive_ops=[archive])
    assert seen == [5, 5, 5]
    assert len(res.archives[0]) == 3


def test_rejects_kind_mismatch_and_invalid():
    with pytest.raises(KindMismatch):
        run(library.beamform_design(), make_benchmark("f1", 3, 0), RunConfig(5, 20))
    bad = deserialize("graph q=1 pathways=v0\nv0 choose choose_traverse\nv1 update update_always\nv0 -> v1\n")
    with pytest.raises(InvalidGraphError):
        run(bad, make_benchmark("f1", 3, 0), RunConfig(5, 20))


def test_run_config_checks():
    with pytest.raises(ValueError):
        RunConfig(0, 10)
    with pytest.raises(ValueError):
        RunConfig(20, 10)


def test_discrete_run_stays_integral():
    inst = make_beamform(2, 2, 8, 2, seed=0)
    res = run(library.beamform_design(), inst, RunConfig(10, 200, 0))
    assert res.best_solution.dtype.kind == "i"
    assert res.best_solution.min() >= 0 and res.best_solution.max() <= 3

"""Reference graphs of previously designed algorithms, used as fixtures and regression anchors."""
from __future__ import annotations

from .graph import ALWAYS, BUDGET_CONSUMED, AlgorithmGraph, ConditionSpec, OperatorVertex
from .operators import CHOOSE, SEARCH, UPDATE, get
from .problems import CONTINUOUS, DISCRETE


def _serial(kind: str, steps, name: str) -> AlgorithmGraph:
    verts = []
    for i, (role, op_id, params) in enumerate(steps):
        if params is None:
            params = get(op_id).defaults()
        cond = ConditionSpec(ALWAYS) if i == 0 else None
        verts.append(OperatorVertex(f"v{i}", role, op_id, tuple(params), cond))
    edges = [(f"v{i}", f"v{i + 1}") for i in range(len(verts) - 1)]
    return AlgorithmGraph(tuple(verts), tuple(edges), ("v0",), kind=kind, metadata={"name": name})


def designed_f1() -> AlgorithmGraph:
    """EDA-based design for the sphere family."""
    return _serial(CONTINUOUS, [
        (CHOOSE, "choose_traverse", None),
        (SEARCH, "search_eda", None),
        (UPDATE, "update_greedy", None),
    ], "designed_f1")


def designed_f2() -> AlgorithmGraph:
    return _serial(CONTINUOUS, [
        (CHOOSE, "choose_tournament", None),
        (SEARCH, "cross_arithmetic", (0.21,)),
        (SEARCH, "search_mu_polynomial", (0.23, 25.68)),
        (UPDATE, "update_pairwise", ()),
    ], "designed_f2")


def designed_f9(inner_budget: int = 500) -> AlgorithmGraph:
    """Two chained pathways; the second loops until ``inner_budget`` evaluations are spent."""
    verts = (
        OperatorVertex("v0", CHOOSE, "choose_traverse", (), ConditionSpec(ALWAYS)),
        OperatorVertex("v1", SEARCH, "search_mu_polynomial", (0.19, 33.03)),
        OperatorVertex("v2", UPDATE, "update_pairwise", ()),
        OperatorVertex("v3", CHOOSE, "choose_traverse", (), ConditionSpec(BUDGET_CONSUMED, inner_budget)),
        OperatorVertex("v4", SEARCH, "search_mu_uniform", (0.081,)),
        OperatorVertex("v5", UPDATE, "update_pairwise", ()),
    )
    edges = (("v0", "v1"), ("v1", "v2"), ("v2", "v3"), ("v3", "v4"), ("v4", "v5"))
    return AlgorithmGraph(verts, edges, ("v0", "v3"), kind=CONTINUOUS, metadata={"name": "designed_f9"})


def beamform_design() -> AlgorithmGraph:
    return _serial(DISCRETE, [
        (CHOOSE, "choose_cluster", None),
        (SEARCH, "cross_point_uniform", (0.12,)),
        (SEARCH, "search_reset_one", ()),
        (UPDATE, "update_round_robin", None),
    ], "beamform_design")


def restoration_design() -> AlgorithmGraph:
    return _serial(DISCRETE, [
        (CHOOSE, "choose_tournament", None),
        (SEARCH, "cross_point_uniform", (0.34,)),
        (SEARCH, "search_reset_one", ()),
        (UPDATE, "update_pairwise", ()),
    ], "restoration_design")


DESIGNS = {
    "designed_f1": designed_f1,
    "designed_f2": designed_f2,
    "designed_f9": designed_f9,
    "beamform_design": beamform_design,
    "restoration_design": restoration_design,
}

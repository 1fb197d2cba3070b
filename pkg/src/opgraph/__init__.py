"""Metaheuristics composed as operator graphs, run through one prototype, and designed automatically."""
from .baselines import baseline, run_baseline
from .design import DesignTask, design, evaluate_full, intensify_compare
from .executor import RunConfig, RunResult, instantiate_structure, run, step_trace
from .graph import AlgorithmGraph, deserialize, encode, graph_hash, random_graph, serialize, validate
from .problems import make_beamform, make_benchmark

__version__ = "0.1.0"

__all__ = [
    "AlgorithmGraph", "DesignTask", "RunConfig", "RunResult", "baseline", "deserialize", "design",
    "encode", "evaluate_full", "graph_hash", "instantiate_structure", "intensify_compare",
    "make_beamform", "make_benchmark", "random_graph", "run", "run_baseline", "serialize",
    "step_trace", "validate",
]

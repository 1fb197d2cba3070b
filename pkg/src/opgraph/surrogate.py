"""Random-forest performance surrogates over raw graph encodings or VGAE embeddings."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.ensemble import RandomForestRegressor

from . import operators as ops
from ._seeding import make_rng
from .embedding import FeatureLayout, VGAEConfig, VGAEModel, vgae_train
from .graph import AlgorithmGraph, GraphConfig, GraphEncoding, deserialize, encode, graph_hash, random_graph, serialize

EMBED = "embed"
RAW = "raw"


class SurrogateError(ValueError):
    pass


def kendall_tau(estimated: Sequence[float], exact: Sequence[float]) -> float:
    """Tau-b rank correlation; ties in either vector are corrected for."""
    x = np.asarray(estimated, dtype=float)
    y = np.asarray(exact, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise SurrogateError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise SurrogateError("need at least two values")
    iu = np.triu_indices(x.size, 1)
    sx = np.sign(x[:, None] - x[None, :])[iu]
    sy = np.sign(y[:, None] - y[None, :])[iu]
    nx, ny = np.count_nonzero(sx), np.count_nonzero(sy)
    if nx == 0 or ny == 0:
        raise SurrogateError("all values tied; tau is undefined")
    return float(np.sum(sx * sy) / np.sqrt(float(nx) * float(ny)))


@dataclass(frozen=True)
class TrainingSample:
    graph: AlgorithmGraph
    encoding: GraphEncoding
    label: float
    key: str

    @classmethod
    def from_graph(cls, graph: AlgorithmGraph, label: float, catalog=None) -> "TrainingSample":
        if not np.isfinite(label):
            raise SurrogateError(f"label {label} is not finite")
        catalog = catalog or ops.catalog(graph.kind)
        return cls(graph, encode(graph, catalog), float(label), graph_hash(graph))


def samples_to_csv(samples: Sequence[TrainingSample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["graph", "label"])
    for s in samples:
        w.writerow([serialize(s.graph, include_meta=False), repr(s.label)])
    return buf.getvalue()


def samples_from_csv(text: str, catalog=None) -> list[TrainingSample]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [TrainingSample.from_graph(deserialize(r["graph"]), float(r["label"]), catalog) for r in rows]


@dataclass(frozen=True)
class SurrogateConfig:
    mode: str = EMBED
    n_trees: int = 100
    max_depth: int | None = 12
    bootstrap: float | None = 0.8
    max_features: str | float = "sqrt"
    seed: int = 0


class SurrogateModel:
    def __init__(self, config: SurrogateConfig, embedder: VGAEModel | None, samples: Sequence[TrainingSample]):
        self.config = config
        self.embedder = embedder
        self.samples = list(samples)
        self.train_keys = {s.key for s in self.samples}
        X = self.features([s.encoding for s in self.samples])
        y = np.array([s.label for s in self.samples])
        self.forest = RandomForestRegressor(
            n_estimators=config.n_trees, max_depth=config.max_depth,
            bootstrap=config.bootstrap is not None, max_samples=config.bootstrap,
            max_features=config.max_features, random_state=config.seed, n_jobs=1,
        ).fit(X, y)
        self.train_tau = kendall_tau(self.forest.predict(X), y) if np.ptp(y) > 0 else float("nan")

    @property
    def mode(self) -> str:
        return self.config.mode

    def features(self, encodings: Sequence[GraphEncoding]) -> np.ndarray:
        if self.config.mode == EMBED:
            return np.stack([self.embedder.embed(e) for e in encodings])
        return np.stack([e.flat() for e in encodings])

    def predict_encodings(self, encodings: Sequence[GraphEncoding]) -> np.ndarray:
        return self.forest.predict(self.features(encodings))

    def predict(self, graphs: Sequence[AlgorithmGraph]) -> np.ndarray:
        cat = ops.catalog(graphs[0].kind)
        return self.predict_encodings([encode(g, cat) for g in graphs])

    def to_json(self) -> str:
        # the forest is refit from its data and seed on load, which reproduces it exactly
        return json.dumps({
            "config": asdict(self.config),
            "embedder": json.loads(self.embedder.to_json()) if self.embedder else None,
            "samples": [[serialize(s.graph, include_meta=False), s.label] for s in self.samples],
        })

    @classmethod
    def from_json(cls, text: str) -> "SurrogateModel":
        d = json.loads(text)
        emb = VGAEModel.from_json(json.dumps(d["embedder"])) if d["embedder"] else None
        samples = [TrainingSample.from_graph(deserialize(g), lab) for g, lab in d["samples"]]
        return cls(SurrogateConfig(**d["config"]), emb, samples)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "SurrogateModel":
        return cls.from_json(Path(path).read_text())


def surrogate_train(samples: Sequence[TrainingSample], embedder: VGAEModel | None = None,
                    config: SurrogateConfig = SurrogateConfig()) -> SurrogateModel:
    if len(samples) < 10:
        raise SurrogateError(f"need at least 10 samples, got {len(samples)}")
    if config.mode not in (EMBED, RAW):
        raise SurrogateError(f"unknown mode {config.mode!r}")
    if config.mode == EMBED and embedder is None:
        raise SurrogateError("embed mode needs a trained VGAE")
    return SurrogateModel(config, embedder, samples)


@dataclass(frozen=True)
class AccuracyReport:
    problem: str
    mode: str
    tau: float
    n_train: int
    n_holdout: int

    FIELDS = ("problem", "mode", "tau", "n_train", "n_holdout")

    @property
    def label(self) -> str:
        return "RF_embed" if self.mode == EMBED else "RF_no_embed"


def accuracy_report(surrogate: SurrogateModel, holdout: Sequence[TrainingSample],
                    problem: str = "") -> AccuracyReport:
    overlap = surrogate.train_keys & {s.key for s in holdout}
    if overlap:
        raise SurrogateError(f"{len(overlap)} holdout graphs also appear in the training set")
    pred = surrogate.predict_encodings([s.encoding for s in holdout])
    tau = kendall_tau(pred, [s.label for s in holdout])
    return AccuracyReport(problem, surrogate.mode, tau, len(surrogate.samples), len(holdout))


def reports_to_csv(reports: Sequence[AccuracyReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["problem", "model", "mode", "tau", "n_train", "n_holdout"])
    for r in reports:
        w.writerow([r.problem, r.label, r.mode, repr(r.tau), r.n_train, r.n_holdout])
    return buf.getvalue()


def reports_from_csv(text: str) -> list[AccuracyReport]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return [AccuracyReport(r["problem"], r["mode"], float(r["tau"]), int(r["n_train"]), int(r["n_holdout"]))
            for r in csv.DictReader(lines)]


def unique_random_graphs(n: int, kind: str, rng: np.random.Generator, catalog=None,
                         config: GraphConfig = GraphConfig(), max_draws: int | None = None) -> list[AlgorithmGraph]:
    """Draw ``n`` structurally distinct random graphs."""
    out, seen = [], set()
    limit = max_draws or 50 * n
    for _ in range(limit):
        if len(out) == n:
            break
        g = random_graph(catalog, kind, rng, config)
        h = graph_hash(g)
        if h not in seen:
            seen.add(h)
            out.append(g)
    if len(out) < n:
        raise SurrogateError(f"only {len(out)} distinct graphs after {limit} draws")
    return out


@dataclass
class SurrogateStudy:
    train: list[TrainingSample]
    holdout: list[TrainingSample]
    embedder: VGAEModel | None
    models: dict[str, SurrogateModel]
    reports: list[AccuracyReport]


def surrogate_study(task, n_train: int, n_holdout: int, seed: int, problem: str = "",
                    modes: Sequence[str] = (EMBED, RAW), vgae: VGAEConfig | None = None,
                    forest: SurrogateConfig | None = None) -> SurrogateStudy:
    """Label distinct random graphs on a design task, fit one surrogate per mode, score on the holdout.

    ``task`` is a design.DesignTask; labels are its full-schedule mean fitness.
    """
    from .design import _Evaluator, evaluate_full

    cat = ops.catalog(task.kind)
    graphs = unique_random_graphs(n_train + n_holdout, task.kind, make_rng("surrogate", seed), cat,
                                  task.graph_config)
    ev = _Evaluator(task)
    try:
        labels = [evaluate_full(g, task, ev).mean_fitness for g in graphs]
    finally:
        ev.close()
    samples = [TrainingSample.from_graph(g, y, cat) for g, y in zip(graphs, labels)]
    train, holdout = samples[:n_train], samples[n_train:]
    embedder = None
    if EMBED in modes:
        cfg = vgae or VGAEConfig(seed=seed)
        embedder = vgae_train([s.encoding for s in train], FeatureLayout.from_catalog(cat), cfg)
    base = forest or SurrogateConfig(seed=seed)
    models, reports = {}, []
    for mode in modes:
        m = surrogate_train(train, embedder if mode == EMBED else None,
                            SurrogateConfig(mode, base.n_trees, base.max_depth, base.bootstrap,
                                            base.max_features, base.seed))
        models[mode] = m
        reports.append(accuracy_report(m, holdout, problem))
    return SurrogateStudy(train, holdout, embedder, models, reports)

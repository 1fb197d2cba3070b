import numpy as np
import pytest
from scipy.stats import kendalltau

from opgraph import operators as ops
from opgraph.design import DesignTask
from opgraph.embedding import FeatureLayout, VGAEConfig, vgae_train
from opgraph.executor import RunConfig
from opgraph.graph import graph_hash
from opgraph.problems import make_benchmark
from opgraph.surrogate import (
    EMBED, RAW, AccuracyReport, SurrogateConfig, SurrogateError, SurrogateModel, TrainingSample,
    accuracy_report, kendall_tau, reports_from_csv, reports_to_csv, samples_from_csv, samples_to_csv,
    surrogate_study, surrogate_train, unique_random_graphs,
)

CAT = ops.catalog("continuous")


def test_tau_hand_cases():
    assert kendall_tau([1, 2, 3, 4], [10, 20, 30, 40]) == 1.0
    assert kendall_tau([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0
    # 5 concordant, 1 discordant pair
    assert kendall_tau([1, 2, 3, 4], [1, 2, 4, 3]) == pytest.approx(4 / 6)


def test_tau_matches_scipy_with_ties():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(3, 40))
        x = rng.integers(0, 5, n).astype(float)
        y = rng.integers(0, 5, n).astype(float)
        if np.ptp(x) == 0 or np.ptp(y) == 0:
            continue
        assert kendall_tau(x, y) == pytest.approx(kendalltau(x, y).statistic, abs=1e-12)


def test_tau_errors():
    with pytest.raises(SurrogateError):
        kendall_tau([1, 2], [1, 2, 3])
    with pytest.raises(SurrogateError):
        kendall_tau([1], [1])
    with pytest.raises(SurrogateError):
        kendall_tau([1, 1, 1], [1, 2, 3])


@pytest.fixture(scope="module")
def samples():
    graphs = unique_random_graphs(40, "continuous", np.random.default_rng(0), CAT)
    # label: number of search vertices plus a parameter, enough signal for a forest
    return [TrainingSample.from_graph(g, len(g.vertices) + sum(sum(v.params) for v in g.vertices), CAT)
            for g in graphs]


@pytest.fixture(scope="module")
def embedder(samples):
    return vgae_train([s.encoding for s in samples], FeatureLayout.from_catalog(CAT), VGAEConfig(epochs=5))


def test_unique_graphs():
    gs = unique_random_graphs(30, "continuous", np.random.default_rng(1))
    assert len({graph_hash(g) for g in gs}) == 30
    with pytest.raises(SurrogateError):
        unique_random_graphs(10, "continuous", np.random.default_rng(1), max_draws=3)


def test_raw_surrogate_ranks_training_signal(samples):
    m = surrogate_train(samples[:30], config=SurrogateConfig(mode=RAW))
    rep = accuracy_report(m, samples[30:], "toy")
    assert rep.label == "RF_no_embed"
    assert rep.tau > 0.3
    assert (rep.n_train, rep.n_holdout) == (30, 10)


def test_embed_surrogate_predicts(samples, embedder):
    m = surrogate_train(samples[:30], embedder, SurrogateConfig(mode=EMBED))
    pred = m.predict([s.graph for s in samples[30:]])
    assert pred.shape == (10,)
    assert m.features([samples[0].encoding]).shape == (1, 20)
    assert accuracy_report(m, samples[30:]).label == "RF_embed"


def test_overlap_rejected(samples):
    m = surrogate_train(samples[:30], config=SurrogateConfig(mode=RAW))
    with pytest.raises(SurrogateError):
        accuracy_report(m, samples[25:35])


def test_train_errors(samples, embedder):
    with pytest.raises(SurrogateError):
        surrogate_train(samples[:5], config=SurrogateConfig(mode=RAW))
    with pytest.raises(SurrogateError):
        surrogate_train(samples, None, SurrogateConfig(mode=EMBED))
    with pytest.raises(SurrogateError):
        surrogate_train(samples, embedder, SurrogateConfig(mode="both"))
    with pytest.raises(SurrogateError):
        TrainingSample.from_graph(samples[0].graph, float("nan"))


def test_model_json_round_trip(samples, embedder):
    m = surrogate_train(samples[:30], embedder, SurrogateConfig(mode=EMBED, n_trees=20))
    back = SurrogateModel.from_json(m.to_json())
    encs = [s.encoding for s in samples[30:]]
    assert np.array_equal(back.predict_encodings(encs), m.predict_encodings(encs))


def test_samples_csv_round_trip(samples):
    back = samples_from_csv(samples_to_csv(samples[:5]), CAT)
    assert [s.key for s in back] == [s.key for s in samples[:5]]
    assert [s.label for s in back] == [s.label for s in samples[:5]]


def test_report_csv_round_trip():
    reps = [AccuracyReport("f1", EMBED, 0.25, 200, 100), AccuracyReport("f1", RAW, -0.1, 200, 100)]
    text = reports_to_csv(reps)
    assert text.splitlines()[0] == "problem,model,mode,tau,n_train,n_holdout"
    assert reports_from_csv(text) == reps


def test_study_small():
    task = DesignTask([make_benchmark("f1", 3, 0)], runs_per_instance=1, run_config=RunConfig(6, 30), seed=0)
    study = surrogate_study(task, 12, 6, seed=0, problem="f1", vgae=VGAEConfig(epochs=3))
    assert [r.mode for r in study.reports] == [EMBED, RAW]
    assert len(study.train) == 12 and len(study.holdout) == 6
    assert all(-1 <= r.tau <= 1 for r in study.reports)

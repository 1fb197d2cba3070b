import numpy as np
import pytest

from opgraph import operators as ops
from opgraph.embedding import (
    EmbeddingError, FeatureLayout, VGAEConfig, VGAEModel, embed, finite_difference_check, forward,
    graph_tensors, init_params, kl_term, vgae_train,
)
from opgraph.graph import GraphConfig, encode, random_graph, raw_dimension

CAT = ops.catalog("continuous")
LAYOUT = FeatureLayout.from_catalog(CAT)


def five_node_graphs(k, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < k:
        g = random_graph(None, "continuous", rng, GraphConfig(q=1, n_search=3))
        t = graph_tensors(encode(g, CAT), LAYOUT)
        if t.n == 5:
            out.append(t)
    return out


@pytest.mark.parametrize("seed", range(5))
def test_gradients_match_finite_differences(seed):
    g = five_node_graphs(1, seed)[0]
    rng = np.random.default_rng(seed)
    params = init_params(g.X.shape[1], g.T.shape[1], VGAEConfig(hidden_dim=8, latent_dim=4), rng)
    eps = rng.standard_normal((5, 4))
    errs = finite_difference_check(params, g, eps)
    assert set(errs) == {"W1", "Wmu", "Wsig", "Wa"}
    assert max(errs.values()) < 1e-4


def test_kl_non_negative():
    rng = np.random.default_rng(0)
    for _ in range(500):
        mu = rng.normal(0, rng.uniform(0, 5), size=(4, 3))
        ls = rng.normal(0, rng.uniform(0, 3), size=(4, 3))
        assert kl_term(mu, ls) >= 0.0
    assert kl_term(np.zeros((2, 2)), np.zeros((2, 2))) == 0.0


def test_loss_parts_are_consistent():
    g = five_node_graphs(1)[0]
    rng = np.random.default_rng(1)
    params = init_params(g.X.shape[1], g.T.shape[1], VGAEConfig(), rng)
    loss, parts, grads = forward(params, g, rng.standard_normal((5, 20)))
    assert grads is None
    assert loss == pytest.approx(sum(parts.values()))
    assert parts["kl"] >= 0 and parts["reconstruction"] > 0


def test_tensors_shape_and_normalisation():
    g = five_node_graphs(1)[0]
    assert g.A_hat.shape == (5, 5)
    assert np.allclose(g.A_hat, g.A_hat.T)
    assert g.X.shape == (5, 26 + 33)
    assert np.allclose(g.X[:, :26].sum(axis=1), 1.0)
    assert g.T.min() >= 0.0 and g.T.max() <= 1.0


def test_training_reduces_loss_and_sizes():
    rng = np.random.default_rng(0)
    encs = [encode(random_graph(None, "continuous", rng), CAT) for _ in range(100)]
    model = vgae_train(encs, LAYOUT, VGAEConfig(epochs=60, seed=0))
    assert np.mean(model.losses[-10:]) < np.mean(model.losses[:10])
    z = embed(model, encs[0])
    assert z.shape == (20,)
    assert raw_dimension(CAT) > 600


def test_model_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    encs = [encode(random_graph(None, "continuous", rng), CAT) for _ in range(10)]
    model = vgae_train(encs, LAYOUT, VGAEConfig(epochs=3, seed=0))
    path = tmp_path / "vgae.json"
    model.save(path)
    back = VGAEModel.load(path)
    assert np.array_equal(back.embed(encs[1]), model.embed(encs[1]))
    assert back.losses == model.losses
    assert back.decode(np.zeros((3, 2))).tolist() == [[0.5] * 3] * 3


def test_training_is_seeded():
    rng = np.random.default_rng(0)
    encs = [encode(random_graph(None, "continuous", rng), CAT) for _ in range(5)]
    a = vgae_train(encs, LAYOUT, VGAEConfig(epochs=4, seed=3))
    b = vgae_train(encs, LAYOUT, VGAEConfig(epochs=4, seed=3))
    assert a.losses == b.losses


def test_errors():
    enc = encode(random_graph(None, "continuous", np.random.default_rng(0)), CAT)
    with pytest.raises(EmbeddingError):
        vgae_train([enc], LAYOUT)
    disc = ops.catalog("discrete")
    with pytest.raises(EmbeddingError):
        graph_tensors(enc, FeatureLayout.from_catalog(disc))
    denc = encode(random_graph(None, "discrete", np.random.default_rng(0)), disc)
    with pytest.raises(EmbeddingError):
        vgae_train([enc, denc], LAYOUT)

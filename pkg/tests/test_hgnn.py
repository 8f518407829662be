import time

import numpy as np
import pytest
from conftest import gradcheck, log_of

from hgnnmatch.autodiff import ops
from hgnnmatch.autodiff.gru import GRU_BIASES, GRU_WEIGHTS
from hgnnmatch.autodiff.tensor import Tensor, constant
from hgnnmatch.data.synth import SynthConfig, generate_corpus
from hgnnmatch.errors import ShapeError
from hgnnmatch.graph.builder import build_hier_graph
from hgnnmatch.graph.logs import DeviceLog, Event
from hgnnmatch.graph.shortcut import build_shortcut_graph
from hgnnmatch.model.config import ModelConfig
from hgnnmatch.model.heads.cross_attention import cross_distance, cross_encode
from hgnnmatch.model.hgnn import (
    coarse_update,
    embed_nodes,
    encode_device,
    fine_hetero_update,
    fine_message_round,
    hetero_attention,
)
from hgnnmatch.model.params import init_params
from hgnnmatch.model.shortcut_tier import TierTiming, shortcut_message_round, time_tier_rounds

D = 4


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def naive_gru(h, x, P):
    z = _sigmoid(x @ P["W_z"] + h @ P["U_z"] + P["b_z"])
    r = _sigmoid(x @ P["W_r"] + h @ P["U_r"] + P["b_r"])
    cand = np.tanh(x @ P["W_h"] + (r * h) @ P["U_h"] + P["b_h"])
    return (1.0 - z) * h + z * cand


def naive_fine_round(g, X, P):
    out = np.empty_like(X)
    for i in range(g.m):
        h = np.zeros(X.shape[1])
        for j in [*g.in_neighbors[i], i]:
            h = naive_gru(h, X[j], P)
        out[i] = 0.5 * (X[i] + h)
    return out


def naive_coarse(g, X, W1):
    return np.array([np.mean([X[i] @ W1 for i in members], axis=0) for members in g.membership])


def naive_hetero(g, X, Xc, W2, W3):
    out = np.empty_like(X)
    alpha = np.zeros((g.m, g.coarse_count))
    for i in range(g.m):
        logits = np.array([(X[i] @ W2) @ (Xc[j] @ W3) / np.sqrt(X.shape[1]) for j in g.coarse_of[i]])
        weights = np.exp(logits - logits.max())
        weights /= weights.sum()
        alpha[i, list(g.coarse_of[i])] = weights
        out[i] = 0.5 * (X[i] + sum(w * Xc[j] for w, j in zip(weights, g.coarse_of[i], strict=True)))
    return out, alpha


def _values(params):
    return {name: t.values for name, t in params.items()}


@pytest.fixture
def cfg() -> ModelConfig:
    return ModelConfig(vocab_size=12, K=2, d=D, pool_dim=3, fine_rounds=1, hetero_rounds=1, seed=3)


def _random_graphs(rng, count):
    for _ in range(count):
        seq = rng.integers(int(rng.integers(1, 9)), size=int(rng.integers(1, 21))).tolist()
        yield build_hier_graph(log_of(seq), int(rng.integers(1, 6)))


# ---------- Fine round ----------
def test_fine_round_with_zero_gru_halves_features(rng):
    g = build_hier_graph(log_of("abcab"), 2)
    zero = {name: constant(np.zeros((D, D))) for name in GRU_WEIGHTS}
    zero |= {name: constant(np.zeros(D)) for name in GRU_BIASES}
    X = rng.standard_normal((g.m, D))
    np.testing.assert_array_equal(fine_message_round(g, Tensor(X), zero).values, 0.5 * X)


def test_fine_round_single_node(cfg, rng):
    g = build_hier_graph(log_of("a"), 2)
    P = init_params(cfg).slice("gru.0")
    x = rng.standard_normal((1, D))
    expected = 0.5 * (x[0] + naive_gru(np.zeros(D), x[0], _values(P)))
    np.testing.assert_allclose(fine_message_round(g, Tensor(x), P).values[0], expected, atol=1e-12)


def test_fine_round_matches_naive_reference(cfg, rng):
    P = init_params(cfg).slice("gru.0")
    for g in _random_graphs(rng, 100):
        X = rng.standard_normal((g.m, D))
        got = fine_message_round(g, Tensor(X), P).values
        np.testing.assert_allclose(got, naive_fine_round(g, X, _values(P)), rtol=0, atol=1e-12)


def test_fine_round_rejects_misaligned_features(cfg):
    g = build_hier_graph(log_of("abc"), 2)
    with pytest.raises(ShapeError):
        fine_message_round(g, Tensor(np.zeros((2, D))), init_params(cfg).slice("gru.0"))


# ---------- Coarse update ----------
def test_coarse_update_is_member_mean():
    g = build_hier_graph(log_of("ab"), 2)
    X = Tensor([[1.0, 1.0], [3.0, 3.0]])
    np.testing.assert_array_equal(coarse_update(g, X, Tensor(np.eye(2))).values, [[2.0, 2.0]])

    g = build_hier_graph(log_of("a"), 1)
    np.testing.assert_array_equal(coarse_update(g, Tensor([[5.0, -1.0]]), Tensor(np.eye(2))).values, [[5.0, -1.0]])


def test_coarse_update_matches_naive_reference(cfg, rng):
    W1 = init_params(cfg)["hetero.0.W1"]
    for g in _random_graphs(rng, 100):
        X = rng.standard_normal((g.m, D))
        got = coarse_update(g, Tensor(X), W1).values
        np.testing.assert_allclose(got, naive_coarse(g, X, W1.values), rtol=0, atol=1e-12)


# ---------- Heterogeneous update ----------
def test_single_coarse_neighbor_gets_full_attention(cfg, rng):
    g = build_hier_graph(log_of("abcd"), 4)
    hetero = init_params(cfg).slice("hetero.0")
    X = Tensor(rng.standard_normal((g.m, D)))
    alpha = hetero_attention(g, X, coarse_update(g, X, hetero["W1"]), hetero).values
    np.testing.assert_array_equal(alpha, np.ones((4, 1)))


def test_identical_coarse_features_pass_through(cfg, rng):
    g = build_hier_graph(log_of("abcabd"), 2)
    hetero = init_params(cfg).slice("hetero.0")
    X = rng.standard_normal((g.m, D))
    common = rng.standard_normal(D)
    Xc = np.tile(common, (g.coarse_count, 1))
    out = fine_hetero_update(g, Tensor(X), Tensor(Xc), hetero).values
    np.testing.assert_allclose(out, 0.5 * (X + common), atol=1e-12)


def test_hetero_update_matches_naive_reference(cfg, rng):
    hetero = init_params(cfg).slice("hetero.0")
    W2, W3 = hetero["W2"].values, hetero["W3"].values
    for g in _random_graphs(rng, 100):
        X = rng.standard_normal((g.m, D))
        Xc = rng.standard_normal((g.coarse_count, D))
        alpha = hetero_attention(g, Tensor(X), Tensor(Xc), hetero).values
        got = fine_hetero_update(g, Tensor(X), Tensor(Xc), hetero).values
        ref_out, ref_alpha = naive_hetero(g, X, Xc, W2, W3)

        np.testing.assert_allclose(alpha.sum(axis=1), 1.0, atol=1e-6)
        assert np.all(alpha >= 0)
        np.testing.assert_allclose(alpha, ref_alpha, rtol=0, atol=1e-12)
        np.testing.assert_allclose(got, ref_out, rtol=0, atol=1e-12)


# ---------- Encoder ----------
def test_embedding_averages_url_tokens(cfg):
    params = init_params(cfg)
    log = DeviceLog("d", (Event(0, (1, 2)), Event(1, (5,))))
    X = embed_nodes(build_hier_graph(log, 2), params).values
    E = params["embedding"].values
    np.testing.assert_allclose(X[0], 0.5 * (E[1] + E[2]))
    np.testing.assert_array_equal(X[1], E[5])


def test_embedding_rejects_unknown_token(cfg):
    with pytest.raises(ValueError, match="outside the embedding vocabulary"):
        embed_nodes(build_hier_graph(log_of([cfg.vocab_size]), 2), init_params(cfg))


def test_encode_single_url(cfg):
    enc = encode_device(build_hier_graph(log_of("a"), cfg.K), init_params(cfg), cfg)
    assert enc.X.shape == (1, D)
    assert enc.m == 1
    assert enc.node_keys == ((0,),)


def test_encode_is_deterministic_across_isomorphic_graphs(cfg):
    params = init_params(cfg)
    a = encode_device(build_hier_graph(log_of([3, 1, 4, 1, 5], "x"), cfg.K), params, cfg)
    b = encode_device(build_hier_graph(log_of([3, 1, 4, 1, 5], "y"), cfg.K), params, cfg)
    np.testing.assert_array_equal(a.X.values, b.X.values)
    assert np.isfinite(a.X.values).all()


def test_encode_locality_on_a_chain(cfg):
    params = init_params(cfg)
    g = build_hier_graph(log_of(range(8)), 2)
    before = encode_device(g, params, cfg).X.values.copy()

    # the last node sees its predecessor through the GRU and its coarse partner's predecessor
    params["embedding"].values[0] += 1.0
    after = encode_device(g, params, cfg).X.values
    np.testing.assert_array_equal(after[7], before[7])
    assert not np.array_equal(after[1], before[1])

    params["embedding"].values[5] += 1.0
    assert not np.array_equal(encode_device(g, params, cfg).X.values[7], before[7])


def test_encode_gradients_match_finite_differences(rng):
    cfg = ModelConfig(vocab_size=5, K=2, d=3, pool_dim=2, fine_rounds=2, hetero_rounds=1, seed=1)
    params = init_params(cfg)
    g = build_hier_graph(log_of([0, 1, 2, 1, 3, 4]), cfg.K)
    R = constant(rng.standard_normal((g.m, cfg.d)))
    names = [n for n in params if n.startswith(("embedding", "gru", "hetero"))]

    def loss(store):
        return ops.sum_all(ops.hadamard(encode_device(g, store, cfg).X, R))

    assert gradcheck(loss, params, floor=1e-3, names=names) < 1e-3


# ---------- Parameters ----------
def test_parameter_tally_for_default_config():
    params = init_params(ModelConfig(vocab_size=1000))
    assert params["embedding"].shape == (1000, 64)
    assert params.num_parameters() == 154_753


def test_embeddings_start_at_unit_scale():
    E = init_params(ModelConfig(vocab_size=1000))["embedding"].values
    assert 0.95 <= E.std() <= 1.05
    assert abs(E.mean()) < 0.02


def test_untrained_model_sees_non_vanishing_distances():
    # at default width the head input must carry signal before any training step
    cfg = ModelConfig(vocab_size=60, seed=2)
    synth = SynthConfig(n_users=2, devices_per_user=2, mean_log_len=40, vocab_size=60, profile_dim=8, seed=2)
    logs, _ = generate_corpus(synth)
    params = init_params(cfg)
    X_v, X_w = (encode_device(build_hier_graph(log, cfg.K), params, cfg).X for log in (logs[0], logs[2]))
    L_vw, L_wv = cross_distance(X_v, X_w, cross_encode(X_v, X_w, params, cfg.cross_score))
    assert L_vw.values.mean() > 1e-3
    assert L_wv.values.mean() > 1e-3


def test_init_params_is_deterministic_per_seed():
    a = init_params(ModelConfig(vocab_size=20, d=8, pool_dim=4, seed=9))
    b = init_params(ModelConfig(vocab_size=20, d=8, pool_dim=4, seed=9))
    c = init_params(ModelConfig(vocab_size=20, d=8, pool_dim=4, seed=10))
    assert list(a) == list(b)
    assert all(np.array_equal(a[n].values, b[n].values) for n in a)
    assert not np.array_equal(a["embedding"].values, c["embedding"].values)


def test_init_params_layers_and_precision():
    cfg = ModelConfig(vocab_size=4, d=2, pool_dim=2, fine_rounds=3, hetero_rounds=2, precision="float32")
    params = init_params(cfg)
    assert {n.split(".")[1] for n in params if n.startswith("gru.")} == {"0", "1", "2"}
    assert {n.split(".")[1] for n in params if n.startswith("hetero.")} == {"0", "1"}
    assert params["embedding"].values.dtype == np.float32


@pytest.mark.parametrize(
    "overrides",
    [
        {"vocab_size": 0},
        {"K": 0},
        {"d": 0},
        {"fine_rounds": 0},
        {"dropout": 1.0},
        {"head": "mlp"},
        {"precision": "f16"},
    ],
)
def test_model_config_validation(overrides):
    with pytest.raises(ValueError):
        ModelConfig(**({"vocab_size": 10} | overrides))


def test_model_config_round_trip(tmp_path):
    cfg = ModelConfig(vocab_size=33, d=16, head="elementwise", cross_score="dot", seed=5)
    assert ModelConfig.load(cfg.save(tmp_path / "model_config.json")) == cfg


# ---------- Shortcut tier ----------
def test_shortcut_round_averages_neighbours():
    g = build_hier_graph(log_of("abc"), 3)
    s = build_shortcut_graph(g, walk_length=2, walks_per_node=1, seed=0)  # edges (0,1) (0,2) (1,2)
    X = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    out = shortcut_message_round(s, Tensor(X), Tensor(np.eye(2))).values
    np.testing.assert_allclose(out, 0.5 * (X + X.mean(axis=0)))


def test_shortcut_round_isolated_node_keeps_transform():
    g = build_hier_graph(log_of("a"), 3)
    s = build_shortcut_graph(g, seed=0)
    W = np.array([[2.0, 0.0], [0.0, 3.0]])
    out = shortcut_message_round(s, Tensor([[1.0, 1.0]]), Tensor(W)).values
    np.testing.assert_allclose(out, [[1.5, 2.0]])


def test_time_tier_rounds_reports_both_tiers(cfg, rng):
    g = build_hier_graph(log_of(rng.integers(30, size=60).tolist()), cfg.K)
    s = build_shortcut_graph(g, seed=1)
    hetero = init_params(cfg).slice("hetero.0")
    timing = time_tier_rounds(g, s, constant(rng.standard_normal((g.m, D))), hetero, repeats=2)
    assert timing.hierarchical_s > 0 and timing.shortcut_s > 0
    assert timing.ratio == pytest.approx(timing.shortcut_s / timing.hierarchical_s)
    assert np.isnan(TierTiming(0.0, time.perf_counter()).ratio)

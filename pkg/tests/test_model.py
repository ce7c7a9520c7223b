import json

import numpy as np
import pytest

from influlocal import model as M
from influlocal.autodiff import grad_check, nll_loss, param
from influlocal.data import PAD, SampledInstance
from influlocal.graph import Graph

from helpers import tiny_dataset


@pytest.fixture(scope="module")
def data():
    g, log, inst, table, emb = tiny_dataset(count=16, n=12)
    return inst, table, emb, M.fit_feature_scaler(inst, table)


def small_cfg(variant="gat", **kw):
    base = dict(variant=variant, n=12, hidden=16, heads=4, head_dim=4, dtype="float64")
    base.update(kw)
    return M.DeepInfConfig(**base)


def permuted(inst, perm):
    """Same instance with local slot i moved to slot inv[i]."""
    inv = np.argsort(perm)
    edges, _ = inst.local_graph.edge_list()
    return SampledInstance(np.asarray(inst.vertices)[perm], Graph.from_edges(inst.n, inv[edges]),
                           int(inv[inst.ego_local]), np.asarray(inst.active)[perm],
                           np.asarray(inst.pad_mask)[perm], inst.label, inst.action, inst.time)


def padded(inst, extra):
    edges, _ = inst.local_graph.edge_list()
    n = inst.n + extra
    return SampledInstance(np.concatenate([inst.vertices, np.full(extra, PAD)]),
                           Graph.from_edges(n, edges), inst.ego_local,
                           np.concatenate([inst.active, np.zeros(extra, dtype=bool)]),
                           np.concatenate([inst.pad_mask, np.ones(extra, dtype=bool)]),
                           inst.label, inst.action, inst.time)


def test_config_widths_and_validation():
    assert M.DeepInfConfig().input_dim == 73
    assert M.DeepInfConfig(use_vertex_features=False).input_dim == 66
    with pytest.raises(ValueError):
        M.DeepInfConfig(heads=8, head_dim=8)
    with pytest.raises(M.UnsupportedVariantError):
        M.DeepInfConfig(variant="mlp")
    cfg = M.DeepInfConfig(heads=4, head_dim=32)
    assert M.DeepInfConfig.from_dict({**cfg.to_dict(), "junk": 1}) == cfg


def test_param_shapes_and_decay_mask():
    p = M.init_params(M.DeepInfConfig())
    assert p["layer0.weight"].shape == (8, 16, 73) and p["layer0.attn"].shape == (8, 32)
    assert p["layer1.bias"].shape == (128,) and p["layer2.weight"].shape == (8, 2, 128)
    assert p["layer2.bias"].shape == (2,)
    mask = M.decay_mask(p)
    assert mask["layer0.weight"] and not mask["layer0.bias"] and not mask["layer0.attn"]
    gcn = M.init_params(M.DeepInfConfig(variant="gcn"))
    assert gcn["layer0.weight"].shape == (128, 73) and gcn["layer2.weight"].shape == (2, 128)


def test_input_matrix_layout(data):
    inst, table, emb, scaler = data
    x = M.build_input_matrix(inst[0], emb, np.ones((inst[0].n, 7))).data
    pad = np.asarray(inst[0].pad_mask)
    assert x.shape == (inst[0].n, 73)
    assert x[inst[0].ego_local, 65] == 1 and x[:, 65].sum() == 1
    assert np.array_equal(x[:, 64], np.asarray(inst[0].active) & ~pad)
    assert np.all(x[pad] == 0)
    real = x[~pad, :64]
    assert np.abs(real.mean(axis=0)).max() < 1e-9


@pytest.mark.parametrize("variant", ["gat", "gcn"])
def test_permutation_neutrality(variant, data):
    inst, table, emb, scaler = data
    cfg = small_cfg(variant)
    params = M.init_params(cfg)
    rng = np.random.default_rng(1)
    for ex in inst[:6]:
        perm = rng.permutation(ex.n)
        a = M.predict(params, cfg, M.encode_instances([ex], emb, cfg, table, scaler))
        b = M.predict(params, cfg, M.encode_instances([permuted(ex, perm)], emb, cfg, table, scaler))
        assert a == pytest.approx(b, abs=1e-12)


@pytest.mark.parametrize("variant", ["gat", "gcn"])
def test_padding_neutrality(variant, data):
    inst, table, emb, scaler = data
    cfg = small_cfg(variant)
    big = small_cfg(variant, n=15)
    params = M.init_params(cfg)
    for ex in inst[:6]:
        a = M.predict(params, cfg, M.encode_instances([ex], emb, cfg, table, scaler))
        b = M.predict(params, big, M.encode_instances([padded(ex, 3)], emb, big, table, scaler))
        assert a == pytest.approx(b, abs=1e-12)


def test_predict_matches_forward_and_chunking(data):
    inst, table, emb, scaler = data
    cfg = small_cfg()
    batch = M.encode_instances(inst, emb, cfg, table, scaler)
    params = M.init_params(cfg)
    logits = M.forward(params, cfg, batch).data
    expect = np.exp(logits[:, 1]) / np.exp(logits).sum(axis=1)
    assert np.allclose(M.predict(params, cfg, batch), expect)
    assert np.allclose(M.predict(params, cfg, batch, chunk=3), expect)
    assert np.all((expect > 0) & (expect < 1))


def test_training_is_deterministic_and_lr_zero_is_constant(data):
    inst, table, emb, scaler = data
    batch = M.encode_instances(inst, emb, small_cfg(), table, scaler)
    cfg = small_cfg(max_epochs=3, batch_size=5, patience=0)
    p1, h1 = M.train(cfg, batch, batch)
    p2, h2 = M.train(cfg, batch, batch)
    assert h1.train_loss == h2.train_loss
    assert all(np.array_equal(p1[k].data, p2[k].data) for k in p1)
    frozen = small_cfg(max_epochs=3, lr=0.0, patience=0)
    init = M.snapshot(M.init_params(frozen))
    p3, h3 = M.train(frozen, batch, batch)
    assert all(np.array_equal(p3[k].data, init[k]) for k in init)
    assert h3.valid_loss[0] == h3.valid_loss[-1]


def test_early_stopping_restores_best(data):
    inst, table, emb, scaler = data
    batch = M.encode_instances(inst, emb, small_cfg(), table, scaler)
    cfg = small_cfg(max_epochs=40, patience=2, lr=0.5)
    params, hist = M.train(cfg, batch, batch.take(slice(0, 8)))
    best = hist.valid_loss[hist.best_epoch]
    assert best == min(hist.valid_loss)
    assert M._loss_on(params, cfg, batch.take(slice(0, 8)))[0] == pytest.approx(best)
    if hist.stop_reason == "patience":
        assert len(hist.valid_loss) - 1 - hist.best_epoch == 2


def test_diverged_training_raises(data):
    inst, table, emb, scaler = data
    batch = M.encode_instances(inst, emb, small_cfg(), table, scaler)
    batch.x[0, 0, 0] = np.nan
    with pytest.raises(M.TrainingDivergedError):
        M.train(small_cfg(max_epochs=1), batch, batch)


@pytest.mark.parametrize("variant", ["gat", "gcn"])
def test_end_to_end_gradient(variant, data):
    inst, table, emb, scaler = data
    cfg = small_cfg(variant, n=6, dropout=0.0, hidden=4, heads=2, head_dim=2)
    from helpers import tiny_dataset
    _, _, few, tab, em = tiny_dataset(count=4, n=6)
    batch = M.encode_instances(few, em, cfg, tab, M.fit_feature_scaler(few, tab))
    params = M.init_params(cfg)
    names = sorted(params)

    def f(*ts):
        return nll_loss(M.forward(dict(zip(names, ts)), cfg, batch), batch.labels)
    rep = grad_check(f, [param(params[k].data) for k in names])
    assert rep.passed, rep


def test_trainable_embeddings_receive_gradient(data):
    inst, table, emb, scaler = data
    cfg = small_cfg(freeze_embeddings=False, max_epochs=1, patience=0)
    batch = M.encode_instances(inst, emb, cfg, table, scaler)
    params = M.init_params(cfg, emb)
    before = params["embedding"].data.copy()
    M.train(cfg, batch, batch, params=params)
    touched = np.unique(batch.vertices[~batch.pad])
    assert not np.allclose(params["embedding"].data[touched], before[touched])
    # untouched rows only feel weight decay, which Adagrad still steps by about lr
    untouched = np.setdiff1d(np.arange(len(emb)), touched)
    assert np.allclose(params["embedding"].data[untouched], before[untouched], atol=cfg.lr + 1e-9)


def test_attention_export_and_order(data):
    inst, table, emb, scaler = data
    cfg = small_cfg()
    batch = M.encode_instances(inst[:4], emb, cfg, table, scaler)
    out = M.attention_scores(M.init_params(cfg), cfg, batch)
    assert len(out) == 4 and len(out[0]["layers"]) == 3
    for rec in out:
        for layer in rec["layers"]:
            attn, scores = layer["attention"], layer["scores"]
            for k in range(len(attn)):
                assert np.allclose(attn[k].sum(axis=1), 1, atol=1e-6)
                assert np.all(attn[k][~rec["support"]] == 0)
                assert M.order_violations(attn[k], scores[k], rec["support"], tol=1e-12) == 0
    with pytest.raises(M.UnsupportedVariantError):
        M.attention_scores(M.init_params(small_cfg("gcn")), small_cfg("gcn"), batch)


def test_order_violations_counts():
    sup = np.ones((1, 3), dtype=bool)
    attn = np.array([[0.5, 0.3, 0.2]])
    assert M.order_violations(attn, np.array([3.0, 2.0, 1.0]), sup) == 0
    assert M.order_violations(attn, np.array([1.0, 2.0, 3.0]), sup) == 6

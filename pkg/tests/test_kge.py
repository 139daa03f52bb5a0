import json
import math
import warnings

import numpy as np
import pytest

from ebr import kge
from ebr.kge import EmbeddingModel, TrainConfig
from ebr.triples import TripleGraph, extract_triples

from conftest import kb_named, trained


def tiny_model(scorer, dim=2, ne=3, nr=2, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    w = 2 * dim if scorer == "complex" else dim
    return EmbeddingModel(scorer, dim, tuple(f"e{i}" for i in range(ne)), tuple(f"r{i}" for i in range(nr)),
                          rng.uniform(-scale, scale, (ne, w)), rng.uniform(-scale, scale, (nr, w)))


def one_dim(x, r, y):
    ent = np.array([[x.real, x.imag], [y.real, y.imag]])
    rel = np.array([[r.real, r.imag]])
    return EmbeddingModel("complex", 1, ("x", "y"), ("r",), ent, rel)


def test_complex_score_examples():
    assert kge.score(one_dim(0j, 0j, 0j), 0, 0, 1) == 0.0
    assert kge.score(one_dim(1 + 0j, 1 + 0j, 1 + 0j), 0, 0, 1) == 1.0
    assert kge.score(one_dim(1j, 1j, 1 + 0j), 0, 0, 1) == -1.0


@pytest.mark.parametrize("scorer", kge.SCORERS)
def test_score_matches_reference_formula(scorer):
    m = tiny_model(scorer, dim=4)
    d = m.dim
    for h in range(3):
        for r in range(2):
            for t in range(3):
                x, rr, y = m.entity_params[h], m.relation_params[r], m.entity_params[t]
                if scorer == "complex":
                    ref = np.real(np.sum((x[:d] + 1j * x[d:]) * (rr[:d] + 1j * rr[d:]) * np.conj(y[:d] + 1j * y[d:])))
                elif scorer == "distmult":
                    ref = np.sum(x * rr * y)
                else:
                    ref = -np.linalg.norm(x + rr - y)
                assert kge.score(m, h, r, t) == pytest.approx(ref, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("scorer", kge.SCORERS)
def test_score_all_tails_and_heads_are_exact(scorer):
    m = tiny_model(scorer, dim=5, ne=7, nr=3)
    for h in range(7):
        for r in range(3):
            row = kge.score_all_tails(m, h, r)
            assert row.shape == (7,)
            for t in range(7):
                assert row[t] == kge.score(m, h, r, t)
    for r in range(3):
        for t in range(7):
            col = kge.score_all_heads(m, r, t)
            np.testing.assert_allclose(col, [kge.score(m, h, r, t) for h in range(7)], rtol=1e-12, atol=1e-12)


def test_score_all_tails_exhaustive_on_trained_fixture(family_model):
    m = family_model
    for h in range(len(m.entities)):
        for r in range(len(m.relations)):
            row = kge.score_all_tails(m, h, r)
            assert all(row[t] == kge.score(m, h, r, t) for t in range(len(m.entities)))


def test_score_all_tails_edge_cases():
    for scorer in ("complex", "distmult"):
        m = tiny_model(scorer, ne=4)
        m.entity_params[:] = 0
        m.relation_params[:] = 0
        assert not kge.score_all_tails(m, 0, 0).any()
    assert kge.score_all_tails(tiny_model("transe", ne=1), 0, 0).shape == (1,)


def test_out_of_vocabulary_ids_raise():
    m = tiny_model("distmult")
    with pytest.raises(IndexError):
        kge.score(m, 3, 0, 0)
    with pytest.raises(IndexError):
        kge.score_all_tails(m, 0, 2)


def test_complex_with_zero_imaginary_equals_distmult():
    c = tiny_model("complex", dim=6, ne=5, nr=3, seed=3)
    d = c.dim
    c.entity_params[:, d:] = 0
    c.relation_params[:, d:] = 0
    dm = EmbeddingModel("distmult", d, c.entities, c.relations, c.entity_params[:, :d].copy(),
                        c.relation_params[:, :d].copy())
    for h in range(5):
        for r in range(3):
            np.testing.assert_allclose(kge.score_all_tails(c, h, r), kge.score_all_tails(dm, h, r), atol=1e-12)


def test_sigmoid_properties():
    assert kge.sigmoid(0.0) == 0.5
    assert kge.sigmoid(50.0) > 1 - 1e-9
    x = np.random.default_rng(0).normal(0, 10, 1000)
    np.testing.assert_allclose(kge.sigmoid(-x), 1 - kge.sigmoid(x), atol=1e-15)
    xs = np.sort(np.random.default_rng(1).uniform(-30, 30, 500))
    assert np.all(np.diff(kge.sigmoid(xs)) > 0)
    assert np.all(np.isfinite(kge.sigmoid(np.array([-1e4, 1e4]))))


def test_predict_is_sigmoid_of_score():
    m = tiny_model("complex")
    assert kge.predict(m, 0, 1, 2) == pytest.approx(kge.sigmoid(kge.score(m, 0, 1, 2)))


def test_loss_ln2_at_half_probability():
    m = tiny_model("complex")
    m.entity_params[:] = 0
    batch = np.array([[0, 0, 1], [1, 1, 2]])
    loss, _ = kge.loss_and_grad(m, batch, np.ones(2))
    assert loss == pytest.approx(math.log(2), abs=1e-15)


def test_duplicated_batch_has_same_loss():
    m = tiny_model("transe")
    batch = np.array([[0, 0, 1], [1, 1, 2], [2, 0, 0]])
    labels = np.array([1.0, 0.0, 1.0])
    l1, g1 = kge.loss_and_grad(m, batch, labels)
    l2, g2 = kge.loss_and_grad(m, np.concatenate([batch, batch]), np.concatenate([labels, labels]))
    assert l1 == pytest.approx(l2, rel=1e-14)
    np.testing.assert_allclose(g1.entity, g2.entity, rtol=1e-12)


def test_loss_is_clamped():
    m = tiny_model("distmult", dim=1)
    m.entity_params[:] = 100.0
    m.relation_params[:] = 100.0
    loss, _ = kge.loss_and_grad(m, np.array([[0, 0, 1]]), np.zeros(1))
    assert math.isfinite(loss) and loss <= -math.log(1e-12) + 1e-9


def finite_difference_error(scorer):
    m = tiny_model(scorer, dim=2, ne=3, nr=2, seed=11, scale=0.5)
    batch = np.array([[h, r, t] for h in range(3) for r in range(2) for t in range(3)])
    labels = np.random.default_rng(5).integers(0, 2, len(batch)).astype(float)
    _, grads = kge.loss_and_grad(m, batch, labels)
    eps = 1e-5
    worst = 0.0
    for params, analytic in ((m.entity_params, grads.entity), (m.relation_params, grads.relation)):
        for idx in np.ndindex(params.shape):
            orig = params[idx]
            params[idx] = orig + eps
            up, _ = kge.loss_and_grad(m, batch, labels)
            params[idx] = orig - eps
            down, _ = kge.loss_and_grad(m, batch, labels)
            params[idx] = orig
            numeric = (up - down) / (2 * eps)
            denom = max(abs(numeric), abs(analytic[idx]), 1e-8)
            worst = max(worst, abs(numeric - analytic[idx]) / denom)
    return worst


@pytest.mark.parametrize("scorer", kge.SCORERS)
def test_gradients_match_finite_differences(scorer):
    assert finite_difference_error(scorer) <= 1e-4


def test_corrupt_avoids_known_triples_and_changes_one_side():
    g = extract_triples(kb_named("father"))
    rng = np.random.default_rng(0)
    neg = kge.corrupt(g.triples, 8, len(g.entities), len(g.relations), g.encoded_keys(), rng)
    assert neg.shape == (8 * len(g), 3)
    pos = np.repeat(g.triples, 8, axis=0)
    np.testing.assert_array_equal(neg[:, 1], pos[:, 1])
    assert np.all((neg[:, 0] == pos[:, 0]) | (neg[:, 2] == pos[:, 2]))
    assert not any(tuple(t) in g for t in neg.tolist())


def test_corrupt_accepts_known_triple_when_space_is_exhausted():
    g = TripleGraph.from_named([(h, "r", t) for h in "ab" for t in "ab"])
    neg = kge.corrupt(g.triples, 2, 2, 1, g.encoded_keys(), np.random.default_rng(0))
    assert neg.shape == (8, 3)


def test_train_config_validation():
    for bad in ({"epochs": 0}, {"lr": 0}, {"negatives": 0}, {"batch_size": 0}, {"optimizer": "rmsprop"},
                {"init_scale": 0}, {"scorer": "rescal"}, {"dim": 0}, {"seed": -1}):
        with pytest.raises(ValueError):
            TrainConfig(**bad)


def test_train_rejects_empty_graph():
    with pytest.raises(kge.TrainingError):
        kge.train(TripleGraph.from_named([]), TrainConfig(epochs=1))


def test_train_is_deterministic():
    g = extract_triples(kb_named("father"))
    cfg = TrainConfig(epochs=20, dim=8)
    assert kge.train(g, cfg).same_params(kge.train(g, cfg))
    assert not kge.train(g, cfg).same_params(kge.train(g, TrainConfig(epochs=20, dim=8, seed=1)))


@pytest.mark.parametrize("scorer", kge.SCORERS)
@pytest.mark.parametrize("optimizer", ["adam", "sgd"])
def test_train_all_scorers_stay_finite(scorer, optimizer):
    g = extract_triples(kb_named("father"))
    losses = []
    m = kge.train(g, TrainConfig(epochs=30, dim=4, scorer=scorer, optimizer=optimizer),
                  on_epoch=lambda e, l: losses.append(l))
    assert len(losses) == 30 and all(map(math.isfinite, losses))
    assert np.isfinite(m.entity_params).all()


@pytest.mark.parametrize("k", [1, 8])
def test_train_converges_for_k(k):
    g = extract_triples(kb_named("family-small"))
    losses = []
    kge.train(g, TrainConfig(epochs=100, dim=32, negatives=k), on_epoch=lambda e, l: losses.append(l))
    assert all(map(math.isfinite, losses))
    assert losses[-1] < 0.5 * losses[0]


def test_training_loss_windows_non_increasing():
    g = extract_triples(kb_named("family-small"))
    losses = []
    kge.train(g, TrainConfig(dim=32), on_epoch=lambda e, l: losses.append(l))
    # soft check: stochastic batches wiggle, but each 25-epoch window must not end higher than it began
    for start in range(0, len(losses) - 25, 25):
        assert losses[start + 25] <= losses[start] * 1.05


def test_auc_on_trained_fixture(family_model):
    g = extract_triples(kb_named("family-small"))
    m = family_model
    ne, nr = len(g.entities), len(g.relations)
    scores = np.stack([np.stack([kge.score_all_tails(m, h, r) for r in range(nr)]) for h in range(ne)])
    positive = np.zeros_like(scores, dtype=bool)
    positive[g.triples[:, 0], g.triples[:, 1], g.triples[:, 2]] = True
    pos, neg = scores[positive], scores[~positive]
    # exhaustive AUC: probability that a random true triple outranks a random false one
    order = np.argsort(np.concatenate([pos, neg]), kind="mergesort")
    ranks = np.empty(len(order))
    ranks[order] = np.arange(1, len(order) + 1)
    auc = (ranks[:len(pos)].sum() - len(pos) * (len(pos) + 1) / 2) / (len(pos) * len(neg))
    assert auc > 0.95
    assert pos.min() > neg.mean()


def test_save_load_round_trip(tmp_path, family_model):
    path = tmp_path / "m.json"
    kge.save_model(family_model, path)
    back = kge.load_model(path)
    assert back.same_params(family_model)
    assert back.entities == family_model.entities
    doc = json.loads(path.read_text())
    assert set(doc) == {"format_version", "scorer", "dim", "entities", "relations", "entity_params",
                        "relation_params", "vocab_fingerprint"}
    assert len(doc["vocab_fingerprint"]) == 16


def test_truncated_or_wrong_version_file_errors(tmp_path):
    m = tiny_model("complex")
    text = kge.model_to_json(m)
    p = tmp_path / "bad.json"
    p.write_text(text[: len(text) // 2])
    with pytest.raises(kge.ModelFormatError):
        kge.load_model(p)
    doc = json.loads(text)
    doc["format_version"] = 99
    with pytest.raises(kge.ModelFormatError):
        kge.model_from_json(json.dumps(doc))
    doc = json.loads(text)
    doc["entity_params"] = doc["entity_params"][:-1]
    with pytest.raises(kge.ModelFormatError):
        kge.model_from_json(json.dumps(doc))


def test_fingerprint_mismatch_warns(tmp_path):
    m = kge.train(extract_triples(kb_named("father")), TrainConfig(epochs=2, dim=2))
    p = tmp_path / "m.json"
    kge.save_model(m, p)
    other = extract_triples(kb_named("incomplete-knows"))
    with pytest.warns(kge.FingerprintWarning):
        kge.load_model(p, other)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        kge.load_model(p, extract_triples(kb_named("father")))


def test_fnv1a_fingerprint_reference():
    # FNV-1a 64 reference values for the empty string and "a"
    assert kge.vocab_fingerprint((), ()) == format(_fnv(b"\x1e"), "016x")
    assert kge.vocab_fingerprint(("b", "a"), ("r",)) == format(_fnv(b"a\x1fb\x1er"), "016x")
    assert _fnv(b"") == 0xcbf29ce484222325 and _fnv(b"a") == 0xaf63dc4c8601ec8c


def _fnv(data: bytes) -> int:
    h = 0xcbf29ce484222325
    for byte in data:
        h = ((h ^ byte) * 0x100000001b3) & 0xFFFFFFFFFFFFFFFF
    return h

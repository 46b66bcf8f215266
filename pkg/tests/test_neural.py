import numpy as np
import pytest

from stylematrix.corpus import EOS, PAD, build_vocab
from stylematrix.embeddings import EmbeddingTable
from stylematrix.neural import (
    GRU_FIELDS,
    Adam,
    GruParams,
    Seq2SeqModel,
    TrainConfig,
    batch_loss,
    classifier_loss,
    classify,
    decode_greedy,
    encode,
    encode_batch,
    gru_step,
    gru_step_backward,
    reconstruction_loss,
    train,
)
from stylematrix.toygen import ToyGrammar, all_cells, generate

from conftest import make_tiny_model

STEP = 1e-5


def rel_err(a, b):
    a, b = np.ravel(a), np.ravel(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12))


def numeric_grad(f, arr, step=STEP):
    """Central differences of scalar f() with respect to every entry of ``arr`` (in place)."""
    g = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = arr[i]
        arr[i] = old + step
        fp = f()
        arr[i] = old - step
        fm = f()
        arr[i] = old
        g[i] = (fp - fm) / (2 * step)
    return g


class TestGruStep:
    def test_zero_params_zero_state(self):
        p = GruParams.zeros(3, 4)
        np.testing.assert_array_equal(gru_step(p, np.ones(3), np.zeros(4)), np.zeros(4))

    def test_zero_params_halves_state(self):
        p = GruParams.zeros(3, 4)
        v = np.array([0.2, -1.0, 3.0, 0.5])
        np.testing.assert_allclose(gru_step(p, np.arange(3.0), v), 0.5 * v, rtol=0, atol=1e-15)

    def test_shape_mismatch(self):
        p = GruParams.zeros(3, 4)
        with pytest.raises(ValueError):
            gru_step(p, np.ones(2), np.zeros(4))
        with pytest.raises(ValueError):
            gru_step(p, np.ones(3), np.zeros(5))

    def test_reference_equations(self):
        rng = np.random.default_rng(0)
        p = GruParams.init(3, 4, rng)
        x, h = rng.normal(size=3), rng.normal(size=4)
        sig = lambda a: 1 / (1 + np.exp(-a))
        z = sig(p.W_z @ x + p.U_z @ h + p.b_z)
        r = sig(p.W_r @ x + p.U_r @ h + p.b_r)
        hh = np.tanh(p.W_h @ x + p.U_h @ (r * h) + p.b_h)
        np.testing.assert_allclose(gru_step(p, x, h), (1 - z) * hh + z * h, atol=1e-15)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        p = GruParams.init(5, 6, rng)
        x, h, dh = rng.normal(size=5), rng.normal(size=6), rng.normal(size=6)
        f = lambda: float(dh @ gru_step(p, x, h))
        grads, dx, dh_prev = gru_step_backward(p, x, h, dh)
        for name in GRU_FIELDS:
            assert rel_err(grads[name], numeric_grad(f, getattr(p, name))) < 1e-4, name
        assert rel_err(dx, numeric_grad(f, x)) < 1e-4
        assert rel_err(dh_prev, numeric_grad(f, h)) < 1e-4


class TestEncodeDecode:
    def test_zero_encoder(self, tiny_model):
        m = tiny_model.copy()
        for name in GRU_FIELDS:
            getattr(m.encoder, name)[...] = 0.0
        np.testing.assert_array_equal(encode(m, [4, 5, 6]), np.zeros(m.d))

    def test_single_token(self, tiny_model):
        x = tiny_model.embeddings.vectors[7]
        np.testing.assert_allclose(encode(tiny_model, [7]),
                                   gru_step(tiny_model.encoder, x, np.zeros(tiny_model.d)), atol=1e-15)

    def test_empty_sentence(self, tiny_model):
        with pytest.raises(ValueError):
            encode(tiny_model, [])

    def test_batch_matches_single(self, tiny_model):
        sents = [np.array([4, 5]), np.array([6, 7, 8, 9]), np.array([10])]
        Z = encode_batch(tiny_model, sents)
        for s, z in zip(sents, Z):
            np.testing.assert_allclose(encode(tiny_model, s), z, atol=1e-15)

    def test_semantic_vector_bound(self):
        rng = np.random.default_rng(0)
        for seed in range(100):
            m = make_tiny_model(seed=seed, scale=3.0)
            s = rng.integers(4, 12, size=rng.integers(1, 10))
            assert np.all(np.abs(encode(m, s)) < 1.0)

    def test_zero_model_decodes_pad(self):
        emb = EmbeddingTable(np.zeros((10, 3)))
        m = Seq2SeqModel(emb, GruParams.zeros(3, 4), GruParams.zeros(3, 4), np.zeros((10, 4)))
        np.testing.assert_array_equal(decode_greedy(m, np.zeros(4), max_len=7), [PAD] * 7)

    def test_max_len_one(self, tiny_model):
        assert len(decode_greedy(tiny_model, np.ones(tiny_model.d) * 0.3, max_len=1)) <= 1

    def test_stops_at_eos(self, tiny_model):
        m = tiny_model.copy()
        m.out_proj[...] = 0.0
        m.out_proj[EOS] = 1.0
        np.testing.assert_array_equal(decode_greedy(m, np.full(m.d, 0.9), max_len=5), [EOS])


class TestReconstructionLoss:
    def test_uniform_logits(self, tiny_model):
        m = tiny_model.copy()
        m.out_proj[...] = 0.0
        loss, _ = reconstruction_loss(m, [4, 5, 6])
        assert loss == pytest.approx(np.log(m.vocab_size), abs=1e-12)

    def test_teacher_forcing_is_deterministic(self, tiny_model):
        a, _ = reconstruction_loss(tiny_model, [4, 5, 6], 1.0, np.random.default_rng(1))
        b, _ = reconstruction_loss(tiny_model, [4, 5, 6], 1.0, np.random.default_rng(2))
        assert a == b

    def test_bad_probability(self, tiny_model):
        with pytest.raises(ValueError):
            reconstruction_loss(tiny_model, [4], 1.5)

    @pytest.mark.parametrize("seed", [0, 3])
    def test_finite_differences(self, seed):
        m = make_tiny_model(seed=seed)
        sent = [4, 9, 5, 11, 6]
        f = lambda: reconstruction_loss(m, sent)[0]
        _, grads = reconstruction_loss(m, sent)
        assert "classifier_w" not in grads
        params = m.parameters()
        for name, g in grads.items():
            assert rel_err(g, numeric_grad(f, params[name])) < 1e-4, name

    def test_no_embedding_gradient(self, tiny_model):
        _, grads = reconstruction_loss(tiny_model, [4, 5])
        assert set(grads) == set(tiny_model.parameters()) - {"classifier_w"}
        assert not any(k.startswith("emb") for k in grads)

    def test_padded_batch_equals_mean_of_singles(self, tiny_model):
        sents = [np.array([4, 5, 6, 7]), np.array([8]), np.array([9, 10])]
        rng = np.random.default_rng(0)
        total, *_ = batch_loss(tiny_model, sents, None, 1.0, rng, 0.0, need_grads=False)
        singles = [reconstruction_loss(tiny_model, s)[0] for s in sents]
        assert total == pytest.approx(np.mean(singles), abs=1e-13)


class TestClassifier:
    def test_zero_weights(self, tiny_model):
        m = tiny_model.copy()
        m.classifier_w[...] = 0.0
        Z = np.random.default_rng(0).normal(size=(20, m.d))
        np.testing.assert_array_equal(classify(m, Z), 0.5)

    def test_symmetry(self, tiny_model):
        Z = np.random.default_rng(1).normal(size=(1000, tiny_model.d))
        np.testing.assert_array_equal(classify(tiny_model, Z), classify(tiny_model, -Z))

    def test_row_major_vec(self, tiny_model):
        z = np.random.default_rng(2).normal(size=tiny_model.d)
        a = tiny_model.classifier_w @ np.outer(z, z).ravel()
        assert classify(tiny_model, z) == pytest.approx(1 / (1 + np.exp(-a)), abs=1e-15)

    def test_unsupervised(self):
        m = make_tiny_model(semi_supervised=False)
        with pytest.raises(ValueError, match="model is unsupervised"):
            classify(m, np.zeros(m.d))

    def test_finite_differences(self, tiny_model):
        rng = np.random.default_rng(4)
        w = tiny_model.classifier_w.copy()
        Z = rng.normal(size=(7, tiny_model.d))
        y = np.array([0, 1, 1, -1, 0, 1, 0])
        _, gw, gz = classifier_loss(w, Z, y)
        f = lambda: classifier_loss(w, Z, y)[0]
        assert rel_err(gw, numeric_grad(f, w)) < 1e-4
        assert rel_err(gz, numeric_grad(f, Z)) < 1e-4
        assert not gz[3].any()

    def test_full_batch_gradient(self, tiny_model):
        m = tiny_model
        sents = [np.array([4, 5, 6]), np.array([7, 8]), np.array([9])]
        labels = np.array([1, 0, -1])
        rng = np.random.default_rng(0)
        _, _, _, grads = batch_loss(m, sents, labels, 1.0, rng, 0.1)
        f = lambda: batch_loss(m, sents, labels, 1.0, rng, 0.1, need_grads=False)[0]
        params = m.parameters()
        for name in ("classifier_w", "encoder.U_z", "encoder.W_h", "decoder.b_r", "out_proj"):
            assert rel_err(grads[name], numeric_grad(f, params[name])) < 1e-4, name


class TestAdam:
    def test_first_step(self):
        p = {"a": np.array([1.0, -2.0])}
        opt = Adam(p, lr=0.1)
        opt.step({"a": np.array([0.5, -3.0])})
        # bias correction makes the first step lr * sign(g) up to eps
        np.testing.assert_allclose(p["a"], [0.9, -1.9], atol=1e-7)

    def test_matches_reference_loop(self):
        rng = np.random.default_rng(0)
        p = {"a": rng.normal(size=3)}
        ref = p["a"].copy()
        m = v = np.zeros(3)
        opt = Adam(p, lr=0.01)
        for t in range(1, 6):
            g = rng.normal(size=3)
            opt.step({"a": g.copy()})
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            ref = ref - 0.01 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
        np.testing.assert_allclose(p["a"], ref, atol=1e-14)


@pytest.fixture(scope="module")
def small_toy():
    c = generate(ToyGrammar(seed=0), 20, all_cells())
    vocab = build_vocab(c.texts)
    rng = np.random.default_rng(0)
    emb = EmbeddingTable(rng.normal(0, 0.3, size=(len(vocab), 8)))
    return c, vocab, emb


class TestTrain:
    def test_epochs_zero(self, small_toy):
        c, vocab, emb = small_toy
        m = Seq2SeqModel.init(emb, 8, seed=0, semi_supervised=True)
        out, hist = train(m, c.encode(vocab), TrainConfig(epochs=0), c.labels)
        assert hist == []
        for k, v in m.parameters().items():
            np.testing.assert_array_equal(out.parameters()[k], v)

    def test_labels_required(self, small_toy):
        c, vocab, emb = small_toy
        m = Seq2SeqModel.init(emb, 8, semi_supervised=True)
        with pytest.raises(ValueError, match="labels"):
            train(m, c.encode(vocab), TrainConfig(epochs=1))

    def test_loss_decreases_freeze_and_determinism(self, small_toy):
        c, vocab, emb = small_toy
        before = emb.vectors.copy()
        m = Seq2SeqModel.init(emb, 8, seed=0, semi_supervised=True)
        cfg = TrainConfig(epochs=3, seed=0)
        a, hist = train(m, c.encode(vocab), cfg, c.labels)
        b, _ = train(m, c.encode(vocab), cfg, c.labels)
        losses = [h.loss for h in hist]
        assert losses[0] > losses[1] > losses[2]
        np.testing.assert_array_equal(emb.vectors, before)
        for k, v in a.parameters().items():
            np.testing.assert_array_equal(b.parameters()[k], v)

    def test_teacher_forcing_schedule(self):
        cfg = TrainConfig(epochs=5)
        assert [cfg.teacher_forcing(e) for e in range(5)] == pytest.approx([1.0, 0.875, 0.75, 0.625, 0.5])

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            TrainConfig(cls_weight=-1).validate()


class TestTrainedToy:
    """Checks on the session-wide desk-scale model."""

    def test_reconstructs_training_sentences(self, toy_setup):
        from stylematrix.experiments import exact_match_rate

        sample = toy_setup.train.subset(np.arange(0, len(toy_setup.train), 10))
        assert exact_match_rate(toy_setup, sample) >= 0.9

    def test_classifier_heldout_accuracy(self, toy_setup):
        Z = encode_batch(toy_setup.model, toy_setup.encode(toy_setup.heldout))
        pred = classify(toy_setup.model, Z) > 0.5
        assert np.mean(pred == toy_setup.heldout.labels) >= 0.95

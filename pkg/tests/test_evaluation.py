import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stylematrix.evaluation import (
    CnnConfig,
    EvalReport,
    TextCnn,
    accuracy,
    aggregate,
    bleu,
    train_eval_classifier,
)


def oracle_bleu(cands, refs, max_n=4):
    """Brute-force corpus BLEU written without Counter or log-space accumulation."""
    matched = [0] * max_n
    possible = [0] * max_n
    c_total = r_total = 0
    for c, r in zip(cands, refs):
        c_total += len(c)
        r_total += len(r)
        for n in range(1, max_n + 1):
            c_grams = [tuple(c[i:i + n]) for i in range(len(c) - n + 1)]
            r_grams = [tuple(r[i:i + n]) for i in range(len(r) - n + 1)]
            possible[n - 1] += len(c_grams)
            for g in set(c_grams):
                matched[n - 1] += min(c_grams.count(g), r_grams.count(g))
    if c_total == 0 or matched[0] == 0:
        return 0.0
    prod = 1.0
    for n in range(max_n):
        m, t = matched[n], possible[n]
        if n > 0 and m == 0:
            m, t = 1, t + 1
        prod *= m / t
    bp = 1.0 if c_total >= r_total else math.exp(1 - r_total / c_total)
    return 100.0 * bp * prod ** (1.0 / max_n)


toks = st.lists(st.sampled_from("abcdef"), min_size=1, max_size=9)


class TestBleu:
    def test_identical(self):
        s = [["the", "food", "is", "good"], ["we", "like", "it", "a", "lot"]]
        assert bleu(s, s) == pytest.approx(100.0, abs=1e-12)

    def test_no_shared_unigram(self):
        assert bleu([["a", "b"]], [["c", "d"]]) == 0.0

    def test_errors(self):
        with pytest.raises(ValueError):
            bleu([["a"]], [])
        with pytest.raises(ValueError):
            bleu([], [])

    def test_oracle_twenty_pairs(self):
        rng = np.random.default_rng(0)
        words = list("abcdefghij")
        cands = [list(rng.choice(words, size=rng.integers(1, 12))) for _ in range(20)]
        refs = [list(rng.choice(words, size=rng.integers(1, 12))) for _ in range(20)]
        assert abs(bleu(cands, refs) - oracle_bleu(cands, refs)) < 1e-6

    @settings(max_examples=200)
    @given(st.lists(st.tuples(toks, toks), min_size=1, max_size=6))
    def test_oracle_property(self, pairs):
        cands, refs = [p[0] for p in pairs], [p[1] for p in pairs]
        val = bleu(cands, refs)
        assert 0.0 <= val <= 100.0 + 1e-9
        assert val == pytest.approx(oracle_bleu(cands, refs), abs=1e-6)

    @given(toks)
    def test_self_is_hundred(self, s):
        assert bleu([s], [s]) == pytest.approx(100.0, abs=1e-9)

    @given(toks, toks)
    def test_deleting_matches_never_helps(self, cand, ref):
        stripped = [t for t in cand if t not in ref] or ["zz"]
        assert bleu([stripped], [ref]) <= bleu([cand], [ref]) + 1e-12

    def test_brevity_penalty(self):
        ref = list("abcdefgh")
        cand = list("abcd")
        expected = math.exp(1 - 8 / 4) * 100.0
        assert bleu([cand], [ref]) == pytest.approx(expected, rel=1e-12)


class TestAggregate:
    def test_table_row(self):
        r = aggregate(80.33, 13.43)
        assert round(r.g_score, 2) == 32.85 and round(r.mean, 2) == 46.88

    def test_zero_accuracy(self):
        r = aggregate(0.0, 30.0)
        assert r.g_score == 0.0 and r.mean == 15.0

    def test_negative(self):
        with pytest.raises(ValueError):
            aggregate(-1.0, 3.0)

    @given(st.floats(0, 100), st.floats(0, 100))
    def test_identities(self, a, b):
        r = aggregate(a, b)
        assert abs(r.g_score - math.sqrt(a * b)) <= 1e-9
        assert abs(r.mean - (a + b) / 2) <= 1e-9

    def test_json_single_line(self):
        text = aggregate(50.0, 20.0).to_json()
        assert "\n" not in text
        assert set(json.loads(text)) == {"acc", "bleu", "g_score", "mean"}
        assert "g_score" in aggregate(50.0, 20.0).table()


def _separable(n, seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, size=n)
    sents = []
    for y in labels:
        body = list(rng.integers(6, 20, size=rng.integers(1, 6)))
        body.insert(rng.integers(0, len(body) + 1), 4 + y)  # marker word 4 or 5
        sents.append(np.array(body))
    return sents, labels


class TestTextCnn:
    def test_gradients(self):
        clf = TextCnn.init(15, CnnConfig(emb_dim=4, n_filters=3, widths=(2, 3), seed=1))
        rng = np.random.default_rng(0)
        # non-zero biases keep padded windows off the ReLU kink at 0
        for k in (2, 3):
            clf.params[f"conv{k}.b"][...] = rng.uniform(0.05, 0.3, size=3) * rng.choice([-1, 1], size=3)
        sents = [np.array([4, 5, 6, 7]), np.array([8]), np.array([9, 10, 11, 12, 13, 14])]
        y = np.array([1, 0, 1])
        loss, grads = clf.loss_and_grads(sents, y)
        step = 1e-6
        for name, arr in clf.params.items():
            num = np.zeros_like(arr)
            for i in np.ndindex(arr.shape):
                old = arr[i]
                arr[i] = old + step
                lp, _ = clf.loss_and_grads(sents, y)
                arr[i] = old - step
                lm, _ = clf.loss_and_grads(sents, y)
                arr[i] = old
                num[i] = (lp - lm) / (2 * step)
            if name == "emb":
                num[0] = 0.0
            denom = max(np.linalg.norm(num) + np.linalg.norm(grads[name]), 1e-12)
            assert np.linalg.norm(num - grads[name]) / denom < 1e-4, name

    def test_separable_heldout(self):
        sents, labels = _separable(400, 0)
        clf = train_eval_classifier(sents, labels, 20, CnnConfig(epochs=5, seed=0, lr=3e-3))
        test, tl = _separable(200, 1)
        assert np.mean(clf.predict(test) == tl) >= 0.95

    def test_untrained_is_coin_flip(self):
        sents, labels = _separable(500, 2)
        clf = train_eval_classifier(sents, labels, 20, CnnConfig(epochs=0, seed=0))
        acc = np.mean(clf.predict(sents) == labels)
        assert 0.4 <= acc <= 0.6

    def test_single_class(self):
        sents, _ = _separable(20, 3)
        with pytest.raises(ValueError):
            train_eval_classifier(sents, np.ones(20, dtype=int), 20)

    def test_deterministic(self):
        sents, labels = _separable(100, 4)
        a = train_eval_classifier(sents, labels, 20, CnnConfig(epochs=2))
        b = train_eval_classifier(sents, labels, 20, CnnConfig(epochs=2))
        for k in a.params:
            np.testing.assert_array_equal(a.params[k], b.params[k])

    def test_tie_break_and_accuracy(self):
        clf = TextCnn.init(10, CnnConfig())
        clf.params["out.W"][...] = 0.0
        clf.params["out.b"][...] = 0.0
        sents = [np.array([4, 5]), np.array([6])]
        assert accuracy(clf, sents, 0) == 100.0
        assert accuracy(clf, sents, 1) == 0.0
        with pytest.raises(ValueError):
            accuracy(clf, [], 0)

    def test_empty_output_sentence_is_scored(self):
        clf = TextCnn.init(10, CnnConfig())
        assert accuracy(clf, [np.zeros(0, dtype=np.int64)], 0) in (0.0, 100.0)

    def test_bad_widths(self):
        with pytest.raises(ValueError):
            CnnConfig(widths=(3, 3)).validate()

"""Transfer evaluation: a TextCNN style classifier, corpus BLEU and aggregates."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .corpus import PAD
from .neural import Adam, log_softmax, pad_batch


@dataclass
class CnnConfig:
    emb_dim: int = 32
    n_filters: int = 16
    widths: tuple[int, ...] = (3, 4, 5)
    epochs: int = 5
    batch_size: int = 32
    lr: float = 1e-3
    seed: int = 0

    def validate(self) -> None:
        if len(set(self.widths)) != len(self.widths) or min(self.widths) < 1:
            raise ValueError("filter widths must be distinct positive integers")
        if self.emb_dim < 1 or self.n_filters < 1 or self.epochs < 0 or self.batch_size < 1:
            raise ValueError("invalid TextCNN hyperparameters")


class TextCnn:
    """Convolutions of several widths, max-pooled over time, then a linear 2-way layer.

    Holds its own word embeddings, trained together with the filters.
    Sentences shorter than the widest filter are padded with PAD.
    """

    def __init__(self, params: dict[str, np.ndarray], widths: Sequence[int]):
        self.params = params
        self.widths = tuple(int(k) for k in widths)

    @classmethod
    def init(cls, vocab_size: int, config: CnnConfig) -> "TextCnn":
        config.validate()
        rng = np.random.default_rng(config.seed)
        d_e, f = config.emb_dim, config.n_filters
        params = {"emb": rng.normal(0.0, 0.1, size=(vocab_size, d_e))}
        params["emb"][PAD] = 0.0
        for k in config.widths:
            bound = 1.0 / math.sqrt(k * d_e)
            params[f"conv{k}.W"] = rng.uniform(-bound, bound, size=(f, k * d_e))
            params[f"conv{k}.b"] = np.zeros(f)
        n_feat = f * len(config.widths)
        bound = 1.0 / math.sqrt(n_feat)
        params["out.W"] = rng.uniform(-bound, bound, size=(2, n_feat))
        params["out.b"] = np.zeros(2)
        return cls(params, config.widths)

    @property
    def vocab_size(self) -> int:
        return self.params["emb"].shape[0]

    def _forward(self, sentences: Sequence[np.ndarray]):
        ids, lengths = pad_batch(sentences)
        kmax = max(self.widths)
        if ids.shape[1] < kmax:
            ids = np.pad(ids, ((0, 0), (0, kmax - ids.shape[1])), constant_values=PAD)
        if ids.max() >= self.vocab_size:
            raise IndexError("token id out of range for the classifier vocabulary")
        eff_len = np.maximum(lengths, kmax)
        X = self.params["emb"][ids]  # (B, L, d_e)
        B, L, d_e = X.shape
        feats, caches = [], []
        for k in self.widths:
            n = L - k + 1
            win = sliding_window_view(X, k, axis=1)  # (B, n, d_e, k)
            win = win.transpose(0, 1, 3, 2).reshape(B, n, k * d_e)
            pre = win @ self.params[f"conv{k}.W"].T + self.params[f"conv{k}.b"]
            act = np.maximum(pre, 0.0)
            valid = np.arange(n)[None, :] < (eff_len - k + 1)[:, None]
            act_masked = np.where(valid[:, :, None], act, -np.inf)
            arg = np.argmax(act_masked, axis=1)  # (B, f)
            pooled = np.take_along_axis(act, arg[:, None, :], axis=1)[:, 0]
            feats.append(pooled)
            caches.append((k, win, pre, arg))
        H = np.concatenate(feats, axis=1)
        logits = H @ self.params["out.W"].T + self.params["out.b"]
        return logits, (ids, H, caches)

    def logits(self, sentences: Sequence[np.ndarray], chunk: int = 512) -> np.ndarray:
        sentences = [np.asarray(s, dtype=np.int64) for s in sentences]
        return np.concatenate([self._forward(sentences[i:i + chunk])[0]
                               for i in range(0, len(sentences), chunk)])

    def predict(self, sentences: Sequence[np.ndarray]) -> np.ndarray:
        """Predicted labels; a tie between the two logits goes to label 0."""
        return np.argmax(self.logits(sentences), axis=1)

    def loss_and_grads(self, sentences: Sequence[np.ndarray], labels: np.ndarray):
        logits, (ids, H, caches) = self._forward(sentences)
        B = len(labels)
        logp = log_softmax(logits)
        loss = float(-logp[np.arange(B), labels].mean())
        dlogits = np.exp(logp)
        dlogits[np.arange(B), labels] -= 1.0
        dlogits /= B
        g = {k: np.zeros_like(v) for k, v in self.params.items()}
        g["out.W"] = dlogits.T @ H
        g["out.b"] = dlogits.sum(axis=0)
        dH = dlogits @ self.params["out.W"]
        d_e = self.params["emb"].shape[1]
        dX = np.zeros(ids.shape + (d_e,))
        f = self.params[f"conv{self.widths[0]}.b"].shape[0]
        for j, (k, win, pre, arg) in enumerate(caches):
            dpool = dH[:, j * f:(j + 1) * f]
            n = win.shape[1]
            dpre = np.zeros((B, n, f))
            b_idx, f_idx = np.meshgrid(np.arange(B), np.arange(f), indexing="ij")
            dpre[b_idx, arg, f_idx] = dpool
            dpre *= pre > 0
            g[f"conv{k}.W"] = np.einsum("bnf,bnc->fc", dpre, win)
            g[f"conv{k}.b"] = dpre.sum(axis=(0, 1))
            dwin = (dpre @ self.params[f"conv{k}.W"]).reshape(B, n, k, d_e)
            for offset in range(k):
                dX[:, offset:offset + n] += dwin[:, :, offset]
        np.add.at(g["emb"], ids, dX)
        g["emb"][PAD] = 0.0
        return loss, g


def train_eval_classifier(sentences: Sequence[np.ndarray], labels: np.ndarray, vocab_size: int,
                          config: CnnConfig | None = None) -> TextCnn:
    """Fit a binary TextCNN with Adam on cross-entropy."""
    config = config or CnnConfig()
    config.validate()
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != len(sentences):
        raise ValueError("labels and sentences differ in length")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("evaluation classifier labels must be 0 or 1")
    if len(np.unique(labels)) < 2:
        raise ValueError("training data must contain both labels")
    clf = TextCnn.init(vocab_size, config)
    sentences = [np.asarray(s, dtype=np.int64) for s in sentences]
    rng = np.random.default_rng(config.seed + 1)
    opt = Adam(clf.params, lr=config.lr)
    for _ in range(config.epochs):
        order = rng.permutation(len(sentences))
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            _, grads = clf.loss_and_grads([sentences[i] for i in idx], labels[idx])
            opt.step(grads)
    return clf


def accuracy(clf: TextCnn, sentences: Sequence[np.ndarray], target_label: int) -> float:
    """Percentage of sentences the classifier assigns to ``target_label``."""
    if len(sentences) == 0:
        raise ValueError("no sentences to classify")
    sentences = [s if len(s) else np.array([PAD]) for s in sentences]
    return 100.0 * float(np.mean(clf.predict(sentences) == target_label))


def _ngrams(tokens: Sequence, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidates: Sequence[Sequence], references: Sequence[Sequence], max_n: int = 4) -> float:
    """Corpus BLEU (0-100) against one reference per candidate.

    Clipped n-gram precisions up to ``max_n``; for n >= 2 a zero match count
    is smoothed to 1 / (total + 1). Brevity penalty exp(1 - r / c) when the
    candidate corpus is shorter than the reference corpus.
    """
    if len(candidates) != len(references):
        raise ValueError("candidates and references differ in number")
    if len(candidates) == 0:
        raise ValueError("no sentences to score")
    matches = np.zeros(max_n)
    totals = np.zeros(max_n)
    c_len = r_len = 0
    for cand, ref in zip(candidates, references):
        cand, ref = list(cand), list(ref)
        c_len += len(cand)
        r_len += len(ref)
        for n in range(1, max_n + 1):
            c_ng = _ngrams(cand, n)
            r_ng = _ngrams(ref, n)
            matches[n - 1] += sum(min(c, r_ng[g]) for g, c in c_ng.items())
            totals[n - 1] += max(len(cand) - n + 1, 0)
    if c_len == 0 or matches[0] == 0:
        return 0.0
    log_p = 0.0
    for n in range(max_n):
        m, t = matches[n], totals[n]
        if n >= 1 and m == 0:
            m, t = 1.0, t + 1.0
        log_p += math.log(m / t) / max_n
    bp = 1.0 if c_len >= r_len else math.exp(1.0 - r_len / c_len)
    return 100.0 * bp * math.exp(log_p)


@dataclass(frozen=True)
class EvalReport:
    acc: float
    bleu: float
    g_score: float
    mean: float

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    def table(self) -> str:
        return "\n".join(f"{k:<8}{v:>10.2f}" for k, v in asdict(self).items())


def aggregate(acc: float, bleu_score: float) -> EvalReport:
    """G-Score (geometric mean) and Mean (arithmetic mean) of accuracy and BLEU."""
    if acc < 0 or bleu_score < 0:
        raise ValueError("accuracy and BLEU must be non-negative")
    return EvalReport(acc, bleu_score, math.sqrt(acc * bleu_score), (acc + bleu_score) / 2.0)

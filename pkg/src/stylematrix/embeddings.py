"""CBOW word embeddings trained with negative sampling."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import PAD, Vocab


@dataclass
class EmbeddingTable:
    vectors: np.ndarray  # (|V|, d_w) float64

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise ValueError("embedding table must be a matrix")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def export_text(self, vocab: Vocab, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for tok, row in zip(vocab.id_to_token, self.vectors):
                fh.write(tok + " " + " ".join(f"{v:.17g}" for v in row) + "\n")


def lookup(table: EmbeddingTable, ids: Sequence[int] | np.ndarray) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= len(table)):
        raise IndexError(f"token id out of range for table of size {len(table)}")
    return table.vectors[ids]


def init_table(vocab_size: int, dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    vecs = rng.uniform(-0.5 / dim, 0.5 / dim, size=(vocab_size, dim))
    vecs[PAD] = 0.0
    return vecs


def train_cbow(sentences: Sequence[np.ndarray], vocab: Vocab, dim: int = 32, window: int = 5,
               negatives: int = 5, epochs: int = 5, lr: float = 0.025, seed: int = 0,
               min_lr: float = 1e-4) -> EmbeddingTable:
    """Train CBOW vectors on id-encoded sentences.

    For every position the mean of the input vectors within +-``window`` (same
    sentence only) predicts the centre token against ``negatives`` draws from
    the unigram**0.75 distribution. Updates for all positions of a sentence
    are computed together and applied at once. The learning rate decays
    linearly from ``lr`` to ``lr * min_lr`` over the run.
    """
    if dim < 2:
        raise ValueError("embedding dimension must be >= 2")
    if window < 1:
        raise ValueError("window must be >= 1")
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    n_tokens = sum(len(s) for s in sentences)
    if n_tokens < window + 1:
        raise ValueError(f"corpus has {n_tokens} tokens, need at least window+1 = {window + 1}")

    V = len(vocab)
    w_in = init_table(V, dim, seed)
    if epochs == 0:
        return EmbeddingTable(w_in)
    w_out = np.zeros((V, dim))
    rng = np.random.default_rng(seed + 1)

    counts = np.bincount(np.concatenate(sentences), minlength=V).astype(np.float64)
    noise = counts ** 0.75
    noise /= noise.sum()
    noise_cdf = np.cumsum(noise)

    total = epochs * n_tokens
    seen = 0
    masks = {}
    for _ in range(epochs):
        for s_idx in rng.permutation(len(sentences)):
            sent = sentences[s_idx]
            T = len(sent)
            if T not in masks:
                off = np.abs(np.subtract.outer(np.arange(T), np.arange(T)))
                M = ((off > 0) & (off <= window)).astype(np.float64)
                masks[T] = (M, M.sum(axis=1))
            M, n_ctx = masks[T]
            alpha = lr * max(min_lr, 1.0 - seen / total)
            seen += T
            negs = np.searchsorted(noise_cdf, rng.random((T, negatives)), side="right")
            negs = np.minimum(negs, V - 1)
            has_ctx = n_ctx > 0
            if not has_ctx.any():
                continue
            # all positions of the sentence form one update
            H = (M @ w_in[sent]) / np.maximum(n_ctx, 1.0)[:, None]
            targets = np.concatenate([sent[:, None], negs], axis=1)
            labels = np.zeros(targets.shape)
            labels[:, 0] = 1.0
            valid = np.ones(targets.shape, dtype=bool)
            valid[:, 1:] = negs != sent[:, None]
            valid &= has_ctx[:, None]
            out = w_out[targets]  # (T, 1 + negatives, d)
            scores = 1.0 / (1.0 + np.exp(-np.einsum("tkd,td->tk", out, H)))
            g = (labels - scores) * valid * alpha
            grad_H = np.einsum("tk,tkd->td", g, out)
            np.add.at(w_out, targets.ravel(), (g[:, :, None] * H[:, None, :]).reshape(-1, dim))
            np.add.at(w_in, sent, M.T @ (grad_H / np.maximum(n_ctx, 1.0)[:, None]))
    w_in[PAD] = 0.0
    return EmbeddingTable(w_in)

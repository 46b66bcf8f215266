"""Neutralization-stylization transfer between two corpora.

A sentence is encoded, whitened with the source corpus statistics, colored
with the target corpus statistics and decoded greedily.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import LabeledCorpus, Vocab
from .neural import Seq2SeqModel, classify, decode_batch, encode_batch
from .stylemat import (
    NeutralizeOp,
    StylizeOp,
    apply_neutralize,
    apply_stylize,
    compute_style_matrix,
    make_neutralizer,
    make_stylizer,
)


@dataclass(frozen=True)
class TransferOperatorPair:
    neutralizer: NeutralizeOp
    stylizer: StylizeOp
    source_name: str = "x"
    target_name: str = "y"

    def __post_init__(self):
        if self.neutralizer.P.shape != self.stylizer.P.shape:
            raise ValueError("neutralizer and stylizer dimensions differ")

    @property
    def dim(self) -> int:
        return self.neutralizer.P.shape[0]

    def apply(self, Z: np.ndarray) -> np.ndarray:
        """Map semantic vectors (columns, or a single vector) from source to target style."""
        return apply_stylize(self.stylizer, apply_neutralize(self.neutralizer, Z))


def _encoded(corpus: LabeledCorpus | Sequence[np.ndarray], vocab: Vocab | None) -> list[np.ndarray]:
    if isinstance(corpus, LabeledCorpus):
        if vocab is None:
            raise ValueError("a vocabulary is needed to encode a LabeledCorpus")
        return corpus.encode(vocab)
    return [np.asarray(s, dtype=np.int64) for s in corpus]


def keep_count(n: int, drop_rate: float) -> int:
    # the small slack keeps e.g. (1 - 0.15) * 10 from rounding up to 9.000...01 -> 10
    return min(n, math.ceil((1.0 - drop_rate) * n - 1e-9))


def filter_by_confidence(model: Seq2SeqModel, corpus: LabeledCorpus, drop_rate: float,
                         vocab: Vocab | None = None) -> LabeledCorpus:
    """Keep the ceil((1 - drop_rate) * N) sentences the style classifier is most sure of.

    Confidence is the classifier probability of the sentence's own label.
    Ties keep the earlier sentence; the kept sentences stay in corpus order.
    """
    if not 0.0 <= drop_rate < 1.0:
        raise ValueError("drop_rate must lie in [0, 1)")
    if not model.semi_supervised:
        raise ValueError("model is unsupervised; confidence filtering needs the style classifier")
    if corpus.labels is None:
        raise ValueError("confidence filtering needs labels")
    if drop_rate == 0.0:
        return corpus.subset(np.arange(len(corpus)))
    Z = encode_batch(model, _encoded(corpus, vocab))
    p = classify(model, Z)
    conf = np.where(corpus.labels == 1, p, 1.0 - p)
    order = np.lexsort((np.arange(len(corpus)), -conf))
    keep = np.sort(order[: keep_count(len(corpus), drop_rate)])
    return corpus.subset(keep)


def prepare_operators(model: Seq2SeqModel, corpus_x: LabeledCorpus, corpus_y: LabeledCorpus,
                      vocab: Vocab, eps: float = 1e-5, drop_rate: float = 0.0) -> TransferOperatorPair:
    """Build the (neutralize X, stylize Y) pair from two corpora."""
    if len(corpus_x) == 0 or len(corpus_y) == 0:
        raise ValueError("both corpora must be non-empty")
    if not 0.0 <= drop_rate < 1.0:
        raise ValueError("drop_rate must lie in [0, 1)")
    if drop_rate > 0.0:
        corpus_x = filter_by_confidence(model, corpus_x, drop_rate, vocab)
        corpus_y = filter_by_confidence(model, corpus_y, drop_rate, vocab)
    for c in (corpus_x, corpus_y):
        if len(c) < 2:
            raise ValueError(f"corpus {c.name!r} has fewer than 2 sentences after filtering")
    sx = compute_style_matrix(encode_batch(model, corpus_x.encode(vocab)).T)
    sy = compute_style_matrix(encode_batch(model, corpus_y.encode(vocab)).T)
    return TransferOperatorPair(make_neutralizer(sx, eps), make_stylizer(sy, eps),
                                corpus_x.name, corpus_y.name)


def transfer_sentences(model: Seq2SeqModel, pair: TransferOperatorPair,
                       sentences: Sequence[Sequence[int]], max_len: int = 30) -> list[np.ndarray]:
    """Decode D(stylize(neutralize(E(x)))) for each sentence, in input order."""
    if len(sentences) == 0:
        raise ValueError("no sentences to transfer")
    Z = encode_batch(model, [np.asarray(s, dtype=np.int64) for s in sentences])
    return decode_batch(model, pair.apply(Z.T).T, max_len)


def reconstruct_sentences(model: Seq2SeqModel, sentences: Sequence[Sequence[int]],
                          max_len: int = 30) -> list[np.ndarray]:
    """Plain autoencoder output, D(E(x))."""
    if len(sentences) == 0:
        raise ValueError("no sentences to reconstruct")
    Z = encode_batch(model, [np.asarray(s, dtype=np.int64) for s in sentences])
    return decode_batch(model, Z, max_len)

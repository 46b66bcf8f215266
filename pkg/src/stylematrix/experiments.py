"""Desk-scale toy experiments shared by the recipes and the acceptance tests.

A setup is: toy corpora, a vocabulary, CBOW embeddings, a semi-supervised
seq2seq autoencoder, an independent TextCNN judge, and held-out sentences.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import Config
from .corpus import LabeledCorpus, Vocab, build_vocab
from .embeddings import train_cbow
from .evaluation import EvalReport, TextCnn, accuracy, aggregate, bleu, train_eval_classifier
from .neural import EpochLog, Seq2SeqModel, strip_eos, train
from .toygen import ToyGrammar, all_cells, generate
from .transfer import TransferOperatorPair, prepare_operators, reconstruct_sentences, transfer_sentences

log = logging.getLogger(__name__)


def desk_config(**overrides) -> Config:
    """Hyperparameters that train the toy autoencoder to >90% exact reconstruction in 20 epochs."""
    base = dict(emb_dim=32, hidden=32, emb_epochs=20, emb_lr=0.05, lr=1e-2, epochs=20,
                batch_size=32, cnn_epochs=3)
    base.update(overrides)
    return Config(**base).validate()


@dataclass
class ToySetup:
    config: Config
    vocab: Vocab
    train: LabeledCorpus
    heldout: LabeledCorpus
    model: Seq2SeqModel
    judge: TextCnn
    history: list[EpochLog] = field(default_factory=list)
    seconds: float = 0.0

    def encode(self, corpus: LabeledCorpus) -> list[np.ndarray]:
        return corpus.encode(self.vocab)


def build_toy_setup(n_per_cell: int = 250, heldout_per_cell: int = 25, label: str = "attitude",
                    labeled_domain: str = "restaurant", unlabeled_domains: Sequence[str] = (),
                    config: Config | None = None, cells=None) -> ToySetup:
    """Generate data and train everything for one toy experiment.

    Sentences from ``unlabeled_domains`` join the autoencoder's training set
    with label -1 (reconstruction only); the judge sees every domain with
    its true ``label`` attribute. Held-out sentences come from fresh sampling
    seeds of every domain involved.
    """
    cfg = config or desk_config()
    cells = cells or all_cells()
    t0 = time.perf_counter()
    domains = [labeled_domain, *unlabeled_domains]
    parts, held = [], []
    for k, dom in enumerate(domains):
        part = generate(ToyGrammar(dom, seed=cfg.seed + k), n_per_cell, cells, name=dom).relabel(label)
        parts.append(part)
        held.append(generate(ToyGrammar(dom, seed=cfg.seed + 1000 + k), heldout_per_cell, cells,
                             name=f"{dom}.heldout").relabel(label))
    corpus = LabeledCorpus.concat(parts, name="train")
    heldout = LabeledCorpus.concat(held, name="heldout")
    heldout.attributes["domain"] = np.repeat(np.arange(len(domains)), [len(h) for h in held])
    corpus.attributes["domain"] = np.repeat(np.arange(len(domains)), [len(p) for p in parts])

    vocab = build_vocab(corpus.texts, cfg.min_freq, cfg.max_vocab)
    sentences = corpus.encode(vocab)
    table = train_cbow(sentences, vocab, cfg.emb_dim, cfg.window, cfg.negatives, cfg.emb_epochs,
                       cfg.emb_lr, cfg.seed)
    ae_labels = np.where(corpus.attributes["domain"] == 0, corpus.labels, -1)
    model = Seq2SeqModel.init(table, cfg.hidden, cfg.seed, cfg.semi_supervised)
    model, history = train(model, sentences, cfg.train_config(), ae_labels if cfg.semi_supervised else None)
    judge = train_eval_classifier(sentences, corpus.labels, len(vocab), cfg.cnn_config())
    return ToySetup(cfg, vocab, corpus, heldout, model, judge, history, time.perf_counter() - t0)


def exact_match_rate(setup: ToySetup, corpus: LabeledCorpus) -> float:
    ids = setup.encode(corpus)
    outs = reconstruct_sentences(setup.model, ids, setup.config.max_len)
    return float(np.mean([np.array_equal(strip_eos(o), s) for o, s in zip(outs, ids)]))


@dataclass
class TransferResult:
    report: EvalReport
    sources: list[list[str]]
    outputs: list[list[str]]


def operators_for(setup: ToySetup, attribute: str, src_value: int, tgt_value: int,
                  eps: float | None = None, drop_rate: float = 0.0, domain: int = 0) -> TransferOperatorPair:
    """Operator pair between two sub-corpora of the training data selected by ``attribute``.

    Filtering by confidence (``drop_rate`` > 0) judges each sentence against
    the autoencoder's classifier label, which is the setup's ``label``.
    """
    base = setup.train.where(domain=domain)
    col = base.labels if attribute == "label" else base.attributes[attribute]
    x = base.subset(np.flatnonzero(col == src_value), name=f"{attribute}={src_value}")
    y = base.subset(np.flatnonzero(col == tgt_value), name=f"{attribute}={tgt_value}")
    eps = setup.config.eps if eps is None else eps
    return prepare_operators(setup.model, x, y, setup.vocab, eps=eps, drop_rate=drop_rate)


def evaluate_transfer(setup: ToySetup, pair: TransferOperatorPair, sources: LabeledCorpus,
                      target_label: int, judge: TextCnn | None = None) -> TransferResult:
    """Transfer ``sources``, then score with the judge (accuracy) and BLEU against the sources."""
    ids = setup.encode(sources)
    outs = [strip_eos(o) for o in transfer_sentences(setup.model, pair, ids, setup.config.max_len)]
    acc = accuracy(judge or setup.judge, outs, target_label)
    tok = setup.vocab.id_to_token
    out_tokens = [[tok[i] for i in o] for o in outs]
    return TransferResult(aggregate(acc, bleu(out_tokens, sources.texts)), sources.texts, out_tokens)


def two_way_transfer(setup: ToySetup, attribute: str = "label", eps: float | None = None,
                     drop_rate: float = 0.0, source_domain: int = 0, operator_domain: int = 0,
                     judge: TextCnn | None = None) -> TransferResult:
    """Transfer held-out sentences 0 -> 1 and 1 -> 0 and pool the outputs.

    Accuracy is the share of outputs the judge assigns to their target
    value; BLEU is computed on the pooled corpus.
    """
    held = setup.heldout.where(domain=source_domain)
    col = held.labels if attribute == "label" else held.attributes[attribute]
    flips, outs, srcs = [], [], []
    for src, tgt in ((0, 1), (1, 0)):
        pair = operators_for(setup, attribute, src, tgt, eps, drop_rate, operator_domain)
        part = held.subset(np.flatnonzero(col == src))
        res = evaluate_transfer(setup, pair, part, tgt, judge)
        flips.append(res.report.acc * len(part) / 100.0)
        outs += res.outputs
        srcs += res.sources
    acc = 100.0 * sum(flips) / len(srcs)
    return TransferResult(aggregate(acc, bleu(outs, srcs)), srcs, outs)

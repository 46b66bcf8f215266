"""Corpus-level style as the covariance of seq2seq semantic vectors.

The library trains a GRU autoencoder on a corpus, summarises each style by
the covariance (style matrix) of its sentence codes, and transfers style by
whitening with the source matrix and coloring with the target one.
"""

from .corpus import LabeledCorpus, Vocab, build_vocab, decode_ids, encode_text, load_corpus, split_corpus
from .embeddings import EmbeddingTable, train_cbow
from .evaluation import EvalReport, TextCnn, accuracy, aggregate, bleu, train_eval_classifier
from .neural import Seq2SeqModel, TrainConfig, decode_greedy, encode, train
from .stylemat import (
    EigenFactorization,
    StyleMatrix,
    apply_neutralize,
    apply_stylize,
    compute_style_matrix,
    make_neutralizer,
    make_stylizer,
    symmetric_eigen,
)
from .transfer import TransferOperatorPair, filter_by_confidence, prepare_operators, transfer_sentences

__version__ = "0.1.0"

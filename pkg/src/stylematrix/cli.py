"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import checkpoint as ck
from .config import Config
from .corpus import LabeledCorpus, Vocab, build_vocab, decode_ids, encode_text, load_corpus
from .embeddings import train_cbow
from .evaluation import accuracy, aggregate, bleu, train_eval_classifier
from .neural import Seq2SeqModel, encode_batch, strip_eos, train
from .stylemat import NotSymmetricError, compute_style_matrix, symmetric_eigen
from .toygen import ToyGrammar, all_cells, generate, rating
from .transfer import prepare_operators, transfer_sentences
from .viz import classical_mds, export_heatmap, export_scatter, top_eigenvectors

log = logging.getLogger("stylematrix")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------- helpers

def _config(args) -> Config:
    overrides = {}
    for item in args.set or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        try:
            overrides[key] = json.loads(value)
        except json.JSONDecodeError:
            overrides[key] = value
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return Config.load(args.config, overrides)


def _read(paths, fmt: str) -> LabeledCorpus:
    parts = [load_corpus(p, fmt) for p in paths]
    return LabeledCorpus.concat(parts, name=Path(paths[0]).stem) if len(parts) > 1 else parts[0]


def _select(corpus: LabeledCorpus, label: int | None, name: str) -> LabeledCorpus:
    if label is None:
        out = corpus.subset(np.arange(len(corpus)), name=name)
    else:
        if corpus.labels is None:
            raise ValueError(f"{name}: label filter needs a labeled corpus")
        out = corpus.where(name=name, label=label)
    if len(out) == 0:
        raise ValueError(f"{name}: no sentences selected")
    return out


def _write_lines(path, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def _add_config_flags(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field")
    p.add_argument("--seed", type=int)


# --------------------------------------------------------------- commands

def cmd_generate_toy(args) -> None:
    cells = all_cells()
    if args.cells:
        cells = []
        for spec in args.cells.split(";"):
            a, t, i = spec.split(",")
            cells.append((a.strip(), t.strip(), int(i)))
    corpus = generate(ToyGrammar(args.domain, seed=args.seed), args.n_per_cell, cells)
    if args.label == "rating":
        corpus.labels = rating(corpus)
    else:
        corpus = corpus.relabel(args.label)
    corpus.save_tsv(args.out)


def cmd_build_vocab(args) -> None:
    corpus = _read(args.input, args.format)
    build_vocab(corpus.texts, args.min_freq, args.max_size).save(args.out)


def cmd_train_embeddings(args) -> None:
    cfg = _config(args)
    corpus = _read(args.input, args.format)
    vocab = Vocab.load(args.vocab) if args.vocab else build_vocab(corpus.texts, cfg.min_freq, cfg.max_vocab)
    table = train_cbow(corpus.encode(vocab), vocab, cfg.emb_dim, cfg.window, cfg.negatives,
                       cfg.emb_epochs, cfg.emb_lr, cfg.seed)
    ck.save_embeddings(args.out, table, vocab, cfg.to_dict())
    if args.export_text:
        table.export_text(vocab, args.export_text)


def cmd_train(args) -> None:
    cfg = _config(args)
    labeled = _read(args.input, "labeled-tsv")
    parts = [labeled]
    if args.unlabeled:
        extra = _read(args.unlabeled, args.unlabeled_format)
        extra.labels = np.full(len(extra), -1, dtype=np.int64)
        parts.append(extra)
    corpus = LabeledCorpus.concat(parts)
    if args.embeddings:
        table, vocab = ck.load_embeddings(args.embeddings)
    else:
        vocab = Vocab.load(args.vocab) if args.vocab else build_vocab(corpus.texts, cfg.min_freq, cfg.max_vocab)
        table = None
    sentences = corpus.encode(vocab)
    if table is None:
        table = train_cbow(sentences, vocab, cfg.emb_dim, cfg.window, cfg.negatives,
                           cfg.emb_epochs, cfg.emb_lr, cfg.seed)
    labels = corpus.labels
    if cfg.semi_supervised and not np.isin(labels, (-1, 0, 1)).all():
        raise ValueError("semi-supervised training needs labels 0/1 (or -1 for unlabeled)")
    model = Seq2SeqModel.init(table, cfg.hidden, cfg.seed, cfg.semi_supervised)
    model, history = train(model, sentences, cfg.train_config(), labels if cfg.semi_supervised else None)
    for h in history:
        log.info("epoch %d loss %.5f", h.epoch, h.loss)
    ck.save_model(args.out, model, vocab, cfg.to_dict())


def cmd_extract_style(args) -> None:
    model, vocab, _ = ck.load_model(args.model)
    corpus = _select(load_corpus(args.corpus, args.format), args.label, args.name or Path(args.corpus).stem)
    sm = compute_style_matrix(encode_batch(model, corpus.encode(vocab)).T)
    ck.save_style(args.out, sm, corpus.name)
    if args.csv:
        export_heatmap(sm.S, args.csv)


def _operators(args, model, vocab, cfg, drop_rate):
    cx = _select(load_corpus(args.corpus_x), args.x_label, "x")
    cy = _select(load_corpus(args.corpus_y), args.y_label, "y")
    return prepare_operators(model, cx, cy, vocab, eps=cfg.eps, drop_rate=drop_rate)


def cmd_transfer(args) -> None:
    model, vocab, _ = ck.load_model(args.model)
    cfg = _config(args)
    drop = cfg.drop_rate if args.drop_rate is None else args.drop_rate
    pair = _operators(args, model, vocab, cfg, drop)
    source = load_corpus(args.input, args.input_format)
    outs = transfer_sentences(model, pair, source.encode(vocab), cfg.max_len)
    _write_lines(args.out, [decode_ids(vocab, o) for o in outs])


def cmd_train_classifier(args) -> None:
    cfg = _config(args)
    corpus = _read(args.input, "labeled-tsv")
    vocab = build_vocab(corpus.texts, cfg.min_freq, cfg.max_vocab)
    clf = train_eval_classifier(corpus.encode(vocab), corpus.labels, len(vocab), cfg.cnn_config())
    ck.save_classifier(args.out, clf, vocab, cfg.to_dict())


def _report(clf, cvocab, transferred_tokens, source_tokens, target_label):
    ids = [encode_text(cvocab, t) if t else np.zeros(0, np.int64) for t in transferred_tokens]
    acc = accuracy(clf, ids, target_label)
    return aggregate(acc, bleu(transferred_tokens, source_tokens))


def _tokens_of(path) -> list[list[str]]:
    with open(path, encoding="utf-8") as fh:
        return [raw.lower().split() for raw in fh]


def cmd_evaluate(args) -> None:
    clf, cvocab = ck.load_classifier(args.classifier)
    out = _tokens_of(args.transferred)
    src = [t for t in _tokens_of(args.source) if t] if args.source_format == "plain" else \
        load_corpus(args.source, "labeled-tsv").texts
    if len(out) != len(src):
        raise ValueError(f"{args.transferred} has {len(out)} lines but {args.source} has {len(src)}")
    report = _report(clf, cvocab, out, src, args.target_label)
    line = report.to_json()
    print(report.table() if args.table else line)
    if args.out:
        Path(args.out).write_text(line + "\n", encoding="utf-8")


def cmd_sweep(args) -> None:
    model, vocab, _ = ck.load_model(args.model)
    clf, cvocab = ck.load_classifier(args.classifier)
    cfg = _config(args)
    try:
        rates = [float(r) for r in args.rates.split(",")]
    except ValueError:
        raise UsageError(f"--rates must be comma-separated numbers, got {args.rates!r}") from None
    source = load_corpus(args.input, args.input_format)
    rows = []
    for rate in rates:
        pair = _operators(args, model, vocab, cfg, rate)
        outs = transfer_sentences(model, pair, source.encode(vocab), cfg.max_len)
        tokens = [decode_ids(vocab, strip_eos(o)).split() for o in outs]
        rows.append((rate, _report(clf, cvocab, tokens, source.texts, args.target_label)))
    lines = [f"{'drop':>6}{'acc':>10}{'bleu':>10}{'g_score':>10}{'mean':>10}"]
    lines += [f"{r:>6.2f}{e.acc:>10.2f}{e.bleu:>10.2f}{e.g_score:>10.2f}{e.mean:>10.2f}" for r, e in rows]
    print("\n".join(lines))
    if args.out:
        _write_lines(args.out, [json.dumps({"drop_rate": r, **json.loads(e.to_json())}) for r, e in rows])


def cmd_visualize(args) -> None:
    styles = [ck.load_style(p) for p in args.styles]
    if args.mode == "heatmap":
        if len(styles) != 1:
            raise UsageError("heatmap mode takes exactly one style file")
        export_heatmap(top_eigenvectors(symmetric_eigen(styles[0][0].S), args.k), args.out, svg=args.svg)
        return
    points, labels = [], []
    for sm, name in styles:
        P = top_eigenvectors(symmetric_eigen(sm.S), args.k)
        points.extend(P.T)
        labels.extend(f"{name}:{i}" for i in range(args.k))
    export_scatter(classical_mds(np.array(points), 2, labels), args.out, svg=args.svg)


# ----------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stylematrix", description="Style-matrix text style transfer")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate-toy", help="write a synthetic labeled corpus")
    p.add_argument("--domain", default="restaurant", choices=["restaurant", "product"])
    p.add_argument("--n-per-cell", type=int, default=100)
    p.add_argument("--cells", help='e.g. "pos,pres,1;neg,pres,1" (default: all 8 cells)')
    p.add_argument("--label", default="attitude", choices=["attitude", "tense", "intensity", "rating"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate_toy)

    p = sub.add_parser("build-vocab", help="build a vocabulary file")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--format", default="labeled-tsv", choices=["labeled-tsv", "plain"])
    p.add_argument("--min-freq", type=int, default=1)
    p.add_argument("--max-size", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_vocab)

    p = sub.add_parser("train-embeddings", help="train CBOW embeddings")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--format", default="labeled-tsv", choices=["labeled-tsv", "plain"])
    p.add_argument("--vocab")
    p.add_argument("--out", required=True)
    p.add_argument("--export-text")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train_embeddings)

    p = sub.add_parser("train", help="train the seq2seq autoencoder")
    p.add_argument("--input", nargs="+", required=True, help="labeled TSV files")
    p.add_argument("--unlabeled", nargs="+", help="extra files used for reconstruction only")
    p.add_argument("--unlabeled-format", default="plain", choices=["labeled-tsv", "plain"])
    p.add_argument("--vocab")
    p.add_argument("--embeddings", help="embeddings checkpoint (trained here if omitted)")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("extract-style", help="compute the style matrix of a corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", default="labeled-tsv", choices=["labeled-tsv", "plain"])
    p.add_argument("--label", type=int, help="keep only sentences with this label")
    p.add_argument("--name")
    p.add_argument("--out", required=True)
    p.add_argument("--csv", help="also export S as CSV")
    p.set_defaults(func=cmd_extract_style)

    def operator_flags(p):
        p.add_argument("--model", required=True)
        p.add_argument("--input", required=True, help="sentences to transfer")
        p.add_argument("--input-format", default="plain", choices=["labeled-tsv", "plain"])
        p.add_argument("--corpus-x", required=True, help="labeled TSV of the source style")
        p.add_argument("--corpus-y", required=True, help="labeled TSV of the target style")
        p.add_argument("--x-label", type=int)
        p.add_argument("--y-label", type=int)
        _add_config_flags(p)

    p = sub.add_parser("transfer", help="neutralize-stylize transfer")
    operator_flags(p)
    p.add_argument("--drop-rate", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("train-classifier", help="train the TextCNN evaluation classifier")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_train_classifier)

    p = sub.add_parser("evaluate", help="accuracy, BLEU, G-Score and Mean of a transfer output")
    p.add_argument("--classifier", required=True)
    p.add_argument("--transferred", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("--source-format", default="plain", choices=["labeled-tsv", "plain"])
    p.add_argument("--target-label", type=int, required=True)
    p.add_argument("--table", action="store_true", help="print an aligned table instead of JSON")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="evaluate transfer over several drop rates")
    operator_flags(p)
    p.add_argument("--classifier", required=True)
    p.add_argument("--target-label", type=int, required=True)
    p.add_argument("--rates", default="0,0.15,0.3,0.45,0.6,0.75,0.9")
    p.add_argument("--out", help="JSON lines, one per rate")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("visualize", help="eigenvector heatmap or MDS scatter data")
    p.add_argument("--styles", nargs="+", required=True)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--mode", choices=["heatmap", "mds"], default="heatmap")
    p.add_argument("--out", required=True)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_visualize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"stylematrix: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"stylematrix: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, NotSymmetricError) as exc:
        print(f"stylematrix: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError, KeyError, IndexError) as exc:
        print(f"stylematrix: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Corpus ingestion: vocabulary, token/id conversion, labeled files, splits."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

PAD, UNK, SOS, EOS = 0, 1, 2, 3
SPECIALS = ("<pad>", "<unk>", "<sos>", "<eos>")
UNK_TOKEN = SPECIALS[UNK]


class CorpusError(ValueError):
    """Raised for malformed corpus input."""


def tokenize(text: str) -> list[str]:
    return text.lower().split()


def _as_tokens(line: str | Sequence[str]) -> list[str]:
    if isinstance(line, str):
        return tokenize(line)
    return list(line)


@dataclass(frozen=True)
class Vocab:
    """Bidirectional token/id map with the four specials at ids 0-3."""

    id_to_token: tuple[str, ...]
    token_to_id: dict[str, int] = field(repr=False, compare=False)

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "Vocab":
        """Build from non-special tokens listed in id order (starting at id 4)."""
        itos = tuple(SPECIALS) + tuple(tokens)
        stoi = {t: i for i, t in enumerate(itos)}
        if len(stoi) != len(itos):
            raise CorpusError("duplicate token in vocabulary")
        return cls(itos, stoi)

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.id_to_token) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if tuple(lines[:4]) != SPECIALS:
            raise CorpusError(f"{path}: vocab header must list {', '.join(SPECIALS)}")
        return cls.from_tokens(lines[4:])


def build_vocab(lines: Sequence[str | Sequence[str]], min_freq: int = 1,
                max_size: int | None = None) -> Vocab:
    """Count tokens and assign ids by descending frequency, then lexicographically.

    ``max_size`` caps the number of non-special tokens.
    """
    if len(lines) == 0:
        raise CorpusError("empty corpus")
    if min_freq < 1:
        raise CorpusError("min_freq must be >= 1")
    counts = Counter(tok for line in lines for tok in _as_tokens(line))
    for special in SPECIALS:
        counts.pop(special, None)
    kept = sorted((t for t, c in counts.items() if c >= min_freq),
                  key=lambda t: (-counts[t], t))
    if max_size is not None:
        kept = kept[:max_size]
    return Vocab.from_tokens(kept)


def encode_text(vocab: Vocab, tokens: str | Sequence[str]) -> np.ndarray:
    toks = _as_tokens(tokens)
    if not toks:
        raise CorpusError("cannot encode an empty token sequence")
    return np.array([vocab.token_to_id.get(t, UNK) for t in toks], dtype=np.int64)


def decode_ids(vocab: Vocab, ids: Iterable[int]) -> str:
    out = []
    n = len(vocab)
    for i in ids:
        i = int(i)
        if i < 0 or i >= n:
            raise CorpusError(f"id out of range: {i} (vocab size {n})")
        if i in (PAD, SOS, EOS):
            continue
        out.append(vocab.id_to_token[i])
    return " ".join(out)


@dataclass
class LabeledCorpus:
    """Tokenized sentences with optional integer labels.

    ``attributes`` carries extra per-sentence label columns (e.g. tense,
    intensity) when the source provides them; ``labels`` is the primary one.
    A label of -1 marks a sentence as unlabeled.
    """

    texts: list[list[str]]
    labels: np.ndarray | None = None
    name: str = "corpus"
    attributes: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if len(self.labels) != len(self.texts):
                raise CorpusError("labels and sentences differ in length")
        for key, col in self.attributes.items():
            self.attributes[key] = np.asarray(col, dtype=np.int64)
            if len(self.attributes[key]) != len(self.texts):
                raise CorpusError(f"attribute {key!r} differs in length from sentences")

    def __len__(self) -> int:
        return len(self.texts)

    def encode(self, vocab: Vocab) -> list[np.ndarray]:
        return [encode_text(vocab, t) for t in self.texts]

    def subset(self, index: Sequence[int], name: str | None = None) -> "LabeledCorpus":
        index = np.asarray(index, dtype=np.int64)
        return LabeledCorpus(
            texts=[self.texts[i] for i in index],
            labels=None if self.labels is None else self.labels[index],
            name=self.name if name is None else name,
            attributes={k: v[index] for k, v in self.attributes.items()},
        )

    def where(self, name: str | None = None, **conditions: int) -> "LabeledCorpus":
        """Select sentences whose attributes (or ``label``) equal the given values."""
        mask = np.ones(len(self), dtype=bool)
        for key, value in conditions.items():
            col = self.labels if key == "label" else self.attributes[key]
            mask &= col == value
        return self.subset(np.flatnonzero(mask), name=name)

    def relabel(self, attribute: str) -> "LabeledCorpus":
        """Copy with ``labels`` replaced by one of the attribute columns."""
        out = self.subset(np.arange(len(self)))
        out.labels = out.attributes[attribute].copy()
        return out

    def save_tsv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for i, toks in enumerate(self.texts):
                line = " ".join(toks)
                if self.labels is not None:
                    line = f"{int(self.labels[i])}\t{line}"
                fh.write(line + "\n")

    @staticmethod
    def concat(parts: Sequence["LabeledCorpus"], name: str = "corpus") -> "LabeledCorpus":
        texts = [t for p in parts for t in p.texts]
        labels = None
        if all(p.labels is not None for p in parts):
            labels = np.concatenate([p.labels for p in parts])
        keys = set.intersection(*(set(p.attributes) for p in parts)) if parts else set()
        attrs = {k: np.concatenate([p.attributes[k] for p in parts]) for k in sorted(keys)}
        return LabeledCorpus(texts, labels, name, attrs)


def load_corpus(path: str | Path, format: str = "labeled-tsv",
                vocab: Vocab | None = None, name: str | None = None) -> LabeledCorpus:
    """Read a plain or labeled-TSV corpus file.

    When ``vocab`` is given, tokens missing from it are replaced by ``<unk>``.
    """
    if format not in ("plain", "labeled-tsv"):
        raise CorpusError(f"unknown corpus format {format!r}")
    path = Path(path)
    texts, labels = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.rstrip("\n").rstrip("\r")
            if not raw.strip():
                continue
            if format == "labeled-tsv":
                if "\t" not in raw:
                    raise CorpusError(f"{path}:{lineno}: missing TAB between label and text")
                label, text = raw.split("\t", 1)
                try:
                    labels.append(int(label))
                except ValueError:
                    raise CorpusError(f"{path}:{lineno}: non-integer label {label!r}") from None
            else:
                text = raw
            toks = tokenize(text)
            if not toks:
                raise CorpusError(f"{path}:{lineno}: empty sentence")
            if vocab is not None:
                toks = [t if t in vocab else UNK_TOKEN for t in toks]
            texts.append(toks)
    return LabeledCorpus(texts, labels if format == "labeled-tsv" else None,
                         name or path.stem)


def split_corpus(corpus: LabeledCorpus, ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
                 seed: int = 0) -> tuple[LabeledCorpus, LabeledCorpus, LabeledCorpus]:
    """Shuffle deterministically and cut into train/dev/test.

    Dev and test get floor(r * N) sentences; the remainder goes to train.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise CorpusError(f"ratios must be three positive numbers summing to 1, got {ratios}")
    n = len(corpus)
    perm = np.random.default_rng(seed).permutation(n)
    n_dev = int(np.floor(ratios[1] * n))
    n_test = int(np.floor(ratios[2] * n))
    n_train = n - n_dev - n_test
    return (corpus.subset(perm[:n_train], f"{corpus.name}.train"),
            corpus.subset(perm[n_train:n_train + n_dev], f"{corpus.name}.dev"),
            corpus.subset(perm[n_train + n_dev:], f"{corpus.name}.test"))

"""Versioned binary checkpoints for models, style matrices and classifiers.

Byte layout (all integers little-endian)::

    b"STYM"                 magic
    u32 version             currently 1
    u32 n_tensors
    n_tensors x:
        u32 name_len, name (UTF-8)
        u32 rank, rank x u64 dims
        prod(dims) x f64 values, C order
    u32 n_tokens            0 when no vocabulary is stored
    n_tokens x:  u32 len, token (UTF-8)
    u64 config_len, config as UTF-8 JSON (sorted keys)

Tensors are written in the order given, so saving the same content twice
produces identical bytes.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import SPECIALS, Vocab
from .embeddings import EmbeddingTable
from .evaluation import TextCnn
from .neural import GRU_FIELDS, GruParams, Seq2SeqModel
from .stylemat import StyleMatrix

MAGIC = b"STYM"
VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    tensors: dict[str, np.ndarray]
    vocab: Vocab | None = None
    config: dict = field(default_factory=dict)


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def to_bytes(ckpt: Checkpoint) -> bytes:
    out = [MAGIC, struct.pack("<II", VERSION, len(ckpt.tensors))]
    for name, arr in ckpt.tensors.items():
        arr = np.asarray(arr, dtype="<f8")
        out.append(_pack_str(name))
        out.append(struct.pack(f"<I{arr.ndim}Q", arr.ndim, *arr.shape))
        out.append(arr.tobytes(order="C"))
    tokens = ckpt.vocab.id_to_token if ckpt.vocab is not None else ()
    out.append(struct.pack("<I", len(tokens)))
    out.extend(_pack_str(t) for t in tokens)
    cfg = json.dumps(ckpt.config, sort_keys=True).encode("utf-8")
    out.append(struct.pack("<Q", len(cfg)) + cfg)
    return b"".join(out)


class _Reader:
    def __init__(self, data: bytes, source: str):
        self.data, self.pos, self.source = data, 0, source

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError(f"{self.source}: truncated checkpoint at byte {self.pos}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def string(self) -> str:
        (n,) = self.unpack("<I")
        return self.take(n).decode("utf-8")


def from_bytes(data: bytes, source: str = "<bytes>") -> Checkpoint:
    r = _Reader(data, source)
    if r.take(4) != MAGIC:
        raise CheckpointError(f"{source}: not a checkpoint (bad magic)")
    version, n_tensors = r.unpack("<II")
    if version != VERSION:
        raise CheckpointError(f"{source}: unsupported checkpoint version {version} (reader supports {VERSION})")
    tensors = {}
    for _ in range(n_tensors):
        name = r.string()
        (rank,) = r.unpack("<I")
        dims = r.unpack(f"<{rank}Q")
        count = int(np.prod(dims, dtype=np.int64)) if rank else 1
        arr = np.frombuffer(r.take(8 * count), dtype="<f8").astype(np.float64).reshape(dims)
        tensors[name] = arr
    (n_tokens,) = r.unpack("<I")
    vocab = None
    if n_tokens:
        tokens = [r.string() for _ in range(n_tokens)]
        if tuple(tokens[:4]) != SPECIALS:
            raise CheckpointError(f"{source}: vocabulary section lacks the special tokens")
        vocab = Vocab.from_tokens(tokens[4:])
    (n_cfg,) = r.unpack("<Q")
    config = json.loads(r.take(n_cfg).decode("utf-8"))
    if r.pos != len(data):
        raise CheckpointError(f"{source}: trailing bytes after config section")
    return Checkpoint(tensors, vocab, config)


def save(path: str | Path, ckpt: Checkpoint) -> None:
    Path(path).write_bytes(to_bytes(ckpt))


def load(path: str | Path) -> Checkpoint:
    return from_bytes(Path(path).read_bytes(), str(path))


def _expect_kind(ckpt: Checkpoint, kind: str, source) -> None:
    found = ckpt.config.get("kind")
    if found != kind:
        raise CheckpointError(f"{source}: expected a {kind} checkpoint, found {found!r}")


def save_model(path, model: Seq2SeqModel, vocab: Vocab, config: dict | None = None) -> None:
    tensors = {"embeddings": model.embeddings.vectors}
    tensors.update(model.parameters())
    save(path, Checkpoint(tensors, vocab, {**(config or {}), "kind": "model"}))


def load_model(path) -> tuple[Seq2SeqModel, Vocab, dict]:
    ckpt = load(path)
    _expect_kind(ckpt, "model", path)
    t = ckpt.tensors
    try:
        enc = GruParams(*(t[f"encoder.{f}"] for f in GRU_FIELDS))
        dec = GruParams(*(t[f"decoder.{f}"] for f in GRU_FIELDS))
        model = Seq2SeqModel(EmbeddingTable(t["embeddings"]), enc, dec, t["out_proj"],
                             t.get("classifier_w"))
    except KeyError as exc:
        raise CheckpointError(f"{path}: missing tensor {exc.args[0]}") from None
    if ckpt.vocab is None or len(ckpt.vocab) != model.vocab_size:
        raise CheckpointError(f"{path}: vocabulary does not match the model")
    return model, ckpt.vocab, ckpt.config


def save_embeddings(path, table: EmbeddingTable, vocab: Vocab, config: dict | None = None) -> None:
    save(path, Checkpoint({"embeddings": table.vectors}, vocab, {**(config or {}), "kind": "embeddings"}))


def load_embeddings(path) -> tuple[EmbeddingTable, Vocab]:
    ckpt = load(path)
    _expect_kind(ckpt, "embeddings", path)
    return EmbeddingTable(ckpt.tensors["embeddings"]), ckpt.vocab


def save_style(path, sm: StyleMatrix, name: str = "corpus") -> None:
    save(path, Checkpoint({"S": sm.S, "mean": sm.mean}, None,
                          {"kind": "style", "name": name, "n": int(sm.n)}))


def load_style(path) -> tuple[StyleMatrix, str]:
    ckpt = load(path)
    _expect_kind(ckpt, "style", path)
    return StyleMatrix(ckpt.tensors["S"], ckpt.tensors["mean"], int(ckpt.config["n"])), ckpt.config["name"]


def save_classifier(path, clf: TextCnn, vocab: Vocab, config: dict | None = None) -> None:
    cfg = {**(config or {}), "kind": "classifier", "widths": list(clf.widths)}
    save(path, Checkpoint(dict(clf.params), vocab, cfg))


def load_classifier(path) -> tuple[TextCnn, Vocab]:
    ckpt = load(path)
    _expect_kind(ckpt, "classifier", path)
    return TextCnn(dict(ckpt.tensors), ckpt.config["widths"]), ckpt.vocab

"""Experiment configuration: every hyperparameter in one JSON-serialisable record."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .evaluation import CnnConfig
from .neural import TrainConfig


@dataclass
class Config:
    seed: int = 0
    # vocabulary
    min_freq: int = 1
    max_vocab: int | None = None
    # embeddings
    emb_dim: int = 32
    window: int = 5
    negatives: int = 5
    emb_epochs: int = 5
    emb_lr: float = 0.025
    # seq2seq
    hidden: int = 32
    semi_supervised: bool = True
    lr: float = 1e-3
    epochs: int = 10
    batch_size: int = 32
    cls_weight: float = 0.1
    tf_start: float = 1.0
    tf_end: float = 0.5
    grad_clip: float | None = 5.0
    # transfer
    eps: float = 1e-5
    drop_rate: float = 0.0
    max_len: int = 30
    # evaluation classifier
    cnn_emb_dim: int = 32
    cnn_filters: int = 16
    cnn_widths: list[int] = field(default_factory=lambda: [3, 4, 5])
    cnn_epochs: int = 5
    cnn_lr: float = 1e-3

    def validate(self) -> "Config":
        if self.min_freq < 1 or (self.max_vocab is not None and self.max_vocab < 1):
            raise ValueError("min_freq and max_vocab must be >= 1")
        if self.emb_dim < 2 or self.window < 1 or self.negatives < 0 or self.emb_epochs < 0 or self.emb_lr <= 0:
            raise ValueError("invalid embedding hyperparameters")
        if self.hidden < 1:
            raise ValueError("hidden must be >= 1")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if not 0.0 <= self.drop_rate < 1.0:
            raise ValueError("drop_rate must lie in [0, 1)")
        self.train_config().validate()
        self.cnn_config().validate()
        return self

    def train_config(self) -> TrainConfig:
        return TrainConfig(lr=self.lr, epochs=self.epochs, batch_size=self.batch_size, seed=self.seed,
                           cls_weight=self.cls_weight, tf_start=self.tf_start, tf_end=self.tf_end,
                           max_decode_len=self.max_len, grad_clip=self.grad_clip)

    def cnn_config(self) -> CnnConfig:
        return CnnConfig(emb_dim=self.cnn_emb_dim, n_filters=self.cnn_filters,
                         widths=tuple(self.cnn_widths), epochs=self.cnn_epochs, lr=self.cnn_lr,
                         batch_size=self.batch_size, seed=self.seed)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        for f in fields(cls):
            if f.name in data:
                _check_type(f.name, f.type, data[f.name])
        return cls(**data).validate()

    @classmethod
    def load(cls, path: str | Path | None = None, overrides: dict | None = None) -> "Config":
        """Read JSON (if given), apply non-None overrides, validate."""
        data = json.loads(Path(path).read_text(encoding="utf-8")) if path else {}
        data.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_dict(data)


def _check_type(name: str, annotation: str, value) -> None:
    if value is None and "None" in annotation:
        return
    if annotation.startswith("list"):
        ok = isinstance(value, list) and all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    elif annotation.startswith("bool"):
        ok = isinstance(value, bool)
    elif annotation.startswith("int"):
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if not ok:
        raise ValueError(f"config field {name} expects {annotation}, got {value!r}")

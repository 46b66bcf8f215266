"""GRU sequence-to-sequence autoencoder with a quadratic style classifier.

Everything is plain numpy in float64 with hand-written backpropagation.
The decoder sees only its previous token and previous state; the encoder's
information reaches it solely through the initial state ``z``.

Shapes: ``d_w`` embedding size, ``d`` hidden size, ``V`` vocabulary size,
``B`` batch size. Batched hidden states are (B, d).
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np

from .corpus import EOS, PAD, SOS
from .embeddings import EmbeddingTable

log = logging.getLogger(__name__)

GRU_FIELDS = ("W_z", "W_r", "W_h", "U_z", "U_r", "U_h", "b_z", "b_r", "b_h")


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


@dataclass
class GruParams:
    W_z: np.ndarray
    W_r: np.ndarray
    W_h: np.ndarray
    U_z: np.ndarray
    U_r: np.ndarray
    U_h: np.ndarray
    b_z: np.ndarray
    b_r: np.ndarray
    b_h: np.ndarray

    @classmethod
    def init(cls, d_w: int, d: int, rng: np.random.Generator) -> "GruParams":
        k = 1.0 / np.sqrt(d)
        shapes = [(d, d_w)] * 3 + [(d, d)] * 3 + [(d,)] * 3
        return cls(*(rng.uniform(-k, k, size=s) for s in shapes))

    @classmethod
    def zeros(cls, d_w: int, d: int) -> "GruParams":
        shapes = [(d, d_w)] * 3 + [(d, d)] * 3 + [(d,)] * 3
        return cls(*(np.zeros(s) for s in shapes))

    @property
    def hidden_size(self) -> int:
        return self.U_z.shape[0]

    @property
    def input_size(self) -> int:
        return self.W_z.shape[1]

    def arrays(self) -> dict[str, np.ndarray]:
        return {f: getattr(self, f) for f in GRU_FIELDS}

    def check(self) -> None:
        d, d_w = self.hidden_size, self.input_size
        for name, arr in self.arrays().items():
            want = (d, d_w) if name[0] == "W" else (d, d) if name[0] == "U" else (d,)
            if arr.shape != want:
                raise ValueError(f"GRU parameter {name} has shape {arr.shape}, expected {want}")


def _gru_forward(p: GruParams, xz, xr, xh, h):
    """One step given precomputed input projections ``x @ W_*.T``."""
    zg = sigmoid(xz + h @ p.U_z.T + p.b_z)
    r = sigmoid(xr + h @ p.U_r.T + p.b_r)
    rh = r * h
    hh = np.tanh(xh + rh @ p.U_h.T + p.b_h)
    h_new = (1.0 - zg) * hh + zg * h
    return h_new, (h, zg, r, rh, hh)


def _gru_backward(p: GruParams, cache, x, dh_new, grads: dict[str, np.ndarray]):
    """Accumulate parameter gradients into ``grads``; return (dx, dh_prev)."""
    h, zg, r, rh, hh = cache
    d_hh = dh_new * (1.0 - zg)
    d_zg = dh_new * (h - hh)
    dh_prev = dh_new * zg

    d_ah = d_hh * (1.0 - hh * hh)
    grads["W_h"] += d_ah.T @ x
    grads["U_h"] += d_ah.T @ rh
    grads["b_h"] += d_ah.sum(axis=0)
    d_rh = d_ah @ p.U_h
    dh_prev += d_rh * r
    d_ar = d_rh * h * r * (1.0 - r)

    d_az = d_zg * zg * (1.0 - zg)
    grads["W_z"] += d_az.T @ x
    grads["U_z"] += d_az.T @ h
    grads["b_z"] += d_az.sum(axis=0)
    grads["W_r"] += d_ar.T @ x
    grads["U_r"] += d_ar.T @ h
    grads["b_r"] += d_ar.sum(axis=0)
    dh_prev += d_az @ p.U_z + d_ar @ p.U_r
    dx = d_az @ p.W_z + d_ar @ p.W_r + d_ah @ p.W_h
    return dx, dh_prev


def gru_step(params: GruParams, x: np.ndarray, h_prev: np.ndarray) -> np.ndarray:
    """h_t = (1 - z) * tanh(W_h x + U_h (r * h) + b_h) + z * h_prev.

    ``z`` and ``r`` are the sigmoid update and reset gates. Accepts single
    vectors or row-batches.
    """
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    params.check()
    if x.shape[-1] != params.input_size or h_prev.shape[-1] != params.hidden_size:
        raise ValueError(f"shape mismatch: x {x.shape}, h {h_prev.shape} for GRU "
                         f"({params.input_size} -> {params.hidden_size})")
    h_new, _ = _gru_forward(params, x @ params.W_z.T, x @ params.W_r.T, x @ params.W_h.T, h_prev)
    return h_new


def gru_step_backward(params: GruParams, x: np.ndarray, h_prev: np.ndarray, dh: np.ndarray):
    """Gradients of ``sum(dh * gru_step(params, x, h_prev))``.

    Returns (parameter gradients as a dict keyed like ``GRU_FIELDS``, dx, dh_prev).
    """
    x2, h2, dh2 = (np.atleast_2d(np.asarray(a, dtype=np.float64)) for a in (x, h_prev, dh))
    _, cache = _gru_forward(params, x2 @ params.W_z.T, x2 @ params.W_r.T, x2 @ params.W_h.T, h2)
    grads = {k: np.zeros_like(v) for k, v in params.arrays().items()}
    dx, dh_prev = _gru_backward(params, cache, x2, dh2, grads)
    if np.ndim(x) == 1:
        dx, dh_prev = dx[0], dh_prev[0]
    return grads, dx, dh_prev


@dataclass
class TrainConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0
    cls_weight: float = 0.1
    tf_start: float = 1.0
    tf_end: float = 0.5
    max_decode_len: int = 30
    grad_clip: float | None = 5.0

    def validate(self) -> None:
        if self.cls_weight < 0:
            raise ValueError("cls_weight must be >= 0")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if not (0.0 <= self.tf_end <= 1.0 and 0.0 <= self.tf_start <= 1.0):
            raise ValueError("teacher forcing probabilities must lie in [0, 1]")
        if self.lr <= 0 or not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("invalid Adam hyperparameters")
        if self.max_decode_len < 1:
            raise ValueError("max_decode_len must be >= 1")

    def teacher_forcing(self, epoch: int) -> float:
        """Linear decay from tf_start (first epoch) to tf_end (last epoch)."""
        if self.epochs <= 1:
            return self.tf_start
        frac = epoch / (self.epochs - 1)
        return self.tf_start + (self.tf_end - self.tf_start) * frac


@dataclass
class Seq2SeqModel:
    embeddings: EmbeddingTable
    encoder: GruParams
    decoder: GruParams
    out_proj: np.ndarray  # (V, d)
    classifier_w: np.ndarray | None = None  # (d * d,), row-major vec(z z^T)

    def __post_init__(self):
        self.encoder.check()
        self.decoder.check()
        d = self.encoder.hidden_size
        if self.decoder.hidden_size != d:
            raise ValueError("encoder and decoder hidden sizes differ")
        if self.out_proj.shape != (len(self.embeddings), d):
            raise ValueError(f"out_proj must be ({len(self.embeddings)}, {d})")
        if self.classifier_w is not None and self.classifier_w.shape != (d * d,):
            raise ValueError(f"classifier_w must have length {d * d}")

    @classmethod
    def init(cls, embeddings: EmbeddingTable, d: int, seed: int = 0,
             semi_supervised: bool = False) -> "Seq2SeqModel":
        rng = np.random.default_rng(seed)
        d_w = embeddings.dim
        enc = GruParams.init(d_w, d, rng)
        dec = GruParams.init(d_w, d, rng)
        k = 1.0 / np.sqrt(d)
        out = rng.uniform(-k, k, size=(len(embeddings), d))
        w = np.zeros(d * d) if semi_supervised else None
        return cls(embeddings, enc, dec, out, w)

    @property
    def d(self) -> int:
        return self.encoder.hidden_size

    @property
    def vocab_size(self) -> int:
        return self.out_proj.shape[0]

    @property
    def semi_supervised(self) -> bool:
        return self.classifier_w is not None

    def parameters(self) -> dict[str, np.ndarray]:
        """Trainable arrays by name (embeddings are frozen and excluded)."""
        params = {f"encoder.{k}": v for k, v in self.encoder.arrays().items()}
        params.update({f"decoder.{k}": v for k, v in self.decoder.arrays().items()})
        params["out_proj"] = self.out_proj
        if self.classifier_w is not None:
            params["classifier_w"] = self.classifier_w
        return params

    def copy(self) -> "Seq2SeqModel":
        # embeddings are frozen, so the table is shared rather than copied
        return Seq2SeqModel(self.embeddings, copy.deepcopy(self.encoder),
                            copy.deepcopy(self.decoder), self.out_proj.copy(),
                            None if self.classifier_w is None else self.classifier_w.copy())


def pad_batch(sentences: Sequence[np.ndarray], pad: int = PAD) -> tuple[np.ndarray, np.ndarray]:
    lengths = np.array([len(s) for s in sentences], dtype=np.int64)
    out = np.full((len(sentences), lengths.max()), pad, dtype=np.int64)
    for i, s in enumerate(sentences):
        out[i, : len(s)] = s
    return out, lengths


def _encode_forward(model: Seq2SeqModel, ids: np.ndarray, lengths: np.ndarray):
    p = model.encoder
    X = model.embeddings.vectors[ids]  # (B, T, d_w)
    XZ, XR, XH = X @ p.W_z.T, X @ p.W_r.T, X @ p.W_h.T
    h = np.zeros((ids.shape[0], model.d))
    caches = []
    for t in range(ids.shape[1]):
        h_new, cache = _gru_forward(p, XZ[:, t], XR[:, t], XH[:, t], h)
        live = (t < lengths)[:, None]
        h = np.where(live, h_new, h)
        caches.append((cache, live))
    return h, (X, caches)


def _encode_backward(model: Seq2SeqModel, state, dz: np.ndarray, grads: dict[str, np.ndarray]):
    X, caches = state
    dh = dz
    for t in range(len(caches) - 1, -1, -1):
        cache, live = caches[t]
        _, dh_step = _gru_backward(model.encoder, cache, X[:, t], np.where(live, dh, 0.0), grads)
        dh = np.where(live, dh_step, dh)


def encode_batch(model: Seq2SeqModel, sentences: Sequence[np.ndarray], chunk: int = 256) -> np.ndarray:
    """Semantic vectors as rows, shape (N, d). Processed in fixed-size chunks."""
    if len(sentences) == 0:
        return np.zeros((0, model.d))
    out = []
    for start in range(0, len(sentences), chunk):
        part = sentences[start:start + chunk]
        if any(len(s) == 0 for s in part):
            raise ValueError("cannot encode an empty sentence")
        ids, lengths = pad_batch(part)
        if ids.max() >= model.vocab_size or ids.min() < 0:
            raise IndexError("token id out of range")
        z, _ = _encode_forward(model, ids, lengths)
        out.append(z)
    return np.concatenate(out)


def encode(model: Seq2SeqModel, sentence: Sequence[int]) -> np.ndarray:
    """Final encoder state for one sentence, starting from h_0 = 0."""
    sentence = np.asarray(sentence, dtype=np.int64)
    if sentence.size == 0:
        raise ValueError("cannot encode an empty sentence")
    return encode_batch(model, [sentence])[0]


def decode_batch(model: Seq2SeqModel, Z: np.ndarray, max_len: int) -> list[np.ndarray]:
    """Greedy decoding from each row of ``Z``; ties go to the lowest id."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    if Z.shape[1] != model.d:
        raise ValueError(f"semantic vectors must have {model.d} components")
    p = model.decoder
    emb = model.embeddings.vectors
    B = Z.shape[0]
    s = Z
    tok = np.full(B, SOS, dtype=np.int64)
    done = np.zeros(B, dtype=bool)
    out = np.full((B, max_len), -1, dtype=np.int64)
    for t in range(max_len):
        x = emb[tok]
        s, _ = _gru_forward(p, x @ p.W_z.T, x @ p.W_r.T, x @ p.W_h.T, s)
        tok = np.argmax(s @ model.out_proj.T, axis=1)
        out[~done, t] = tok[~done]
        done |= tok == EOS
        if done.all():
            break
    return [row[row >= 0] for row in out]


def decode_greedy(model: Seq2SeqModel, z: np.ndarray, max_len: int = 30) -> np.ndarray:
    """Emitted ids for one semantic vector, including EOS if produced."""
    return decode_batch(model, np.asarray(z)[None, :], max_len)[0]


def strip_eos(ids: np.ndarray) -> np.ndarray:
    ids = np.asarray(ids)
    hit = np.flatnonzero(ids == EOS)
    return ids[: hit[0]] if hit.size else ids


def _decoder_loss(model: Seq2SeqModel, z: np.ndarray, ids: np.ndarray, lengths: np.ndarray,
                  tf_prob: float, rng: np.random.Generator | None,
                  grads: dict[str, np.ndarray] | None):
    """Mean (over sentences) of per-sentence mean token cross-entropy.

    Targets are the sentence followed by EOS. Returns (loss, dz or None).
    """
    B = ids.shape[0]
    tgt = np.full((B, ids.shape[1] + 1), PAD, dtype=np.int64)
    tgt[:, : ids.shape[1]] = ids
    tgt[np.arange(B), lengths] = EOS
    tlen = lengths + 1
    n_steps = tgt.shape[1]
    weight = 1.0 / (tlen * B)

    p = model.decoder
    emb = model.embeddings.vectors
    W = model.out_proj
    s = z
    tok = np.full(B, SOS, dtype=np.int64)
    loss = 0.0
    tape = []
    for t in range(n_steps):
        x = emb[tok]
        s_prev = s
        s, cache = _gru_forward(p, x @ p.W_z.T, x @ p.W_r.T, x @ p.W_h.T, s_prev)
        logits = s @ W.T
        logp = log_softmax(logits)
        live = t < tlen
        gold = tgt[:, t]
        loss += float(np.sum(-logp[np.arange(B), gold] * live * weight))
        if grads is not None:
            tape.append((x, cache, s, logp, gold, live))
        if t + 1 < n_steps:
            if tf_prob >= 1.0:
                tok = gold
            else:
                pred = np.argmax(logits, axis=1)
                use_gold = rng.random(B) < tf_prob
                tok = np.where(use_gold, gold, pred)
    if grads is None:
        return loss, None

    ds = np.zeros_like(z)
    g_dec = {k[len("decoder."):]: v for k, v in grads.items() if k.startswith("decoder.")}
    for x, cache, s_t, logp, gold, live in reversed(tape):
        dlogits = np.exp(logp)
        dlogits[np.arange(B), gold] -= 1.0
        dlogits *= (live * weight)[:, None]
        grads["out_proj"] += dlogits.T @ s_t
        ds = ds + dlogits @ W
        _, ds = _gru_backward(p, cache, x, ds, g_dec)
    return loss, ds


def _classifier_forward(w: np.ndarray, Z: np.ndarray) -> np.ndarray:
    d = Z.shape[1]
    return np.einsum("bi,ij,bj->b", Z, w.reshape(d, d), Z)


def classify(model: Seq2SeqModel, z: np.ndarray) -> np.ndarray | float:
    """sigmoid(w . vec(z z^T)); vectorised over rows when ``z`` is 2-D."""
    if model.classifier_w is None:
        raise ValueError("model is unsupervised")
    z = np.asarray(z, dtype=np.float64)
    out = sigmoid(_classifier_forward(model.classifier_w, np.atleast_2d(z)))
    return float(out[0]) if z.ndim == 1 else out


def classifier_loss(w: np.ndarray, Z: np.ndarray, labels: np.ndarray):
    """Mean binary cross-entropy of the quadratic classifier.

    Returns (loss, grad_w, grad_Z). Rows with label -1 are ignored.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    labels = np.atleast_1d(labels)
    mask = labels >= 0
    n = int(mask.sum())
    if n == 0:
        return 0.0, np.zeros_like(w), np.zeros_like(Z)
    d = Z.shape[1]
    a = _classifier_forward(w, Z)
    y = np.where(mask, labels, 0).astype(np.float64)
    # log(1 + e^a) - y a, stable for large |a|
    per = np.logaddexp(0.0, a) - y * a
    loss = float(np.sum(per * mask) / n)
    g = (sigmoid(a) - y) * mask / n
    Wm = w.reshape(d, d)
    grad_w = ((Z * g[:, None]).T @ Z).ravel()
    grad_Z = g[:, None] * (Z @ (Wm + Wm.T))
    return loss, grad_w, grad_Z


def batch_loss(model: Seq2SeqModel, sentences: Sequence[np.ndarray], labels: np.ndarray | None,
               tf_prob: float, rng: np.random.Generator | None, cls_weight: float,
               need_grads: bool = True):
    """Total loss L_rec + cls_weight * L_cls on a batch, with gradients.

    Returns (total, rec, cls, grads) where grads is keyed like
    ``model.parameters()`` (or None).
    """
    ids, lengths = pad_batch(sentences)
    z, enc_state = _encode_forward(model, ids, lengths)
    grads = None
    if need_grads:
        grads = {k: np.zeros_like(v) for k, v in model.parameters().items()}
    rec, dz = _decoder_loss(model, z, ids, lengths, tf_prob, rng, grads)
    cls = 0.0
    if model.classifier_w is not None and labels is not None and cls_weight > 0:
        cls, gw, gz = classifier_loss(model.classifier_w, z, np.asarray(labels))
        if need_grads:
            grads["classifier_w"] += cls_weight * gw
            dz = dz + cls_weight * gz
    if need_grads:
        g_enc = {k[len("encoder."):]: v for k, v in grads.items() if k.startswith("encoder.")}
        _encode_backward(model, enc_state, dz, g_enc)
    return rec + cls_weight * cls, rec, cls, grads


def reconstruction_loss(model: Seq2SeqModel, sentence: Sequence[int], teacher_forcing_prob: float = 1.0,
                        rng: np.random.Generator | None = None):
    """Mean token cross-entropy of reconstructing one sentence, and its gradients."""
    if not 0.0 <= teacher_forcing_prob <= 1.0:
        raise ValueError("teacher_forcing_prob must lie in [0, 1]")
    if rng is None:
        rng = np.random.default_rng(0)
    total, _, _, grads = batch_loss(model, [np.asarray(sentence, dtype=np.int64)], None,
                                    teacher_forcing_prob, rng, 0.0)
    grads.pop("classifier_w", None)
    return total, grads


class Adam:
    """Adam with bias correction, updating arrays in place."""

    def __init__(self, params: dict[str, np.ndarray], lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, p in self.params.items():
            g = grads[k]
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class EpochLog:
    epoch: int
    loss: float
    rec: float
    cls: float
    teacher_forcing: float


def train(model: Seq2SeqModel, sentences: Sequence[np.ndarray], config: TrainConfig,
          labels: np.ndarray | None = None, callback=None) -> tuple[Seq2SeqModel, list[EpochLog]]:
    """Minibatch Adam on L_rec + cls_weight * L_cls; returns a trained copy.

    Labels take values 0/1, or -1 for sentences without a style label (they
    contribute to reconstruction only). Embeddings are never modified.
    """
    config.validate()
    semi = model.semi_supervised and config.cls_weight > 0
    if semi:
        if labels is None:
            raise ValueError("labels are required to train the style classifier")
        labels = np.asarray(labels, dtype=np.int64)
        if len(labels) != len(sentences):
            raise ValueError("labels and sentences differ in length")
        if not np.isin(labels, (-1, 0, 1)).all():
            raise ValueError("classifier labels must be 0, 1 or -1 (unlabeled)")
    model = model.copy()
    if config.epochs == 0:
        return model, []
    sentences = [np.asarray(s, dtype=np.int64) for s in sentences]
    rng = np.random.default_rng(config.seed)
    params = model.parameters()
    opt = Adam(params, config.lr, config.beta1, config.beta2, config.adam_eps)
    history = []
    for epoch in range(config.epochs):
        tf = config.teacher_forcing(epoch)
        order = rng.permutation(len(sentences))
        sums = np.zeros(3)
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            batch = [sentences[i] for i in idx]
            lab = labels[idx] if semi else None
            total, rec, cls, grads = batch_loss(model, batch, lab, tf, rng,
                                                config.cls_weight if semi else 0.0)
            if config.grad_clip is not None:
                norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
                if norm > config.grad_clip:
                    for g in grads.values():
                        g *= config.grad_clip / norm
            opt.step(grads)
            sums += np.array([total, rec, cls]) * len(idx)
        sums /= len(order)
        entry = EpochLog(epoch, *map(float, sums), tf)
        history.append(entry)
        log.info("epoch %d loss %.4f rec %.4f cls %.4f tf %.2f", epoch, *sums, tf)
        if callback is not None:
            callback(model, entry)
    return model, history

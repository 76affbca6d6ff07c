"""Desk-scale Transformer encoder-decoder for wait-k streaming translation.

Pre-norm layers, sinusoidal positions, float64 numpy. Attention visibility is
supplied as boolean masks (see :mod:`streammt.masks`), so the same forward
pass realizes the bidirectional, unidirectional and partial bidirectional
encoders. Gradients come from :mod:`streammt.autograd`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import masks as M
from .autograd import Tensor, layer_norm, masked_softmax, smoothed_cross_entropy, take
from .text import END, PAD, Vocabulary

CHECKPOINT_VERSION = 1
BOS = END  # decoder start symbol, as in fairseq's eos-as-bos convention


@dataclass
class ModelConfig:
    vocab: Vocabulary
    layers: int = 1
    model_dim: int = 32
    heads: int = 2
    ffn_dim: int = 64
    encoder_kind: str = "pbe"
    history: int = 0
    label_smoothing: float = 0.1
    loss_positions: str = "all"  # or "current": skip history target tokens

    def __post_init__(self):
        self.encoder_kind = M.canonical_kind(self.encoder_kind)
        if self.model_dim % self.heads:
            raise ValueError("model_dim must be divisible by heads")
        if self.loss_positions not in ("all", "current"):
            raise ValueError(f"unknown loss_positions {self.loss_positions!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["vocab"] = self.vocab.to_list()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["vocab"] = Vocabulary.from_list(d["vocab"])
        return cls(**d)


def _attn_names(prefix: str) -> list[str]:
    return [f"{prefix}.{n}" for n in ("wq", "wk", "wv", "wo")]


def param_shapes(cfg: ModelConfig) -> dict[str, tuple]:
    V, D, F = len(cfg.vocab), cfg.model_dim, cfg.ffn_dim
    shapes: dict[str, tuple] = {"src_emb": (V, D), "tgt_emb": (V, D)}

    def attn(prefix):
        for n in _attn_names(prefix):
            shapes[n] = (D, D)
        for n in ("bq", "bk", "bv", "bo"):
            shapes[f"{prefix}.{n}"] = (D,)

    def norm(prefix):
        shapes[f"{prefix}.g"] = (D,)
        shapes[f"{prefix}.b"] = (D,)

    def ffn(prefix):
        shapes.update({f"{prefix}.w1": (D, F), f"{prefix}.b1": (F,),
                       f"{prefix}.w2": (F, D), f"{prefix}.b2": (D,)})

    for l in range(cfg.layers):
        attn(f"enc{l}.self")
        norm(f"enc{l}.ln1")
        norm(f"enc{l}.ln2")
        ffn(f"enc{l}.ffn")
    norm("enc.ln")
    for l in range(cfg.layers):
        attn(f"dec{l}.self")
        attn(f"dec{l}.cross")
        for i in (1, 2, 3):
            norm(f"dec{l}.ln{i}")
        ffn(f"dec{l}.ffn")
    norm("dec.ln")
    shapes["out.w"] = (D, V)
    shapes["out.b"] = (V,)
    return shapes


def init_params(cfg: ModelConfig, seed: int = 0) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in param_shapes(cfg).items():
        leaf = name.rsplit(".", 1)[-1]
        if leaf == "g":
            params[name] = np.ones(shape)
        elif len(shape) == 1:
            params[name] = np.zeros(shape)
        elif name.endswith("_emb"):
            params[name] = rng.normal(0.0, cfg.model_dim ** -0.5, size=shape)
        else:
            bound = math.sqrt(6.0 / (shape[0] + shape[1]))
            params[name] = rng.uniform(-bound, bound, size=shape)
    return params


def positional_encoding(length: int, dim: int) -> np.ndarray:
    pos = np.arange(length)[:, None]
    i = np.arange(dim // 2)[None, :]
    angle = pos / np.power(10000.0, 2 * i / dim)
    pe = np.zeros((length, dim))
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle)
    return pe


# -- layers -------------------------------------------------------------------

def _linear(x: Tensor, P, w: str, b: str) -> Tensor:
    return x @ P[w] + P[b]


def attention(P, prefix: str, xq: Tensor, xkv: Tensor, allow: np.ndarray, heads: int) -> Tensor:
    B, T, D = xq.shape
    S = xkv.shape[1]
    dh = D // heads
    q = _linear(xq, P, f"{prefix}.wq", f"{prefix}.bq").reshape(B, T, heads, dh).transpose(0, 2, 1, 3)
    k = _linear(xkv, P, f"{prefix}.wk", f"{prefix}.bk").reshape(B, S, heads, dh).transpose(0, 2, 3, 1)
    v = _linear(xkv, P, f"{prefix}.wv", f"{prefix}.bv").reshape(B, S, heads, dh).transpose(0, 2, 1, 3)
    scores = (q @ k) * (1.0 / math.sqrt(dh))
    p = masked_softmax(scores, allow[:, None, :, :])
    ctx = (p @ v).transpose(0, 2, 1, 3).reshape(B, T, D)
    return _linear(ctx, P, f"{prefix}.wo", f"{prefix}.bo")


def _ffn(P, prefix: str, x: Tensor) -> Tensor:
    return _linear(_linear(x, P, f"{prefix}.w1", f"{prefix}.b1").relu(), P, f"{prefix}.w2", f"{prefix}.b2")


def _ln(P, prefix: str, x: Tensor) -> Tensor:
    return layer_norm(x, P[f"{prefix}.g"], P[f"{prefix}.b"])


def _embed(P, name: str, ids: np.ndarray, dim: int) -> Tensor:
    x = take(P[name], ids) * math.sqrt(dim)
    return x + positional_encoding(ids.shape[1], dim)[None]


def encode(P, cfg: ModelConfig, src_ids: np.ndarray, allow: np.ndarray) -> Tensor:
    """Encoder states (B, S, D); ``allow`` is (B, S, S)."""
    x = _embed(P, "src_emb", src_ids, cfg.model_dim)
    for l in range(cfg.layers):
        h = _ln(P, f"enc{l}.ln1", x)
        x = x + attention(P, f"enc{l}.self", h, h, allow, cfg.heads)
        x = x + _ffn(P, f"enc{l}.ffn", _ln(P, f"enc{l}.ln2", x))
    return _ln(P, "enc.ln", x)


def decode_logits(P, cfg: ModelConfig, tgt_in: np.ndarray, enc: Tensor,
                  self_allow: np.ndarray, cross_allow: np.ndarray) -> Tensor:
    x = _embed(P, "tgt_emb", tgt_in, cfg.model_dim)
    for l in range(cfg.layers):
        h = _ln(P, f"dec{l}.ln1", x)
        x = x + attention(P, f"dec{l}.self", h, h, self_allow, cfg.heads)
        x = x + attention(P, f"dec{l}.cross", _ln(P, f"dec{l}.ln2", x), enc, cross_allow, cfg.heads)
        x = x + _ffn(P, f"dec{l}.ffn", _ln(P, f"dec{l}.ln3", x))
    x = _ln(P, "dec.ln", x)
    return x @ P["out.w"] + P["out.b"]


def _wrap(params: dict, requires_grad: bool = False) -> dict[str, Tensor]:
    return {k: Tensor(v, requires_grad) for k, v in params.items()}


@dataclass
class Masks:
    encoder: np.ndarray  # (B, S, S)
    decoder_self: np.ndarray  # (B, T, T)
    cross: np.ndarray  # (B, T, S)


def _check(cfg, src_ids, tgt_in, masks: Masks):
    B, S = src_ids.shape
    T = tgt_in.shape[1]
    if tgt_in.shape[0] != B:
        raise ValueError("source and target batch sizes differ")
    for name, arr, shape in (("encoder", masks.encoder, (B, S, S)),
                             ("decoder_self", masks.decoder_self, (B, T, T)),
                             ("cross", masks.cross, (B, T, S))):
        if arr.shape != shape:
            raise ValueError(f"{name} mask has shape {arr.shape}, expected {shape}")
    if src_ids.max(initial=0) >= len(cfg.vocab) or tgt_in.max(initial=0) >= len(cfg.vocab):
        raise ValueError("token id outside the vocabulary")


def forward(params: dict, cfg: ModelConfig, src_ids, tgt_in, masks: Masks) -> np.ndarray:
    """Next-token distributions (B, T, V) for every target input position."""
    src_ids, tgt_in = np.asarray(src_ids), np.asarray(tgt_in)
    if src_ids.ndim == 1:
        src_ids, tgt_in = src_ids[None], tgt_in[None]
    _check(cfg, src_ids, tgt_in, masks)
    P = _wrap(params)
    enc = encode(P, cfg, src_ids, masks.encoder)
    logits = decode_logits(P, cfg, tgt_in, enc, masks.decoder_self, masks.cross).data
    logits = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(logits)
    return e / e.sum(axis=-1, keepdims=True)


def encoder_states(params: dict, cfg: ModelConfig, src_ids, allow: np.ndarray) -> np.ndarray:
    src_ids = np.asarray(src_ids)
    if src_ids.ndim == 1:
        src_ids = src_ids[None]
        allow = allow[None] if allow.ndim == 2 else allow
    return encode(_wrap(params), cfg, src_ids, allow).data


# -- batches and loss ---------------------------------------------------------

@dataclass
class TrainingBatch:
    src: np.ndarray  # (B, S) ids, PAD-padded
    tgt_in: np.ndarray  # (B, T) decoder inputs (BOS + shifted target)
    tgt_out: np.ndarray  # (B, T) gold ids
    weights: np.ndarray  # (B, T) 1 where the loss applies
    k: int
    masks: Masks


def sentence_spans(tokens: Sequence[str]) -> list[tuple[int, int]]:
    """1-based inclusive spans of the sentences inside a marker-annotated sample.

    A sentence owns its leading marker; the last sentence also owns the
    closing marker.
    """
    from .text import SEP

    starts = [1] + [i + 1 for i, t in enumerate(tokens) if t == SEP]
    ends = [s - 1 for s in starts[1:]] + [len(tokens)]
    return list(zip(starts, ends))


def sample_delays(src: Sequence[str], tgt: Sequence[str], k: int) -> list[int]:
    """Wait-k delays restarted at every sentence inside a training sample.

    Each sentence uses its own catch-up factor |y_n|/|x_n| and the delays are
    capped at the end of the sentence's source span.
    """
    s_spans, t_spans = sentence_spans(src), sentence_spans(tgt)
    if len(s_spans) != len(t_spans):
        raise ValueError("source and target samples have different sentence counts")
    delays = []
    for (a0, a1), (b0, b1) in zip(s_spans, t_spans):
        xl, yl = a1 - a0 + 1, b1 - b0 + 1
        for i in range(b0, b1 + 1):
            g = k + ((i - b0) * xl) // yl  # floor(k + (i - b_n) / gamma) with gamma = yl / xl
            delays.append(min(g + a0 - 1, a1))
    return delays


def make_batch(samples, cfg: ModelConfig, k: int) -> TrainingBatch:
    """Pad samples into one batch with wait-k masks for a single ``k``."""
    vocab = cfg.vocab
    pad = vocab.pad_id
    B = len(samples)
    S = max(len(s.source) for s in samples)
    T = max(len(s.target) for s in samples)
    src = np.full((B, S), pad, dtype=np.int64)
    tgt_in = np.full((B, T), pad, dtype=np.int64)
    tgt_out = np.full((B, T), pad, dtype=np.int64)
    weights = np.zeros((B, T))
    enc = np.zeros((B, S, S), dtype=bool)
    dec_self = np.broadcast_to(M.causal_mask(T), (B, T, T)).copy()
    cross = np.zeros((B, T, S), dtype=bool)
    for b, s in enumerate(samples):
        ls, lt = len(s.source), len(s.target)
        src[b, :ls] = vocab.encode(s.source)
        out_ids = vocab.encode(s.target)
        tgt_out[b, :lt] = out_ids
        tgt_in[b, :lt] = [vocab.lookup(BOS)] + out_ids[:-1]
        if cfg.loss_positions == "all":
            weights[b, :lt] = 1.0
        else:
            first = sentence_spans(s.target)[-1][0]
            weights[b, first - 1: lt] = 1.0
        enc[b] = M._window_mask(cfg.encoder_kind, k, 1, ls, S, k)
        cross[b, :lt] = M.cross_mask(sample_delays(s.source, s.target, k), S)[:, :S]
        cross[b, lt:, 0] = True
    return TrainingBatch(src, tgt_in, tgt_out, weights, k, Masks(enc, dec_self, cross))


def loss_tensor(P, cfg: ModelConfig, batch: TrainingBatch) -> Tensor:
    enc = encode(P, cfg, batch.src, batch.masks.encoder)
    logits = decode_logits(P, cfg, batch.tgt_in, enc, batch.masks.decoder_self, batch.masks.cross)
    B, T, V = logits.shape
    return smoothed_cross_entropy(
        logits.reshape(B * T, V), batch.tgt_out.reshape(-1), batch.weights.reshape(-1),
        cfg.label_smoothing,
    )


def loss_and_gradients(params: dict, cfg: ModelConfig, batch: TrainingBatch):
    P = _wrap(params, requires_grad=True)
    loss = loss_tensor(P, cfg, batch)
    loss.backward()
    grads = {k: (t.grad if t.grad is not None else np.zeros_like(t.data)) for k, t in P.items()}
    return float(loss.data), grads


# -- incremental unidirectional encoding --------------------------------------

@dataclass
class EncoderState:
    """Per-layer key/value caches plus the final encodings of the prefix."""

    keys: list = field(default_factory=list)  # per layer, (n, D)
    values: list = field(default_factory=list)
    outputs: np.ndarray | None = None  # (n, D)

    @property
    def length(self) -> int:
        return 0 if self.outputs is None else self.outputs.shape[0]


def _np_ln(x, g, b, eps=1e-5):
    mu = x.mean(-1, keepdims=True)
    var = ((x - mu) ** 2).mean(-1, keepdims=True)
    return (x - mu) / np.sqrt(var + eps) * g + b


def incremental_encode(params: dict, cfg: ModelConfig, prior: EncoderState | None, token_id: int) -> EncoderState:
    """Append one source token to a unidirectional encoding without touching old states."""
    if cfg.encoder_kind != "unidirectional":
        raise ValueError("incremental encoding requires a unidirectional encoder")
    prior = prior or EncoderState()
    t = prior.length
    D, H = cfg.model_dim, cfg.heads
    dh = D // H
    p = params
    x = p["src_emb"][token_id] * math.sqrt(D) + positional_encoding(t + 1, D)[t]
    keys, values = [], []
    for l in range(cfg.layers):
        pre = f"enc{l}.self"
        h = _np_ln(x, p[f"enc{l}.ln1.g"], p[f"enc{l}.ln1.b"])
        q = h @ p[f"{pre}.wq"] + p[f"{pre}.bq"]
        kk = h @ p[f"{pre}.wk"] + p[f"{pre}.bk"]
        vv = h @ p[f"{pre}.wv"] + p[f"{pre}.bv"]
        K = kk[None] if t == 0 else np.vstack([prior.keys[l], kk])
        Vv = vv[None] if t == 0 else np.vstack([prior.values[l], vv])
        keys.append(K)
        values.append(Vv)
        ctx = np.empty(D)
        for hd in range(H):
            sl = slice(hd * dh, (hd + 1) * dh)
            sc = K[:, sl] @ q[sl] / math.sqrt(dh)
            w = np.exp(sc - sc.max())
            ctx[sl] = (w / w.sum()) @ Vv[:, sl]
        x = x + ctx @ p[f"{pre}.wo"] + p[f"{pre}.bo"]
        h = _np_ln(x, p[f"enc{l}.ln2.g"], p[f"enc{l}.ln2.b"])
        x = x + np.maximum(h @ p[f"enc{l}.ffn.w1"] + p[f"enc{l}.ffn.b1"], 0) @ p[f"enc{l}.ffn.w2"] + p[f"enc{l}.ffn.b2"]
    e = _np_ln(x, p["enc.ln.g"], p["enc.ln.b"])
    outputs = e[None] if t == 0 else np.vstack([prior.outputs, e])
    return EncoderState(keys, values, outputs)


# -- checkpoints --------------------------------------------------------------

def save_checkpoint(path: str | Path, params: dict, cfg: ModelConfig, extra: dict | None = None) -> None:
    header = {"format": "streammt-toy", "version": CHECKPOINT_VERSION, "config": cfg.to_dict(),
              "extra": extra or {}}
    with open(path, "wb") as f:
        np.savez(f, __header__=np.frombuffer(json.dumps(header).encode(), dtype=np.uint8), **params)


def load_checkpoint(path: str | Path):
    with np.load(path) as z:
        header = json.loads(bytes(z["__header__"]).decode())
        if header.get("format") != "streammt-toy":
            raise ValueError(f"{path} is not a toy-model checkpoint")
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"checkpoint version {header.get('version')} not supported")
        params = {k: z[k].copy() for k in z.files if k != "__header__"}
    return params, ModelConfig.from_dict(header["config"])

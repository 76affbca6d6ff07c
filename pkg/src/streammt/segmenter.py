"""Direct sentence segmentation over a token stream.

A feed-forward classifier looks at ``history_len`` past tokens, the current
token and ``window`` future tokens and decides whether a sentence ends at the
current token. Decisions for token ``t`` become available at stream time
``t + window`` (or at the stream end).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .autograd import Adam, Tensor, smoothed_cross_entropy, take
from .text import Vocabulary

SEGMENTER_VERSION = 1


@dataclass
class SegmenterConfig:
    vocab: Vocabulary
    window: int = 0
    history_len: int = 10
    embedding_dim: int = 16
    hidden_dim: int = 32
    ff_layers: int = 2
    threshold: float = 0.5
    classes: int = 2

    def __post_init__(self):
        if self.window < 0:
            raise ValueError("future window must be >= 0")
        if self.classes != 2:
            raise ValueError("the segmenter is a binary classifier")

    @property
    def width(self) -> int:
        return self.history_len + 1 + self.window

    def to_dict(self) -> dict:
        d = asdict(self)
        d["vocab"] = self.vocab.to_list()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SegmenterConfig":
        d = dict(d)
        d["vocab"] = Vocabulary.from_list(d["vocab"])
        return cls(**d)


def init_segmenter(cfg: SegmenterConfig, seed: int) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    p = {"emb": rng.normal(0, 0.1, size=(len(cfg.vocab), cfg.embedding_dim))}
    fan_in = cfg.width * cfg.embedding_dim
    for l in range(cfg.ff_layers):
        bound = math.sqrt(6.0 / (fan_in + cfg.hidden_dim))
        p[f"ff{l}.w"] = rng.uniform(-bound, bound, size=(fan_in, cfg.hidden_dim))
        p[f"ff{l}.b"] = np.zeros(cfg.hidden_dim)
        fan_in = cfg.hidden_dim
    p["out.w"] = rng.uniform(-0.1, 0.1, size=(fan_in, 2))
    p["out.b"] = np.zeros(2)
    return p


def window_ids(cfg: SegmenterConfig, ids: Sequence[int], t: int) -> list[int]:
    """Ids of positions t-history_len .. t+window (1-based t); PAD outside the stream."""
    pad = cfg.vocab.pad_id
    n = len(ids)
    return [ids[p - 1] if 1 <= p <= n else pad for p in range(t - cfg.history_len, t + cfg.window + 1)]


def _logits(P, cfg: SegmenterConfig, windows: np.ndarray) -> Tensor:
    x = take(P["emb"], windows).reshape(windows.shape[0], -1)
    for l in range(cfg.ff_layers):
        x = (x @ P[f"ff{l}.w"] + P[f"ff{l}.b"]).relu()
    return x @ P["out.w"] + P["out.b"]


def split_probabilities(params: dict, cfg: SegmenterConfig, windows: np.ndarray) -> np.ndarray:
    P = {k: Tensor(v) for k, v in params.items()}
    z = _logits(P, cfg, np.asarray(windows)).data
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e[:, 1] / e.sum(axis=1)


def labelled_windows(cfg: SegmenterConfig, sentences: Sequence[Sequence[str]]):
    stream = [t for s in sentences for t in s]
    ids = cfg.vocab.encode(stream)
    ends = set(np.cumsum([len(s) for s in sentences]).tolist())
    X = np.array([window_ids(cfg, ids, t) for t in range(1, len(ids) + 1)], dtype=np.int64)
    y = np.array([1 if t in ends else 0 for t in range(1, len(ids) + 1)], dtype=np.int64)
    return X, y


def train_segmenter(
    sentences: Sequence[Sequence[str]],
    cfg: SegmenterConfig,
    seed: int = 0,
    steps: int = 400,
    batch_size: int = 64,
    lr: float = 3e-3,
    min_split_ratio: float = 0.3,
) -> dict[str, np.ndarray]:
    """Cross-entropy training on windows of the concatenated corpus.

    Every batch holds at least ``min_split_ratio`` split samples.
    """
    if len(sentences) < 2 or any(len(s) == 0 for s in sentences):
        raise ValueError("segmenter training needs at least two non-empty sentences")
    X, y = labelled_windows(cfg, sentences)
    pos, neg = np.flatnonzero(y == 1), np.flatnonzero(y == 0)
    if len(neg) == 0:
        raise ValueError("corpus has no non-split positions")
    rng = np.random.default_rng(seed)
    P = {k: Tensor(v, requires_grad=True) for k, v in init_segmenter(cfg, seed).items()}
    opt = Adam(P, lr=lr, betas=(0.9, 0.999))
    n_pos = max(math.ceil(min_split_ratio * batch_size), round(batch_size * len(pos) / len(y)))
    for _ in range(steps):
        idx = np.concatenate([rng.choice(pos, size=n_pos), rng.choice(neg, size=batch_size - n_pos)])
        opt.zero_grad()
        loss = smoothed_cross_entropy(_logits(P, cfg, X[idx]), y[idx], np.ones(len(idx)))
        loss.backward()
        opt.step()
    return {k: t.data.copy() for k, t in P.items()}


def segment_online(params: dict, cfg: SegmenterConfig, stream: Sequence[str]) -> Iterator[tuple[int, int, bool]]:
    """Yield ``(emit_time, token_position, is_split)`` as the stream is consumed.

    ``emit_time`` is the number of stream tokens read when the decision is
    made: ``min(t + window, len(stream))``.
    """
    ids = cfg.vocab.encode(list(stream))
    n = len(ids)
    for read in range(1, n + 1):
        decided = [t for t in ([read - cfg.window] if read < n else range(read - cfg.window, n + 1)) if t >= 1]
        for t in decided:
            # features only use tokens that have been read
            visible = ids[:read]
            p = split_probabilities(params, cfg, np.array([window_ids(cfg, visible, t)]))[0]
            yield read, t, bool(p >= cfg.threshold)


def segment_stream(params: dict, cfg: SegmenterConfig, stream: Sequence[str]) -> list[int]:
    """Boundary events: positions after which a sentence ends."""
    ids = cfg.vocab.encode(list(stream))
    if not ids:
        return []
    X = np.array([window_ids(cfg, ids, t) for t in range(1, len(ids) + 1)], dtype=np.int64)
    p = split_probabilities(params, cfg, X)
    return [t for t in range(1, len(ids) + 1) if p[t - 1] >= cfg.threshold]


class OracleSegmenter:
    """Emits the reference boundaries with the same window-induced timing."""

    def __init__(self, boundaries: Sequence[int], window: int = 0):
        self.boundaries = sorted(set(boundaries))
        self.window = window

    def segment_stream(self, stream: Sequence[str]) -> list[int]:
        return [b for b in self.boundaries if 1 <= b <= len(stream)]

    def segment_online(self, stream: Sequence[str]) -> Iterator[tuple[int, int, bool]]:
        n, bset = len(stream), set(self.boundaries)
        for t in range(1, n + 1):
            yield min(t + self.window, n), t, t in bset


def boundary_f1(predicted: Sequence[int], reference: Sequence[int]) -> float:
    p, r = set(predicted), set(reference)
    if not p and not r:
        return 1.0
    tp = len(p & r)
    if tp == 0:
        return 0.0
    prec, rec = tp / len(p), tp / len(r)
    return 2 * prec * rec / (prec + rec)


def save_segmenter(path, params: dict, cfg: SegmenterConfig) -> None:
    header = {"format": "streammt-segmenter", "version": SEGMENTER_VERSION, "config": cfg.to_dict()}
    with open(path, "wb") as f:
        np.savez(f, __header__=np.frombuffer(json.dumps(header).encode(), dtype=np.uint8), **params)


def load_segmenter(path):
    with np.load(path) as z:
        header = json.loads(bytes(z["__header__"]).decode())
        if header.get("format") != "streammt-segmenter":
            raise ValueError(f"{path} is not a segmenter checkpoint")
        if header.get("version") != SEGMENTER_VERSION:
            raise ValueError(f"segmenter version {header.get('version')} not supported")
        params = {k: z[k].copy() for k in z.files if k != "__header__"}
    return params, SegmenterConfig.from_dict(header["config"])

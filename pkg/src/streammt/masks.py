"""Boolean attention visibility masks for the encoder kinds and the decoder.

Matrices are indexed by 1-based stream positions shifted by one: row ``j - 1``
is the query at position ``j``. Positions that are not part of the attended
window (before the sentence/window start or beyond the available source)
attend only to themselves, so every row keeps at least one allowed column.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("bidirectional", "unidirectional", "pbe")
ALIASES = {"bidir": "bidirectional", "unidir": "unidirectional"}


def canonical_kind(kind: str) -> str:
    kind = ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise ValueError(f"unknown encoder kind {kind!r}")
    return kind


@dataclass(frozen=True)
class MaskSpec:
    kind: str
    k: int = 1
    a_n: int = 1
    H: int = 0
    G: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        if self.kind == "pbe" and self.k < 1:
            raise ValueError("pbe needs k >= 1")
        if self.H < 0:
            raise ValueError("history must be >= 0")
        if self.a_n < 1:
            raise ValueError("sentence start must be >= 1")


@dataclass(frozen=True)
class AttentionMask:
    allow: np.ndarray

    def __post_init__(self):
        if not self.allow.any(axis=-1).all():
            raise ValueError("every row must allow at least one column")

    def allowed(self, j: int) -> set[int]:
        return {int(c) + 1 for c in np.flatnonzero(self.allow[j - 1])}

    def __eq__(self, other) -> bool:
        return isinstance(other, AttentionMask) and np.array_equal(self.allow, other.allow)

    def __le__(self, other: "AttentionMask") -> bool:
        return bool(np.all(~self.allow | other.allow))

    def render(self) -> str:
        return "\n".join(" ".join("1" if v else "0" for v in row) for row in self.allow)

    def additive(self, dtype=np.float64) -> np.ndarray:
        return np.where(self.allow, 0.0, -np.inf).astype(dtype)


def _window_mask(kind: str, k: int, start: int, avail: int, size: int, pbe_reach: int) -> np.ndarray:
    allow = np.zeros((size, size), dtype=bool)
    for j in range(1, size + 1):
        if j < start or j > avail:
            allow[j - 1, j - 1] = True
            continue
        if kind == "bidirectional":
            hi = avail
        elif kind == "unidirectional":
            hi = j
        else:
            hi = min(max(pbe_reach, j), avail)
        allow[j - 1, start - 1: hi] = True
    return allow


def encoder_mask(spec: MaskSpec, J: int) -> AttentionMask:
    """Rows/cols 1..J; the available source ends at ``spec.G`` (default J)."""
    G = J if spec.G is None else spec.G
    if spec.kind == "bidirectional" and spec.G is None:
        raise ValueError("bidirectional encoder mask needs the available source G")
    if not 1 <= spec.a_n <= G <= J:
        raise ValueError(f"invalid span: a_n={spec.a_n}, G={G}, J={J}")
    return AttentionMask(_window_mask(spec.kind, spec.k, spec.a_n, G, J, spec.a_n + spec.k - 1))


def window_start(G_i: int, H_i: int) -> int:
    return max(1, G_i - H_i + 1)


def encoder_mask_streaming(spec: MaskSpec, G_i: int, H_i: int) -> AttentionMask:
    """Mask over stream positions 1..G_i with the last ``H_i`` tokens visible."""
    if G_i < 1 or H_i < 1:
        raise ValueError("streaming masks need G_i >= 1 and H_i >= 1")
    start = window_start(G_i, H_i)
    return AttentionMask(_window_mask(spec.kind, spec.k, start, G_i, G_i, start + spec.k - 1))


@dataclass(frozen=True)
class DecoderMask:
    self_allow: range
    cross_allow: range


def decoder_mask(i: int, b_n: int, G_i: int, H_i: int | None = None, a_n: int = 1) -> DecoderMask:
    """Spans visible to target position ``i``: its own prefix and the encoder window."""
    if i < 1:
        raise ValueError("target position must be >= 1")
    if H_i is None:
        return DecoderMask(range(b_n, i + 1), range(a_n, G_i + 1))
    return DecoderMask(range(max(1, i - H_i), i + 1), range(window_start(G_i, H_i), G_i + 1))


def training_encoder_mask(kind: str, k: int, length: int) -> np.ndarray:
    """Single-pass training mask for a sample of ``length`` source tokens."""
    kind = canonical_kind(kind)
    return _window_mask(kind, k, 1, length, length, k)


def cross_mask(delays, src_len: int) -> np.ndarray:
    """Target row i sees source columns 1..delays[i-1]."""
    allow = np.zeros((len(delays), src_len), dtype=bool)
    for r, g in enumerate(delays):
        allow[r, : max(1, min(g, src_len))] = True
    return allow


def causal_mask(length: int) -> np.ndarray:
    return np.tril(np.ones((length, length), dtype=bool))

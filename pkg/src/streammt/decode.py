"""Greedy streaming decoding with a wait-k policy and bounded history."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import masks as M
from .corpus import select_history
from .model import BOS, Masks, ModelConfig, forward
from .policy import ActionTrace, WaitKPolicy
from .text import BRK, CONT, DOC, END, RESERVED, SENTENCE_END_MARKERS, SEP


@dataclass
class DecodeResult:
    target: list[str]
    sentences: list[list[str]]
    trace: ActionTrace

    @property
    def b(self) -> tuple[int, ...]:
        starts, pos = [], 1
        for s in self.sentences:
            starts.append(pos)
            pos += len(s)
        return tuple(starts)


def sentence_ends(boundaries: Sequence[int], stream_len: int) -> list[int]:
    """Closing positions of every sentence; the stream end closes the last one."""
    ends = sorted(p for p in set(boundaries) if 1 <= p <= stream_len)
    if not ends or ends[-1] != stream_len:
        ends.append(stream_len)
    return ends


def _window(first, hist_parts, current, closing=None):
    out = [first]
    for i, part in enumerate(hist_parts):
        if i:
            out.append(SEP)
        out.extend(part)
    if hist_parts:
        out.append(SEP)
    out.extend(current)
    if closing:
        out.append(closing)
    return out


def inference_masks(kind: str, src_len: int, tgt_len: int) -> Masks:
    # a partial bidirectional encoder falls back to bidirectional attention at inference
    if kind == "unidirectional":
        enc = M.causal_mask(src_len)
    else:
        enc = np.ones((src_len, src_len), dtype=bool)
    return Masks(enc[None], M.causal_mask(tgt_len)[None], np.ones((1, tgt_len, src_len), dtype=bool))


def greedy_stream_decode(
    params: dict,
    config: ModelConfig,
    src_stream: Sequence[str],
    boundary_events: Sequence[int],
    policy: WaitKPolicy,
    history: int | None = None,
    max_ratio: int = 2,
) -> DecodeResult:
    """Translate an unsegmented source stream sentence by sentence.

    Target token ``i`` of sentence ``n`` is written once
    ``min(G(i), end_n)`` source tokens have been read. A sentence closes when
    its last token (a boundary event) is read; only then may the model end
    the translation, which flushes the sentence before the next READ.
    """
    H = config.history if history is None else history
    vocab = config.vocab
    src = list(src_stream)
    N = len(src)
    trace = ActionTrace()
    if N == 0:
        return DecodeResult([], [], trace)
    reserved = np.array([vocab.lookup(s) for s in RESERVED])
    end_ids = np.array([vocab.lookup(s) for s in SENTENCE_END_MARKERS])
    completed: list[tuple[list[str], list[str]]] = []
    out: list[str] = []
    start = 1
    for n, end in enumerate(sentence_ends(boundary_events, N), start=1):
        x_n = src[start - 1: end]
        b_n = len(out) + 1
        cur: list[str] = []
        n_hist = select_history(completed, H, check_target=True)
        hist = completed[len(completed) - n_hist:] if n_hist else []
        first = DOC if n_hist in (0, len(completed)) else CONT
        closing = END if end == N else BRK
        while True:
            i = b_n + len(cur)
            need = math.floor(policy.k + Fraction(i - b_n) / policy.gamma) + start - 1
            while trace.n_reads < min(need, end):
                trace.read(n)
            closed = trace.n_reads == end
            if closed and len(cur) >= max_ratio * len(x_n) + 2:
                break
            src_win = _window(first, [x for x, _ in hist], src[start - 1: trace.n_reads], closing if closed else None)
            tgt_win = _window(first, [y for _, y in hist], cur)
            tgt_in = vocab.encode([BOS] + tgt_win)
            raw = forward(params, config, vocab.encode(src_win), tgt_in,
                          inference_masks(config.encoder_kind, len(src_win), len(tgt_in)))[0, -1]
            probs = raw.copy()
            probs[reserved] = -1.0
            if closed and cur:
                # ending is only possible once the sentence is closed and non-empty
                probs[end_ids] = raw[end_ids]
            best = int(np.argmax(probs))
            if best in end_ids:
                break
            cur.append(vocab.surface(best))
            out.append(cur[-1])
            trace.write(n)
        completed.append((x_n, cur))
        start = end + 1
    return DecodeResult(out, [y for _, y in completed], trace)


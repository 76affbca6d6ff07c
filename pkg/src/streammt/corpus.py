"""Streaming training samples from document-ordered sentence pairs.

Each sentence pair is prefixed with the nearest preceding pairs of its
document, added one at a time while the source-side history stays within
``h`` tokens. Markers are not counted towards the threshold.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .text import BRK, CONT, DOC, END, SEP, is_marker, read_lines, write_lines

Sentence = Sequence[str]


@dataclass(frozen=True)
class StreamingSample:
    source: tuple[str, ...]
    target: tuple[str, ...]
    history_span: tuple[int, int]  # (source, target) history tokens, markers excluded
    current_pair_index: int  # 0-based within the document

    def source_line(self) -> str:
        return " ".join(self.source)

    def target_line(self) -> str:
        return " ".join(self.target)


class DocumentCorpus:
    def __init__(self, documents: Sequence[Sequence[tuple[Sentence, Sentence]]]):
        docs = []
        for d in documents:
            if not d:
                raise ValueError("documents must be non-empty")
            docs.append([(tuple(x), tuple(y)) for x, y in d])
        self.documents = docs

    def __len__(self) -> int:
        return len(self.documents)

    def pairs(self):
        for doc in self.documents:
            yield from doc

    @classmethod
    def from_files(cls, src_path, tgt_path, doc_index_path=None) -> "DocumentCorpus":
        """Line-aligned text files; the optional index holds ``start end`` line ranges (1-based, inclusive)."""
        src, tgt = read_lines(src_path), read_lines(tgt_path)
        if len(src) != len(tgt):
            raise ValueError(f"{len(src)} source lines vs {len(tgt)} target lines")
        pairs = list(zip(src, tgt))
        if doc_index_path is None:
            return cls([pairs])
        docs = []
        for line in Path(doc_index_path).read_text().splitlines():
            if line.strip():
                lo, hi = (int(v) for v in line.split())
                docs.append(pairs[lo - 1: hi])
        return cls(docs)


def _join(first_marker: str, sentences: list[Sentence], last_marker: str) -> tuple[str, ...]:
    out = [first_marker]
    for i, s in enumerate(sentences):
        if i:
            out.append(SEP)
        out.extend(s)
    out.append(last_marker)
    return tuple(out)


def select_history(previous: Sequence[tuple[Sentence, Sentence]], h: int, check_target: bool = False) -> int:
    """Number of trailing pairs admitted as history (nearest first, contiguous)."""
    used_src = used_tgt = 0
    n = 0
    for x, y in reversed(previous):
        xs = sum(1 for t in x if not is_marker(t))
        ys = sum(1 for t in y if not is_marker(t))
        if used_src + xs > h or (check_target and used_tgt + ys > h):
            break
        used_src += xs
        used_tgt += ys
        n += 1
    return n


def build_sample(previous, current, h: int, is_last: bool, check_target: bool = False) -> StreamingSample:
    n_hist = select_history(previous, h, check_target)
    hist = list(previous[len(previous) - n_hist:]) if n_hist else []
    # samples without history are plain sentence-level samples
    first = DOC if n_hist in (0, len(previous)) else CONT
    last = END if is_last else BRK
    x_cur, y_cur = current
    src = _join(first, [x for x, _ in hist] + [x_cur], last)
    tgt = _join(first, [y for _, y in hist] + [y_cur], last)
    span = (sum(len(x) for x, _ in hist), sum(len(y) for _, y in hist))
    return StreamingSample(src, tgt, span, len(previous))


def build_streaming_samples(corpus: DocumentCorpus, h: int) -> list[StreamingSample]:
    if h < 0:
        raise ValueError("history threshold must be >= 0")
    samples = []
    for doc in corpus.documents:
        for idx, pair in enumerate(doc):
            samples.append(build_sample(doc[:idx], pair, h, idx == len(doc) - 1))
    return samples


def strip_markers(tokens: Sequence[str]) -> list[str]:
    return [t for t in tokens if not is_marker(t)]


def upsample_mix(streaming: list, sentence_level: list, ratio=Fraction(1, 3), seed: int | None = None) -> list:
    """Repeat ``streaming`` until streaming:sentence-level >= ``ratio``.

    The result is the (repeated) streaming samples followed by the
    sentence-level ones; with a ``seed`` it is shuffled deterministically.
    """
    ratio = Fraction(ratio)
    if ratio <= 0:
        raise ValueError("ratio must be positive")
    if not streaming:
        return list(sentence_level)
    reps = 1
    while Fraction(reps * len(streaming)) < ratio * len(sentence_level):
        reps += 1
    out = list(streaming) * reps + list(sentence_level)
    if seed is not None:
        random.Random(seed).shuffle(out)
    return out


def write_samples(samples: Sequence[StreamingSample], src_path, tgt_path) -> None:
    write_lines(src_path, [s.source for s in samples])
    write_lines(tgt_path, [s.target for s in samples])


def read_samples(src_path, tgt_path) -> list[StreamingSample]:
    src, tgt = read_lines(src_path), read_lines(tgt_path)
    if len(src) != len(tgt):
        raise ValueError("sample files are not line-aligned")
    out = []
    for x, y in zip(src, tgt):
        hx = len(strip_markers(x)) - len(strip_markers(_last_sentence(x)))
        hy = len(strip_markers(y)) - len(strip_markers(_last_sentence(y)))
        out.append(StreamingSample(tuple(x), tuple(y), (hx, hy), -1))
    return out


def _last_sentence(tokens: Sequence[str]) -> list[str]:
    idx = max((i for i, t in enumerate(tokens) if t == SEP), default=0)
    return list(tokens[idx:])

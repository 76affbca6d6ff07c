"""Tokens, vocabularies, streams and sentence segmentations.

Stream positions and sentence indices are 1-based throughout the package;
event times in action traces are 0-based.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

DOC = "<DOC>"
CONT = "<CONT>"
SEP = "<SEP>"
BRK = "<BRK>"
END = "<END>"
UNK = "<UNK>"
PAD = "<PAD>"

# Fixed order; index in this tuple is the reserved id.
RESERVED = (DOC, CONT, SEP, BRK, END, UNK, PAD)
MARKERS = frozenset((DOC, CONT, SEP, BRK, END))
SENTENCE_END_MARKERS = frozenset((SEP, BRK, END))


def tokenize(line: str) -> list[str]:
    return line.split()


def is_marker(surface: str) -> bool:
    return surface in MARKERS


@dataclass(frozen=True)
class Token:
    surface: str
    id: int

    def __post_init__(self):
        if not self.surface or any(c.isspace() for c in self.surface):
            raise ValueError(f"invalid token surface {self.surface!r}")
        if self.id < 0:
            raise ValueError("token id must be non-negative")


class Vocabulary:
    """Surface <-> id map with the reserved symbols at ids 0..6."""

    def __init__(self, surfaces: Iterable[str] = ()):
        self._entries: list[str] = list(RESERVED)
        self._index: dict[str, int] = {s: i for i, s in enumerate(RESERVED)}
        for s in surfaces:
            self.add(s)

    def add(self, surface: str) -> int:
        if surface in self._index:
            return self._index[surface]
        if not surface or any(c.isspace() for c in surface):
            raise ValueError(f"invalid token surface {surface!r}")
        self._index[surface] = len(self._entries)
        self._entries.append(surface)
        return self._index[surface]

    @classmethod
    def build(cls, lines: Iterable[str]) -> "Vocabulary":
        vocab = cls()
        for line in lines:
            for tok in tokenize(line):
                vocab.add(tok)
        return vocab

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, surface: str) -> bool:
        return surface in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self._entries == other._entries

    @property
    def entries(self) -> tuple[str, ...]:
        return tuple(self._entries)

    @property
    def pad_id(self) -> int:
        return RESERVED.index(PAD)

    @property
    def unk_id(self) -> int:
        return RESERVED.index(UNK)

    def lookup(self, surface: str) -> int:
        return self._index.get(surface, self.unk_id)

    def surface(self, idx: int) -> str:
        return self._entries[idx]

    def token(self, surface: str) -> Token:
        return Token(surface, self.lookup(surface))

    def encode(self, surfaces: Sequence[str]) -> list[int]:
        return [self.lookup(s) for s in surfaces]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self._entries[i] for i in ids]

    def to_list(self) -> list[str]:
        return list(self._entries)

    @classmethod
    def from_list(cls, entries: Sequence[str]) -> "Vocabulary":
        if tuple(entries[: len(RESERVED)]) != RESERVED:
            raise ValueError("vocabulary does not start with the reserved symbols")
        return cls(entries[len(RESERVED):])


@dataclass(frozen=True)
class TokenStream:
    tokens: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.tokens)

    def at(self, pos: int) -> str:
        """Token at 1-based position ``pos``."""
        if not 1 <= pos <= len(self.tokens):
            raise IndexError(f"position {pos} outside stream of length {len(self.tokens)}")
        return self.tokens[pos - 1]

    def span(self, start: int, end: int) -> tuple[str, ...]:
        """Inclusive 1-based span; empty when end < start."""
        return self.tokens[max(start, 1) - 1: max(end, 0)]

    @classmethod
    def from_sentences(cls, sentences: Iterable[Sequence[str]]) -> "TokenStream":
        return cls(tuple(tok for s in sentences for tok in s))


@dataclass(frozen=True)
class Segmentation:
    """Sentence start positions on the source (``a``) and target (``b``) side."""

    a: tuple[int, ...]
    b: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(int(x) for x in self.a))
        object.__setattr__(self, "b", tuple(int(x) for x in self.b))
        if len(self.a) != len(self.b):
            raise ValueError("source and target segmentations differ in length")
        if not self.a:
            raise ValueError("empty segmentation")
        for name, v in (("a", self.a), ("b", self.b)):
            if v[0] != 1:
                raise ValueError(f"{name} must start at position 1")
            if any(y <= x for x, y in zip(v, v[1:])):
                raise ValueError(f"{name} must be strictly increasing")

    def __len__(self) -> int:
        return len(self.a)

    def starts(self, side: str) -> tuple[int, ...]:
        if side == "source":
            return self.a
        if side == "target":
            return self.b
        raise ValueError(f"unknown side {side!r}")

    @classmethod
    def from_lengths(cls, src_lens: Sequence[int], tgt_lens: Sequence[int]) -> "Segmentation":
        if len(src_lens) != len(tgt_lens):
            raise ValueError("length vectors differ in size")
        if any(n < 1 for n in src_lens) or any(n < 1 for n in tgt_lens):
            raise ValueError("sentence lengths must be positive")
        return cls(_starts(src_lens), _starts(tgt_lens))

    def lengths(self, side: str, total: int) -> list[int]:
        """Per-sentence lengths given the total stream length on ``side``."""
        starts = self.starts(side)
        ends = list(starts[1:]) + [total + 1]
        lens = [e - s for s, e in zip(starts, ends)]
        if lens[-1] < 1:
            raise ValueError("stream shorter than its segmentation")
        return lens


def _starts(lens: Sequence[int]) -> tuple[int, ...]:
    out, pos = [], 1
    for n in lens:
        out.append(pos)
        pos += n
    return tuple(out)


def sentence_of(seg: Segmentation, side: str, pos: int) -> int:
    """1-based index n with start_n <= pos < start_{n+1}."""
    if pos < 1:
        raise ValueError(f"position must be >= 1, got {pos}")
    return bisect.bisect_right(seg.starts(side), pos)


def catch_up_factor(src_len: int, tgt_len: int) -> Fraction:
    if src_len < 1 or tgt_len < 1:
        raise ValueError("catch-up factor needs positive lengths")
    return Fraction(tgt_len, src_len)


# -- files -------------------------------------------------------------------

def read_lines(path: str | Path) -> list[list[str]]:
    with open(path, encoding="utf-8") as f:
        return [tokenize(line) for line in f]


def read_stream(path: str | Path) -> TokenStream:
    """A stream file is either one line or one segment per line; lines are concatenated."""
    return TokenStream.from_sentences(read_lines(path))


def write_lines(path: str | Path, lines: Iterable[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for toks in lines:
            f.write(" ".join(toks) + "\n")


def read_segmentation(path: str | Path) -> Segmentation:
    a, b = [], []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            x, y = line.split("\t")
            a.append(int(x))
            b.append(int(y))
    return Segmentation(tuple(a), tuple(b))


def write_segmentation(path: str | Path, seg: Segmentation) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for x, y in zip(seg.a, seg.b):
            f.write(f"{x}\t{y}\n")

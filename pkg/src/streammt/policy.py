"""Wait-k delay functions and READ/WRITE scheduling over segmented streams."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .text import Segmentation, sentence_of

READ = "READ"
WRITE = "WRITE"


@dataclass(frozen=True)
class WaitKPolicy:
    k: int
    gamma: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "gamma", Fraction(self.gamma))
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


def _floor_delay(k: int, steps: int, gamma: Fraction) -> int:
    # floor(k + steps / gamma) in exact integer arithmetic; float division
    # would misplace boundaries
    return k + (steps * gamma.denominator) // gamma.numerator


def local_delay(policy: WaitKPolicy, i: int) -> int:
    if i < 1:
        raise ValueError("target index must be >= 1")
    return _floor_delay(policy.k, i - 1, policy.gamma)


def stream_delay(policy: WaitKPolicy, seg: Segmentation, i: int) -> int:
    if i < 1:
        raise ValueError("target index must be >= 1")
    n = sentence_of(seg, "target", i)
    a_n, b_n = seg.a[n - 1], seg.b[n - 1]
    return _floor_delay(policy.k, i - b_n, policy.gamma) + a_n - 1


def cap_delay(g_raw: int, available_src: int) -> int:
    if available_src < 1:
        raise ValueError("available source must be >= 1")
    return min(g_raw, available_src)


@dataclass(frozen=True)
class Event:
    time: int
    action: str
    pos: int
    sentence: int

    def to_dict(self) -> dict:
        key = "src_pos" if self.action == READ else "tgt_pos"
        return {"time": self.time, "action": self.action, key: self.pos, "sentence": self.sentence}

    @classmethod
    def from_dict(cls, d: dict) -> "Event":
        pos = d["src_pos"] if d["action"] == READ else d["tgt_pos"]
        return cls(int(d["time"]), d["action"], int(pos), int(d["sentence"]))


class ActionTrace:
    """Time-ordered READ/WRITE log; one event per time step."""

    def __init__(self, events: Iterable[Event] = ()):
        self.events: list[Event] = []
        self._reads = 0
        self._writes = 0
        for e in events:
            self._append(e)

    def _append(self, e: Event) -> None:
        if e.time != len(self.events):
            raise ValueError("events must occupy consecutive time steps from 0")
        if e.action not in (READ, WRITE):
            raise ValueError(f"unknown action {e.action!r}")
        last = self.n_reads if e.action == READ else self.n_writes
        if e.pos != last + 1:
            raise ValueError(f"{e.action} positions must be contiguous; got {e.pos} after {last}")
        self.events.append(e)
        if e.action == READ:
            self._reads += 1
        else:
            self._writes += 1

    def read(self, sentence: int) -> None:
        self._append(Event(len(self.events), READ, self.n_reads + 1, sentence))

    def write(self, sentence: int) -> None:
        self._append(Event(len(self.events), WRITE, self.n_writes + 1, sentence))

    @property
    def n_reads(self) -> int:
        return self._reads

    @property
    def n_writes(self) -> int:
        return self._writes

    def __len__(self) -> int:
        return len(self.events)

    def __eq__(self, other) -> bool:
        return isinstance(other, ActionTrace) and self.events == other.events

    def __repr__(self) -> str:
        return f"ActionTrace({self.actions_string()!r})"

    def actions_string(self) -> str:
        return " ".join("R" if e.action == READ else "W" for e in self.events)

    def delays(self) -> list[int]:
        """G(i): number of READs strictly before the WRITE of target i."""
        out, reads = [], 0
        for e in self.events:
            if e.action == READ:
                reads += 1
            else:
                out.append(reads)
        return out

    def write_sentences(self) -> list[int]:
        return [e.sentence for e in self.events if e.action == WRITE]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict()) + "\n" for e in self.events)

    @classmethod
    def from_jsonl(cls, text: str) -> "ActionTrace":
        return cls(Event.from_dict(json.loads(line)) for line in text.splitlines() if line.strip())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ActionTrace":
        return cls.from_jsonl(Path(path).read_text(encoding="utf-8"))


def schedule_actions(
    policy: WaitKPolicy,
    seg: Segmentation,
    src_lens: Sequence[int],
    tgt_lens: Sequence[int],
) -> ActionTrace:
    """Per-sentence wait-k with a mandatory flush at every sentence end."""
    if len(src_lens) != len(seg) or len(tgt_lens) != len(seg):
        raise ValueError("length vectors do not match the segmentation")
    if Segmentation.from_lengths(src_lens, tgt_lens) != seg:
        raise ValueError("segmentation inconsistent with sentence lengths")
    trace = ActionTrace()
    for n, (a_n, b_n, xl, yl) in enumerate(zip(seg.a, seg.b, src_lens, tgt_lens), start=1):
        src_end = a_n + xl - 1
        for i in range(b_n, b_n + yl):
            needed = cap_delay(stream_delay(policy, seg, i), src_end)
            while trace.n_reads < needed:
                trace.read(n)
            trace.write(n)
        while trace.n_reads < src_end:
            trace.read(n)
    return trace


def compose_with_segmenter(trace: ActionTrace, window: int, stream_len: int) -> ActionTrace:
    """Joint segmenter+translator trace for a segmenter with ``window`` future tokens.

    The first ``window`` stream tokens are read up front to fill the window;
    afterwards each translator READ pulls exactly one new stream token, until
    the stream is exhausted.
    """
    if window < 0:
        raise ValueError("window must be >= 0")
    if trace.n_reads > stream_len:
        raise ValueError("trace reads beyond the stream")
    joint = ActionTrace()
    first_sentence = trace.events[0].sentence if trace.events else 1
    for _ in range(min(window, stream_len)):
        joint.read(first_sentence)
    for e in trace.events:
        if e.action == READ:
            if joint.n_reads < stream_len:
                joint.read(e.sentence)
        else:
            joint.write(e.sentence)
    return joint

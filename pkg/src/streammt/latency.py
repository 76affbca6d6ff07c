"""AP, AL and DAL at sentence level and adapted to segmented streams.

All scores are computed on exact rationals and returned as ``Fraction``.
Delays are 1-based source positions: ``g(i) = 3`` means three source tokens
had been read when target token ``i`` was written.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .text import Segmentation


@dataclass(frozen=True)
class DelayVector:
    g: tuple[int, ...]
    gamma: Fraction
    src_len: int
    tgt_len: int

    def __post_init__(self):
        object.__setattr__(self, "g", tuple(int(x) for x in self.g))
        object.__setattr__(self, "gamma", Fraction(self.gamma))
        if len(self.g) != self.tgt_len:
            raise ValueError("delay vector length must equal tgt_len")
        if self.src_len < 1:
            raise ValueError("src_len must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")

    @classmethod
    def sentence(cls, g: Sequence[int], src_len: int, gamma=None) -> "DelayVector":
        """Sentence-level vector; gamma defaults to |y|/|x|."""
        if gamma is None:
            gamma = Fraction(len(g), src_len)
        return cls(tuple(g), Fraction(gamma), src_len, len(g))


def _as_fraction(x) -> Fraction:
    return Fraction(str(x)) if isinstance(x, float) else Fraction(x)


def relative_delays(
    G: Sequence[int],
    seg: Segmentation,
    src_total: int,
    gammas: Sequence | None = None,
) -> list[DelayVector]:
    """Map global delays onto each sentence: g_n(i) = G(i + b_n - 1) - (a_n - 1)."""
    src_lens = seg.lengths("source", src_total)
    tgt_lens = seg.lengths("target", len(G))
    return _relative(G, seg.a, seg.b, src_lens, tgt_lens, gammas)


def _relative(G, a, b, src_lens, tgt_lens, gammas) -> list[DelayVector | None]:
    out = []
    for n, (a_n, b_n, xl, yl) in enumerate(zip(a, b, src_lens, tgt_lens)):
        if yl == 0:
            out.append(None)
            continue
        if b_n < 1 or b_n + yl - 1 > len(G):
            raise ValueError(f"sentence {n + 1} target span outside the delay vector")
        g = [G[i + b_n - 2] - (a_n - 1) for i in range(1, yl + 1)]
        gamma = Fraction(yl, xl) if gammas is None else _as_fraction(gammas[n])
        out.append(DelayVector(tuple(g), gamma, xl, yl))
    return out


def ap(d: DelayVector) -> Fraction:
    if d.tgt_len == 0:
        raise ValueError("AP undefined for an empty target")
    return Fraction(sum(d.g), d.src_len * d.tgt_len)


def _tau(d: DelayVector) -> int:
    # first position where the whole source was available; in stream mode
    # relative delays may overshoot |x|, hence >=
    for i, gi in enumerate(d.g, start=1):
        if gi >= d.src_len:
            return i
    return d.tgt_len


def al(d: DelayVector) -> Fraction:
    if d.tgt_len == 0:
        raise ValueError("AL undefined for an empty target")
    tau = _tau(d)
    return sum(Fraction(d.g[i - 1]) - Fraction(i - 1) / d.gamma for i in range(1, tau + 1)) / tau


def dal_lagged(d: DelayVector, s=1, carry_in=None) -> list[Fraction]:
    """g'(i) = max(g(i), g'(i-1) + s/gamma); ``carry_in`` lower-bounds g'(1)."""
    step = _as_fraction(s) / d.gamma
    out: list[Fraction] = []
    for i, gi in enumerate(d.g):
        if i == 0:
            cur = Fraction(gi) if carry_in is None else max(Fraction(gi), Fraction(carry_in))
        else:
            cur = max(Fraction(gi), out[-1] + step)
        out.append(cur)
    return out


def dal(d: DelayVector, s=1, carry_in=None) -> Fraction:
    if d.tgt_len == 0:
        raise ValueError("DAL undefined for an empty target")
    gp = dal_lagged(d, s, carry_in)
    return sum(gp[i] - Fraction(i) / d.gamma for i in range(d.tgt_len)) / d.tgt_len


@dataclass
class LatencyReport:
    per_sentence: list[dict | None]
    aggregate: dict
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"per_sentence": self.per_sentence, "aggregate": self.aggregate, "config": self.config}

    @classmethod
    def from_dict(cls, d: dict) -> "LatencyReport":
        return cls(d["per_sentence"], d["aggregate"], d.get("config", {}))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "AP", "AL", "DAL"])
        for n, row in enumerate(self.per_sentence, start=1):
            if row is None:
                w.writerow([n, "", "", ""])
            else:
                w.writerow([n] + [repr(row[m]) for m in ("AP", "AL", "DAL")])
        w.writerow(["aggregate"] + [repr(self.aggregate[m]) for m in ("AP", "AL", "DAL")])
        return buf.getvalue()


def stream_scores(
    G: Sequence[int],
    a: Sequence[int],
    b: Sequence[int],
    src_lens: Sequence[int],
    tgt_lens: Sequence[int],
    gammas: Sequence | None = None,
    s=1,
) -> list[dict | None]:
    """Exact per-sentence scores; sentences with an empty target give ``None``.

    DAL's lagged delay is carried from one sentence to the next in stream
    coordinates: the last g' of the previous non-empty sentence plus s/gamma,
    shifted into the current sentence's frame.
    """
    vectors = _relative(G, a, b, src_lens, tgt_lens, gammas)
    scores: list[dict | None] = []
    carry_global = None
    for a_n, d in zip(a, vectors):
        if d is None:
            scores.append(None)
            continue
        carry = None if carry_global is None else carry_global - (a_n - 1)
        gp = dal_lagged(d, s, carry)
        scores.append({"AP": ap(d), "AL": al(d), "DAL": dal(d, s, carry)})
        carry_global = gp[-1] + (a_n - 1) + _as_fraction(s) / d.gamma
    return scores


def _aggregate(scores, tgt_lens, mode: str) -> dict:
    rows = [(sc, yl) for sc, yl in zip(scores, tgt_lens) if sc is not None]
    if not rows:
        return {"AP": 0.0, "AL": 0.0, "DAL": 0.0}
    out = {}
    for m in ("AP", "AL", "DAL"):
        if mode == "mean":
            val = sum(sc[m] for sc, _ in rows) / len(rows)
        elif mode == "weighted":
            val = sum(sc[m] * yl for sc, yl in rows) / sum(yl for _, yl in rows)
        else:
            raise ValueError(f"unknown aggregation {mode!r}")
        out[m] = float(val)
    return out


def stream_metrics(
    G: Sequence[int],
    seg: Segmentation,
    per_sentence_gamma: Sequence | None = None,
    s=1,
    src_total: int | None = None,
    aggregation: str = "mean",
) -> LatencyReport:
    """Stream-adapted AP/AL/DAL for a segmented stream.

    ``src_total`` is the source stream length; it defaults to the largest
    delay, which is exact whenever the translator read the whole stream.
    """
    if not G:
        raise ValueError("empty stream")
    if src_total is None:
        src_total = max(G)
    src_lens = seg.lengths("source", src_total)
    tgt_lens = seg.lengths("target", len(G))
    return report_from_lengths(G, seg.a, seg.b, src_lens, tgt_lens, per_sentence_gamma, s, aggregation)


def report_from_lengths(G, a, b, src_lens, tgt_lens, gammas=None, s=1, aggregation="mean") -> LatencyReport:
    if not G:
        raise ValueError("empty stream")
    scores = stream_scores(G, a, b, src_lens, tgt_lens, gammas, s)
    per = [None if sc is None else {m: float(v) for m, v in sc.items()} for sc in scores]
    return LatencyReport(
        per_sentence=per,
        aggregate=_aggregate(scores, tgt_lens, aggregation),
        config={"mode": "stream" if len(a) > 1 else "sentence", "dal_scale": float(_as_fraction(s)),
                "aggregation": aggregation},
    )

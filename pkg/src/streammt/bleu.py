"""Corpus-level BLEU over whitespace-tokenized sentences."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Sequence


@dataclass(frozen=True)
class BleuScore:
    score: float
    precisions: tuple[float, ...]
    brevity_penalty: float
    hyp_len: int
    ref_len: int

    def to_dict(self, points: bool = False) -> dict:
        d = asdict(self)
        d["precisions"] = list(self.precisions)
        if points:
            d["score"] = 100 * self.score
        return d


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(
    hyps: Sequence[Sequence[str]],
    refs: Sequence[Sequence[str]],
    max_n: int = 4,
    smooth: bool = False,
) -> BleuScore:
    """Papineni-style corpus BLEU with pooled clipped n-gram counts.

    With ``smooth=True`` every order gets add-one smoothing (numerator and
    denominator), which keeps tiny corpora from collapsing to zero.
    """
    if len(hyps) != len(refs):
        raise ValueError(f"{len(hyps)} hypotheses vs {len(refs)} references")
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for hyp, ref in zip(hyps, refs):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            h, r = ngram_counts(hyp, n), ngram_counts(ref, n)
            matches[n - 1] += sum(min(c, r[g]) for g, c in h.items())
            totals[n - 1] += max(len(hyp) - n + 1, 0)

    if smooth:
        precisions = tuple((m + 1) / (t + 1) for m, t in zip(matches, totals))
    else:
        precisions = tuple(m / t if t else 0.0 for m, t in zip(matches, totals))

    if hyp_len == 0:
        bp = 0.0
    elif hyp_len < ref_len:
        bp = math.exp(1 - ref_len / hyp_len)
    else:
        bp = 1.0

    if min(precisions) == 0 or bp == 0:
        score = 0.0
    else:
        score = bp * math.exp(sum(math.log(p) for p in precisions) / max_n)
    return BleuScore(score, precisions, bp, hyp_len, ref_len)

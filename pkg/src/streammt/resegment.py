"""Minimum word-error-rate re-segmentation of an unsegmented hypothesis stream."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

INF = float("inf")


def levenshtein(a: Sequence[str], b: Sequence[str]) -> int:
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i]
        for j, y in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


@dataclass(frozen=True)
class ResegmentationResult:
    boundaries: tuple[int, ...]
    total_cost: int

    def segments(self, hyp: Sequence[str]) -> list[list[str]]:
        ends = list(self.boundaries[1:]) + [len(hyp) + 1]
        return [list(hyp[s - 1: e - 1]) for s, e in zip(self.boundaries, ends)]


def _suffix_costs(hyp: Sequence[str], refs: Sequence[Sequence[str]]) -> list[list[float]]:
    """cost[n][s] = min edit cost of aligning refs[n:] to hyp[s:] (0-based s).

    Joint dynamic program over (hypothesis position, reference position),
    one reference at a time from the last one backwards.
    """
    m = len(hyp)
    nxt = [INF] * (m + 1)
    nxt[m] = 0
    table = [nxt]
    for ref in reversed(refs):
        r = len(ref)
        # E[j][q]: best cost with hyp[j:] still to align, ref[q:] still to match,
        # and the remaining references aligned after a boundary.
        # q = r: segment for this ref is complete; may close now or absorb tokens
        col_r = [INF] * (m + 1)
        for j in range(m, -1, -1):
            best = nxt[j]
            if j < m:
                best = min(best, col_r[j + 1] + 1)
            col_r[j] = best
        below = col_r
        for q in range(r - 1, -1, -1):
            cur = [INF] * (m + 1)
            tok = ref[q]
            for j in range(m, -1, -1):
                best = below[j] + 1  # delete ref token
                if j < m:
                    best = min(best, cur[j + 1] + 1, below[j + 1] + (hyp[j] != tok))
                cur[j] = best
            below = cur
        table.append(below)
        nxt = below
    table.reverse()
    return table


def _segment_costs(hyp: Sequence[str], start: int, ref: Sequence[str]) -> list[int]:
    """Levenshtein(hyp[start:e], ref) for every e >= start (0-based)."""
    r = len(ref)
    prev = list(range(r + 1))
    out = [prev[r]]
    for e in range(start, len(hyp)):
        cur = [prev[0] + 1]
        for q in range(1, r + 1):
            cur.append(min(prev[q] + 1, cur[q - 1] + 1, prev[q - 1] + (hyp[e] != ref[q - 1])))
        prev = cur
        out.append(prev[r])
    return out


def mwer_resegment(hyp: Sequence[str], refs: Sequence[Sequence[str]]) -> ResegmentationResult:
    """Split ``hyp`` into ``len(refs)`` contiguous, possibly empty segments.

    Minimizes the summed token-level edit distance; among optimal solutions
    each boundary is placed as early as possible, left to right.
    """
    if not refs:
        raise ValueError("at least one reference sentence is required")
    hyp = list(hyp)
    suffix = _suffix_costs(hyp, refs)
    total = suffix[0][0]
    starts = [0]
    s = 0
    for n in range(len(refs) - 1):
        seg = _segment_costs(hyp, s, refs[n])
        remaining = suffix[n][s]
        for e in range(s, len(hyp) + 1):
            if seg[e - s] + suffix[n + 1][e] == remaining:
                s = e
                break
        else:  # pragma: no cover - the DP guarantees a witness
            raise AssertionError("no optimal boundary found")
        starts.append(s)
    return ResegmentationResult(tuple(x + 1 for x in starts), int(total))


def resegment_lines(hyp: Sequence[str], refs: Sequence[Sequence[str]]) -> list[list[str]]:
    return mwer_resegment(hyp, refs).segments(hyp)

"""Independent oracles shared by the unit and acceptance tests."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np


def lengths_grid(max_len: int, max_sentences: int):
    """All per-sentence (src_lens, tgt_lens) with 1..max_len tokens and up to max_sentences sentences."""
    for n in range(1, max_sentences + 1):
        for src in itertools.product(range(1, max_len + 1), repeat=n):
            for tgt in itertools.product(range(1, max_len + 1), repeat=n):
                yield src, tgt


def simulate_wait_k(k, gamma, src_lens, tgt_lens):
    """Step-by-step READ/WRITE simulation, written without the library's delay formula.

    Inside each sentence the translator keeps a read budget that starts at k
    and grows by 1/gamma after every write; it writes whenever the budget is
    covered by what it has read of that sentence, or the sentence is fully read.
    """
    actions, G = [], []
    read = 0
    for xl, yl in zip(src_lens, tgt_lens):
        start = read
        budget = Fraction(k)
        for _ in range(yl):
            while read - start < min(math.floor(budget), xl):
                read += 1
                actions.append("R")
            actions.append("W")
            G.append(read)
            budget += 1 / Fraction(gamma)
        while read - start < xl:
            read += 1
            actions.append("R")
    return actions, G


def mwer_brute_force(hyp, refs):
    """Minimum total edit cost over every placement of len(refs)-1 boundaries."""
    best = None
    n = len(hyp)
    for cuts in itertools.combinations_with_replacement(range(n + 1), len(refs) - 1):
        bounds = (0,) + cuts + (n,)
        cost = sum(edit_distance(hyp[bounds[i]:bounds[i + 1]], r) for i, r in enumerate(refs))
        best = cost if best is None else min(best, cost)
    return best


def edit_distance(a, b):
    d = np.zeros((len(a) + 1, len(b) + 1), dtype=int)
    d[:, 0] = range(len(a) + 1)
    d[0, :] = range(len(b) + 1)
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            d[i, j] = min(d[i - 1, j] + 1, d[i, j - 1] + 1, d[i - 1, j - 1] + (a[i - 1] != b[j - 1]))
    return int(d[-1, -1])


def bleu_reference(hyps, refs, max_n=4):
    """Textbook corpus BLEU with explicit clipped n-gram tables."""
    matches = [0] * max_n
    totals = [0] * max_n
    for h, r in zip(hyps, refs):
        for n in range(1, max_n + 1):
            hc = Counter(tuple(h[i:i + n]) for i in range(len(h) - n + 1))
            rc = Counter(tuple(r[i:i + n]) for i in range(len(r) - n + 1))
            matches[n - 1] += sum(min(c, rc[g]) for g, c in hc.items())
            totals[n - 1] += sum(hc.values())
    c = sum(len(h) for h in hyps)
    r = sum(len(x) for x in refs)
    if c == 0 or min(matches) == 0:
        return 0.0
    bp = 1.0 if c > r else math.exp(1 - r / c)
    return bp * math.exp(sum(math.log(m / t) for m, t in zip(matches, totals)) / max_n)


def literal_encoder_rows(kind, k, G, J, a_n=1):
    """Attended sets straight from the encoder equations (1-based)."""
    rows = {}
    for j in range(1, J + 1):
        if j < a_n or j > G:
            rows[j] = {j}
        elif kind == "bidirectional":
            rows[j] = set(range(a_n, G + 1))
        elif kind == "unidirectional":
            rows[j] = set(range(a_n, j + 1))
        else:
            rows[j] = set(range(a_n, min(max(a_n + k - 1, j), G) + 1))
    return rows


def information_flow_trials(kind, trials, seed=0):
    """Perturb source tokens inside/outside the attended set of a random row.

    Returns (largest change seen at row j for out-of-set perturbations,
    number of trials where an in-set perturbation changed row j).
    """
    from streammt.masks import MaskSpec, encoder_mask
    from streammt.model import ModelConfig, encoder_states, init_params
    from streammt.text import Vocabulary

    vocab = Vocabulary([f"w{i}" for i in range(12)])
    cfg = ModelConfig(vocab, layers=2, model_dim=16, heads=2, ffn_dim=32, encoder_kind=kind)
    params = init_params(cfg, seed)
    rng = np.random.default_rng(seed)
    lo, hi = len(vocab) - 12, len(vocab)
    worst, in_changes = 0.0, 0
    for _ in range(trials):
        J = int(rng.integers(2, 11))
        G = int(rng.integers(1, J + 1))
        a_n = int(rng.integers(1, G + 1))
        k = int(rng.integers(1, J + 1))
        allow = encoder_mask(MaskSpec(kind, k=k, a_n=a_n, G=G), J).allow
        j = int(rng.integers(1, J + 1))
        ids = rng.integers(lo, hi, size=J)
        base = encoder_states(params, cfg, ids, allow)[0, j - 1]
        outside = [p for p in range(1, J + 1) if not allow[j - 1, p - 1]]
        inside = [p for p in range(1, J + 1) if allow[j - 1, p - 1]]
        if outside:
            pert = ids.copy()
            for p in outside:
                pert[p - 1] = lo + (pert[p - 1] - lo + int(rng.integers(1, 12))) % 12
            out = encoder_states(params, cfg, pert, allow)[0, j - 1]
            worst = max(worst, float(np.abs(out - base).max()))
        p = inside[int(rng.integers(len(inside)))]
        pert = ids.copy()
        pert[p - 1] = lo + (pert[p - 1] - lo + int(rng.integers(1, 12))) % 12
        out = encoder_states(params, cfg, pert, allow)[0, j - 1]
        in_changes += bool(np.abs(out - base).max() > 1e-6)
    return worst, in_changes


def gradient_check(seed=1):
    """Largest relative error of analytic vs central-difference gradients on a dim-8 model."""
    from streammt.corpus import build_streaming_samples
    from streammt.model import ModelConfig, init_params, loss_and_gradients, make_batch
    from streammt.tasks import make_documents, task_vocabulary

    cfg = ModelConfig(task_vocabulary("reorder", 6), layers=1, model_dim=8, heads=2, ffn_dim=16,
                      encoder_kind="pbe", label_smoothing=0.1)
    samples = build_streaming_samples(make_documents("reorder", 2, 3, seed, n_words=6), 6)
    batch = make_batch(samples[:4], cfg, 2)
    params = init_params(cfg, seed)
    _, grads = loss_and_gradients(params, cfg, batch)
    h, worst, count = 1e-5, 0.0, 0
    for name, p in params.items():
        for ix in np.ndindex(p.shape):
            old = p[ix]
            p[ix] = old + h
            lp, _ = loss_and_gradients(params, cfg, batch)
            p[ix] = old - h
            lm, _ = loss_and_gradients(params, cfg, batch)
            p[ix] = old
            num, ana = (lp - lm) / (2 * h), grads[name][ix]
            worst = max(worst, abs(ana - num) / max(abs(ana), abs(num), 1e-6))
            count += 1
    return worst, count


# four-pair document with its streaming samples at h=5
FIGURE_DOCUMENT = [
    ("x11 x12".split(), "y11 y12".split()),
    ("x21 x22 x23".split(), "y21 y22".split()),
    ("x31 x32 x33".split(), "y31 y32 y33".split()),
    ("x41 x42".split(), "y41 y42".split()),
]
FIGURE_SOURCE = [
    "<DOC> x11 x12 <BRK>",
    "<DOC> x11 x12 <SEP> x21 x22 x23 <BRK>",
    "<DOC> x11 x12 <SEP> x21 x22 x23 <SEP> x31 x32 x33 <BRK>",
    "<CONT> x31 x32 x33 <SEP> x41 x42 <END>",
]
FIGURE_TARGET = [
    "<DOC> y11 y12 <BRK>",
    "<DOC> y11 y12 <SEP> y21 y22 <BRK>",
    "<DOC> y11 y12 <SEP> y21 y22 <SEP> y31 y32 y33 <BRK>",
    "<CONT> y31 y32 y33 <SEP> y41 y42 <END>",
]


ACCEPTANCE_RESULTS: list[str] = []


def record(number: int, ok: bool, detail: str) -> bool:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_RESULTS.append(line)
    print(line)
    return ok

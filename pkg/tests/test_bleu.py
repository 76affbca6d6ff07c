import math
import random

import pytest

from helpers import bleu_reference
from streammt.bleu import corpus_bleu


def test_identity_scores_one():
    refs = [["a", "b", "c", "d", "e"], ["x", "y", "z", "w"]]
    assert corpus_bleu(refs, refs).score == pytest.approx(1.0)


def test_disjoint_scores_zero():
    assert corpus_bleu([["p", "q", "r", "s"]], [["a", "b", "c", "d"]]).score == 0.0


def test_clipped_unigram_precision():
    s = corpus_bleu([["the", "the", "the"]], [["the", "cat"]])
    assert s.precisions[0] == pytest.approx(1 / 3)
    assert s.precisions[1:] == (0.0, 0.0, 0.0)
    assert s.score == 0.0


def test_matches_reference_on_random_corpora():
    rng = random.Random(0)
    words = "a b c d e".split()
    for _ in range(20):
        n = rng.randint(1, 5)
        refs = [[rng.choice(words) for _ in range(rng.randint(4, 9))] for _ in range(n)]
        hyps = [r[:] for r in refs]
        for h in hyps:
            for _ in range(rng.randint(0, 3)):
                op = rng.random()
                if op < 0.4 and h:
                    h[rng.randrange(len(h))] = rng.choice(words)
                elif op < 0.7 and len(h) > 1:
                    h.pop(rng.randrange(len(h)))
                else:
                    h.insert(rng.randrange(len(h) + 1), rng.choice(words))
        assert corpus_bleu(hyps, refs).score == pytest.approx(bleu_reference(hyps, refs), abs=1e-12)


def test_sentence_order_permutation_invariance():
    rng = random.Random(1)
    refs = [[rng.choice("abcd") for _ in range(6)] for _ in range(6)]
    hyps = [r[:-1] + ["a"] for r in refs]
    perm = list(range(6))
    rng.shuffle(perm)
    assert corpus_bleu(hyps, refs).score == corpus_bleu([hyps[i] for i in perm], [refs[i] for i in perm]).score


def test_brevity_penalty_monotone():
    refs = [list("abcdefgh")] * 3
    prev = None
    for cut in range(8, 0, -1):
        bp = corpus_bleu([r[:cut] for r in refs], refs).brevity_penalty
        if prev is not None:
            assert bp <= prev
        prev = bp
    assert corpus_bleu([r[:4] for r in refs], refs).brevity_penalty == pytest.approx(math.exp(1 - 2))


def test_add_one_smoothing():
    s = corpus_bleu([["a", "b", "x"]], [["a", "b", "c"]], smooth=True)
    assert s.precisions == (3 / 4, 2 / 3, 1 / 2, 1 / 1)
    assert s.score > 0
    assert corpus_bleu([["a", "b", "x"]], [["a", "b", "c"]]).score == 0.0


def test_empty_hypothesis():
    s = corpus_bleu([[]], [["a"]])
    assert s.score == 0.0 and s.brevity_penalty == 0.0


def test_points_in_dict():
    s = corpus_bleu([["a"] * 4], [["a"] * 4])
    assert s.to_dict(points=True)["score"] == pytest.approx(100.0)


def test_length_mismatch():
    with pytest.raises(ValueError):
        corpus_bleu([["a"]], [])

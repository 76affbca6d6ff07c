from fractions import Fraction

import pytest

from helpers import lengths_grid
from streammt.latency import (
    DelayVector, LatencyReport, al, ap, dal, dal_lagged, relative_delays, report_from_lengths, stream_metrics,
    stream_scores,
)
from streammt.policy import WaitKPolicy, schedule_actions
from streammt.text import Segmentation


def dv(g, x, gamma=1):
    return DelayVector(tuple(g), Fraction(gamma), x, len(g))


def test_relative_delays_single_sentence_is_identity():
    G = (2, 3, 3, 4)
    (d,) = relative_delays(G, Segmentation((1,), (1,)), 4)
    assert d.g == G


@pytest.mark.parametrize("G,a,b,src_total,expected", [
    ((1, 2, 3, 4, 5, 6), (1, 4), (1, 4), 6, (1, 2, 3)),
    ((2, 4, 5), (1, 3), (1, 2), 5, (2, 3)),
])
def test_relative_delays_second_sentence(G, a, b, src_total, expected):
    assert relative_delays(G, Segmentation(a, b), src_total)[1].g == expected


@pytest.mark.parametrize("g,x,expected", [((3, 3, 3), 3, Fraction(1)), ((1, 2, 3), 3, Fraction(6, 9)),
                                           ((2, 3), 3, Fraction(5, 6))])
def test_ap(g, x, expected):
    assert ap(DelayVector.sentence(g, x)) == expected


@pytest.mark.parametrize("g,expected", [((1, 2, 3, 4, 5), 1), ((3, 4, 5, 5, 5), 3), ((5, 5, 5, 5, 5), 5)])
def test_al(g, expected):
    assert al(dv(g, 5)) == expected


@pytest.mark.parametrize("g,lagged,expected", [
    ((1, 2, 3), (1, 2, 3), 1),
    ((3, 3, 3), (3, 4, 5), 3),
    ((1, 1, 3), (1, 2, 3), 1),
])
def test_dal_hand_fixtures(g, lagged, expected):
    d = dv(g, 3)
    assert dal_lagged(d) == list(lagged)
    assert dal(d) == expected


def test_dal_scale_multiplies_catch_up_step():
    d = dv((3, 3, 3), 3)
    assert dal_lagged(d, s=Fraction(1, 2)) == [3, Fraction(7, 2), 4]
    # s enters through the lagged delays only
    assert dal(d, s=Fraction(1, 2)) == Fraction(3 + Fraction(5, 2) + 2, 3)


def test_al_wait_k_equals_k():
    for k in range(1, 6):
        for n in range(k, 9):
            g = [min(k + i, n) for i in range(n)]
            assert al(dv(g, n)) == k


def test_lagged_delay_slope():
    for src, tgt in lengths_grid(5, 1):
        for k in range(1, 5):
            G = schedule_actions(WaitKPolicy(k, Fraction(tgt[0], src[0])),
                                 Segmentation.from_lengths(src, tgt), src, tgt).delays()
            d = DelayVector.sentence(G, src[0])
            gp = dal_lagged(d)
            assert all(y - x >= 1 / d.gamma for x, y in zip(gp, gp[1:]))


def test_dal_at_least_al_on_wait_k_grid():
    for k in range(1, 5):
        for src, tgt in lengths_grid(6, 1):
            gamma = Fraction(tgt[0], src[0])
            G = schedule_actions(WaitKPolicy(k, gamma), Segmentation.from_lengths(src, tgt), src, tgt).delays()
            d = DelayVector.sentence(G, src[0])
            assert dal(d) >= al(d) >= 0


def test_two_sentence_wait_1_stream_al():
    seg = Segmentation.from_lengths([2, 2], [2, 2])
    G = schedule_actions(WaitKPolicy(1), seg, [2, 2], [2, 2]).delays()
    rep = stream_metrics(G, seg)
    assert [row["AL"] for row in rep.per_sentence] == [1.0, 1.0]


def test_stalled_stream_carry():
    # sentence 2's first token is written before any of its source is read
    a, b = (1, 4), (1, 4)
    G = [3, 3, 3, 3, 5, 6]
    scores = stream_scores(G, a, b, [3, 3], [3, 3])
    g1p = dal_lagged(dv((3, 3, 3), 3))
    d2 = dv((0, 2, 3), 3)
    carry = g1p[-1] + 1 - 3
    assert carry == 3
    assert scores[1]["DAL"] == dal(d2, carry_in=carry)
    assert dal_lagged(d2, carry_in=carry)[0] >= g1p[-1] + 1 - 3


def test_stream_metrics_one_sentence_equals_sentence_level():
    G = [2, 3, 4, 4]
    rep = stream_metrics(G, Segmentation((1,), (1,)), src_total=4)
    d = DelayVector.sentence(G, 4)
    assert rep.per_sentence[0] == {"AP": float(ap(d)), "AL": float(al(d)), "DAL": float(dal(d))}
    assert rep.config["mode"] == "sentence"


def _consistency(k, src, tgt):
    seg = Segmentation.from_lengths(src, tgt)
    gammas = [Fraction(y, x) for x, y in zip(src, tgt)]
    G = []
    for n, (x, y) in enumerate(zip(src, tgt)):
        # each sentence scheduled with its own gamma, then shifted into the stream
        g = schedule_actions(WaitKPolicy(k, gammas[n]), Segmentation((1,), (1,)), [x], [y]).delays()
        G += [v + seg.a[n] - 1 for v in g]
    stream = stream_scores(G, seg.a, seg.b, src, tgt, gammas)
    carry = None
    for n, (x, y) in enumerate(zip(src, tgt)):
        g = [v - seg.a[n] + 1 for v in G[seg.b[n] - 1: seg.b[n] - 1 + y]]
        d = DelayVector(tuple(g), gammas[n], x, y)
        assert stream[n]["AP"] == ap(d) and stream[n]["AL"] == al(d)
        if carry is None or carry <= d.g[0]:
            assert stream[n]["DAL"] == dal(d)
        else:
            assert stream[n]["DAL"] >= dal(d)
        carry = dal_lagged(d, carry_in=carry)[-1] + 1 / gammas[n] - x


def test_sentence_stream_consistency_grid():
    for k in range(1, 5):
        for src, tgt in lengths_grid(4, 2):
            _consistency(k, src, tgt)


def test_dal_carry_can_exceed_sentence_level_value():
    # one target token for three source tokens leaves a carry of |x|/|y| = 3
    # behind the sentence end, which dominates a one-token next sentence
    src, tgt = [3, 1], [1, 1]
    seg = Segmentation.from_lengths(src, tgt)
    G = [3, 4]
    stream = stream_scores(G, seg.a, seg.b, src, tgt)
    assert dal(dv((1,), 1)) == 1
    assert stream[1]["DAL"] == 3


def test_empty_target_sentence_is_skipped():
    rep = report_from_lengths([1, 2], (1, 2, 3), (1, 3, 3), [1, 1, 1], [2, 0, 0])
    assert rep.per_sentence[1] is None and rep.per_sentence[2] is None
    assert rep.aggregate["AL"] == rep.per_sentence[0]["AL"]


def test_weighted_aggregation():
    rep = report_from_lengths([1, 1, 1, 2], (1, 2), (1, 4), [1, 1], [3, 1], aggregation="weighted")
    per = rep.per_sentence
    assert rep.aggregate["AP"] == pytest.approx((3 * per[0]["AP"] + per[1]["AP"]) / 4)
    with pytest.raises(ValueError):
        report_from_lengths([1], (1,), (1,), [1], [1], aggregation="median")


def test_report_serialization():
    rep = report_from_lengths([1, 2, 2], (1,), (1,), [2], [3])
    assert LatencyReport.from_dict(rep.to_dict()) == rep
    lines = rep.to_csv().splitlines()
    assert lines[0] == "n,AP,AL,DAL" and lines[-1].startswith("aggregate,")


def test_empty_stream_rejected():
    with pytest.raises(ValueError):
        stream_metrics([], Segmentation((1,), (1,)))

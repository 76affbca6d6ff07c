import numpy as np
import pytest

from helpers import literal_encoder_rows
from streammt import masks as M
from streammt.masks import MaskSpec, decoder_mask, encoder_mask, encoder_mask_streaming


@pytest.mark.parametrize("kind,G,expected", [
    ("bidirectional", 5, set(range(1, 6))),
    ("unidirectional", 5, {1, 2, 3}),
    ("pbe", 5, {1, 2, 3, 4}),
])
def test_encoder_row_examples(kind, G, expected):
    assert encoder_mask(MaskSpec(kind, k=4, G=G), 8).allowed(3) == expected


def test_literal_definition_small_grid():
    for kind in M.KINDS:
        for J in range(1, 8):
            for G in range(1, J + 1):
                for k in range(1, 9):
                    for a_n in range(1, G + 1):
                        mask = encoder_mask(MaskSpec(kind, k=k, a_n=a_n, G=G), J)
                        rows = literal_encoder_rows(kind, k, G, J, a_n)
                        assert all(mask.allowed(j) == rows[j] for j in rows)


def test_streaming_window_examples():
    bi = encoder_mask_streaming(MaskSpec("bidirectional"), 10, 4)
    assert all(bi.allowed(j) == {7, 8, 9, 10} for j in range(7, 11))
    pbe = encoder_mask_streaming(MaskSpec("pbe", k=2), 10, 4)
    assert pbe.allowed(7) == {7, 8}
    assert encoder_mask_streaming(MaskSpec("bidirectional"), 3, 10).allowed(1) == {1, 2, 3}


def test_decoder_mask_examples():
    assert decoder_mask(1, 1, 3).self_allow == range(1, 2)
    dm = decoder_mask(4, 1, 5)
    assert set(dm.self_allow) == {1, 2, 3, 4} and set(dm.cross_allow) == {1, 2, 3, 4, 5}
    assert set(decoder_mask(12, 1, 20, H_i=5).self_allow) == set(range(7, 13))
    with pytest.raises(ValueError):
        decoder_mask(0, 1, 1)


def test_pbe_rows_beyond_k_do_not_depend_on_read_position():
    # rows j >= k of a pbe mask only look backwards, whatever G is
    k, J = 3, 9
    full = encoder_mask(MaskSpec("pbe", k=k, G=J), J)
    for G in range(k, J + 1):
        part = encoder_mask(MaskSpec("pbe", k=k, G=G), J)
        for j in range(k, G + 1):
            assert part.allowed(j) == full.allowed(j)


def test_bidirectional_needs_read_position():
    with pytest.raises(ValueError):
        encoder_mask(MaskSpec("bidirectional"), 4)
    with pytest.raises(ValueError):
        encoder_mask(MaskSpec("pbe", G=6), 4)
    with pytest.raises(ValueError):
        encoder_mask_streaming(MaskSpec("pbe"), 3, 0)
    with pytest.raises(ValueError):
        M.canonical_kind("sideways")


def test_aliases_and_rendering():
    m = encoder_mask(MaskSpec("unidir", G=3), 3)
    assert m.render() == "1 0 0\n1 1 0\n1 1 1"
    add = m.additive()
    assert add[0, 1] == -np.inf and add[1, 0] == 0.0


def test_training_and_cross_masks():
    assert np.array_equal(M.training_encoder_mask("pbe", 1, 5), M.causal_mask(5))
    cross = M.cross_mask([2, 2, 4], 5)
    assert cross.sum(axis=1).tolist() == [2, 2, 4]

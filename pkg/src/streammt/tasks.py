"""Seeded synthetic translation and segmentation tasks.

copy        target sentence equals the source sentence.
reorder     every source word is substituted through a fixed permutation and
            adjacent pairs are swapped: (x1 x2)(x3 x4) -> (f(x2) f(x1))(f(x4) f(x3)).
agreement   word-by-word substitution, except that the first target word also
            encodes the parity of the previous source sentence's last word; the
            first sentence of a document uses parity 0.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .corpus import DocumentCorpus
from .text import Vocabulary

TASKS = ("copy", "reorder", "agreement")


def source_words(n: int) -> list[str]:
    return [f"w{i}" for i in range(n)]


def target_words(n: int) -> list[str]:
    return [f"v{i}" for i in range(n)]


def task_vocabulary(task: str, n_words: int = 12) -> Vocabulary:
    if task == "copy":
        return Vocabulary(source_words(n_words))
    return Vocabulary(source_words(n_words) + target_words(n_words))


def _perm(n_words: int) -> np.ndarray:
    # fixed across seeds so that every run solves the same task
    return np.random.default_rng(12345).permutation(n_words)


def translate(task: str, sentence: Sequence[str], previous: Sequence[str] | None, n_words: int = 12) -> list[str]:
    ids = [int(w[1:]) for w in sentence]
    if task == "copy":
        return list(sentence)
    if task == "reorder":
        f = _perm(n_words)
        out = []
        for j in range(0, len(ids) - 1, 2):
            out += [f[ids[j + 1]], f[ids[j]]]
        if len(ids) % 2:
            out.append(f[ids[-1]])
        return [f"v{i}" for i in out]
    if task == "agreement":
        parity = 0 if not previous else int(previous[-1][1:]) % 2
        out = list(ids)
        out[0] = (ids[0] + parity * (n_words // 2)) % n_words
        return [f"v{i}" for i in out]
    raise ValueError(f"unknown task {task!r}")


def make_documents(
    task: str,
    n_docs: int,
    sentences_per_doc: int,
    seed: int,
    n_words: int = 12,
    min_len: int = 3,
    max_len: int = 6,
) -> DocumentCorpus:
    rng = np.random.default_rng(seed)
    words = source_words(n_words)
    docs = []
    for _ in range(n_docs):
        doc, prev = [], None
        for _ in range(sentences_per_doc):
            length = int(rng.integers(min_len, max_len + 1))
            x = [words[i] for i in rng.integers(0, n_words, size=length)]
            doc.append((x, translate(task, x, prev, n_words)))
            prev = x
        docs.append(doc)
    return DocumentCorpus(docs)


# -- segmentation corpora -----------------------------------------------------

def terminated_sentences(n: int, seed: int, n_words: int = 10) -> list[list[str]]:
    """Sentences that always end with the unique terminator ``eos``."""
    rng = np.random.default_rng(seed)
    return [[f"w{i}" for i in rng.integers(0, n_words, size=int(rng.integers(2, 7)))] + ["eos"]
            for _ in range(n)]


def cue_initial_sentences(n: int, seed: int, n_words: int = 10, n_cues: int = 3) -> list[list[str]]:
    """Sentences whose end is only visible from the next sentence's first word.

    Every sentence starts with one of ``n_cues`` cue words (``c0``...) that
    never occur elsewhere; all other words are drawn from a shared pool, so
    the last word of a sentence looks like any inner word.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        body = [f"w{i}" for i in rng.integers(0, n_words, size=int(rng.integers(2, 7)))]
        out.append([f"c{int(rng.integers(0, n_cues))}"] + body)
    return out

"""Multi-path wait-k training of the toy model."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from .autograd import Adam, Tensor
from .model import ModelConfig, init_params, loss_tensor, make_batch

logger = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


def train_multi_k(
    corpus: Sequence,
    config: ModelConfig,
    k_range: tuple[int, int] = (1, 32),
    steps: int = 500,
    seed: int = 0,
    batch_size: int = 32,
    lr: float = 3e-3,
    warmup: int = 100,
    log: list | None = None,
    init: dict | None = None,
) -> dict[str, np.ndarray]:
    """Adam training with one ``k ~ U[k_range]`` drawn per batch.

    ``corpus`` holds streaming samples (anything with ``source``/``target``
    token tuples). Per-step losses are appended to ``log`` when given.
    """
    if not corpus:
        raise ValueError("empty training corpus")
    k_lo, k_hi = k_range
    if not 1 <= k_lo <= k_hi:
        raise ValueError(f"invalid k range {k_range}")
    rng = np.random.default_rng(seed)
    params = init_params(config, seed) if init is None else {k: v.copy() for k, v in init.items()}
    P = {k: Tensor(v, requires_grad=True) for k, v in params.items()}
    opt = Adam(P, lr=lr, warmup=warmup)
    n = len(corpus)
    for step in range(1, steps + 1):
        k = int(rng.integers(k_lo, k_hi + 1))
        idx = rng.choice(n, size=min(batch_size, n), replace=False)
        batch = make_batch([corpus[i] for i in idx], config, k)
        opt.zero_grad()
        loss = loss_tensor(P, config, batch)
        value = float(loss.data)
        if not np.isfinite(value):
            raise TrainingDiverged(f"loss became {value} at step {step} (k={k}, lr={opt.rate(step):.3g})")
        loss.backward()
        opt.step()
        if log is not None:
            log.append(value)
        if step % 100 == 0:
            logger.info("step %d k=%d loss %.4f", step, k, value)
    return {k: t.data.copy() for k, t in P.items()}

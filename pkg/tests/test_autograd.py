import numpy as np
import pytest

from streammt.autograd import Adam, Tensor, layer_norm, masked_softmax, smoothed_cross_entropy, take


def numeric_grad(f, x, h=1e-6):
    g = np.zeros_like(x)
    for ix in np.ndindex(x.shape):
        old = x[ix]
        x[ix] = old + h
        hi = f()
        x[ix] = old - h
        lo = f()
        x[ix] = old
        g[ix] = (hi - lo) / (2 * h)
    return g


def check(build, *arrays, tol=1e-6):
    """Compare backward() with central differences for a scalar-valued graph."""
    tensors = [Tensor(a, requires_grad=True) for a in arrays]
    out = build(*tensors)
    out.backward()
    for t in tensors:
        num = numeric_grad(lambda: float(build(*[Tensor(x.data) for x in tensors]).data), t.data)
        np.testing.assert_allclose(t.grad, num, atol=tol, rtol=tol)


rng = np.random.default_rng(0)


def test_elementwise_and_broadcasting():
    a, b = rng.normal(size=(3, 4)), rng.normal(size=(4,))
    check(lambda x, y: ((x * y + y - x).tanh() * x).sum(), a, b)
    check(lambda x, y: (x - y).relu().mean(), a, b)


def test_matmul_batched_and_reshape():
    a, b = rng.normal(size=(2, 3, 4)), rng.normal(size=(4, 5))
    check(lambda x, y: (x @ y).reshape(6, 5).transpose(1, 0).sum(axis=0).sum(), a, b)


def test_take_accumulates_repeated_rows():
    w = rng.normal(size=(5, 3))
    ids = np.array([[0, 2, 2], [4, 0, 1]])
    check(lambda x: (take(x, ids) * take(x, ids)).sum(), w)


def test_layer_norm():
    x, g, b = rng.normal(size=(2, 3, 6)), rng.normal(size=6), rng.normal(size=6)
    weights = rng.normal(size=(2, 3, 6))
    check(lambda a, c, d: (layer_norm(a, c, d) * Tensor(weights)).sum(), x, g, b)


def test_masked_softmax_rows_sum_to_one_and_gradients():
    s = rng.normal(size=(2, 4, 4))
    allow = np.tril(np.ones((4, 4), dtype=bool))[None].repeat(2, axis=0)
    p = masked_softmax(Tensor(s), allow).data
    np.testing.assert_allclose(p.sum(-1), 1.0, atol=1e-12)
    assert np.all(p[~allow] == 0)
    weights = rng.normal(size=s.shape)
    check(lambda x: (masked_softmax(x, allow) * Tensor(weights)).sum(), s)


def test_smoothed_cross_entropy():
    logits = rng.normal(size=(5, 6))
    targets = np.array([0, 3, 5, 1, 2])
    weights = np.array([1.0, 1.0, 0.0, 1.0, 1.0])
    check(lambda x: smoothed_cross_entropy(x, targets, weights, 0.1), logits)


def test_cross_entropy_uniform_logits_is_log_v():
    V = 7
    loss = smoothed_cross_entropy(Tensor(np.zeros((3, V))), np.array([1, 2, 3]), np.ones(3), 0.0)
    assert float(loss.data) == pytest.approx(np.log(V))


def test_cross_entropy_no_weight_gives_zero_loss_and_gradient():
    x = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    loss = smoothed_cross_entropy(x, np.array([0, 1, 2]), np.zeros(3), 0.1)
    loss.backward()
    assert float(loss.data) == 0.0
    assert not np.any(x.grad)


def test_adam_schedule_and_descent():
    p = {"w": Tensor(np.array([3.0, -2.0]), requires_grad=True)}
    opt = Adam(p, lr=0.1, warmup=10, warmup_init_lr=0.0)
    assert opt.rate(5) == pytest.approx(0.05)
    assert opt.rate(10) == pytest.approx(0.1)
    assert opt.rate(40) == pytest.approx(0.1 * np.sqrt(10 / 40))
    for _ in range(300):
        opt.zero_grad()
        (p["w"] * p["w"]).sum().backward()
        opt.step()
    assert np.abs(p["w"].data).max() < 0.1

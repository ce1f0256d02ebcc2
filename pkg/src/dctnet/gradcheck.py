"""Central finite-difference gradient checks for the numpy layers."""

from __future__ import annotations

import numpy as np

from . import nn


def numerical_gradient(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences of scalar ``f()`` w.r.t. ``x``, perturbed in place."""
    grad = np.zeros_like(x, dtype=np.float64)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + h
        up = f()
        x[idx] = old - h
        down = f()
        x[idx] = old
        grad[idx] = (up - down) / (2 * h)
    return grad


def relative_error(analytic, numeric) -> float:
    analytic, numeric = np.asarray(analytic), np.asarray(numeric)
    denom = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    return 0.0 if denom == 0 else float(np.linalg.norm(analytic - numeric) / denom)


def check_layers(rng: np.random.Generator) -> dict[str, float]:
    """Worst relative error per layer type on one random small instance.

    Each layer is probed through a random linear read-out ``sum(out * R)``
    so every output element contributes to the checked gradient.
    """
    errors = {}
    n, h, w, c, f = 2, int(rng.integers(3, 7)), int(rng.integers(3, 7)), int(rng.integers(1, 4)), 3

    x = rng.normal(size=(n, h, w, c))
    W = rng.normal(size=(3, 3, c, f))
    b = rng.normal(size=f)
    out, cache = nn.conv3x3_forward(x, W, b)
    R = rng.normal(size=out.shape)
    dx, dW, db = nn.conv3x3_backward(R, W, cache)

    def conv_loss():
        return float(np.sum(nn.conv3x3_forward(x, W, b)[0] * R))

    errors["conv"] = max(relative_error(dx, numerical_gradient(conv_loss, x)),
                         relative_error(dW, numerical_gradient(conv_loss, W)),
                         relative_error(db, numerical_gradient(conv_loss, b)))

    x = rng.normal(size=(n, h, w, c))
    out, cache = nn.maxpool_forward(x)
    R = rng.normal(size=out.shape)
    errors["pool"] = relative_error(
        nn.maxpool_backward(R, cache),
        numerical_gradient(lambda: float(np.sum(nn.maxpool_forward(x)[0] * R)), x))

    x = rng.normal(size=(n, 7))
    R = rng.normal(size=x.shape)
    errors["relu"] = relative_error((x > 0) * R,
                                    numerical_gradient(lambda: float(np.sum(np.maximum(x, 0) * R)), x))

    mask = nn.dropout_mask(x.shape, 0.4, rng, np.dtype(np.float64))
    errors["dropout"] = relative_error(mask * R, numerical_gradient(lambda: float(np.sum(x * mask * R)), x))

    x = rng.normal(size=(n, 6))
    W = rng.normal(size=(6, 4))
    b = rng.normal(size=4)
    R = rng.normal(size=(n, 4))

    def fc_loss():
        return float(np.sum((x @ W + b) * R))

    errors["fc"] = max(relative_error(R @ W.T, numerical_gradient(fc_loss, x)),
                       relative_error(x.T @ R, numerical_gradient(fc_loss, W)),
                       relative_error(R.sum(axis=0), numerical_gradient(fc_loss, b)))

    logits = rng.normal(size=(4, 5))
    labels = rng.integers(0, 5, 4)
    g = nn.softmax(logits)
    g[np.arange(4), labels] -= 1
    errors["softmax_xent"] = relative_error(
        g / 4, numerical_gradient(lambda: nn.cross_entropy(logits, labels), logits))
    return errors


def check_network(rng: np.random.Generator, dropout_p: float = 0.3) -> float:
    """Worst relative error over all parameters of a tiny two-conv network."""
    config = nn.NetworkConfig(input_shape=(8, 8, 2), blocks=((3,), (4,)), hidden=(5,),
                              num_classes=3)
    params = nn.init_params(config, int(rng.integers(2**31)), dtype=np.float64)
    for t in params.tensors.values():
        t += rng.normal(scale=0.1, size=t.shape)
    images = rng.uniform(0, 255, (3, 8, 8, 2))
    labels = rng.integers(0, 3, 3)
    mask_seed = int(rng.integers(2**31))

    def run():
        return nn.forward(params, images, dropout_p, training=True,
                          rng=np.random.default_rng(mask_seed))

    logits, cache = run()
    grads = nn.backward(params, cache, labels)
    worst = 0.0
    for name, t in params.tensors.items():
        num = numerical_gradient(lambda: nn.cross_entropy(run()[0], labels), t)
        worst = max(worst, relative_error(grads[name], num))
    return worst

"""A small VGG-style classifier in plain numpy.

Layout is NHWC throughout. The network is a stack of 3x3 same-padded
convolutions with ReLU, grouped into blocks that each end in 2x2/stride-2
max pooling, followed by fully connected hidden layers (ReLU + dropout)
and a linear output layer. Inputs are raw 0-255 images; normalization
happens inside :func:`forward`.

Parameters live in a plain ``dict[str, ndarray]``; :class:`ModelParams`
pairs that dict with the :class:`NetworkConfig` that produced it.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import NumericalError
from .rng import stream


@dataclass(frozen=True)
class NetworkConfig:
    input_shape: tuple[int, int, int] = (32, 32, 3)  # H, W, C
    # One tuple of filter counts per block; every block ends in a 2x2 pool.
    blocks: tuple[tuple[int, ...], ...] = ((32, 32), (64, 64))
    hidden: tuple[int, ...] = (256,)
    num_classes: int = 10
    input_mean: float = 127.5
    input_std: float = 63.75

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(v) for v in self.input_shape))
        object.__setattr__(self, "blocks", tuple(tuple(int(f) for f in b) for b in self.blocks))
        object.__setattr__(self, "hidden", tuple(int(v) for v in self.hidden))
        h, w, c = self.input_shape
        if min(h, w, c) < 1 or self.num_classes < 1:
            raise ValueError(f"invalid network geometry: {self}")
        for _ in self.blocks:
            h, w = h // 2, w // 2
            if h < 1 or w < 1:
                raise ValueError(f"input {self.input_shape} too small for {len(self.blocks)} pooling stages")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["input_shape"] = list(self.input_shape)
        d["blocks"] = [list(b) for b in self.blocks]
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        return cls(**d)

    def layers(self) -> list[tuple]:
        """Layer plan as ``(op, name)`` pairs."""
        plan, i = [], 0
        for block in self.blocks:
            for _ in block:
                i += 1
                plan += [("conv", f"conv{i}"), ("relu", None)]
            plan.append(("pool", None))
        plan.append(("flatten", None))
        for j, _ in enumerate(self.hidden, start=1):
            plan += [("fc", f"fc{j}"), ("relu", None), ("dropout", None)]
        plan.append(("fc", "out"))
        return plan

    def shapes(self) -> dict[str, tuple]:
        h, w, c = self.input_shape
        shapes, i = {}, 0
        for block in self.blocks:
            for filters in block:
                i += 1
                shapes[f"conv{i}.W"] = (3, 3, c, filters)
                shapes[f"conv{i}.b"] = (filters,)
                c = filters
            h, w = h // 2, w // 2
        d = h * w * c
        for j, units in enumerate(self.hidden, start=1):
            shapes[f"fc{j}.W"] = (d, units)
            shapes[f"fc{j}.b"] = (units,)
            d = units
        shapes["out.W"] = (d, self.num_classes)
        shapes["out.b"] = (self.num_classes,)
        return shapes


@dataclass
class ModelParams:
    config: NetworkConfig
    tensors: dict[str, np.ndarray] = field(default_factory=dict)
    version: int = 1


def init_params(config: NetworkConfig, seed: int = 0, dtype=np.float32) -> ModelParams:
    """He-normal weights, zero biases."""
    rng = stream(seed, "init")
    tensors = {}
    for name, shape in config.shapes().items():
        if name.endswith(".b"):
            tensors[name] = np.zeros(shape, dtype=dtype)
        else:
            fan_in = int(np.prod(shape[:-1]))
            tensors[name] = (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)
    return ModelParams(config, tensors)


# -- layers ----------------------------------------------------------------

def conv3x3_forward(x, W, b):
    n, h, w, c = x.shape
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    # (N, H, W, C, 3, 3) -> (N*H*W, 3*3*C) in HWIO order
    cols = sliding_window_view(xp, (3, 3), axis=(1, 2)).transpose(0, 1, 2, 4, 5, 3)
    cols = cols.reshape(n * h * w, 9 * c)
    out = cols @ W.reshape(9 * c, -1) + b
    return out.reshape(n, h, w, -1), (cols, x.shape)


def conv3x3_backward(dout, W, cache):
    cols, (n, h, w, c) = cache
    d2 = dout.reshape(n * h * w, -1)
    dW = (cols.T @ d2).reshape(W.shape)
    db = d2.sum(axis=0)
    dcols = (d2 @ W.reshape(9 * c, -1).T).reshape(n, h, w, 3, 3, c)
    dxp = np.zeros((n, h + 2, w + 2, c), dtype=dout.dtype)
    for i in range(3):
        for j in range(3):
            dxp[:, i:i + h, j:j + w] += dcols[:, :, :, i, j]
    return dxp[:, 1:-1, 1:-1], dW, db


def maxpool_forward(x):
    n, h, w, c = x.shape
    h2, w2 = h // 2, w // 2
    win = x[:, :2 * h2, :2 * w2].reshape(n, h2, 2, w2, 2, c).transpose(0, 1, 3, 5, 2, 4)
    win = win.reshape(n, h2, w2, c, 4)
    idx = win.argmax(axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return out, (idx, x.shape)


def maxpool_backward(dout, cache):
    idx, (n, h, w, c) = cache
    h2, w2 = h // 2, w // 2
    dwin = np.zeros((n, h2, w2, c, 4), dtype=dout.dtype)
    np.put_along_axis(dwin, idx[..., None], dout[..., None], axis=-1)
    dwin = dwin.reshape(n, h2, w2, c, 2, 2).transpose(0, 1, 4, 2, 5, 3)
    dx = np.zeros((n, h, w, c), dtype=dout.dtype)
    dx[:, :2 * h2, :2 * w2] = dwin.reshape(n, 2 * h2, 2 * w2, c)
    return dx


def dropout_mask(shape, p: float, rng: np.random.Generator, dtype) -> np.ndarray:
    """Inverted-dropout mask: kept units are scaled by ``1 / (1 - p)``."""
    keep = rng.random(shape) >= p
    return keep.astype(dtype) / dtype.type(1.0 - p)


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits, labels) -> float:
    """Mean cross-entropy of integer ``labels`` under ``logits``."""
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-logp[np.arange(len(labels)), labels].mean())


# -- network ---------------------------------------------------------------

def _tensors(params):
    return params.tensors if isinstance(params, ModelParams) else params


def forward(params: ModelParams, images, dropout_p: float = 0.0, training: bool = False,
            rng: np.random.Generator | None = None):
    """Run the network on a batch of ``(N, H, W, C)`` 0-255 images.

    Dropout is applied only when ``training`` and ``dropout_p > 0``.
    Returns ``(logits, cache)``; the cache feeds :func:`backward`.
    """
    config, t = params.config, params.tensors
    dtype = t["out.W"].dtype
    images = np.asarray(images)
    if images.ndim != 4 or images.shape[1:] != config.input_shape:
        raise ValueError(f"batch shape {images.shape} does not match input {config.input_shape}")
    if not 0.0 <= dropout_p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {dropout_p}")
    use_dropout = training and dropout_p > 0
    if use_dropout and rng is None:
        raise ValueError("training-mode dropout needs an rng")

    x = ((images.astype(dtype) - dtype.type(config.input_mean)) / dtype.type(config.input_std))
    caches = []
    for op, name in config.layers():
        if op == "conv":
            x, c = conv3x3_forward(x, t[name + ".W"], t[name + ".b"])
        elif op == "relu":
            c = x > 0
            x = x * c
        elif op == "pool":
            x, c = maxpool_forward(x)
        elif op == "flatten":
            c = x.shape
            x = x.reshape(x.shape[0], -1)
        elif op == "fc":
            c = x
            x = x @ t[name + ".W"] + t[name + ".b"]
        elif op == "dropout":
            c = dropout_mask(x.shape, dropout_p, rng, dtype) if use_dropout else None
            if c is not None:
                x = x * c
        caches.append(c)
    if not np.all(np.isfinite(x)):
        raise NumericalError("non-finite logits in forward pass")
    return x, {"logits": x, "layers": caches}


def backward(params: ModelParams, cache: dict, labels) -> dict[str, np.ndarray]:
    """Gradient of the batch-mean cross-entropy w.r.t. every parameter."""
    config, t = params.config, params.tensors
    logits = cache["logits"]
    labels = np.asarray(labels)
    if labels.shape != (logits.shape[0],):
        raise ValueError(f"expected {logits.shape[0]} labels, got shape {labels.shape}")
    if labels.min() < 0 or labels.max() >= config.num_classes:
        raise ValueError(f"labels must lie in [0, {config.num_classes})")

    n = logits.shape[0]
    g = softmax(logits)
    g[np.arange(n), labels] -= 1
    g /= n

    grads = {}
    for (op, name), c in zip(reversed(config.layers()), reversed(cache["layers"])):
        if op == "fc":
            grads[name + ".W"] = c.T @ g
            grads[name + ".b"] = g.sum(axis=0)
            g = g @ t[name + ".W"].T
        elif op == "dropout":
            if c is not None:
                g = g * c
        elif op == "relu":
            g = g * c
        elif op == "flatten":
            g = g.reshape(c)
        elif op == "pool":
            g = maxpool_backward(g, c)
        elif op == "conv":
            g, grads[name + ".W"], grads[name + ".b"] = conv3x3_backward(g, t[name + ".W"], c)
    return {k: grads[k] for k in t}


def sgd_step(params: dict, grads: dict, velocity: dict | None, lr: float, momentum: float):
    """Momentum SGD: ``v' = momentum * v - lr * g``, ``p' = p + v'``.

    Returns new ``(params, velocity)`` dicts; inputs are not modified.
    """
    params = _tensors(params)
    new_p, new_v = {}, {}
    for k, p in params.items():
        v = velocity[k] if velocity is not None else np.zeros_like(p)
        v2 = momentum * v - lr * grads[k]
        p2 = p + v2
        if not np.all(np.isfinite(p2)):
            raise NumericalError(f"non-finite update for {k}")
        new_p[k], new_v[k] = p2.astype(p.dtype, copy=False), v2.astype(p.dtype, copy=False)
    return new_p, new_v


def predict(params: ModelParams, images, batch_size: int = 256) -> np.ndarray:
    """Inference-mode top-1 class for every image."""
    images = np.asarray(images)
    out = np.empty(len(images), dtype=np.int64)
    for i in range(0, len(images), batch_size):
        logits, _ = forward(params, images[i:i + batch_size])
        out[i:i + batch_size] = logits.argmax(axis=1)
    return out

"""Minibatch training loop.

Per epoch: shuffle, optionally push each minibatch through the DCT
threshold augmentation, run forward/backward, take a momentum SGD step, and
feed the minibatch accuracies to the adaptive dropout schedule. Everything
random is drawn from :func:`dctnet.rng.stream` keyed on the run seed, so a
run is reproducible bit for bit on a single thread.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import dropout as sched
from .errors import DataError, NumericalError
from .nn import ModelParams, NetworkConfig, backward, cross_entropy, forward, init_params, sgd_step
from .rng import stream

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    momentum: float = 0.9
    batch_size: int = 128
    epochs: int = 40
    seed: int = 0
    augment: bool = True
    threshold_low: int = 0
    threshold_high: int = 50
    adaptive_dropout: bool = True
    fixed_dropout: float = 0.5  # used when adaptive_dropout is off

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must be in [0, 1)")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be positive")
        if not 0 <= self.fixed_dropout < 1:
            raise ValueError("fixed_dropout must be in [0, 1)")
        if not 0 <= self.threshold_low <= self.threshold_high:
            raise ValueError("need 0 <= threshold_low <= threshold_high")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainingLog:
    epochs: list[dict] = field(default_factory=list)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.epochs)


def train(images: np.ndarray, labels: np.ndarray, net_config: NetworkConfig,
          train_config: TrainConfig, on_epoch=None) -> tuple[ModelParams, TrainingLog]:
    """Train a fresh network on ``images`` (N, H, W, C, 0-255) and ``labels``.

    ``on_epoch`` is called with each epoch's log record as it is produced.
    """
    images = np.asarray(images)
    labels = np.asarray(labels, dtype=np.int64)
    if len(images) == 0:
        raise DataError("empty training set")
    if len(labels) != len(images):
        raise DataError(f"{len(images)} images but {len(labels)} labels")
    if labels.min() < 0 or labels.max() >= net_config.num_classes:
        raise DataError(f"labels must lie in [0, {net_config.num_classes})")
    if images.shape[1:] != net_config.input_shape:
        raise DataError(f"images of shape {images.shape[1:]} do not match network input "
                        f"{net_config.input_shape}")

    # imported here so evaluation-only code paths never load augmentation
    from .augment import ThresholdDistribution, augment_batch

    cfg = train_config
    seed = cfg.seed
    params = init_params(net_config, seed)
    tensors, velocity = params.tensors, None
    dist = ThresholdDistribution(cfg.threshold_low, cfg.threshold_high)
    state = sched.DropoutState(total_epochs=cfg.epochs)
    history = TrainingLog()
    n = len(images)

    for epoch in range(1, cfg.epochs + 1):
        p = sched.current_p(state) if cfg.adaptive_dropout else cfg.fixed_dropout
        order = stream(seed, "shuffle", epoch).permutation(n)
        losses, accs, sizes = [], [], []
        for b, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            x = images[idx]
            if cfg.augment:
                x, _ = augment_batch(x, seed, dist, key=("augment", epoch), ids=idx)
            y = labels[idx]
            model = ModelParams(net_config, tensors)
            logits, cache = forward(model, x, p, training=True, rng=stream(seed, "dropout", epoch, b))
            loss = cross_entropy(logits, y)
            if not np.isfinite(loss):
                raise NumericalError(f"loss diverged at epoch {epoch}, minibatch {b} (loss={loss})")
            grads = backward(model, cache, y)
            tensors, velocity = sgd_step(tensors, grads, velocity, cfg.lr, cfg.momentum)
            losses.append(loss)
            accs.append(float(np.mean(logits.argmax(axis=1) == y)))
            sizes.append(len(idx))

        if cfg.adaptive_dropout:
            state = sched.observe_epoch(state, accs)
        record = {
            "epoch": epoch,
            "loss": float(np.average(losses, weights=sizes)),
            "accuracy": float(np.average(accs, weights=sizes)),
            "min_minibatch_accuracy": min(accs),
            "p": p,
            "triggered": state.triggered,
            "trigger_epoch": state.trigger_epoch,
        }
        history.epochs.append(record)
        log.info("epoch %d loss %.4f acc %.4f p %.1f", epoch, record["loss"], record["accuracy"], p)
        if on_epoch is not None:
            on_epoch(record)

    return ModelParams(net_config, tensors), history

"""Random DCT-coefficient thresholding, the training-time augmentation.

Each image draws an integer threshold ``X ~ U[low, high]``; every DCT
coefficient whose magnitude lies strictly under ``X`` is zeroed, the plane
is reconstructed and clamped back to the pixel range. All channels of one
image share the same ``X``. Coefficients are computed on the 0-255 pixel
scale, which is what gives the 0-50 threshold range its meaning.

Nothing in the inference path imports this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dct import dct1, fdct2, idct1, idct2
from .rng import stream


@dataclass(frozen=True)
class ThresholdDistribution:
    low: int = 0
    high: int = 50  # inclusive

    def __post_init__(self):
        if not (0 <= self.low <= self.high):
            raise ValueError(f"need 0 <= low <= high, got low={self.low}, high={self.high}")


@dataclass(frozen=True)
class AugmentConfig:
    distribution: ThresholdDistribution = field(default_factory=ThresholdDistribution)
    clamp_range: tuple[float, float] = (0.0, 255.0)
    rng_seed: int = 0

    def __post_init__(self):
        lo, hi = self.clamp_range
        if not lo < hi:
            raise ValueError(f"clamp range must satisfy low < high, got {self.clamp_range}")


@dataclass(frozen=True)
class ThresholdSample:
    X: int
    image_id: object = None


def sample_threshold(rng: np.random.Generator,
                     distribution: ThresholdDistribution = ThresholdDistribution(),
                     image_id=None) -> ThresholdSample:
    """Draw one integer threshold uniformly from ``[low, high]`` inclusive."""
    x = int(rng.integers(distribution.low, distribution.high, endpoint=True))
    return ThresholdSample(X=x, image_id=image_id)


def threshold_coefficients(coeffs: np.ndarray, X: float) -> np.ndarray:
    """Zero every coefficient with ``|B| < X``. Ties survive."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    return np.where(np.abs(coeffs) < X, 0.0, coeffs)


def apply_dct_threshold(image, X: int, clamp_range=(0.0, 255.0)) -> np.ndarray:
    """Threshold the DCT of ``image`` at ``X`` and reconstruct it.

    ``image`` is ``(H, W)`` or ``(H, W, C)`` on the 0-255 scale. The result
    is float64, clamped to ``clamp_range`` (``None`` skips the clamp), not
    re-quantized.
    """
    if X < 0:
        raise ValueError(f"threshold must be non-negative, got {X}")
    image = np.asarray(image, dtype=np.float64)
    if not np.all(np.isfinite(image)):
        raise ValueError("image contains non-finite pixels")
    out = idct2(threshold_coefficients(fdct2(image), X))
    return out if clamp_range is None else np.clip(out, *clamp_range)


def augment_batch(batch: Sequence[np.ndarray] | np.ndarray, seed: int,
                  distribution: ThresholdDistribution = ThresholdDistribution(),
                  key: tuple = (), ids: Sequence[int] | None = None,
                  clamp_range=(0.0, 255.0)):
    """Augment every image with its own freshly drawn threshold.

    Image ``i`` draws from ``stream(seed, *key, ids[i])`` (``ids`` defaults
    to batch positions), so results do not depend on the processing order
    and the trainer can pass ``key=(epoch,)`` with dataset indices as ids
    to get a new threshold per image per epoch.

    Returns ``(images, samples)``. An ``(B, H, W[, C])`` array is processed
    as one stacked transform and comes back as a float64 array; any other
    sequence is handled image by image and comes back as a list.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    if ids is None:
        ids = range(len(batch))
    elif len(ids) != len(batch):
        raise ValueError(f"got {len(ids)} ids for a batch of {len(batch)}")

    samples = [sample_threshold(stream(seed, *key, image_id), distribution, image_id=image_id)
               for image_id in ids]

    if isinstance(batch, np.ndarray) and batch.ndim >= 3:
        stack = np.asarray(batch, dtype=np.float64)
        bad = ~np.isfinite(stack.reshape(len(stack), -1)).all(axis=1)
        if bad.any():
            raise ValueError(f"image {int(np.argmax(bad))}: image contains non-finite pixels")
        x = np.array([s.X for s in samples], dtype=np.float64)
        x = x.reshape((-1,) + (1,) * (stack.ndim - 1))
        coeffs = dct1(dct1(stack, axis=1), axis=2)
        coeffs = np.where(np.abs(coeffs) < x, 0.0, coeffs)
        return np.clip(idct1(idct1(coeffs, axis=2), axis=1), *clamp_range), samples

    out = []
    for i, (img, s) in enumerate(zip(batch, samples)):
        try:
            out.append(apply_dct_threshold(img, s.X, clamp_range))
        except ValueError as exc:
            raise ValueError(f"image {i}: {exc}") from exc
    return out, samples

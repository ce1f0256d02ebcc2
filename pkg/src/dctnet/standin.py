"""Offline stand-in dataset built from natural photographs.

When CIFAR-10 cannot be downloaded, this produces a 10-class, 32x32 RGB
classification task from the photographs bundled with scikit-image: the
class is the source photograph, each example a random crop (random scale,
flip and brightness/contrast jitter) converted to gray and resized. Train
and test examples come from the left and right halves of every
photograph respectively, so the two splits never share pixels.

This is a sanity harness with natural-image statistics, not a substitute
for CIFAR-10 results. Requires scikit-image.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset
from .rng import stream

SOURCES = ("astronaut", "coffee", "chelsea", "rocket", "camera",
           "brick", "grass", "gravel", "moon", "immunohistochemistry")


def _gray_sources() -> list[np.ndarray]:
    from skimage import color, data

    out = []
    for name in SOURCES:
        img = getattr(data, name)()
        if img.ndim == 3:
            img = color.rgb2gray(img[..., :3]) * 255.0
        out.append(np.asarray(img, dtype=np.float64))
    return out


def _crops(source: np.ndarray, count: int, rng: np.random.Generator, side: int) -> np.ndarray:
    from skimage.transform import resize

    h, w = source.shape
    out = np.empty((count, side, side), dtype=np.float64)
    for i in range(count):
        size = int(rng.integers(48, min(h, w, 160) + 1))
        y = int(rng.integers(0, h - size + 1))
        x = int(rng.integers(0, w - size + 1))
        patch = source[y:y + size, x:x + size]
        if rng.random() < 0.5:
            patch = patch[:, ::-1]
        patch = resize(patch, (side, side), anti_aliasing=True, preserve_range=True)
        contrast, shift = rng.uniform(0.7, 1.3), rng.uniform(-30, 30)
        out[i] = (patch - patch.mean()) * contrast + patch.mean() + shift
    return out


def natural_crops(n_train: int = 2000, n_test: int = 500, seed: int = 0,
                  side: int = 32) -> tuple[Dataset, Dataset]:
    """Class-balanced train/test splits of ``side`` x ``side`` x 3 crops."""
    k = len(SOURCES)
    splits = []
    for split, n in (("train", n_train), ("test", n_test)):
        per_class = [n // k + (1 if c < n % k else 0) for c in range(k)]
        images, labels = [], []
        for c, src in enumerate(_gray_sources()):
            half = src.shape[1] // 2
            region = src[:, :half] if split == "train" else src[:, half:]
            crops = _crops(region, per_class[c], stream(seed, "standin", split, c), side)
            images.append(crops)
            labels.append(np.full(per_class[c], c))
        x = np.concatenate(images)
        y = np.concatenate(labels)
        order = stream(seed, "standin-order", split).permutation(len(y))
        x = np.clip(np.rint(x[order]), 0, 255).astype(np.uint8)
        splits.append(Dataset(np.repeat(x[..., None], 3, axis=-1), y[order].astype(np.int64),
                              list(SOURCES), "standin", f"standin:{split}"))
    return splits[0], splits[1]

"""Test-time distortions: Gaussian noise, Gaussian blur, salt-and-pepper,
motion blur and speckle, with per-dataset parameter ranges.

Images are ``(H, W)`` or ``(H, W, C)`` arrays on the 0-255 scale; results
are float64, clamped to [0, 255]. Noise variances are on [0, 1]-scaled
intensities. Convolutions use reflect padding.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class Kind(str, enum.Enum):
    GAUSSIAN_NOISE = "gaussian-noise"
    SALT_PEPPER = "salt-pepper"
    SPECKLE = "speckle"
    GAUSSIAN_BLUR = "gaussian-blur"
    MOTION_BLUR = "motion-blur"

    def __str__(self):
        return self.value


# Column order of the accuracy tables.
KINDS = (Kind.GAUSSIAN_NOISE, Kind.SALT_PEPPER, Kind.SPECKLE, Kind.GAUSSIAN_BLUR, Kind.MOTION_BLUR)


@dataclass(frozen=True)
class DatasetProfile:
    name: str
    ranges: dict
    # Motion blur is parameterized by angle only; the line length is ours.
    motion_length: int

    def range(self, kind) -> tuple[float, float]:
        return self.ranges[Kind(kind)]


PROFILES = {
    "small": DatasetProfile(
        "small",
        {
            Kind.GAUSSIAN_NOISE: (0.1, 0.5),
            Kind.SALT_PEPPER: (0.0, 0.5),
            Kind.SPECKLE: (0.1, 0.5),
            Kind.GAUSSIAN_BLUR: (0.0, 5.0),
            Kind.MOTION_BLUR: (0.0, 22.5),
        },
        motion_length=9,
    ),
    "large": DatasetProfile(
        "large",
        {
            Kind.GAUSSIAN_NOISE: (0.1, 0.5),
            Kind.SALT_PEPPER: (0.0, 0.5),
            Kind.SPECKLE: (0.1, 0.5),
            Kind.GAUSSIAN_BLUR: (0.0, 10.0),
            Kind.MOTION_BLUR: (0.0, 45.0),
        },
        motion_length=19,
    ),
}


def get_profile(profile) -> DatasetProfile:
    if isinstance(profile, DatasetProfile):
        return profile
    try:
        return PROFILES[profile]
    except KeyError:
        raise ValueError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}") from None


@dataclass(frozen=True)
class DistortionSpec:
    kind: Kind
    level: float

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", Kind(self.kind))
        except ValueError:
            raise ValueError(f"unknown distortion kind {self.kind!r}") from None

    def validate(self, profile="small") -> "DistortionSpec":
        # Levels below the evaluation range are allowed down to 0 (the
        # identity end), so noise at variance 0 is a valid no-op.
        hi = get_profile(profile).range(self.kind)[1]
        if not (0.0 <= self.level <= hi) or not math.isfinite(self.level):
            raise ValueError(f"{self.kind} level {self.level} outside [0, {hi}]")
        return self


def level_grid(kind, profile="small") -> list[DistortionSpec]:
    """Five evenly spaced levels over the profile's range.

    A range starting at 0 skips the identity endpoint: ``{r/5, ..., r}``.
    """
    kind = Kind(kind)
    lo, hi = get_profile(profile).range(kind)
    if lo == 0:
        levels = [hi * k / 5 for k in range(1, 6)]
    else:
        levels = [lo + (hi - lo) * k / 4 for k in range(5)]
    return [DistortionSpec(kind, round(v, 12)) for v in levels]


# -- kernels ---------------------------------------------------------------

def gaussian_kernel(sigma: float) -> np.ndarray:
    """1D Gaussian, length = smallest odd integer >= 6*sigma + 1, sum 1."""
    if sigma <= 0:
        return np.ones(1)
    size = math.ceil(6 * sigma + 1)
    size += 1 - size % 2
    x = np.arange(size) - size // 2
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def motion_kernel(angle: float, length: int) -> np.ndarray:
    """Anti-aliased line of ``length`` pixels through the center at
    ``angle`` degrees (counter-clockwise from horizontal), sum 1."""
    size = length + 1 - length % 2
    c = size // 2
    k = np.zeros((size, size))
    theta = math.radians(angle)
    dx, dy = math.cos(theta), -math.sin(theta)
    half = (length - 1) / 2
    for t in np.linspace(-half, half, 8 * length + 1):
        x, y = c + t * dx, c + t * dy
        x0, y0 = math.floor(x), math.floor(y)
        fx, fy = x - x0, y - y0
        for yy, xx, w in ((y0, x0, (1 - fx) * (1 - fy)), (y0, x0 + 1, fx * (1 - fy)),
                          (y0 + 1, x0, (1 - fx) * fy), (y0 + 1, x0 + 1, fx * fy)):
            if w > 0:
                k[yy, xx] += w
    return k / k.sum()


def _as_hwc(image) -> tuple[np.ndarray, bool]:
    a = np.asarray(image, dtype=np.float64)
    if a.ndim == 2:
        return a[:, :, None], True
    if a.ndim != 3:
        raise ValueError(f"expected (H, W) or (H, W, C) image, got shape {a.shape}")
    return a, False


def _filter(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Correlate an (H, W, C) image with a 2D kernel under reflect padding.

    Written as ``x + sum_k w_k (shift_k(x) - x)`` so constant regions come
    out exactly unchanged rather than off by rounding in the kernel sum.
    """
    kh, kw = kernel.shape
    ry, rx = kh // 2, kw // 2
    h, w = img.shape[:2]
    padded = np.pad(img, ((ry, ry), (rx, rx), (0, 0)), mode="reflect")
    out = img.copy()
    for dy, dx in zip(*np.nonzero(kernel)):
        if dy == ry and dx == rx:
            continue
        out += kernel[dy, dx] * (padded[dy:dy + h, dx:dx + w] - img)
    return out


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    k = gaussian_kernel(sigma)
    if k.size == 1:
        return img.copy()
    return _filter(_filter(img, k[None, :]), k[:, None])


# -- distortion entry point ------------------------------------------------

def distort(image, spec: DistortionSpec, rng: np.random.Generator, profile="small") -> np.ndarray:
    """Apply one distortion to one image."""
    profile = get_profile(profile)
    spec = DistortionSpec(spec.kind, float(spec.level)).validate(profile)
    img, flat = _as_hwc(image)
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite pixels")
    level = spec.level

    if spec.kind is Kind.GAUSSIAN_NOISE:
        noise = rng.normal(0.0, math.sqrt(level), img.shape)
        out = img + 255.0 * noise
    elif spec.kind is Kind.SPECKLE:
        noise = rng.normal(0.0, math.sqrt(level), img.shape)
        out = img * (1.0 + noise)
    elif spec.kind is Kind.SALT_PEPPER:
        h, w = img.shape[:2]
        hit = rng.random((h, w)) < level
        salt = rng.random((h, w)) < 0.5
        out = img.copy()
        out[hit & salt] = 255.0
        out[hit & ~salt] = 0.0
    elif spec.kind is Kind.GAUSSIAN_BLUR:
        out = gaussian_blur(img, level)
    elif spec.kind is Kind.MOTION_BLUR:
        out = _filter(img, motion_kernel(level, profile.motion_length))
    else:  # pragma: no cover - Kind() already rejected anything else
        raise ValueError(f"unknown distortion kind {spec.kind!r}")

    out = np.clip(out, 0.0, 255.0)
    return out[:, :, 0] if flat else out

"""Orthonormal 2D DCT-II / DCT-III over one full-image block.

The fast path is the Makhoul construction: reorder the samples even/odd,
take a length-N complex FFT, then rotate each bin by a quarter-sample
twiddle. ``numpy.fft`` (pocketfft) handles arbitrary lengths through
mixed-radix and Bluestein kernels, so non-power-of-two sizes are exact.

The ``*_naive`` functions evaluate the double cosine sum directly and
exist as an independent oracle for the fast path.

Arrays may be ``(M, N)`` planes or ``(M, N, C)`` stacks; channels are
transformed independently over the first two axes.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = [
    "fdct2",
    "idct2",
    "fdct2_naive",
    "idct2_naive",
    "dct1",
    "idct1",
    "energy",
]


def _check(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim < 2:
        raise ValueError(f"expected an (M, N) or (M, N, C) array, got shape {a.shape}")
    if a.shape[0] == 0 or a.shape[1] == 0:
        raise ValueError("empty plane")
    if not np.all(np.isfinite(a)):
        raise ValueError("plane contains non-finite values")
    return a


def _alpha(n: int) -> np.ndarray:
    alpha = np.full(n, np.sqrt(2.0 / n))
    alpha[0] = np.sqrt(1.0 / n)
    return alpha


@lru_cache(maxsize=64)
def _twiddle(n: int) -> np.ndarray:
    # alpha_k * exp(-i*pi*k / 2n); read-only so cached tables are safe to share
    k = np.arange(n)
    tw = _alpha(n) * np.exp(-1j * np.pi * k / (2 * n))
    tw.setflags(write=False)
    return tw


@lru_cache(maxsize=64)
def _reorder(n: int) -> np.ndarray:
    # v[k] = x[2k] for the first half, v[n-1-k] = x[2k+1] for the second
    idx = np.empty(n, dtype=np.intp)
    half = (n + 1) // 2
    idx[:half] = np.arange(0, n, 2)
    idx[half:] = np.arange(1, n, 2)[::-1]
    idx.setflags(write=False)
    return idx


def dct1(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Orthonormal DCT-II along ``axis``."""
    x = np.moveaxis(np.asarray(x, dtype=np.float64), axis, -1)
    n = x.shape[-1]
    v = x[..., _reorder(n)]
    out = (np.fft.fft(v, axis=-1) * _twiddle(n)).real
    return np.moveaxis(out, -1, axis)


def idct1(c: np.ndarray, axis: int = -1) -> np.ndarray:
    """Orthonormal DCT-III along ``axis`` (inverse of :func:`dct1`)."""
    c = np.moveaxis(np.asarray(c, dtype=np.float64), axis, -1)
    n = c.shape[-1]
    # Rebuild the FFT spectrum of the reordered sequence from the real
    # coefficients: V[k] = (c[k] - i c[n-k]) exp(i pi k / 2n), c[n] = 0.
    a = c / _alpha(n)
    shifted = np.zeros_like(a)
    shifted[..., 1:] = a[..., :0:-1]
    k = np.arange(n)
    spec = (a - 1j * shifted) * np.exp(1j * np.pi * k / (2 * n))
    v = np.fft.ifft(spec, axis=-1).real
    out = np.empty_like(v)
    out[..., _reorder(n)] = v
    return np.moveaxis(out, -1, axis)


def fdct2(plane) -> np.ndarray:
    """Forward 2D DCT of a plane (or per channel of an ``(M, N, C)`` stack).

    Rows and columns are transformed separably with :func:`dct1`, giving
    ``O(MN (log M + log N))`` work.
    """
    a = _check(plane)
    return dct1(dct1(a, axis=0), axis=1)


def idct2(coeffs) -> np.ndarray:
    """Inverse of :func:`fdct2`. The result is not clamped."""
    b = _check(coeffs)
    return idct1(idct1(b, axis=1), axis=0)


def _basis(n: int) -> np.ndarray:
    # basis[p, m] = alpha_p * cos(pi * (2m + 1) * p / 2n)
    p = np.arange(n)[:, None]
    m = np.arange(n)[None, :]
    return _alpha(n)[:, None] * np.cos(np.pi * (2 * m + 1) * p / (2 * n))


def fdct2_naive(plane) -> np.ndarray:
    """Direct evaluation of the double cosine sum, ``O(M^2 N^2)``."""
    a = _check(plane)
    m, n = a.shape[:2]
    cm, cn = _basis(m), _basis(n)
    out = np.empty_like(a)
    for p in range(m):
        for q in range(n):
            kernel = np.outer(cm[p], cn[q])
            out[p, q] = np.tensordot(kernel, a, axes=([0, 1], [0, 1]))
    return out


def idct2_naive(coeffs) -> np.ndarray:
    b = _check(coeffs)
    m, n = b.shape[:2]
    cm, cn = _basis(m), _basis(n)
    out = np.empty_like(b)
    for i in range(m):
        for j in range(n):
            kernel = np.outer(cm[:, i], cn[:, j])
            out[i, j] = np.tensordot(kernel, b, axes=([0, 1], [0, 1]))
    return out


def energy(values) -> float:
    """Sum of squares of a plane or coefficient array."""
    a = np.asarray(values, dtype=np.float64)
    return float(np.sum(a * a))

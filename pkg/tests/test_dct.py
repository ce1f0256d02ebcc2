import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from dctnet.data import sample_images
from dctnet.dct import dct1, energy, fdct2, fdct2_naive, idct1, idct2, idct2_naive


def planes(max_side=24):
    shape = st.tuples(st.integers(1, max_side), st.integers(1, max_side))
    return shape.flatmap(lambda s: arrays(np.float64, s, elements=st.floats(0, 255)))


def test_constant_2x2_has_only_dc():
    np.testing.assert_allclose(fdct2(np.ones((2, 2))), [[2, 0], [0, 0]], atol=1e-12)
    np.testing.assert_allclose(fdct2_naive(np.ones((2, 2))), [[2, 0], [0, 0]], atol=1e-12)


def test_single_pixel_2x2():
    expected = [[0.5, 0.5], [0.5, 0.5]]
    np.testing.assert_allclose(fdct2_naive([[1, 0], [0, 0]]), expected, atol=1e-12)
    np.testing.assert_allclose(fdct2([[1, 0], [0, 0]]), expected, atol=1e-12)


def test_inverse_examples():
    np.testing.assert_allclose(idct2([[2, 0], [0, 0]]), np.ones((2, 2)), atol=1e-12)
    np.testing.assert_allclose(idct2_naive([[2, 0], [0, 0]]), np.ones((2, 2)), atol=1e-12)
    assert np.all(idct2(np.zeros((5, 3))) == 0)


def test_one_by_one():
    assert fdct2_naive([[7.5]])[0, 0] == pytest.approx(7.5)
    assert fdct2([[7.5]])[0, 0] == pytest.approx(7.5)


def test_column_vector_matches_naive():
    x = np.array([[1.0], [2.0], [3.0], [4.0]])
    assert np.max(np.abs(fdct2(x) - fdct2_naive(x))) < 1e-12
    assert np.max(np.abs(idct2(x) - idct2_naive(x))) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 13, 31, 32, 64, 97])
def test_1d_against_explicit_matrix(n):
    rng = np.random.default_rng(n)
    x = rng.normal(size=n)
    k = np.arange(n)[:, None]
    m = np.arange(n)[None, :]
    mat = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * m + 1) * k / (2 * n))
    mat[0] /= np.sqrt(2)
    np.testing.assert_allclose(dct1(x), mat @ x, atol=1e-12)
    np.testing.assert_allclose(idct1(mat @ x), x, atol=1e-12)


def test_roundtrip_random_32():
    x = np.random.default_rng(0).uniform(0, 255, (32, 32))
    assert np.max(np.abs(idct2(fdct2(x)) - x)) < 1e-9


def test_multichannel_is_per_channel():
    x = np.random.default_rng(1).uniform(0, 255, (6, 9, 3))
    stacked = fdct2(x)
    for c in range(3):
        np.testing.assert_array_equal(stacked[:, :, c], fdct2(x[:, :, c]))


@pytest.mark.parametrize("bad", [np.zeros((0, 4)), np.zeros((3, 0)), np.zeros(5)])
def test_rejects_bad_shapes(bad):
    for fn in (fdct2, idct2, fdct2_naive, idct2_naive):
        with pytest.raises(ValueError):
            fn(bad)


@pytest.mark.parametrize("value", [np.nan, np.inf])
def test_rejects_non_finite(value):
    x = np.zeros((3, 3))
    x[1, 1] = value
    for fn in (fdct2, idct2, fdct2_naive, idct2_naive):
        with pytest.raises(ValueError):
            fn(x)


def test_energy():
    assert energy(np.zeros((4, 4))) == 0
    assert energy(np.ones((2, 2))) == 4.0


@settings(max_examples=60, deadline=None)
@given(planes())
def test_fast_matches_naive(x):
    assert np.max(np.abs(fdct2(x) - fdct2_naive(x)), initial=0) < 1e-9
    assert np.max(np.abs(idct2(x) - idct2_naive(x)), initial=0) < 1e-9


@settings(max_examples=100, deadline=None)
@given(planes(64))
def test_roundtrip_and_parseval(x):
    b = fdct2(x)
    assert np.max(np.abs(idct2(b) - x)) < 1e-9
    e = energy(x)
    assert abs(energy(b) - e) <= 1e-10 * e + 1e-20


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40), st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_linearity(m, n, a, b, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(0, 255, (2, m, n))
    lhs = fdct2(a * x + b * y)
    rhs = a * fdct2(x) + b * fdct2(y)
    assert np.max(np.abs(lhs - rhs)) < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 64), st.integers(1, 64), st.floats(0, 255))
def test_constant_plane_dc(m, n, c):
    b = fdct2(np.full((m, n), c))
    assert b[0, 0] == pytest.approx(c * np.sqrt(m * n), abs=1e-10 * max(1, c * np.sqrt(m * n)))
    rest = b.copy()
    rest[0, 0] = 0
    assert np.max(np.abs(rest)) < 1e-10 * max(1.0, c)


def test_energy_compaction_on_sample_images():
    samples = sample_images()
    assert len(samples) >= 4
    for name, img in samples.items():
        assert min(img.shape[:2]) >= 32
        b = fdct2(img.astype(np.float64))
        m, n = b.shape[:2]
        low = energy(b[: m // 2, : n // 2])
        assert low / energy(b) > 0.90, name

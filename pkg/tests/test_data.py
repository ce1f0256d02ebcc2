import json

import numpy as np
import pytest

from dctnet import data
from dctnet.errors import DataError


def rand_images(n, h=32, w=32, c=3, seed=0):
    return np.random.default_rng(seed).integers(0, 256, (n, h, w, c)).astype(np.uint8)


def test_cifar_record_layout(tmp_path):
    # hand-built record: label 7, red plane all 1, green all 2, blue all 3
    rec = bytes([7]) + bytes([1]) * 1024 + bytes([2]) * 1024 + bytes([3]) * 1024
    path = tmp_path / "batch.bin"
    path.write_bytes(rec * 2)
    ds = data.read_cifar_binary(path)
    assert ds.images.shape == (2, 32, 32, 3)
    assert ds.labels.tolist() == [7, 7]
    assert ds.images[0, 5, 9].tolist() == [1, 2, 3]


def test_cifar_pixel_order(tmp_path):
    img = np.zeros((1, 32, 32, 3), np.uint8)
    img[0, 0, 1, 0] = 200  # row 0, column 1, red
    data.write_cifar_binary(tmp_path / "x.bin", img, [3])
    raw = (tmp_path / "x.bin").read_bytes()
    assert len(raw) == 3073 and raw[0] == 3 and raw[1 + 1] == 200


def test_cifar_roundtrip_and_meta(tmp_path):
    imgs, labels = rand_images(5), np.array([0, 1, 2, 1, 0])
    data.write_cifar_binary(tmp_path / "t.bin", imgs, labels, ["a", "b", "c"])
    ds = data.load_dataset(tmp_path / "t.bin")
    np.testing.assert_array_equal(ds.images, imgs)
    assert ds.labels.tolist() == labels.tolist()
    assert ds.class_names == ["a", "b", "c"] and ds.format == "cifar-binary"


def test_cifar100_fine_label(tmp_path):
    rec = bytes([4, 42]) + bytes(3072)
    (tmp_path / "c100.bin").write_bytes(rec)
    assert data.read_cifar_binary(tmp_path / "c100.bin", label_bytes=2).labels.tolist() == [42]


def test_cifar_truncated(tmp_path):
    (tmp_path / "bad.bin").write_bytes(bytes(3000))
    with pytest.raises(DataError):
        data.read_cifar_binary(tmp_path / "bad.bin")


def test_idx_roundtrip(tmp_path):
    imgs = rand_images(4, 28, 28, 1)
    labels = np.array([3, 1, 4, 1])
    path = tmp_path / "train-images-idx3-ubyte"
    data.write_idx(path, imgs, labels)
    raw = path.read_bytes()
    assert raw[:4] == bytes([0, 0, 8, 3])
    assert raw[4:8] == (4).to_bytes(4, "big")
    ds = data.load_dataset(path)
    np.testing.assert_array_equal(ds.images, imgs)
    assert ds.labels.tolist() == labels.tolist()
    assert (tmp_path / "train-labels-idx1-ubyte").read_bytes()[:4] == bytes([0, 0, 8, 1])


def test_idx_bad_magic(tmp_path):
    (tmp_path / "x-images-idx").write_bytes(b"\x01\x02\x08\x01" + bytes(8))
    with pytest.raises(DataError):
        data.read_idx_array(tmp_path / "x-images-idx")
    (tmp_path / "y-images-idx").write_bytes(bytes([0, 0, 8, 1]) + (10).to_bytes(4, "big") + bytes(3))
    with pytest.raises(DataError):
        data.read_idx_array(tmp_path / "y-images-idx")


@pytest.mark.parametrize("channels", [1, 3])
def test_pnm_binary_roundtrip(tmp_path, channels):
    img = rand_images(1, 5, 7, channels)[0]
    path = tmp_path / ("a.pgm" if channels == 1 else "a.ppm")
    data.write_pnm(path, img)
    np.testing.assert_array_equal(data.read_pnm(path), img)


def test_pnm_ascii_with_comments(tmp_path):
    (tmp_path / "a.pgm").write_text("P2\n# comment\n3 2\n# another\n15\n0 15 3\n6 9 12\n")
    img = data.read_pnm(tmp_path / "a.pgm")
    assert img[..., 0].tolist() == [[0, 255, 51], [102, 153, 204]]
    (tmp_path / "b.ppm").write_text("P3 1 1 255 10 20 30")
    assert data.read_pnm(tmp_path / "b.ppm")[0, 0].tolist() == [10, 20, 30]


def test_pnm_rejects(tmp_path):
    (tmp_path / "x.ppm").write_bytes(b"P7\n")
    with pytest.raises(DataError):
        data.read_pnm(tmp_path / "x.ppm")
    (tmp_path / "y.pgm").write_bytes(b"P5 2 2 65535\n" + bytes(8))
    with pytest.raises(DataError):
        data.read_pnm(tmp_path / "y.pgm")


def test_image_directory_roundtrip(tmp_path):
    imgs, labels = rand_images(6, 8, 8), np.array([0, 1, 1, 2, 0, 2])
    data.write_image_directory(tmp_path / "d", imgs, labels, ["cat", "dog", "emu"])
    ds = data.load_dataset(tmp_path / "d")
    assert ds.class_names == ["cat", "dog", "emu"]
    assert sorted(ds.labels.tolist()) == sorted(labels.tolist())
    for i in range(3):
        got = sorted(map(bytes, ds.images[ds.labels == i]))
        want = sorted(map(bytes, imgs[labels == i]))
        assert got == want


def test_image_directory_geometry(tmp_path):
    (tmp_path / "a").mkdir()
    data.write_pnm(tmp_path / "a" / "1.ppm", rand_images(1, 8, 8)[0])
    data.write_pnm(tmp_path / "a" / "2.ppm", rand_images(1, 6, 4)[0])
    with pytest.raises(DataError):
        data.read_image_directory(tmp_path)
    ds = data.read_image_directory(tmp_path, resize=(4, 4))
    assert ds.geometry == (4, 4, 3)


def test_register_decoder(tmp_path):
    (tmp_path / "k").mkdir()
    np.save(tmp_path / "k" / "x.npy", rand_images(1, 4, 4)[0])
    data.register_decoder(".npy", np.load)
    try:
        ds = data.read_image_directory(tmp_path)
        assert ds.geometry == (4, 4, 3)
    finally:
        data.DECODERS.pop(".npy")


def test_missing_and_unknown(tmp_path):
    with pytest.raises(DataError):
        data.load_dataset(tmp_path / "nope.bin")
    (tmp_path / "weird.dat").write_bytes(b"1")
    with pytest.raises(DataError):
        data.load_dataset(tmp_path / "weird.dat")


def test_make_cifar10_subset(tmp_path):
    src = tmp_path / "cifar-10-batches-bin"
    src.mkdir()
    for i in range(1, 6):
        labels = np.arange(40) % 10
        data.write_cifar_binary(src / f"data_batch_{i}.bin", rand_images(40, seed=i), labels)
    data.write_cifar_binary(src / "test_batch.bin", rand_images(30, seed=9), np.arange(30) % 10)
    manifest = data.make_cifar10_subset(src, tmp_path / "subset", train_per_class=12, test_per_class=2)
    train = data.load_dataset(tmp_path / "subset" / "train.bin")
    test = data.load_dataset(tmp_path / "subset" / "test.bin")
    assert len(train.images) == 120 and len(test.images) == 20
    assert np.bincount(train.labels).tolist() == [12] * 10
    assert train.class_names == data.CIFAR10_CLASSES
    on_disk = json.loads((tmp_path / "subset" / "manifest.json").read_text())
    assert on_disk == manifest
    assert set(on_disk["sha256"]) == {f"data_batch_{i}.bin" for i in range(1, 6)} | {"test_batch.bin"}
    # first 12 per class in file order: indices 0..119 of the concatenated batches
    assert on_disk["splits"]["train"]["indices"] == list(range(120))


def test_sample_images_bundled():
    samples = data.sample_images()
    assert {"astronaut", "camera"} <= set(samples)
    assert all(img.dtype == np.uint8 for img in samples.values())

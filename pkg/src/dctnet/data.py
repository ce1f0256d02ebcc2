"""Dataset ingestion and output.

Three on-disk layouts are supported, for reading and writing:

* ``cifar-binary``: fixed-size records of one label byte followed by
  3072 pixel bytes (1024 red, 1024 green, 1024 blue, row-major 32x32).
  CIFAR-100 files carry two label bytes (coarse, fine); pass
  ``label_bytes=2`` to read them, the fine label is used.
* ``idx``: big-endian IDX tensors; an images file paired with a labels
  file whose name has ``images`` replaced by ``labels`` (and ``idx3`` by ``idx1``).
* ``image-directory``: ``root/<class name>/<file>``, classes sorted by
  name. PGM/PPM are decoded natively; other extensions can be added with
  :func:`register_decoder`.

Images are held as ``uint8`` arrays of shape ``(N, H, W, C)``.
"""

from __future__ import annotations

import hashlib
import json
import struct
import tarfile
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DataError

CIFAR_SIDE = 32
CIFAR_PIXELS = 3 * CIFAR_SIDE * CIFAR_SIDE
CIFAR10_URL = "https://www.cs.toronto.edu/~kriz/cifar-10-binary.tar.gz"
CIFAR10_CLASSES = ["airplane", "automobile", "bird", "cat", "deer",
                   "dog", "frog", "horse", "ship", "truck"]


@dataclass
class Dataset:
    images: np.ndarray
    labels: np.ndarray
    class_names: list[str] = field(default_factory=list)
    format: str = ""
    path: str = ""

    def __post_init__(self):
        if self.images.ndim != 4:
            raise DataError(f"images must be (N, H, W, C), got {self.images.shape}")
        if len(self.images) != len(self.labels):
            raise DataError(f"{len(self.images)} images but {len(self.labels)} labels")
        if not self.class_names and len(self.labels):
            self.class_names = [str(i) for i in range(int(self.labels.max()) + 1)]

    @property
    def geometry(self) -> tuple[int, int, int]:
        return tuple(self.images.shape[1:])

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def subset(self, limit: int | None) -> "Dataset":
        if limit is None or limit >= len(self.images):
            return self
        return Dataset(self.images[:limit], self.labels[:limit], self.class_names,
                       self.format, self.path)


def to_uint8(images) -> np.ndarray:
    """Round and clamp 0-255 float images to 8 bits."""
    return np.clip(np.rint(np.asarray(images, dtype=np.float64)), 0, 255).astype(np.uint8)


# -- CIFAR binary ------------------------------------------------------------

def read_cifar_binary(paths, label_bytes: int = 1, class_names=None) -> Dataset:
    if isinstance(paths, (str, Path)):
        paths = [paths]
    record = label_bytes + CIFAR_PIXELS
    chunks = []
    for p in paths:
        try:
            raw = np.fromfile(p, dtype=np.uint8)
        except OSError as exc:
            raise DataError(f"cannot read {p}: {exc}") from exc
        if raw.size == 0 or raw.size % record:
            raise DataError(f"{p}: size {raw.size} is not a multiple of the {record}-byte record")
        chunks.append(raw.reshape(-1, record))
    recs = np.concatenate(chunks)
    labels = recs[:, label_bytes - 1].astype(np.int64)
    images = recs[:, label_bytes:].reshape(-1, 3, CIFAR_SIDE, CIFAR_SIDE).transpose(0, 2, 3, 1)
    if class_names is None:
        meta = Path(paths[0]).with_name("batches.meta.txt")
        if meta.exists():
            class_names = [ln.strip() for ln in meta.read_text().splitlines() if ln.strip()]
    if class_names and labels.max() >= len(class_names):
        raise DataError(f"label {labels.max()} outside the {len(class_names)} listed classes")
    return Dataset(np.ascontiguousarray(images), labels, list(class_names or []),
                   "cifar-binary", str(paths[0]))


def write_cifar_binary(path, images, labels, class_names=None) -> None:
    images = to_uint8(images)
    if images.shape[1:] != (CIFAR_SIDE, CIFAR_SIDE, 3):
        raise DataError(f"CIFAR records hold 32x32x3 images, got {images.shape[1:]}")
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() > 255:
        raise DataError("CIFAR labels must fit in one byte")
    recs = np.empty((len(images), 1 + CIFAR_PIXELS), dtype=np.uint8)
    recs[:, 0] = labels
    recs[:, 1:] = images.transpose(0, 3, 1, 2).reshape(len(images), -1)
    path = Path(path)
    path.write_bytes(recs.tobytes())
    if class_names:
        path.with_name("batches.meta.txt").write_text("\n".join(class_names) + "\n")


# -- IDX ---------------------------------------------------------------------

_IDX_TYPES = {0x08: ">u1", 0x09: ">i1", 0x0B: ">i2", 0x0C: ">i4", 0x0D: ">f4", 0x0E: ">f8"}


def read_idx_array(path) -> np.ndarray:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if len(raw) < 4 or raw[0] != 0 or raw[1] != 0:
        raise DataError(f"{path}: bad IDX magic number")
    code, ndim = raw[2], raw[3]
    if code not in _IDX_TYPES:
        raise DataError(f"{path}: unknown IDX data type 0x{code:02x}")
    dims = struct.unpack_from(f">{ndim}I", raw, 4)
    dt = np.dtype(_IDX_TYPES[code])
    count = int(np.prod(dims, dtype=np.int64))
    offset = 4 + 4 * ndim
    if len(raw) != offset + count * dt.itemsize:
        raise DataError(f"{path}: payload does not match header dimensions {dims}")
    return np.frombuffer(raw, dtype=dt, offset=offset, count=count).reshape(dims)


def write_idx_array(path, array: np.ndarray) -> None:
    array = np.asarray(array)
    code = {np.dtype(np.uint8): 0x08, np.dtype(np.int32): 0x0C, np.dtype(np.float32): 0x0D,
            np.dtype(np.float64): 0x0E}[array.dtype]
    header = bytes([0, 0, code, array.ndim]) + struct.pack(f">{array.ndim}I", *array.shape)
    Path(path).write_bytes(header + array.astype(np.dtype(_IDX_TYPES[code])).tobytes())


def idx_labels_path(images_path) -> Path:
    p = Path(images_path)
    if "images" not in p.name:
        raise DataError(f"cannot derive a labels file name from {p.name!r}")
    return p.with_name(p.name.replace("images", "labels").replace("idx3", "idx1"))


def read_idx(images_path, labels_path=None) -> Dataset:
    images = read_idx_array(images_path)
    labels = read_idx_array(labels_path or idx_labels_path(images_path)).astype(np.int64)
    if images.ndim == 3:
        images = images[..., None]
    if images.ndim != 4 or images.dtype != np.uint8:
        raise DataError(f"IDX images must be uint8 (N, H, W[, C]), got {images.dtype} {images.shape}")
    return Dataset(np.array(images), labels, format="idx", path=str(images_path))


def write_idx(images_path, images, labels) -> None:
    images = to_uint8(images)
    if images.shape[-1] == 1:
        images = images[..., 0]
    write_idx_array(images_path, images)
    write_idx_array(idx_labels_path(images_path), np.asarray(labels, dtype=np.uint8))


# -- PGM / PPM ---------------------------------------------------------------

def _pnm_tokens(raw: bytes, count: int, pos: int) -> tuple[list[int], int]:
    tokens = []
    while len(tokens) < count:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace() and raw[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise DataError("truncated PNM header")
        tokens.append(int(raw[start:pos]))
    return tokens, pos


def read_pnm(path) -> np.ndarray:
    """Decode a P2/P3/P5/P6 file to a ``(H, W, C)`` uint8 array."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    magic = raw[:2]
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise DataError(f"{path}: not a PGM/PPM file")
    channels = 3 if magic in (b"P3", b"P6") else 1
    try:
        (w, h, maxval), pos = _pnm_tokens(raw, 3, 2)
        if not 0 < maxval < 256:
            raise DataError(f"{path}: only 8-bit PNM files are supported (maxval {maxval})")
        n = w * h * channels
        if magic in (b"P5", b"P6"):
            data = np.frombuffer(raw, dtype=np.uint8, count=n, offset=pos + 1)
        else:
            values, _ = _pnm_tokens(raw, n, pos)
            data = np.array(values)
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: malformed PNM: {exc}") from exc
    img = data.reshape(h, w, channels).astype(np.float64)
    if maxval != 255:
        img = img * (255.0 / maxval)
    return to_uint8(img)


def write_pnm(path, image) -> None:
    """Write a binary PGM (1 channel) or PPM (3 channels)."""
    img = to_uint8(image)
    if img.ndim == 2:
        img = img[..., None]
    h, w, c = img.shape
    if c not in (1, 3):
        raise DataError(f"PNM holds 1 or 3 channels, got {c}")
    magic = b"P5" if c == 1 else b"P6"
    Path(path).write_bytes(magic + f"\n{w} {h}\n255\n".encode() + img.tobytes())


DECODERS: dict[str, Callable] = {".pgm": read_pnm, ".ppm": read_pnm, ".pnm": read_pnm}


def register_decoder(extension: str, decoder: Callable) -> None:
    """Teach image-directory ingestion a new file type.

    ``decoder(path)`` must return an ``(H, W, C)`` or ``(H, W)`` uint8 array.
    """
    DECODERS[extension.lower()] = decoder


def read_image(path) -> np.ndarray:
    decoder = DECODERS.get(Path(path).suffix.lower())
    if decoder is None:
        raise DataError(f"no decoder registered for {Path(path).suffix!r} ({path})")
    img = np.asarray(decoder(path))
    return img[..., None] if img.ndim == 2 else img


def resize_nearest(image: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    h, w = image.shape[:2]
    rows = (np.arange(size[0]) * h // size[0]).astype(np.intp)
    cols = (np.arange(size[1]) * w // size[1]).astype(np.intp)
    return image[rows][:, cols]


def read_image_directory(root, resize: tuple[int, int] | None = None) -> Dataset:
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"{root} is not a directory")
    classes = sorted(d.name for d in root.iterdir() if d.is_dir())
    if not classes:
        raise DataError(f"{root} has no class subdirectories")
    images, labels = [], []
    for label, name in enumerate(classes):
        for f in sorted((root / name).iterdir()):
            if f.suffix.lower() in DECODERS:
                img = read_image(f)
                if resize is not None:
                    img = resize_nearest(img, resize)
                images.append(img)
                labels.append(label)
    if not images:
        raise DataError(f"no decodable images under {root}")
    shapes = {im.shape for im in images}
    if len(shapes) > 1:
        raise DataError(f"images under {root} differ in geometry {sorted(shapes)}; pass a resize")
    return Dataset(np.stack(images).astype(np.uint8), np.array(labels, dtype=np.int64), classes,
                   "image-directory", str(root))


def write_image_directory(root, images, labels, class_names=None, names=None) -> list[str]:
    """Write one PGM/PPM per image; returns the relative file names."""
    root = Path(root)
    images = to_uint8(images)
    ext = ".pgm" if images.shape[-1] == 1 else ".ppm"
    out = []
    for i, (img, label) in enumerate(zip(images, labels)):
        cls = class_names[label] if class_names else str(label)
        (root / cls).mkdir(parents=True, exist_ok=True)
        rel = f"{cls}/{names[i] if names else f'{i:06d}'}{ext}"
        write_pnm(root / rel, img)
        out.append(rel)
    return out


# -- dispatch ----------------------------------------------------------------

def detect_format(path) -> str:
    p = Path(path)
    if p.is_dir():
        return "image-directory"
    if p.suffix == ".bin":
        return "cifar-binary"
    if "idx" in p.name or p.suffix == ".idx":
        return "idx"
    raise DataError(f"cannot tell the dataset format of {p}; pass --format")


def load_dataset(path, fmt: str | None = None, resize=None) -> Dataset:
    if not Path(path).exists():
        raise DataError(f"dataset not found: {path}")
    fmt = fmt or detect_format(path)
    if fmt == "cifar-binary":
        return read_cifar_binary(path)
    if fmt == "idx":
        return read_idx(path)
    if fmt == "image-directory":
        return read_image_directory(path, resize)
    raise DataError(f"unsupported dataset format {fmt!r}")


def save_dataset(path, dataset: Dataset, images=None, fmt: str | None = None) -> None:
    """Write ``images`` (default: the dataset's own) with the dataset's labels."""
    images = dataset.images if images is None else images
    fmt = fmt or dataset.format
    path = Path(path)
    if fmt == "cifar-binary":
        path.parent.mkdir(parents=True, exist_ok=True)
        write_cifar_binary(path, images, dataset.labels, dataset.class_names)
    elif fmt == "idx":
        path.parent.mkdir(parents=True, exist_ok=True)
        write_idx(path, images, dataset.labels)
    elif fmt == "image-directory":
        write_image_directory(path, images, dataset.labels, dataset.class_names)
    else:
        raise DataError(f"unsupported dataset format {fmt!r}")


# -- CIFAR-10 desk-scale subset ---------------------------------------------

def fetch_cifar10(dest, url: str = CIFAR10_URL) -> Path:
    """Download and unpack the CIFAR-10 binary distribution into ``dest``."""
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    tarball = dest / "cifar-10-binary.tar.gz"
    if not tarball.exists():
        try:
            urllib.request.urlretrieve(url, tarball)
        except OSError as exc:
            raise DataError(f"download of {url} failed: {exc}") from exc
    with tarfile.open(tarball) as tf:
        tf.extractall(dest)
    return dest / "cifar-10-batches-bin"


def _per_class_prefix(labels: np.ndarray, per_class: int) -> np.ndarray:
    picked = []
    for c in range(int(labels.max()) + 1):
        idx = np.flatnonzero(labels == c)[:per_class]
        if len(idx) < per_class:
            raise DataError(f"class {c} has only {len(idx)} examples, need {per_class}")
        picked.append(idx)
    return np.sort(np.concatenate(picked))


def make_cifar10_subset(batches_dir, dest, train_per_class: int = 500,
                        test_per_class: int = 100) -> dict:
    """Carve the class-balanced subset (first N per class in file order).

    Writes ``train.bin``, ``test.bin``, ``batches.meta.txt`` and
    ``manifest.json`` (selected indices plus SHA-256 of every source file)
    into ``dest`` and returns the manifest.
    """
    src = Path(batches_dir)
    train_files = [src / f"data_batch_{i}.bin" for i in range(1, 6)]
    test_files = [src / "test_batch.bin"]
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    manifest = {"source": CIFAR10_URL, "sha256": {}, "splits": {}}
    for split, files, per_class in (("train", train_files, train_per_class),
                                    ("test", test_files, test_per_class)):
        ds = read_cifar_binary(files, class_names=CIFAR10_CLASSES)
        keep = _per_class_prefix(ds.labels, per_class)
        write_cifar_binary(dest / f"{split}.bin", ds.images[keep], ds.labels[keep], CIFAR10_CLASSES)
        manifest["splits"][split] = {"count": len(keep), "indices": keep.tolist()}
        for f in files:
            manifest["sha256"][f.name] = hashlib.sha256(f.read_bytes()).hexdigest()
    (dest / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest


def sample_images() -> dict[str, np.ndarray]:
    """The small natural photographs bundled with the package, by name."""
    from importlib import resources

    root = resources.files("dctnet") / "samples"
    out = {}
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith((".ppm", ".pgm")):
            with resources.as_file(entry) as path:
                out[entry.name.rsplit(".", 1)[0]] = read_pnm(path)
    return out

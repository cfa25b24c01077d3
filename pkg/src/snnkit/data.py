"""IDX (MNIST) binary parsing and deterministic dataset windows."""

from __future__ import annotations

import gzip
import os
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BadLabel, BadMagic, DimensionMismatch, OutOfRange, Truncated

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

STANDARD_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


@dataclass
class ImageSet:
    count: int
    rows: int
    cols: int
    pixels: np.ndarray  # uint8, flat, image-major then row-major

    def image(self, i: int) -> np.ndarray:
        n = self.rows * self.cols
        return self.pixels[i * n:(i + 1) * n]


@dataclass
class LabelSet:
    count: int
    labels: np.ndarray  # uint8 in [0, 9]


@dataclass
class Dataset:
    images: ImageSet
    labels: LabelSet
    order: np.ndarray  # permutation (or selection) of stimulus indices

    @property
    def count(self) -> int:
        return len(self.order)

    def stimulus(self, k: int):
        """Return (pixels, label) of the k-th stimulus in presentation order."""
        i = int(self.order[k])
        return self.images.image(i), int(self.labels.labels[i])


def _be32(raw: bytes, off: int) -> int:
    if len(raw) < off + 4:
        raise Truncated("header shorter than expected")
    return struct.unpack_from(">I", raw, off)[0]


def parse_idx_images(raw: bytes, strict_28x28: bool = True) -> ImageSet:
    magic = _be32(raw, 0)
    if magic != IMAGE_MAGIC:
        raise BadMagic(f"expected image magic {IMAGE_MAGIC:#010x}, got {magic:#010x}")
    count = _be32(raw, 4)
    rows = _be32(raw, 8)
    cols = _be32(raw, 12)
    if strict_28x28 and (rows != 28 or cols != 28):
        raise DimensionMismatch(f"expected 28x28 images, file declares {rows}x{cols}")
    payload = raw[16:]
    need = count * rows * cols
    if len(payload) < need:
        raise Truncated(f"payload has {len(payload)} bytes, header promises {need}")
    pixels = np.frombuffer(payload[:need], dtype=np.uint8).copy()
    return ImageSet(count=count, rows=rows, cols=cols, pixels=pixels)


def parse_idx_labels(raw: bytes) -> LabelSet:
    magic = _be32(raw, 0)
    if magic != LABEL_MAGIC:
        raise BadMagic(f"expected label magic {LABEL_MAGIC:#010x}, got {magic:#010x}")
    count = _be32(raw, 4)
    payload = raw[8:]
    if len(payload) < count:
        raise Truncated(f"payload has {len(payload)} bytes, header promises {count}")
    labels = np.frombuffer(payload[:count], dtype=np.uint8).copy()
    if labels.size and labels.max() > 9:
        raise BadLabel(f"label byte {int(labels.max())} outside [0, 9]")
    return LabelSet(count=count, labels=labels)


def serialize_idx_images(imgs: ImageSet) -> bytes:
    head = struct.pack(">IIII", IMAGE_MAGIC, imgs.count, imgs.rows, imgs.cols)
    return head + imgs.pixels.tobytes()


def serialize_idx_labels(ls: LabelSet) -> bytes:
    return struct.pack(">II", LABEL_MAGIC, ls.count) + ls.labels.tobytes()


def _read_maybe_gzip(path: str) -> bytes:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def load_dataset(images_path: str, labels_path: str, strict_28x28: bool = True) -> Dataset:
    images = parse_idx_images(_read_maybe_gzip(images_path), strict_28x28=strict_28x28)
    labels = parse_idx_labels(_read_maybe_gzip(labels_path))
    if images.count != labels.count:
        raise DimensionMismatch(
            f"{images.count} images but {labels.count} labels")
    return Dataset(images=images, labels=labels,
                   order=np.arange(images.count, dtype=np.int64))


def _resolve(data_dir: str, stem: str) -> str:
    for cand in (stem, stem + ".gz"):
        p = os.path.join(data_dir, cand)
        if os.path.exists(p):
            return p
    raise Truncated(f"missing data file {stem}[.gz] in {data_dir}")


def load_mnist(data_dir: str, split: str = "train", strict_28x28: bool = True) -> Dataset:
    """Load one of the two standard splits from a directory of IDX files."""
    if split == "train":
        img, lab = STANDARD_FILES["train_images"], STANDARD_FILES["train_labels"]
    elif split == "test":
        img, lab = STANDARD_FILES["test_images"], STANDARD_FILES["test_labels"]
    else:
        raise ValueError(f"unknown split {split!r}")
    return load_dataset(_resolve(data_dir, img), _resolve(data_dir, lab),
                        strict_28x28=strict_28x28)


def take_subset(ds: Dataset, offset: int, count: int,
                shuffle_seed: Optional[int] = None) -> Dataset:
    """A window of `count` stimuli starting at `offset` of the (optionally
    seeded-shuffled) presentation order.  Shares image/label storage."""
    if offset < 0 or count < 0 or offset + count > ds.count:
        raise OutOfRange(
            f"window [{offset}, {offset + count}) exceeds dataset of {ds.count}")
    order = ds.order
    if shuffle_seed is not None:
        order = order.copy()
        np.random.default_rng(shuffle_seed).shuffle(order)
    return Dataset(images=ds.images, labels=ds.labels,
                   order=order[offset:offset + count].copy())

import gzip
import os

import numpy as np
import pytest

from snnkit.data import (Dataset, ImageSet, LabelSet, serialize_idx_images,
                         serialize_idx_labels)

# Real MNIST IDX files, if present (SNN_DATA_DIR or ./data).  The large-scale
# experiment tests need them and skip otherwise.
MNIST_DIR = os.environ.get("SNN_DATA_DIR") or os.path.join(
    os.path.dirname(__file__), "..", "data")


def mnist_available() -> bool:
    return os.path.exists(os.path.join(MNIST_DIR, "train-images-idx3-ubyte")) \
        or os.path.exists(os.path.join(MNIST_DIR, "train-images-idx3-ubyte.gz"))


needs_mnist = pytest.mark.skipif(
    not mnist_available(),
    reason="official MNIST IDX files not available (no network in sandbox); "
           "set SNN_DATA_DIR to run")


def make_surrogate_arrays(seed: int = 0):
    """Real handwritten digits (the classic 8x8 set) upsampled to 28x28,
    shuffled.  A stand-in corpus for pipeline tests when MNIST is absent."""
    from sklearn.datasets import load_digits

    d = load_digits()
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(d.target))
    imgs = d.images[order]
    labels = d.target[order].astype(np.uint8)
    idx = np.minimum((np.arange(28) / 3.5).astype(int), 7)
    up = imgs[:, idx][:, :, idx]
    up = np.clip(up * 255.0 / 16.0, 0, 255).astype(np.uint8)
    return up.reshape(len(labels), -1), labels


def surrogate_dataset(seed: int = 0) -> Dataset:
    pix, labels = make_surrogate_arrays(seed)
    return Dataset(
        images=ImageSet(count=len(labels), rows=28, cols=28,
                        pixels=pix.reshape(-1).copy()),
        labels=LabelSet(count=len(labels), labels=labels),
        order=np.arange(len(labels), dtype=np.int64))


@pytest.fixture(scope="session")
def surrogate():
    return surrogate_dataset()


@pytest.fixture(scope="session")
def surrogate_idx_dir(tmp_path_factory):
    """Surrogate corpus written as standard IDX files (labels gzipped to
    exercise the decompression path)."""
    ds = surrogate_dataset()
    d = tmp_path_factory.mktemp("idxdata")
    n_train = 1400
    train_img = ImageSet(count=n_train, rows=28, cols=28,
                         pixels=ds.images.pixels[:n_train * 784].copy())
    train_lab = LabelSet(count=n_train, labels=ds.labels.labels[:n_train].copy())
    n_test = ds.images.count - n_train
    test_img = ImageSet(count=n_test, rows=28, cols=28,
                        pixels=ds.images.pixels[n_train * 784:].copy())
    test_lab = LabelSet(count=n_test, labels=ds.labels.labels[n_train:].copy())
    (d / "train-images-idx3-ubyte").write_bytes(serialize_idx_images(train_img))
    (d / "train-labels-idx1-ubyte.gz").write_bytes(
        gzip.compress(serialize_idx_labels(train_lab)))
    (d / "t10k-images-idx3-ubyte").write_bytes(serialize_idx_images(test_img))
    (d / "t10k-labels-idx1-ubyte").write_bytes(serialize_idx_labels(test_lab))
    return str(d)

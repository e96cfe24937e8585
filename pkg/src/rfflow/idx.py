"""IDX binary format reading and writing (MNIST-style ubyte files)."""

from __future__ import annotations

import struct

import numpy as np

from .features import Dataset

IMAGE_MAGIC = 2051  # 0x00000803: ubyte, 3 dimensions
LABEL_MAGIC = 2049  # 0x00000801: ubyte, 1 dimension


def _read_header(payload: bytes, path, expected_magic: int, n_dims: int):
    head = 4 * (1 + n_dims)
    if len(payload) < head:
        raise ValueError(f"{path}: truncated IDX header")
    magic = struct.unpack(">i", payload[:4])[0]
    if magic != expected_magic:
        raise ValueError(f"{path}: bad IDX magic {magic}, expected {expected_magic}")
    dims = struct.unpack(f">{n_dims}i", payload[4:head])
    return dims, payload[head:]


def read_idx_images(path) -> np.ndarray:
    """Raw uint8 images of shape (count, rows, cols)."""
    with open(path, "rb") as fh:
        payload = fh.read()
    (count, rows, cols), body = _read_header(payload, path, IMAGE_MAGIC, 3)
    if len(body) != count * rows * cols:
        raise ValueError(f"{path}: truncated IDX payload")
    return np.frombuffer(body, dtype=np.uint8).reshape(count, rows, cols)


def read_idx_labels(path) -> np.ndarray:
    with open(path, "rb") as fh:
        payload = fh.read()
    (count,), body = _read_header(payload, path, LABEL_MAGIC, 1)
    if len(body) != count:
        raise ValueError(f"{path}: truncated IDX payload")
    return np.frombuffer(body, dtype=np.uint8)


def write_idx_images(path, images: np.ndarray) -> None:
    images = np.ascontiguousarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise ValueError("images must be (count, rows, cols)")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">4i", IMAGE_MAGIC, *images.shape))
        fh.write(images.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    if labels.ndim != 1:
        raise ValueError("labels must be one-dimensional")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">2i", LABEL_MAGIC, labels.size))
        fh.write(labels.tobytes())


def load_idx(images_path, labels_path, classes=None, subsample: int | None = None,
             seed: int = 0) -> Dataset:
    """Load an IDX image/label pair as a flattened Dataset.

    Pixel values are scaled to [0, 1] by /255; vectors are left raw (not
    re-normalized).  ``classes`` filters by label, ``subsample`` draws that
    many rows without replacement using the seed.
    """
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise ValueError("image/label count mismatch")
    points = images.reshape(images.shape[0], -1).astype(float) / 255.0
    values = labels.astype(float)
    if classes is not None:
        keep = np.isin(labels, list(classes))
        points, values = points[keep], values[keep]
    if subsample is not None:
        if subsample > points.shape[0]:
            raise ValueError("subsample larger than the available rows")
        idx = np.sort(np.random.default_rng(seed).choice(
            points.shape[0], size=subsample, replace=False))
        points, values = points[idx], values[idx]
    return Dataset(points=points, targets=values, dim=points.shape[1],
                   distribution_tag="external")

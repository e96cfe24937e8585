import struct

import numpy as np
import pytest

from rfflow import idx


def _write_pair(tmp_path, images, labels):
    img_path = tmp_path / "imgs-idx3-ubyte"
    lab_path = tmp_path / "labs-idx1-ubyte"
    idx.write_idx_images(img_path, images)
    idx.write_idx_labels(lab_path, labels)
    return img_path, lab_path


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(2, 4, 3), dtype=np.uint8)
    labels = np.array([0, 1], dtype=np.uint8)
    img_path, lab_path = _write_pair(tmp_path, images, labels)
    assert np.array_equal(idx.read_idx_images(img_path), images)
    assert np.array_equal(idx.read_idx_labels(lab_path), labels)
    # header bytes are exactly the IDX magic constants
    raw = img_path.read_bytes()
    assert raw[:4] == bytes([0, 0, 8, 3])
    assert lab_path.read_bytes()[:4] == bytes([0, 0, 8, 1])


def test_label_magic_rejected_on_image_path(tmp_path):
    path = tmp_path / "bad"
    with open(path, "wb") as fh:
        fh.write(struct.pack(">2i", idx.LABEL_MAGIC, 0))
    with pytest.raises(ValueError, match="magic"):
        idx.read_idx_images(path)


def test_truncated_payload_rejected(tmp_path):
    path = tmp_path / "short"
    with open(path, "wb") as fh:
        fh.write(struct.pack(">4i", idx.IMAGE_MAGIC, 2, 4, 4))
        fh.write(b"\x00" * 10)  # needs 32
    with pytest.raises(ValueError, match="truncated"):
        idx.read_idx_images(path)


def test_count_mismatch_rejected(tmp_path):
    rng = np.random.default_rng(1)
    images = rng.integers(0, 256, size=(3, 2, 2), dtype=np.uint8)
    labels = np.array([1, 0], dtype=np.uint8)
    img_path, lab_path = _write_pair(tmp_path, images, labels)
    with pytest.raises(ValueError, match="mismatch"):
        idx.load_idx(img_path, lab_path)


def test_load_scales_filters_and_subsamples(tmp_path):
    rng = np.random.default_rng(2)
    images = rng.integers(0, 256, size=(20, 3, 3), dtype=np.uint8)
    labels = np.array([0, 1, 2] * 6 + [0, 1], dtype=np.uint8)
    img_path, lab_path = _write_pair(tmp_path, images, labels)

    data = idx.load_idx(img_path, lab_path)
    assert data.points.shape == (20, 9)
    assert data.points.min() >= 0.0 and data.points.max() <= 1.0
    assert data.distribution_tag == "external"

    two_class = idx.load_idx(img_path, lab_path, classes=(0, 1))
    assert set(np.unique(two_class.targets)) <= {0.0, 1.0}
    assert two_class.count == 14

    sub = idx.load_idx(img_path, lab_path, classes=(0, 1), subsample=5, seed=3)
    assert sub.count == 5
    sub2 = idx.load_idx(img_path, lab_path, classes=(0, 1), subsample=5, seed=3)
    assert sub.points.tobytes() == sub2.points.tobytes()

    with pytest.raises(ValueError, match="subsample"):
        idx.load_idx(img_path, lab_path, classes=(2,), subsample=10)

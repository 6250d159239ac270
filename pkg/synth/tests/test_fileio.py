import numpy as np
import pytest

from umsynth.fileio import (
    load_mask_png,
    load_png,
    read_umft,
    save_mask_png,
    save_png,
    write_umft,
)


def test_png_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    arr = rng.integers(0, 256, size=(32, 24), dtype=np.uint8)
    back = load_png(save_png(tmp_path / "x.png", arr))
    assert np.array_equal(back, arr)


def test_png_requires_uint8(tmp_path):
    with pytest.raises(ValueError):
        save_png(tmp_path / "bad.png", np.zeros((4, 4), dtype=np.float32))


def test_mask_round_trip_with_sidecar(tmp_path):
    values = (np.arange(64, dtype=np.uint8).reshape(8, 8) // 16) * 50
    path = save_mask_png(tmp_path / "m_umask.png", values.astype(np.uint8), m=128, t=50)
    back, m, t = load_mask_png(path)
    assert np.array_equal(back, values)
    assert (m, t) == (128, 50)


def test_umft_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    matrix = rng.normal(size=(6, 9)).astype(np.float32)
    path = write_umft(tmp_path / "f.umft", matrix, scale=256, task_id="age",
                      dataset_id="d", extractor_fingerprint="deadbeef")
    back, meta = read_umft(path)
    assert np.array_equal(back, matrix)
    assert meta == {"scale": 256, "task_id": "age", "dataset_id": "d",
                    "extractor_fingerprint": "deadbeef"}


def test_umft_rejects_corruption(tmp_path):
    matrix = np.zeros((2, 2), dtype=np.float32)
    path = write_umft(tmp_path / "g.umft", matrix, scale=128, task_id="sex",
                      dataset_id="d", extractor_fingerprint="")
    path.write_bytes(path.read_bytes()[:-1])
    with pytest.raises(ValueError):
        read_umft(path)

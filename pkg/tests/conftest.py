import numpy as np
import pytest

from umforge import GrayImage, SegMask, ValueSpace


def quadrant_image(size: int, values=(10, 90, 170, 250)) -> GrayImage:
    """Four constant quadrants; boundaries at the exact midlines."""
    half = size // 2
    arr = np.zeros((size, size), dtype=np.uint8)
    arr[:half, :half] = values[0]
    arr[:half, half:] = values[1]
    arr[half:, :half] = values[2]
    arr[half:, half:] = values[3]
    return GrayImage(arr, ValueSpace.UNIT8)


def quadrant_gt(size: int) -> SegMask:
    half = size // 2
    gt = np.zeros((size, size), dtype=np.int64)
    gt[:half, half:] = 1
    gt[half:, :half] = 2
    gt[half:, half:] = 3
    return SegMask(gt)


@pytest.fixture
def quad64() -> GrayImage:
    return quadrant_image(64, values=(0, 80, 160, 240))


@pytest.fixture
def quad64_gt() -> SegMask:
    return quadrant_gt(64)

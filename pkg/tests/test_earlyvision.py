import numpy as np
import pytest

from kerfscope.lib import Resolution
from kerfscope.lib.error import DataError
from kerfscope.lib.attention.earlyvision import (
    FeatureStack,
    V1Params,
    dump_stack,
    load_stack,
    v1_pool,
    v1_simple,
)


def plane_stack(planes: np.ndarray) -> FeatureStack:
    features = [{"kind": "edge", "orientation": 0.0, "wavelength": 6.0}] * planes.shape[0]
    return FeatureStack(planes.astype(np.float32), features, Resolution.SIMPLE)


def step_image() -> np.ndarray:
    img = np.zeros((32, 32), dtype=np.uint8)
    img[:, 16:] = 255
    return img


def test_constant_image_gives_zero_planes():
    stack = v1_simple(np.full((64, 64), 128, dtype=np.uint8), V1Params())
    assert len(stack) == 8
    assert not stack.edge_planes().any()


def test_vertical_step_edge_peaks_on_the_edge():
    params = V1Params()
    stack = v1_simple(step_image(), params)
    idx = [
        i
        for i, f in enumerate(stack.features)
        if f["orientation"] == 90.0 and f["wavelength"] == 6.0
    ]
    assert len(idx) == 1
    plane = stack.planes[idx[0]]
    for row in (8, 16, 24):
        assert abs(int(np.argmax(plane[row])) - 15.5) <= 1.5


def test_vertical_edge_prefers_vertical_orientation():
    stack = v1_simple(step_image(), V1Params(wavelengths=(6.0,)))
    energy = {f["orientation"]: float(stack.planes[i][:, 12:20].sum()) for i, f in
              enumerate(stack.features)}
    assert max(energy, key=energy.get) == 90.0


def test_each_plane_is_normalized_on_its_own():
    img = np.zeros((64, 64, 3), dtype=np.uint8)
    img[:, 32:] = (255, 255, 255)
    img[40:, :16] = (0, 0, 40)  # faint color patch
    stack = v1_simple(img, V1Params())
    tops = stack.planes.reshape(len(stack), -1).max(axis=1)
    assert all(t == 0.0 or t == pytest.approx(1.0) for t in tops)
    assert (tops > 0).sum() > 1


def test_gray_input_has_null_opponency():
    img = np.random.default_rng(3).integers(0, 255, (40, 40), dtype=np.uint8)
    stack = v1_simple(img, V1Params(color_enabled=True))
    color = [i for i, f in enumerate(stack.features) if f["kind"] == "color"]
    assert len(color) == 2
    assert not stack.planes[color].any()


def test_tiny_image_rejected():
    with pytest.raises(DataError):
        v1_simple(np.zeros((8, 8), dtype=np.uint8), V1Params())


def test_pool_factor_is_fixed():
    with pytest.raises(ValueError):
        V1Params(pool_factor=5)


def test_pool_shape():
    pooled = v1_pool(plane_stack(np.random.default_rng(0).random((2, 100, 100))))
    assert pooled.planes.shape == (2, 10, 10)
    assert pooled.resolution == Resolution.POOL


def test_pool_single_pixel():
    planes = np.zeros((1, 100, 100))
    planes[0, 37, 52] = 0.8
    pooled = v1_pool(plane_stack(planes)).planes[0]
    assert pooled[3, 5] == pytest.approx(0.8)
    pooled[3, 5] = 0.0
    assert not pooled.any()


def test_pool_shift_alignment():
    planes = np.random.default_rng(1).random((1, 100, 100))
    shifted = np.zeros_like(planes)
    shifted[:, :, 10:] = planes[:, :, :-10]
    a = v1_pool(plane_stack(planes)).planes
    b = v1_pool(plane_stack(shifted)).planes
    assert np.array_equal(b[:, :, 1:], a[:, :, :-1])


def test_pool_ragged_edges():
    pooled = v1_pool(plane_stack(np.random.default_rng(2).random((1, 95, 103))))
    assert pooled.planes.shape == (1, 10, 11)
    assert pooled.meta["pad"] == [5, 7]


def test_stack_dump_round_trip(tmp_path):
    stack = v1_pool(v1_simple(step_image(), V1Params()))
    path = str(tmp_path / "v1.kstc")
    dump_stack(path, stack)
    back = load_stack(path)
    assert np.array_equal(back.planes, stack.planes)
    assert back.features == stack.features
    assert back.resolution == stack.resolution

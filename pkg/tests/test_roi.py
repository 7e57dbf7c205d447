import numpy as np
import pytest

from kerfscope.lib import STREET_INPUT, Side
from kerfscope.lib.error import DataError
from kerfscope.lib.roi import (
    ROTATION,
    RoiParams,
    WidthSource,
    contrast_normalize,
    extract_roi,
    in_center,
    measure_precision,
    roi_rect,
    side_of,
    truth_fixation,
)
from kerfscope.lib.synth.wafer import street_center

CHIP_PX = 500
MARGIN_PX = 125
STREET_PX = 10


def context_image() -> np.ndarray:
    n = CHIP_PX + 2 * MARGIN_PX
    img = np.full((n, n), 50, dtype=np.uint8)
    img[MARGIN_PX : MARGIN_PX + CHIP_PX, MARGIN_PX : MARGIN_PX + CHIP_PX] = 200
    return img


def fixation(side: Side):
    return truth_fixation(street_center(side, CHIP_PX, STREET_PX), CHIP_PX, MARGIN_PX)


def test_roi_size_and_street_row():
    x0, y0, w, h = roi_rect(Side.S, (300.0, 505.0), STREET_PX, CHIP_PX)
    assert (w, h) == (600, 60)
    assert y0 + h - 505 == 20


def test_vertical_streets_are_transposed():
    _, _, w, h = roi_rect(Side.E, (505.0, 300.0), STREET_PX, CHIP_PX)
    assert (w, h) == (60, 600)


@pytest.mark.parametrize("side", Side.streets())
def test_chip_on_top_after_rotation(side):
    roi = extract_roi(context_image(), fixation(side), STREET_PX, CHIP_PX, side=side)
    assert roi.valid, roi.reason
    assert roi.image.shape == STREET_INPUT
    assert roi.rotation == ROTATION[side]
    top = roi.image[: STREET_INPUT[0] // 3].mean()
    bottom = roi.image[-STREET_INPUT[0] // 4 :].mean()
    assert top > 150 and bottom < 100


def test_rotation_angles():
    assert ROTATION[Side.S] == 0
    assert ROTATION[Side.E] == 90
    assert ROTATION[Side.N] == 180
    assert ROTATION[Side.W] == 270


def test_center_fixation_is_invalid():
    roi = extract_roi(context_image(), (0.5, 0.5), STREET_PX, CHIP_PX)
    assert not roi.valid
    assert roi.image is None
    assert "center" in roi.reason


def test_roi_out_of_bounds_is_invalid():
    roi = extract_roi(context_image(), (0.5, 0.02), STREET_PX, CHIP_PX)
    assert not roi.valid
    assert "bounds" in roi.reason


def test_side_of_and_center():
    assert side_of((0.5, 0.1)) == Side.N
    assert side_of((0.9, 0.5)) == Side.E
    assert side_of((0.5, 0.95)) == Side.S
    assert side_of((0.05, 0.5)) == Side.W
    assert in_center((0.5, 0.5))
    assert not in_center((0.5, 0.2))
    assert not in_center((0.3, 0.5))


def test_roi_params():
    assert RoiParams().width_source == WidthSource.TEMPLATE
    assert RoiParams(width_source="known").width_source == WidthSource.KNOWN
    with pytest.raises(ValueError):
        RoiParams(width_source="guess")


# ---------
# Precision
# ---------


def test_precision_exact():
    pts = [(10.0, 20.0), (30.0, 40.0), (5.0, 6.0)]
    stats = measure_precision(pts, pts)
    assert stats.n == 3
    assert (stats.mean_x, stats.mean_y, stats.std_x, stats.std_y) == (0.0, 0.0, 0.0, 0.0)


def test_precision_constant_offset():
    truth = [(10.0, 20.0), (30.0, 40.0)]
    found = [(x + 2.0, y) for x, y in truth]
    stats = measure_precision(found, truth)
    assert stats.mean_x == pytest.approx(2.0)
    assert stats.std_x == pytest.approx(0.0)
    assert stats.mean_y == pytest.approx(0.0)
    centers = [(a + b) / 2 for a, b in zip(stats.bin_edges[:-1], stats.bin_edges[1:])]
    assert centers[int(np.argmax(stats.histogram_x))] == pytest.approx(2.0)


def test_precision_length_mismatch():
    with pytest.raises(DataError):
        measure_precision([(0.0, 0.0)], [])


# -----------------------
# Contrast normalization
# -----------------------


def test_contrast_normalize_constant():
    assert not contrast_normalize(np.full((60, 192), 77, dtype=np.uint8)).any()


def test_contrast_normalize_moments():
    img = np.random.default_rng(0).integers(0, 255, STREET_INPUT).astype(np.uint8)
    out = contrast_normalize(img)
    assert out.dtype == np.float32
    assert float(out.mean()) == pytest.approx(0.0, abs=1e-5)
    assert float(out.std()) == pytest.approx(1.0, abs=1e-5)


def test_contrast_normalize_affine_invariance():
    img = np.random.default_rng(1).random(STREET_INPUT)
    assert np.allclose(contrast_normalize(img), contrast_normalize(3.0 * img + 11.0), atol=1e-5)

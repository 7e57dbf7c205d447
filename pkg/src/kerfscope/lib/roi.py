# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

"""
Street regions of interest.

Fixations are normalized (x, y) coordinates of a chip context crop
(the chip plus a margin on every side). A street ROI is 1.2 chip sides long
and 6 street widths high, rotated so that the chip lies on top and the street
centerline sits at 2/3 of the height, then resized to 60 x 192.
"""

# --------------------
# System wide imports
# -------------------

import logging

from dataclasses import dataclass, field
from typing import Any, Dict, Sequence, Tuple

# ---------------------------
# Third-party library imports
# ----------------------------

import cv2
import numpy as np

from lica import StrEnum

# --------------
# local imports
# -------------

from . import Side, STREET_INPUT
from .error import DataError

# ----------------
# Module constants
# ----------------

ROI_LENGTH_CHIPS = 1.2
ROI_HEIGHT_WIDTHS = 6
STREET_ROW = 2 / 3  # street centerline height, from the top of the canonical ROI
CENTER_BOX = (0.3, 0.7)
HISTOGRAM_RANGE = 20

# Rotation (degrees clockwise) bringing the chip on top of the street.
# Sides are compass directions in image coordinates, rows growing downwards:
# the S street already lies below its chip, so S and not N needs no rotation.
ROTATION = {Side.S: 0, Side.E: 90, Side.N: 180, Side.W: 270}
_CV2_ROTATE = {
    90: cv2.ROTATE_90_CLOCKWISE,
    180: cv2.ROTATE_180,
    270: cv2.ROTATE_90_COUNTERCLOCKWISE,
}

# -----------------------
# Module global variables
# -----------------------

log = logging.getLogger(__name__.split(".")[-1])

Fixation = Tuple[float, float]


class WidthSource(StrEnum):
    TEMPLATE = "template"  # width class of the winning template
    KNOWN = "known"  # nominal street width of the wafer type


@dataclass(frozen=True)
class RoiParams:
    width_source: WidthSource = WidthSource.TEMPLATE
    save: bool = False  # keep the canonical ROI images of a pipeline run

    def __post_init__(self):
        object.__setattr__(self, "width_source", WidthSource(self.width_source))


@dataclass
class StreetROI:
    chip_id: str
    side: Side
    fixation: Fixation
    rect: Tuple[int, int, int, int]  # x0, y0, width, height in crop pixels
    rotation: int
    valid: bool
    image: np.ndarray | None = field(default=None, repr=False)
    reason: str = ""


def in_center(fixation: Fixation) -> bool:
    lo, hi = CENTER_BOX
    x, y = fixation
    return lo < x < hi and lo < y < hi


def side_of(fixation: Fixation) -> Side:
    """Nearest chip border of a normalized fixation"""
    x, y = fixation
    distances = {Side.N: y, Side.E: 1.0 - x, Side.S: 1.0 - y, Side.W: x}
    return min(distances, key=distances.get)


def truth_fixation(center: Tuple[float, float], chip_px: int, margin_px: int) -> Fixation:
    """Normalized crop coordinates of a street center given in chip coordinates"""
    n = chip_px + 2 * margin_px
    return (margin_px + center[0]) / n, (margin_px + center[1]) / n


def roi_rect(
    side: Side, center: Tuple[float, float], street_width_px: float, chip_px: int
) -> Tuple[int, int, int, int]:
    """Crop rectangle (x0, y0, w, h) around a street center (pixels), before rotation"""
    length = int(round(ROI_LENGTH_CHIPS * chip_px))
    height = int(round(ROI_HEIGHT_WIDTHS * street_width_px))
    chip_part = STREET_ROW * height  # rows between the chip side edge and the street center
    cx, cy = center
    if side == Side.S:
        return int(round(cx - length / 2)), int(round(cy - chip_part)), length, height
    if side == Side.N:
        return int(round(cx - length / 2)), int(round(cy - (height - chip_part))), length, height
    if side == Side.E:
        return int(round(cx - chip_part)), int(round(cy - length / 2)), height, length
    return int(round(cx - (height - chip_part))), int(round(cy - length / 2)), height, length


def canonical(crop: np.ndarray, side: Side, shape: Tuple[int, int] = STREET_INPUT) -> np.ndarray:
    rotation = ROTATION[side]
    if rotation:
        crop = cv2.rotate(crop, _CV2_ROTATE[rotation])
    rows, cols = shape
    return cv2.resize(crop, (cols, rows), interpolation=cv2.INTER_LINEAR)


def extract_roi(
    chip_image: np.ndarray,
    fixation: Fixation,
    street_width_px: float,
    chip_px: int,
    chip_id: str = "",
    side: Side | None = None,
) -> StreetROI:
    side = side if side is not None else side_of(fixation)
    rows, cols = chip_image.shape[:2]
    center = (fixation[0] * cols, fixation[1] * rows)
    rect = roi_rect(side, center, street_width_px, chip_px)
    roi = StreetROI(chip_id, side, fixation, rect, ROTATION[side], valid=False)
    if in_center(fixation):
        roi.reason = "fixation in chip center"
        return roi
    x0, y0, w, h = rect
    if x0 < 0 or y0 < 0 or x0 + w > cols or y0 + h > rows:
        roi.reason = "ROI out of image bounds"
        return roi
    roi.image = canonical(chip_image[y0 : y0 + h, x0 : x0 + w], side)
    roi.valid = True
    return roi


def contrast_normalize(image: np.ndarray) -> np.ndarray:
    img = image.astype(np.float64)
    std = img.std()
    if std < 1e-12:
        return np.zeros(img.shape, dtype=np.float32)
    return ((img - img.mean()) / std).astype(np.float32)


@dataclass
class PrecisionStats:
    n: int
    mean_x: float
    mean_y: float
    std_x: float
    std_y: float
    histogram_x: Sequence[int]
    histogram_y: Sequence[int]
    bin_edges: Sequence[float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "mean_x": self.mean_x,
            "mean_y": self.mean_y,
            "std_x": self.std_x,
            "std_y": self.std_y,
            "histogram": {
                "x": list(self.histogram_x),
                "y": list(self.histogram_y),
                "bin_edges": list(self.bin_edges),
            },
        }


def measure_precision(
    fixations: Sequence[Tuple[float, float]], truth: Sequence[Tuple[float, float]]
) -> PrecisionStats:
    """Signed per axis deviation (found - true), both in chip pixels"""
    if len(fixations) != len(truth):
        raise DataError(f"{len(fixations)} fixations for {len(truth)} true centers")
    edges = np.arange(-HISTOGRAM_RANGE - 0.5, HISTOGRAM_RANGE + 1.0, 1.0)
    if not fixations:
        zeros = [0] * (len(edges) - 1)
        return PrecisionStats(0, 0.0, 0.0, 0.0, 0.0, zeros, zeros, edges.tolist())
    d = np.asarray(fixations, dtype=np.float64) - np.asarray(truth, dtype=np.float64)
    hx, _ = np.histogram(np.clip(d[:, 0], edges[0], edges[-1]), bins=edges)
    hy, _ = np.histogram(np.clip(d[:, 1], edges[0], edges[-1]), bins=edges)
    return PrecisionStats(
        n=len(d),
        mean_x=float(d[:, 0].mean()),
        mean_y=float(d[:, 1].mean()),
        std_x=float(d[:, 0].std()),
        std_y=float(d[:, 1].std()),
        histogram_x=hx.tolist(),
        histogram_y=hy.tolist(),
        bin_edges=edges.tolist(),
    )

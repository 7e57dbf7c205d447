# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

"""
Wafer map rendering.

Every chip is drawn as a square cell colored by its class, surrounded by
four bars colored by the class of each street. Border chips and streets
that were not found are gray.
"""

# --------------------
# System wide imports
# -------------------

import logging

from dataclasses import dataclass
from typing import Dict, List, Tuple

# ---------------------------
# Third-party library imports
# ----------------------------

import cv2
import numpy as np

from lica import StrEnum

# --------------
# local imports
# -------------

from .. import Side, StreetClass
from .metrics import ChipVerdict, WaferReport

# ----------------
# Module constants
# ----------------

CELL_PX = 40
BAR_PX = 6
GAP_PX = 2
MARGIN_PX = 30
LEGEND_PX = 60
FONT = cv2.FONT_HERSHEY_SIMPLEX

# BGR
WHITE = (255, 255, 255)
GRAY = (160, 160, 160)
OUTLINE = (60, 60, 60)
TEXT = (0, 0, 0)
COLORS = {
    StreetClass.GOOD: (60, 180, 60),
    StreetClass.ANOMALY: (0, 220, 240),
    StreetClass.BAD: (40, 40, 220),
}

# -----------------------
# Module global variables
# -----------------------

log = logging.getLogger(__name__.split(".")[-1])


class MapSource(StrEnum):
    PREDICTED = "predicted"
    TRUTH = "truth"


@dataclass(frozen=True)
class MapCell:
    col: int
    row: int
    border: bool
    chip: StreetClass | None  # None for border chips
    streets: Tuple[Tuple[Side, StreetClass | None], ...]


def map_cells(
    report: WaferReport, wafer_id: str, source: MapSource = MapSource.PREDICTED
) -> List[MapCell]:
    """Render data of a wafer, one cell per chip, in address order"""
    cells = list()
    chips = sorted((v for v in report.chips if v.wafer_id == wafer_id), key=lambda v: v.key)
    for v in chips:
        cells.append(_cell(v, MapSource(source)))
    return cells


def _cell(v: ChipVerdict, source: MapSource) -> MapCell:
    if source == MapSource.TRUTH:
        border = not v.truth
        sides = {side: v.truth.get(side) for side in Side.streets()}
        chip = None if border else v.true_class()
    else:
        border = v.border
        sides = {side: v.sides.get(side) for side in Side.streets()}
        chip = None if border else v.chip_class()
    if border:
        sides = {side: None for side in Side.streets()}
    return MapCell(v.col, v.row, border, chip, tuple(sides.items()))


def _bar(x0: int, y0: int, side: Side) -> Tuple[Tuple[int, int], Tuple[int, int]]:
    x1, y1 = x0 + CELL_PX, y0 + CELL_PX
    if side == Side.N:
        return (x0, y0), (x1, y0 + BAR_PX)
    if side == Side.S:
        return (x0, y1 - BAR_PX), (x1, y1)
    if side == Side.W:
        return (x0, y0), (x0 + BAR_PX, y1)
    return (x1 - BAR_PX, y0), (x1, y1)


def _color(label: StreetClass | None) -> Tuple[int, int, int]:
    return GRAY if label is None else COLORS[StreetClass(label)]


def render_wafer_map(
    report: WaferReport, wafer_id: str, source: MapSource = MapSource.PREDICTED
) -> np.ndarray:
    cells = map_cells(report, wafer_id, source)
    cols, rows = report.grids.get(wafer_id, (0, 0))
    if cells:
        cols = max(cols, max(c.col for c in cells) + 1)
        rows = max(rows, max(c.row for c in cells) + 1)
    step = CELL_PX + GAP_PX
    width = 2 * MARGIN_PX + cols * step
    height = 2 * MARGIN_PX + rows * step + LEGEND_PX
    img = np.full((height, width, 3), 255, dtype=np.uint8)
    # addressing grid
    for c in range(cols):
        x = MARGIN_PX + c * step + CELL_PX // 2 - 6
        cv2.putText(img, f"{c}", (x, MARGIN_PX - 8), FONT, 0.35, TEXT, 1, cv2.LINE_8)
    for r in range(rows):
        y = MARGIN_PX + r * step + CELL_PX // 2 + 4
        cv2.putText(img, f"{r}", (6, y), FONT, 0.35, TEXT, 1, cv2.LINE_8)
    for cell in cells:
        x0 = MARGIN_PX + cell.col * step
        y0 = MARGIN_PX + cell.row * step
        p0, p1 = (x0, y0), (x0 + CELL_PX, y0 + CELL_PX)
        cv2.rectangle(img, p0, p1, _color(cell.chip), -1)
        for side, label in cell.streets:
            b0, b1 = _bar(x0, y0, side)
            cv2.rectangle(img, b0, b1, _color(label), -1)
        cv2.rectangle(img, p0, p1, OUTLINE, 1)
    _legend(img, MARGIN_PX, height - LEGEND_PX + 10)
    log.debug("Wafer map %s: %d cells (%s)", wafer_id, len(cells), source)
    return img


def _legend(img: np.ndarray, x: int, y: int) -> None:
    entries = [(str(c), COLORS[c]) for c in StreetClass] + [("border / not found", GRAY)]
    for i, (name, color) in enumerate(entries):
        x0 = x + (i % 2) * 160
        y0 = y + (i // 2) * 22
        cv2.rectangle(img, (x0, y0), (x0 + 14, y0 + 14), color, -1)
        cv2.rectangle(img, (x0, y0), (x0 + 14, y0 + 14), OUTLINE, 1)
        cv2.putText(img, name, (x0 + 20, y0 + 12), FONT, 0.4, TEXT, 1, cv2.LINE_8)


def wafer_ids(report: WaferReport) -> List[str]:
    return sorted({v.wafer_id for v in report.chips})


def cell_counts(report: WaferReport, wafer_id: str) -> Dict[str, int]:
    counts = {"border": 0, **{str(c): 0 for c in StreetClass}}
    for cell in map_cells(report, wafer_id):
        counts["border" if cell.border else str(cell.chip)] += 1
    return counts

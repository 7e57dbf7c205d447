# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

# --------------------
# System wide imports
# -------------------

import math
import logging
import dataclasses

from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Tuple

# ---------------------------
# Third-party library imports
# ----------------------------

import cv2
import numpy as np

# --------------
# local imports
# -------------

from .. import StreetClass, Side, Polarity, Orientation, CHIP_MARGIN

# ----------------
# Module constants
# ----------------

# Gray levels per polarity: (street, chip, kerf)
PALETTE = {
    Polarity.DARK: (45, 190, 5),
    Polarity.LIGHT: (205, 70, 250),
}
WAFER_BORDER_LEVEL = 0
MAX_INNER_LINES = 8

# -----------------------
# Module global variables
# -----------------------

# get the module logger
log = logging.getLogger(__name__.split(".")[-1])


@dataclass(frozen=True)
class WaferSpec:
    grid_cols: int = 12
    grid_rows: int = 12
    chip_px: int = 400
    street_width_px: int = 10
    polarity: Polarity = Polarity.DARK
    inner_structure_density: float = 0.3
    wafer_radius_chips: float = 6.0
    noise_sigma: float = 4.0
    seed: int = 0
    # Per wafer rate overrides: probability of a street event and
    # the share of those events that are anomalies instead of faults
    fault_rate: float = 0.078
    anomaly_share: float = 0.474
    # Fault geometry, in street widths
    fault_extent_widths: float = 3.0
    fault_depth_widths: float = 1.5

    def __post_init__(self):
        object.__setattr__(self, "polarity", Polarity(self.polarity))
        if self.grid_cols <= 0 or self.grid_rows <= 0:
            raise ValueError("chip grid counts must be positive")
        if not 200 <= self.chip_px <= 2000:
            raise ValueError(f"chip_px {self.chip_px} out of range [200, 2000]")
        if self.street_width_px < 4:
            raise ValueError(f"street_width_px {self.street_width_px} must be >= 4")
        if self.chip_px < (8 + self.fault_extent_widths) * self.street_width_px:
            raise ValueError("chip too small to place faults away from the street crossings")
        if not 0.0 <= self.inner_structure_density <= 1.0:
            raise ValueError("inner_structure_density must lie in [0,1]")
        if not 0.0 <= self.fault_rate <= 1.0 or not 0.0 <= self.anomaly_share <= 1.0:
            raise ValueError("fault_rate and anomaly_share must lie in [0,1]")
        if self.wafer_radius_chips <= 0 or self.noise_sigma < 0:
            raise ValueError("wafer radius must be positive and noise non negative")

    @property
    def pitch(self) -> int:
        return self.chip_px + self.street_width_px

    @property
    def chip_margin(self) -> int:
        return int(math.ceil(CHIP_MARGIN * self.chip_px))

    @property
    def image_margin(self) -> int:
        return self.chip_margin + 2 * self.street_width_px

    @property
    def kerf_px(self) -> int:
        return max(1, self.street_width_px // 4)

    def image_shape(self) -> Tuple[int, int]:
        m, s = self.image_margin, self.street_width_px
        return (2 * m + self.grid_rows * self.pitch + s, 2 * m + self.grid_cols * self.pitch + s)

    def to_dict(self) -> Dict[str, Any]:
        d = dataclasses.asdict(self)
        d["polarity"] = str(self.polarity)
        return d


@dataclass
class ChipTruth:
    col: int
    row: int
    border: bool
    x0: int  # top left corner in wafer pixels
    y0: int


@dataclass
class StreetTruth:
    col: int
    row: int
    side: Side
    label: StreetClass
    center: Tuple[float, float]  # (x, y) relative to the chip top left corner
    orientation: Orientation


@dataclass
class GroundTruth:
    wafer_id: str
    spec: WaferSpec
    chips: List[ChipTruth] = field(default_factory=list)
    streets: List[StreetTruth] = field(default_factory=list)
    # Kerf pixels (255) of the rendered image, not serialized
    kerf_mask: np.ndarray | None = field(default=None, repr=False, compare=False)

    def chip(self, col: int, row: int) -> ChipTruth:
        for chip in self.chips:
            if chip.col == col and chip.row == row:
                return chip
        raise KeyError((col, row))

    def inside_chips(self) -> List[ChipTruth]:
        return [chip for chip in self.chips if not chip.border]

    def streets_of(self, col: int, row: int) -> Dict[Side, StreetTruth]:
        return {st.side: st for st in self.streets if st.col == col and st.row == row}

    def chip_label(self, col: int, row: int) -> StreetClass:
        labels = [st.label for st in self.streets_of(col, row).values()]
        return max(labels) if labels else StreetClass.GOOD

    def to_dict(self) -> Dict[str, Any]:
        return {
            "wafer_id": self.wafer_id,
            "spec": self.spec.to_dict(),
            "chips": [dataclasses.asdict(c) for c in self.chips],
            "streets": [
                {
                    "col": s.col,
                    "row": s.row,
                    "side": str(s.side),
                    "label": int(s.label),
                    "center": list(s.center),
                    "orientation": str(s.orientation),
                }
                for s in self.streets
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "GroundTruth":
        return cls(
            wafer_id=d["wafer_id"],
            spec=WaferSpec(**d["spec"]),
            chips=[ChipTruth(**c) for c in d["chips"]],
            streets=[
                StreetTruth(
                    col=s["col"],
                    row=s["row"],
                    side=Side(s["side"]),
                    label=StreetClass(s["label"]),
                    center=tuple(s["center"]),
                    orientation=Orientation(s["orientation"]),
                )
                for s in d["streets"]
            ],
        )


# -------------------
# Auxiliary functions
# -------------------


def street_center(side: Side, chip_px: int, street_width_px: int) -> Tuple[float, float]:
    """Street segment center (x, y) relative to the chip top left corner"""
    half_s = street_width_px / 2
    return {
        Side.N: (chip_px / 2, -half_s),
        Side.S: (chip_px / 2, chip_px + half_s),
        Side.W: (-half_s, chip_px / 2),
        Side.E: (chip_px + half_s, chip_px / 2),
    }[side]


def _chip_origin(spec: WaferSpec, col: int, row: int) -> Tuple[int, int]:
    m, s = spec.image_margin, spec.street_width_px
    return m + s + col * spec.pitch, m + s + row * spec.pitch


def _street_origin(spec: WaferSpec, k: int) -> int:
    """Top (or left) pixel of the k-th street band"""
    return spec.image_margin + k * spec.pitch


def _chip_status(spec: WaferSpec, cx: float, cy: float, radius: float, x0: int, y0: int) -> str:
    x1, y1 = x0 + spec.chip_px, y0 + spec.chip_px
    corners = ((x0, y0), (x1, y0), (x0, y1), (x1, y1))
    if all(math.hypot(x - cx, y - cy) <= radius for x, y in corners):
        return "inside"
    nx, ny = min(max(cx, x0), x1), min(max(cy, y0), y1)
    if math.hypot(nx - cx, ny - cy) < radius:
        return "border"
    return "absent"


def _draw_inner_structures(
    img: np.ndarray, spec: WaferSpec, x0: int, y0: int, level: int, rng: np.random.Generator
) -> None:
    """Line like structures confined to the central part of a chip"""
    n = int(round(spec.inner_structure_density * MAX_INNER_LINES))
    lo, hi = 0.2 * spec.chip_px, 0.8 * spec.chip_px
    for _ in range(n):
        width = max(2, int(round(spec.street_width_px * rng.uniform(0.5, 1.2))))
        length = rng.uniform(0.2, 0.6) * spec.chip_px
        a = rng.uniform(lo, hi - length) if hi - length > lo else lo
        b = rng.uniform(lo + width, hi - width)
        if rng.random() < 0.5:
            p0, p1 = (x0 + a, y0 + b), (x0 + a + length, y0 + b)
        else:
            p0, p1 = (x0 + b, y0 + a), (x0 + b, y0 + a + length)
        cv2.line(img, tuple(map(int, p0)), tuple(map(int, p1)), level, width, cv2.LINE_8)


def _bump(u: np.ndarray) -> np.ndarray:
    """Smooth polynomial excursion profile, 1 at the center, 0 beyond |u| = 1"""
    return np.where(np.abs(u) < 1.0, (1.0 - u**2) ** 2, 0.0)


def _assign_labels(spec: WaferSpec, rng: np.random.Generator) -> StreetClass:
    if rng.random() >= spec.fault_rate:
        return StreetClass.GOOD
    return StreetClass.ANOMALY if rng.random() < spec.anomaly_share else StreetClass.BAD


# Which street and which way an excursion must go to enter the owning chip
# (street index offset along the row/col axis, direction sign)
_SIDE_STREET = {
    Side.N: (0, +1.0),
    Side.S: (1, -1.0),
    Side.W: (0, +1.0),
    Side.E: (1, -1.0),
}


def generate_wafer(spec: WaferSpec, wafer_id: str = "W000") -> Tuple[np.ndarray, GroundTruth]:
    """Render a wafer image (8 bit grayscale) and its exact ground truth"""
    rng = np.random.default_rng(spec.seed)
    street_level, chip_level, kerf_level = PALETTE[spec.polarity]
    height, width = spec.image_shape()
    s = spec.street_width_px
    img = np.full((height, width), street_level, dtype=np.uint8)
    truth = GroundTruth(wafer_id=wafer_id, spec=spec)

    # Wafer disk
    cy, cx = height / 2, width / 2
    radius = spec.wafer_radius_chips * spec.pitch
    for row in range(spec.grid_rows):
        for col in range(spec.grid_cols):
            x0, y0 = _chip_origin(spec, col, row)
            status = _chip_status(spec, cx, cy, radius, x0, y0)
            if status == "absent":
                continue
            truth.chips.append(ChipTruth(col=col, row=row, border=status == "border", x0=x0, y0=y0))
            img[y0 : y0 + spec.chip_px, x0 : x0 + spec.chip_px] = chip_level
            _draw_inner_structures(img, spec, x0, y0, street_level, rng)
    if truth.chips and not truth.inside_chips():
        log.warning(
            "[%s] chip grid larger than the wafer disk: all %d chips are border chips",
            wafer_id,
            len(truth.chips),
        )

    # Street segment labels, four per inside chip
    for chip in truth.inside_chips():
        for side in Side.streets():
            truth.streets.append(
                StreetTruth(
                    col=chip.col,
                    row=chip.row,
                    side=side,
                    label=_assign_labels(spec, rng),
                    center=street_center(side, spec.chip_px, s),
                    orientation=Orientation.H if side.horizontal() else Orientation.V,
                )
            )

    # Kerf centerlines with fault excursions
    kerf_mask = np.zeros_like(img)
    amplitude_jitter = s / 8
    for orientation, n_streets, length in (
        (Orientation.H, spec.grid_rows + 1, width),
        (Orientation.V, spec.grid_cols + 1, height),
    ):
        t = np.arange(0, length, 2, dtype=np.float64)
        for k in range(n_streets):
            offset = np.full_like(t, _street_origin(spec, k) + s / 2 - 0.5)
            offset += rng.uniform(-amplitude_jitter, amplitude_jitter)
            for st in truth.streets:
                if st.orientation != orientation or st.label != StreetClass.BAD:
                    continue
                delta, sign = _SIDE_STREET[st.side]
                chip = truth.chip(st.col, st.row)
                owner = st.row if orientation == Orientation.H else st.col
                if owner + delta != k:
                    continue
                start = chip.x0 if orientation == Orientation.H else chip.y0
                extent = max(6.0, spec.fault_extent_widths * s * rng.uniform(0.7, 1.0))
                lo = start + 4 * s + extent / 2
                hi = start + spec.chip_px - 4 * s - extent / 2
                center = rng.uniform(lo, hi)
                amplitude = s / 2 + spec.fault_depth_widths * s * rng.uniform(0.7, 1.0)
                offset += sign * amplitude * _bump((t - center) / (extent / 2))
            if orientation == Orientation.H:
                pts = np.stack([t, offset], axis=1)
            else:
                pts = np.stack([offset, t], axis=1)
            pts = np.round(pts).astype(np.int32).reshape(-1, 1, 2)
            cv2.polylines(img, [pts], False, kerf_level, spec.kerf_px, cv2.LINE_8)
            cv2.polylines(kerf_mask, [pts], False, 255, spec.kerf_px, cv2.LINE_8)

    # Anomalies: small blobs on the street, never crossing its edges
    for st in truth.streets:
        if st.label != StreetClass.ANOMALY:
            continue
        chip = truth.chip(st.col, st.row)
        sx, sy = st.center
        along = rng.uniform(-0.3, 0.3) * spec.chip_px
        across_axis = max(1, (s - 2) // 4)
        along_axis = max(2, int(round(s * rng.uniform(0.5, 1.5))))
        level = int(np.clip(128 + rng.uniform(-40, 40), 0, 255))
        if st.orientation == Orientation.H:
            c = (int(round(chip.x0 + sx + along)), int(round(chip.y0 + sy)))
            axes = (along_axis, across_axis)
        else:
            c = (int(round(chip.x0 + sx)), int(round(chip.y0 + sy + along)))
            axes = (across_axis, along_axis)
        cv2.ellipse(img, c, axes, 0, 0, 360, level, -1, cv2.LINE_8)

    if spec.noise_sigma > 0:
        noisy = img.astype(np.float32) + rng.normal(0.0, spec.noise_sigma, img.shape)
        img = np.clip(np.round(noisy), 0, 255).astype(np.uint8)
    yy, xx = np.ogrid[:height, :width]
    outside = (xx - cx) ** 2 + (yy - cy) ** 2 > radius**2
    img[outside] = WAFER_BORDER_LEVEL
    kerf_mask[outside] = 0
    truth.kerf_mask = kerf_mask
    n_inside = len(truth.inside_chips())
    log.info(
        "[%s] %d chips (%d inside, %d border), %d street segments",
        wafer_id,
        len(truth.chips),
        n_inside,
        len(truth.chips) - n_inside,
        len(truth.streets),
    )
    return img, truth


def chip_crop(image: np.ndarray, truth: GroundTruth, col: int, row: int) -> np.ndarray:
    """Chip context image: the chip plus a margin of CHIP_MARGIN chip sides around it"""
    chip = truth.chip(col, row)
    m = truth.spec.chip_margin
    n = truth.spec.chip_px + 2 * m
    return image[chip.y0 - m : chip.y0 - m + n, chip.x0 - m : chip.x0 - m + n].copy()


def fault_zone(truth: GroundTruth, street: StreetTruth) -> Tuple[slice, slice]:
    """
    Region of the owning chip where an excursion from this street segment lands.
    Kerf pixels inside it mark a faulty segment.
    """
    spec = truth.spec
    chip = truth.chip(street.col, street.row)
    s, c = spec.street_width_px, spec.chip_px
    depth, keep = 3 * s, int(2.5 * s)
    x0, y0 = chip.x0, chip.y0
    if street.side == Side.N:
        return slice(y0, y0 + depth), slice(x0 + keep, x0 + c - keep)
    if street.side == Side.S:
        return slice(y0 + c - depth, y0 + c), slice(x0 + keep, x0 + c - keep)
    if street.side == Side.W:
        return slice(y0 + keep, y0 + c - keep), slice(x0, x0 + depth)
    return slice(y0 + keep, y0 + c - keep), slice(x0 + c - depth, x0 + c)

# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

# --------------------
# System wide imports
# -------------------

import os
import json
import logging

from dataclasses import dataclass
from typing import List, Sequence, Tuple

# ---------------------------
# Third-party library imports
# ----------------------------

import cv2
import numpy as np

# --------------
# local imports
# -------------

from .. import Side, Split, StreetClass, Polarity, CHIP_INPUT
from ..error import DataError
from ..roi import extract_roi, truth_fixation
from .wafer import WaferSpec, GroundTruth, generate_wafer, chip_crop
from .manifest import DatasetManifest, ManifestRecord, assign_splits, write_manifest

# ----------------
# Module constants
# ----------------

# (chip_px, street_width_px, polarity) of the stock wafer types
WAFER_TYPES = (
    (300, 8, "dark"),
    (300, 12, "light"),
    (400, 10, "dark"),
    (400, 14, "light"),
    (250, 8, "light"),
    (350, 10, "dark"),
)
CHIP_STREET_MARGIN = 1.5  # street widths kept around the chip for whole chip classifiers

# -----------------------
# Module global variables
# -----------------------

log = logging.getLogger(__name__.split(".")[-1])


@dataclass(frozen=True)
class CorpusSpec:
    n_wafers: int = 6
    seed: int = 0
    grid_cols: int = 10
    grid_rows: int = 10
    wafer_radius_chips: float = 5.0
    wafer_types: Tuple[Tuple[int, int, str], ...] = WAFER_TYPES
    inner_structure_density: float = 0.3
    noise_sigma: float = 4.0
    fault_rate: float = 0.078
    anomaly_share: float = 0.474
    fault_extent_widths: float = 3.0
    fault_depth_widths: float = 1.5
    jitter_px: float = 3.0  # street ROI center jitter, emulating attention precision

    def __post_init__(self):
        object.__setattr__(self, "wafer_types", tuple(tuple(t) for t in self.wafer_types))
        if self.n_wafers <= 0 or not self.wafer_types:
            raise ValueError("corpus needs at least one wafer and one wafer type")

    def wafer_specs(self) -> List[WaferSpec]:
        specs = list()
        for i in range(self.n_wafers):
            chip_px, street_width_px, polarity = self.wafer_types[i % len(self.wafer_types)]
            specs.append(
                WaferSpec(
                    grid_cols=self.grid_cols,
                    grid_rows=self.grid_rows,
                    chip_px=int(chip_px),
                    street_width_px=int(street_width_px),
                    polarity=Polarity(polarity),
                    inner_structure_density=self.inner_structure_density,
                    wafer_radius_chips=self.wafer_radius_chips,
                    noise_sigma=self.noise_sigma,
                    seed=self.seed * 1000 + i,
                    fault_rate=self.fault_rate,
                    anomaly_share=self.anomaly_share,
                    fault_extent_widths=self.fault_extent_widths,
                    fault_depth_widths=self.fault_depth_widths,
                )
            )
        return specs


def wafer_id_of(index: int) -> str:
    return f"W{index:03d}"


def chip_id_of(wafer_id: str, col: int, row: int) -> str:
    return f"{wafer_id}_c{col:02d}_r{row:02d}"


def chip_input(crop: np.ndarray, margin_px: int, chip_px: int, street_width_px: int) -> np.ndarray:
    """Whole chip classifier input: the chip plus 1.5 street widths, resized to 96x96"""
    keep = int(round(CHIP_STREET_MARGIN * street_width_px))
    lo = max(0, margin_px - keep)
    hi = min(crop.shape[0], margin_px + chip_px + keep)
    rows, cols = CHIP_INPUT
    return cv2.resize(crop[lo:hi, lo:hi], (cols, rows), interpolation=cv2.INTER_AREA)


def _write(path: str, image: np.ndarray) -> None:
    if not cv2.imwrite(path, image):
        raise DataError(f"cannot write image {path}")


def render_wafer(
    spec: WaferSpec, wafer_id: str, out_dir: str, jitter_px: float = 3.0
) -> List[ManifestRecord]:
    """Generate one wafer and write its images, ground truth and manifest records"""
    image, truth = generate_wafer(spec, wafer_id)
    rng = np.random.default_rng([spec.seed, 1])
    for sub in ("wafers", "chips", "streets"):
        os.makedirs(os.path.join(out_dir, sub), exist_ok=True)
    _write(os.path.join(out_dir, "wafers", f"{wafer_id}.png"), image)
    with open(os.path.join(out_dir, "wafers", f"{wafer_id}.json"), "w") as fd:
        json.dump(truth.to_dict(), fd, indent=1)
    common = dict(
        wafer_id=wafer_id,
        split=Split.TRAIN,
        chip_px=spec.chip_px,
        street_width_px=spec.street_width_px,
        margin_px=spec.chip_margin,
    )
    records = list()
    for chip in truth.chips:
        chip_id = chip_id_of(wafer_id, chip.col, chip.row)
        crop = chip_crop(image, truth, chip.col, chip.row)
        rel = os.path.join("chips", f"{chip_id}.png")
        _write(os.path.join(out_dir, rel), crop)
        label = StreetClass.GOOD if chip.border else truth.chip_label(chip.col, chip.row)
        records.append(
            ManifestRecord(
                image_path=rel,
                chip_col=chip.col,
                chip_row=chip.row,
                side=Side.CHIP,
                label=label,
                border=chip.border,
                **common,
            )
        )
        if chip.border:
            continue
        for side, street in truth.streets_of(chip.col, chip.row).items():
            dx, dy = rng.uniform(-jitter_px, jitter_px, size=2)
            center = (street.center[0] + dx, street.center[1] + dy)
            fixation = truth_fixation(center, spec.chip_px, spec.chip_margin)
            roi = extract_roi(
                crop, fixation, spec.street_width_px, spec.chip_px, chip_id=chip_id, side=side
            )
            if not roi.valid:
                log.warning("[%s] %s street ROI rejected: %s", chip_id, side, roi.reason)
                continue
            rel = os.path.join("streets", f"{chip_id}_{side}.png")
            _write(os.path.join(out_dir, rel), roi.image)
            records.append(
                ManifestRecord(
                    image_path=rel,
                    chip_col=chip.col,
                    chip_row=chip.row,
                    side=side,
                    label=street.label,
                    **common,
                )
            )
    return records


def finish_manifest(
    records: Sequence[ManifestRecord],
    corpus: CorpusSpec,
    out_dir: str,
    name: str = "manifest.jsonl",
) -> DatasetManifest:
    records = list(records)
    assign_splits(records, np.random.default_rng([corpus.seed, 2]))
    spec = {"corpus": {k: v for k, v in corpus.__dict__.items()}}
    spec["corpus"]["wafer_types"] = [list(t) for t in corpus.wafer_types]
    manifest = DatasetManifest(records=records, spec=spec, base_dir=out_dir)
    write_manifest(os.path.join(out_dir, name), manifest)
    return manifest


def build_dataset(corpus: CorpusSpec, out_dir: str) -> DatasetManifest:
    """Sequential corpus generation; see the dataset controller for the parallel version"""
    records = list()
    for i, spec in enumerate(corpus.wafer_specs()):
        records.extend(render_wafer(spec, wafer_id_of(i), out_dir, corpus.jitter_px))
    return finish_manifest(records, corpus, out_dir)


def load_truth(out_dir: str, wafer_id: str) -> Tuple[np.ndarray, GroundTruth]:
    base = os.path.join(out_dir, "wafers", wafer_id)
    image = cv2.imread(base + ".png", cv2.IMREAD_GRAYSCALE)
    if image is None:
        raise DataError(f"cannot read wafer image {base}.png")
    with open(base + ".json") as fd:
        truth = GroundTruth.from_dict(json.load(fd))
    return image, truth

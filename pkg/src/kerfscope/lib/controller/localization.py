# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

"""Street localization quality of the attention model on a generated corpus"""

# --------------------
# System wide imports
# -------------------

import asyncio
import logging

from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence

# ---------------------------
# Third-party library imports
# ----------------------------

import cv2

# --------------
# local imports
# -------------

from ..config import default_workers
from ..error import DataError
from ..roi import in_center, measure_precision
from ..synth.dataset import chip_id_of, load_truth
from ..synth.manifest import DatasetManifest, ManifestRecord
from ..synth.wafer import GroundTruth
from ..attention.model import AttentionModel, SaccadePlan, fixation_to_chip, pairwise_separation

# -----------------------
# Module global variables
# -----------------------

log = logging.getLogger(__name__.split(".")[-1])


@dataclass
class LocalizationReport:
    n_chips: int = 0
    total_streets: int = 0
    found_streets: int = 0
    center_fixations: int = 0
    separated_chips: int = 0  # chips whose fixations are all further apart than sigma IOR
    precision: Dict[str, Any] = field(default_factory=dict)
    plans: List[SaccadePlan] = field(default_factory=list, repr=False)

    @property
    def found_rate(self) -> float:
        return self.found_streets / self.total_streets if self.total_streets else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_chips": self.n_chips,
            "total_streets": self.total_streets,
            "found_streets": self.found_streets,
            "found_rate": self.found_rate,
            "center_fixations": self.center_fixations,
            "separated_chips": self.separated_chips,
            "precision": self.precision,
        }


def score_plans(
    plans: Sequence[SaccadePlan],
    records: Sequence[ManifestRecord],
    truths: Dict[str, GroundTruth],
    min_separation: float,
) -> LocalizationReport:
    """A street is found when a valid fixation lands on its side of the chip"""
    report = LocalizationReport(n_chips=len(plans), plans=list(plans))
    found, true = list(), list()
    for plan, record in zip(plans, records):
        truth = truths[record.wafer_id]
        spec = truth.spec
        streets = truth.streets_of(record.chip_col, record.chip_row)
        report.total_streets += len(streets)
        report.center_fixations += sum(1 for s in plan.saccades if in_center(s.fixation))
        if len(plan.saccades) > 1 and pairwise_separation(plan.fixations()) > min_separation:
            report.separated_chips += 1
        seen = set()
        for s in plan.saccades:
            if not s.valid or s.side in seen or s.side not in streets:
                continue
            seen.add(s.side)
            found.append(fixation_to_chip(s.fixation, spec.chip_px, spec.chip_margin))
            true.append(streets[s.side].center)
        report.found_streets += len(seen)
    report.precision = measure_precision(found, true).to_dict()
    return report


async def evaluate_localization(
    model: AttentionModel,
    manifest: DatasetManifest,
    limit: int | None = None,
    workers: int | None = None,
) -> LocalizationReport:
    records = [r for r in manifest.select(kind="chip") if not r.border and not r.duplicate]
    records = records[:limit] if limit else records
    if not records:
        raise DataError("no inside chips in the manifest")
    truths = dict()
    for wafer_id in sorted({r.wafer_id for r in records}):
        _, truths[wafer_id] = await asyncio.to_thread(load_truth, manifest.base_dir, wafer_id)
    semaphore = asyncio.Semaphore(workers if workers is not None else default_workers())

    async def attend(record: ManifestRecord) -> SaccadePlan:
        async with semaphore:
            crop = cv2.imread(manifest.path_of(record), cv2.IMREAD_GRAYSCALE)
            if crop is None:
                raise DataError(f"cannot read {record.image_path}")
            chip_id = chip_id_of(record.wafer_id, record.chip_col, record.chip_row)
            return await asyncio.to_thread(model.find_streets, crop, chip_id)

    async with asyncio.TaskGroup() as tg:
        tasks = [tg.create_task(attend(r)) for r in records]
    plans = [t.result() for t in tasks]
    min_separation = 1.0 / model.fef.ior_sigma_div
    return score_plans(plans, records, truths, min_separation)

# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

"""
Whole wafer inspection: inside chip detection, street search by visual
attention, street classification and chip aggregation.
"""

# --------------------
# System wide imports
# -------------------

import os
import json
import asyncio
import logging

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Sequence, Set

# ---------------------------
# Third-party library imports
# ----------------------------

import cv2
import numpy as np

from pubsub import pub

# --------------
# local imports
# -------------

from .. import Side
from ..config import Config, default_workers
from ..error import ConfigError, DataError
from ..roi import RoiParams, WidthSource, extract_roi, contrast_normalize, measure_precision
from ..synth.wafer import ChipTruth, GroundTruth, WaferSpec, chip_crop
from ..synth.dataset import chip_id_of, chip_input, load_truth
from ..attention.hva import TemplateBank
from ..attention.model import AttentionModel, fixation_to_chip
from ..nn.checkpoint import load_network
from ..nn.network import Network
from .metrics import ChipKey, ChipVerdict, WaferReport, compute_metrics
from .training import as_street_class
from .types import Event

# -----------------------
# Module global variables
# -----------------------

log = logging.getLogger(__name__.split(".")[-1])


@dataclass(frozen=True)
class PipelineParams:
    workers: int | None = None  # None: KERFSCOPE_WORKERS
    border_threshold: float = 0.5
    dump_activity: bool = False

    def __post_init__(self):
        if not 0.0 < self.border_threshold < 1.0:
            raise ValueError("border_threshold must lie in (0,1)")
        if self.workers is not None and self.workers < 1:
            raise ValueError("at least one worker is needed")


@dataclass
class Models:
    border: Network
    street: Network
    attention: AttentionModel

    @classmethod
    def load(
        cls, border_path: str, street_path: str, templates_path: str, config: Config
    ) -> "Models":
        paths = {"border model": border_path, "street model": street_path}
        paths["template bank"] = templates_path
        missing = [f"{k} ({v})" for k, v in paths.items() if not v or not os.path.isfile(v)]
        if missing:
            raise ConfigError(f"missing {', '.join(missing)}")
        border, _ = load_network(border_path)
        street, _ = load_network(street_path)
        if border.num_classes != 2:
            raise ConfigError(f"{border_path} is not an inside/border classifier")
        if street.spec.name != "street":
            raise ConfigError(f"{street_path} holds a {street.spec.name} network")
        attention = AttentionModel.from_config(TemplateBank.load(templates_path), config)
        return cls(border, street, attention)


def attend_chip(
    attention: AttentionModel,
    street: Network,
    crop: np.ndarray,
    spec: WaferSpec,
    verdict: ChipVerdict,
    roi_params: RoiParams,
    out_dir: str | None = None,
    dump_dir: str | None = None,
) -> ChipVerdict:
    """Street search, ROI extraction and street classification of an inside chip"""
    chip_id = chip_id_of(verdict.wafer_id, verdict.col, verdict.row)
    plan = attention.find_streets(crop, chip_id, dump_dir)
    rois = list()
    for saccade in plan.saccades:
        if saccade.side in verdict.fixations:
            log.info("[%s] side %s fixated twice, keeping the first ROI", chip_id, saccade.side)
            continue
        if roi_params.width_source == WidthSource.TEMPLATE:
            width = saccade.width_px
        else:
            width = spec.street_width_px
        roi = extract_roi(crop, saccade.fixation, width, spec.chip_px, chip_id, saccade.side)
        if not roi.valid:
            log.warning("[%s] side %s not found: %s", chip_id, saccade.side, roi.reason)
            continue
        verdict.fixations[saccade.side] = saccade.fixation
        rois.append(roi)
    verdict.sides = {side: None for side in Side.streets()}
    if not rois:
        return verdict
    batch = np.stack([contrast_normalize(r.image) for r in rois])[..., np.newaxis]
    for roi, pred in zip(rois, street.predict(batch)):
        verdict.sides[roi.side] = as_street_class(int(pred), street.num_classes)
        if roi_params.save and out_dir is not None:
            rel = os.path.join("rois", f"{chip_id}_{roi.side}.png")
            os.makedirs(os.path.join(out_dir, "rois"), exist_ok=True)
            if not cv2.imwrite(os.path.join(out_dir, rel), roi.image):
                raise DataError(f"cannot write ROI image {rel}")
            verdict.roi_paths[roi.side] = rel
    return verdict


def inspect_chip(
    models: Models,
    crop: np.ndarray,
    chip: ChipTruth,
    truth: GroundTruth,
    params: PipelineParams,
    roi_params: RoiParams,
    out_dir: str | None = None,
) -> ChipVerdict:
    """Verdict of one chip context crop; ground truth is used for the geometry only"""
    spec = truth.spec
    chip_id = chip_id_of(truth.wafer_id, chip.col, chip.row)
    verdict = ChipVerdict(truth.wafer_id, chip.col, chip.row, border_truth=chip.border)
    x = contrast_normalize(chip_input(crop, spec.chip_margin, spec.chip_px, spec.street_width_px))
    p_border = models.border.predict_proba(x[np.newaxis, ..., np.newaxis])[0, 1]
    verdict.border = bool(p_border >= params.border_threshold)
    if verdict.border:
        log.debug("[%s] border chip (p = %.3f)", chip_id, p_border)
        return verdict
    dump_dir = None
    if params.dump_activity and out_dir is not None:
        dump_dir = os.path.join(out_dir, "activity")
    return attend_chip(
        models.attention, models.street, crop, spec, verdict, roi_params, out_dir, dump_dir
    )


def street_truth(truths: Iterable[GroundTruth]) -> Dict[ChipKey, Dict[Side, int]]:
    result = dict()
    for truth in truths:
        for chip in truth.inside_chips():
            streets = truth.streets_of(chip.col, chip.row)
            result[(truth.wafer_id, chip.col, chip.row)] = {
                side: street.label for side, street in streets.items()
            }
    return result


def precision(verdicts: Sequence[ChipVerdict], truths: Mapping[str, GroundTruth]) -> Dict:
    """Street center deviations (chip pixels) of every found street of an inside chip"""
    found, true = list(), list()
    for v in verdicts:
        truth = truths.get(v.wafer_id)
        if v.border or truth is None or truth.chip(v.col, v.row).border:
            continue
        streets = truth.streets_of(v.col, v.row)
        spec = truth.spec
        for side, fixation in sorted(v.fixations.items()):
            if side in streets:
                found.append(fixation_to_chip(fixation, spec.chip_px, spec.chip_margin))
                true.append(streets[side].center)
    return measure_precision(found, true).to_dict()


def write_verdicts(path: str, verdicts: Sequence[ChipVerdict]) -> None:
    with open(path, "w", encoding="utf-8") as fd:
        for v in verdicts:
            fd.write(json.dumps(v.to_dict(), sort_keys=True) + "\n")


def write_report(path: str, report: WaferReport) -> None:
    with open(path, "w", encoding="utf-8") as fd:
        json.dump(report.to_dict(), fd, indent=1, sort_keys=True)


def read_report(path: str) -> WaferReport:
    if not os.path.isfile(path):
        raise DataError(f"report not found: {path}")
    with open(path, "r", encoding="utf-8") as fd:
        try:
            return WaferReport.from_dict(json.load(fd))
        except (json.JSONDecodeError, KeyError, ValueError) as e:
            raise DataError(f"{path}: malformed report ({e})") from e


class Controller:
    """Bounded fan out of chip inspections over worker threads"""

    def __init__(
        self,
        models: Models,
        params: PipelineParams = PipelineParams(),
        roi: RoiParams = RoiParams(),
        out_dir: str | None = None,
    ):
        self.models = models
        self.params = params
        self.roi = roi
        self.out_dir = out_dir
        self.workers = params.workers if params.workers is not None else default_workers()

    async def run_wafer(
        self, image: np.ndarray, truth: GroundTruth, chips: Set[ChipKey] | None = None
    ) -> List[ChipVerdict]:
        todo = [
            c for c in truth.chips if chips is None or (truth.wafer_id, c.col, c.row) in chips
        ]
        if not any(not c.border for c in todo):
            log.warning("[%s] no inside chips to inspect", truth.wafer_id)
        pub.sendMessage(Event.WAFER_START, wafer_id=truth.wafer_id, n_chips=len(todo))
        semaphore = asyncio.Semaphore(self.workers)

        async def inspect(chip: ChipTruth) -> ChipVerdict:
            async with semaphore:
                crop = chip_crop(image, truth, chip.col, chip.row)
                verdict = await asyncio.to_thread(
                    inspect_chip,
                    self.models,
                    crop,
                    chip,
                    truth,
                    self.params,
                    self.roi,
                    self.out_dir,
                )
            pub.sendMessage(Event.CHIP, verdict=verdict)
            return verdict

        async with asyncio.TaskGroup() as tg:
            tasks = [tg.create_task(inspect(chip)) for chip in todo]
        verdicts = sorted((t.result() for t in tasks), key=lambda v: v.key)
        pub.sendMessage(Event.WAFER_END, wafer_id=truth.wafer_id, verdicts=verdicts)
        return verdicts

    async def run_pipeline(
        self,
        dataset_dir: str,
        wafer_ids: Sequence[str],
        chips: Set[ChipKey] | None = None,
    ) -> WaferReport:
        if not wafer_ids:
            raise DataError(f"no wafers to inspect in {dataset_dir}")
        verdicts = list()
        truths = dict()
        for wafer_id in wafer_ids:
            image, truth = await asyncio.to_thread(load_truth, dataset_dir, wafer_id)
            truths[wafer_id] = truth
            verdicts.extend(await self.run_wafer(image, truth, chips))
        grids = {w: (t.spec.grid_cols, t.spec.grid_rows) for w, t in truths.items()}
        report = compute_metrics(verdicts, street_truth(truths.values()), grids)
        report.precision = precision(report.chips, truths)
        if self.out_dir is not None:
            os.makedirs(self.out_dir, exist_ok=True)
            write_verdicts(os.path.join(self.out_dir, "verdicts.jsonl"), report.chips)
            write_report(os.path.join(self.out_dir, "report.json"), report)
        return report


def wafer_ids_of(dataset_dir: str) -> List[str]:
    """Wafers with a stored ground truth file in a dataset directory"""
    wafer_dir = os.path.join(dataset_dir, "wafers")
    if not os.path.isdir(wafer_dir):
        raise DataError(f"{dataset_dir} is not a dataset directory")
    return sorted(
        os.path.splitext(name)[0] for name in os.listdir(wafer_dir) if name.endswith(".json")
    )

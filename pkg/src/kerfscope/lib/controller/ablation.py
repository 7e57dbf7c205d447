# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

"""
Attention ablation: the street classifier fed by the attention model, with
chip aggregation, against a classifier that sees the whole chip, trained and
evaluated on the same corpus over several seeds. The street ROIs cut from the
ground truth give an oracle baseline for the street search.
"""

# --------------------
# System wide imports
# -------------------

import logging
import dataclasses

from collections import defaultdict
from typing import Any, Dict, List, Sequence, Tuple

# ---------------------------
# Third-party library imports
# ----------------------------

import numpy as np

from pubsub import pub

# --------------
# local imports
# -------------

from .. import Arch, Side, Split, StreetClass
from ..error import DataError
from ..roi import RoiParams
from ..synth.manifest import DatasetManifest
from ..synth.dataset import load_truth
from ..synth.wafer import chip_crop
from ..attention.model import AttentionModel, SaccadePlan
from ..nn.augment import AugmentSpec
from ..nn.network import Network
from .metrics import ChipKey, ChipVerdict, confusion, merge_confusion
from .pipeline import attend_chip
from .training import (
    TrainParams,
    EvalReport,
    SampleLoader,
    train_classifier,
    evaluate,
    predict_records,
    as_street_class,
)
from .types import Event

# ----------------
# Module constants
# ----------------

METRICS = ("accuracy", "macro_accuracy", "fault_detection")

# -----------------------
# Module global variables
# -----------------------

log = logging.getLogger(__name__.split(".")[-1])


class PlanCache:
    """Saccade plans do not depend on the street classifier, so every seed reuses them"""

    def __init__(self, attention: AttentionModel):
        self.attention = attention
        self.plans: Dict[str, SaccadePlan] = dict()

    def find_streets(
        self, crop: np.ndarray, chip_id: str, dump_dir: str | None = None
    ) -> SaccadePlan:
        if chip_id not in self.plans:
            self.plans[chip_id] = self.attention.find_streets(crop, chip_id, dump_dir)
        return self.plans[chip_id]


def graded_chips(manifest: DatasetManifest, split: Split | None) -> Dict[ChipKey, StreetClass]:
    return {
        (r.wafer_id, r.chip_col, r.chip_row): r.label
        for r in manifest.select(split, "chip")
        if not r.border and not r.duplicate
    }


def _report(chips: Dict[ChipKey, StreetClass], verdict: Dict[ChipKey, int]) -> EvalReport:
    keys = sorted(chips)
    raw = confusion(
        [int(chips[k]) for k in keys],
        [verdict.get(k, int(StreetClass.GOOD)) for k in keys],
        len(StreetClass),
    )
    return EvalReport(Arch.CHIP, raw, merge_confusion(raw))


def attention_chip_level(
    street: Network,
    attention: AttentionModel | PlanCache,
    manifest: DatasetManifest,
    split: Split | None,
    roi_params: RoiParams = RoiParams(),
) -> Tuple[EvalReport, float]:
    """Chip verdicts and street found rate of the attention guided classifier.

    Each graded chip is cropped from its stored wafer image, its streets are
    searched by the attention model and the street ROIs are classified.
    """
    chips = graded_chips(manifest, split)
    if not chips:
        raise DataError("no chips to evaluate")
    by_wafer: Dict[str, List[Tuple[int, int]]] = defaultdict(list)
    for wafer_id, col, row in sorted(chips):
        by_wafer[wafer_id].append((col, row))
    verdict: Dict[ChipKey, int] = dict()
    found = 0
    for wafer_id, cells in by_wafer.items():
        image, truth = load_truth(manifest.base_dir, wafer_id)
        for col, row in cells:
            crop = chip_crop(image, truth, col, row)
            v = attend_chip(
                attention, street, crop, truth.spec, ChipVerdict(wafer_id, col, row), roi_params
            )
            found += v.found
            verdict[v.key] = int(v.chip_class())
    found_rate = found / (len(Side.streets()) * len(chips))
    log.info("attention found %d streets of %d chips", found, len(chips))
    return _report(chips, verdict), found_rate


def oracle_chip_level(
    network: Network, manifest: DatasetManifest, split: Split | None
) -> EvalReport:
    """Chip verdicts aggregated from the ground truth street ROIs of every graded chip"""
    chips = graded_chips(manifest, split)
    streets = [
        r
        for r in manifest.select(None, "street")
        if (r.wafer_id, r.chip_col, r.chip_row) in chips and not r.duplicate
    ]
    if not streets:
        raise DataError("no street ROIs for the evaluation chips")
    pred = predict_records(network, SampleLoader(manifest, Arch.STREET), streets)
    verdict: Dict[ChipKey, int] = defaultdict(int)
    for r, p in zip(streets, pred):
        key = (r.wafer_id, r.chip_col, r.chip_row)
        verdict[key] = max(verdict[key], int(as_street_class(p, network.num_classes)))
    return _report(chips, verdict)


def _stats(values: Sequence[float]) -> Dict[str, float]:
    arr = np.asarray(values, dtype=np.float64)
    return {"mean": float(arr.mean()), "std": float(arr.std())}


def ablate_attention(
    manifest: DatasetManifest,
    attention: AttentionModel,
    params: TrainParams = TrainParams(),
    augment_spec: AugmentSpec = AugmentSpec(),
    seeds: Sequence[int] = (0, 1, 2),
    eval_manifest: DatasetManifest | None = None,
    roi_params: RoiParams = RoiParams(),
) -> Dict[str, Any]:
    if not seeds:
        raise DataError("ablation needs at least one seed")
    if eval_manifest is None:
        log.warning(
            "Evaluating on the test split of the training corpus: the street ROIs "
            "of a test chip may have been seen during training"
        )
        target, split = manifest, Split.TEST
    else:
        target, split = eval_manifest, None
    plans = PlanCache(attention)
    rounds: List[Dict[str, Any]] = list()
    for i, seed in enumerate(seeds, start=1):
        p = dataclasses.replace(params, seed=seed)
        street = train_classifier(manifest, Arch.STREET, p, augment_spec)
        whole = train_classifier(manifest, Arch.CHIP, p, augment_spec)
        attention_chip, found_rate = attention_chip_level(
            street.network, plans, target, split, roi_params
        )
        oracle_street = evaluate(street.network, target, Arch.STREET, split)
        oracle_chip = oracle_chip_level(street.network, target, split)
        whole_chip = evaluate(whole.network, target, Arch.CHIP, split)
        result = {
            "seed": seed,
            "attention": {"chip": attention_chip.to_dict(), "found_rate": found_rate},
            "oracle": {"street": oracle_street.to_dict(), "chip": oracle_chip.to_dict()},
            "whole_chip": whole_chip.to_dict(),
            "improvement": {
                m: getattr(attention_chip, m) - getattr(whole_chip, m) for m in METRICS
            },
        }
        rounds.append(result)
        pub.sendMessage(Event.ABLATION_ROUND, current=i, total=len(seeds), result=result)
    summary = {
        "attention": {m: _stats([r["attention"]["chip"][m] for r in rounds]) for m in METRICS},
        "found_rate": _stats([r["attention"]["found_rate"] for r in rounds]),
        "oracle": {m: _stats([r["oracle"]["chip"][m] for r in rounds]) for m in METRICS},
        "oracle_street": {
            m: _stats([r["oracle"]["street"][m] for r in rounds]) for m in METRICS
        },
        "whole_chip": {m: _stats([r["whole_chip"][m] for r in rounds]) for m in METRICS},
        "improvement": {m: _stats([r["improvement"][m] for r in rounds]) for m in METRICS},
    }
    return {
        "seeds": list(seeds),
        "held_out": eval_manifest is not None,
        "rounds": rounds,
        "summary": summary,
    }

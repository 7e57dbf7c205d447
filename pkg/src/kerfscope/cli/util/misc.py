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

from argparse import Namespace
from typing import Any, Mapping, Sequence

# -------------------
# Third party imports
# -------------------

from pubsub import pub

# --------------
# local imports
# -------------

from ...lib.config import Config
from ...lib.controller.types import Event
from ...lib.controller.metrics import ChipVerdict, WaferReport, normalized

# -----------------------
# Module global variables
# -----------------------

log = logging.getLogger(__name__.split(".")[-1])


def load_config(args: Namespace) -> Config:
    return Config.load(getattr(args, "config", None))


def write_json(path: str, obj: Any) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fd:
        json.dump(obj, fd, indent=2, sort_keys=True)
    log.info("Written %s", path)


# --------------
# Event handlers
# --------------


def on_synth(wafer_id: str, n_records: int) -> None:
    log.info("[%s] rendered, %d manifest records", wafer_id, n_records)


def on_saccade(chip_id: str, index: int, saccade: Any) -> None:
    log.debug(
        "[%s] saccade %d: (%0.3f, %0.3f) side %s, %d steps, template %d%s",
        chip_id,
        index + 1,
        saccade.x,
        saccade.y,
        saccade.side,
        saccade.steps,
        saccade.template,
        "" if saccade.valid else " (invalid)",
    )


def on_wafer_start(wafer_id: str, n_chips: int) -> None:
    log.info("=" * 74)
    log.info("[%s] inspecting %d chips", wafer_id, n_chips)


def on_chip(verdict: ChipVerdict) -> None:
    if verdict.border:
        log.debug("[%s] c%02d r%02d border chip", verdict.wafer_id, verdict.col, verdict.row)
        return
    log.info(
        "[%s] c%02d r%02d %-7s %s",
        verdict.wafer_id,
        verdict.col,
        verdict.row,
        verdict.chip_class(),
        " ".join(f"{s}={'-' if v is None else v}" for s, v in verdict.sides.items()),
    )


def on_wafer_end(wafer_id: str, verdicts: Sequence[ChipVerdict]) -> None:
    inside = [v for v in verdicts if not v.border]
    faulty = sum(1 for v in inside if v.faulty)
    log.info("[%s] %d inside chips, %d faulty", wafer_id, len(inside), faulty)
    log.info("=" * 74)


def on_train_start(arch: str, n_train: int, n_val: int) -> None:
    log.info("Training %s network on %d samples, validating on %d", arch, n_train, n_val)


def on_epoch(arch: str, stats: Mapping[str, float]) -> None:
    log.info(
        "[%s] epoch %03d: loss %0.4f, train acc %0.3f, val acc %0.3f, val macro %0.3f",
        arch,
        stats["epoch"],
        stats["loss"],
        stats["train_accuracy"],
        stats["val_accuracy"],
        stats["val_macro_accuracy"],
    )


def on_train_end(arch: str, best_epoch: int, best_score: float, elapsed: float) -> None:
    log.info(
        "[%s] best epoch %d, val macro accuracy %0.4f (%0.1f s)",
        arch,
        best_epoch,
        best_score,
        elapsed,
    )


def on_ablation_round(current: int, total: int, result: Mapping[str, Any]) -> None:
    log.info("=" * 74)
    log.info("%-10s %02d/%02d: seed %d", "ROUND", current, total, result["seed"])
    for name, r in (
        ("attention", result["attention"]["chip"]),
        ("oracle", result["oracle"]["chip"]),
        ("whole chip", result["whole_chip"]),
    ):
        log.info(
            "%-10s acc %0.4f, macro %0.4f, fault detection %0.4f",
            name,
            r["accuracy"],
            r["macro_accuracy"],
            r["fault_detection"],
        )
    if current == total:
        log.info("=" * 74)


def subscribe() -> None:
    pub.subscribe(on_synth, Event.SYNTH)
    pub.subscribe(on_saccade, Event.SACCADE)
    pub.subscribe(on_wafer_start, Event.WAFER_START)
    pub.subscribe(on_chip, Event.CHIP)
    pub.subscribe(on_wafer_end, Event.WAFER_END)
    pub.subscribe(on_train_start, Event.TRAIN_START)
    pub.subscribe(on_epoch, Event.EPOCH)
    pub.subscribe(on_train_end, Event.TRAIN_END)
    pub.subscribe(on_ablation_round, Event.ABLATION_ROUND)


# -------------
# Report output
# -------------


def log_matrix(title: str, m: Any) -> None:
    log.info("%s", title)
    for row, nrow in zip(m, normalized(m)):
        counts = " ".join(f"{v:6d}" for v in row)
        log.info("    %s    %s", counts, " ".join(f"{v:0.3f}" for v in nrow))


def log_report(report: WaferReport) -> None:
    log.info("#" * 74)
    log_matrix("Street confusion (good, anomaly, bad)", report.street_raw)
    log_matrix("Street confusion, merged (good, bad)", report.street_confusion)
    log_matrix("Chip confusion, merged (good, bad)", report.chip_confusion)
    for key, value in report.summary().items():
        log.info("%-22s = %0.4f", key, value)
    log.info(
        "Inside chips = %d, border chips = %d, border mismatches = %d",
        report.n_inside,
        report.n_border,
        report.border_mismatch,
    )
    if report.precision.get("n"):
        p = report.precision
        log.info(
            "Street center deviation: mean (%0.2f, %0.2f) px, std (%0.2f, %0.2f) px over %d",
            p["mean_x"],
            p["mean_y"],
            p["std_x"],
            p["std_y"],
            p["n"],
        )
    for wafer_id, w in report.per_wafer.items():
        log.info(
            "[%s] chips %d, found %0.4f, street acc %0.4f, chip acc %0.4f",
            wafer_id,
            w["chips"],
            w["found_rate"],
            w["street_accuracy"],
            w["chip_accuracy"],
        )
    log.info("#" * 74)

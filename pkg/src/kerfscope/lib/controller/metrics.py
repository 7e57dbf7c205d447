# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

"""
Confusion matrices, accuracies and the per wafer inspection report.

Anomalies are reported in the raw (3 class) matrices and merged into good
in every accuracy figure. Streets the attention model did not find are
left out of the street matrices and counted by the found rate; chip
verdicts aggregate the streets that were found.
"""

# --------------------
# System wide imports
# -------------------

import sys
import logging
import dataclasses

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple

if sys.version_info[1] < 11:
    from typing_extensions import Self
else:
    from typing import Self

# ---------------------------
# Third-party library imports
# ----------------------------

import numpy as np

# --------------
# local imports
# -------------

from .. import Side, StreetClass

# -----------------------
# Module global variables
# -----------------------

log = logging.getLogger(__name__.split(".")[-1])

ChipKey = Tuple[str, int, int]  # (wafer_id, col, row)

GOOD, BAD = 0, 1  # merged class indices


def merge_label(label: int) -> int:
    return BAD if int(label) == StreetClass.BAD else GOOD


def confusion(true: Iterable[int], pred: Iterable[int], n: int) -> np.ndarray:
    m = np.zeros((n, n), dtype=np.int64)
    for t, p in zip(true, pred):
        m[int(t), int(p)] += 1
    return m


def merge_confusion(raw: np.ndarray) -> np.ndarray:
    """3x3 (good, anomaly, bad) counts to 2x2 (good, bad) counts"""
    idx = [merge_label(c) for c in range(raw.shape[0])]
    m = np.zeros((2, 2), dtype=np.int64)
    for i in range(raw.shape[0]):
        for j in range(raw.shape[1]):
            m[idx[i], idx[j]] += raw[i, j]
    return m


def normalized(m: np.ndarray) -> np.ndarray:
    """Row normalized matrix; rows without samples stay at zero"""
    totals = m.sum(axis=1, keepdims=True).astype(np.float64)
    return np.divide(m, totals, out=np.zeros(m.shape, dtype=np.float64), where=totals > 0)


def accuracy(m: np.ndarray) -> float:
    total = m.sum()
    return float(np.trace(m) / total) if total else 0.0


def recalls(m: np.ndarray) -> np.ndarray:
    return np.diag(normalized(m))


def macro_accuracy(m: np.ndarray) -> float:
    """Mean of the per class recalls, over classes with samples"""
    present = m.sum(axis=1) > 0
    return float(recalls(m)[present].mean()) if present.any() else 0.0


def fault_detection(m2: np.ndarray) -> float:
    return float(recalls(m2)[BAD])


@dataclass
class ChipVerdict:
    wafer_id: str
    col: int
    row: int
    border: bool = False
    # raw per side prediction, None when the street was not found
    sides: Dict[Side, StreetClass | None] = field(default_factory=dict)
    truth: Dict[Side, StreetClass] = field(default_factory=dict)
    fixations: Dict[Side, Tuple[float, float]] = field(default_factory=dict)
    roi_paths: Dict[Side, str] = field(default_factory=dict)
    border_truth: bool | None = None

    @property
    def key(self) -> ChipKey:
        return self.wafer_id, self.col, self.row

    @property
    def found(self) -> int:
        return sum(1 for side in Side.streets() if self.sides.get(side) is not None)

    @property
    def faulty(self) -> bool:
        return any(v == StreetClass.BAD for v in self.sides.values() if v is not None)

    def chip_class(self) -> StreetClass:
        found = [v for v in self.sides.values() if v is not None]
        return max(found) if found else StreetClass.GOOD

    def true_class(self) -> StreetClass:
        return max(self.truth.values()) if self.truth else StreetClass.GOOD

    def to_dict(self) -> Dict[str, Any]:
        return {
            "wafer_id": self.wafer_id,
            "col": self.col,
            "row": self.row,
            "border": self.border,
            "border_truth": self.border_truth,
            "sides": {str(s): (None if v is None else int(v)) for s, v in self.sides.items()},
            "truth": {str(s): int(v) for s, v in self.truth.items()},
            "fixations": {str(s): list(v) for s, v in self.fixations.items()},
            "roi_paths": {str(s): v for s, v in self.roi_paths.items()},
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Self:
        return cls(
            wafer_id=d["wafer_id"],
            col=int(d["col"]),
            row=int(d["row"]),
            border=bool(d["border"]),
            border_truth=d.get("border_truth"),
            sides={
                Side(s): (None if v is None else StreetClass(v)) for s, v in d["sides"].items()
            },
            truth={Side(s): StreetClass(v) for s, v in d["truth"].items()},
            fixations={Side(s): tuple(v) for s, v in d.get("fixations", {}).items()},
            roi_paths={Side(s): v for s, v in d.get("roi_paths", {}).items()},
        )


@dataclass
class WaferReport:
    street_raw: np.ndarray  # 3x3 counts, rows = truth
    chip_raw: np.ndarray
    total_streets: int
    found_streets: int
    n_inside: int
    n_border: int
    border_mismatch: int = 0
    per_wafer: Dict[str, Dict[str, float]] = field(default_factory=dict)
    grids: Dict[str, Tuple[int, int]] = field(default_factory=dict)
    chips: List[ChipVerdict] = field(default_factory=list)
    precision: Dict[str, Any] = field(default_factory=dict)

    @property
    def street_confusion(self) -> np.ndarray:
        return merge_confusion(self.street_raw)

    @property
    def chip_confusion(self) -> np.ndarray:
        return merge_confusion(self.chip_raw)

    @property
    def found_rate(self) -> float:
        return self.found_streets / self.total_streets if self.total_streets else 0.0

    def summary(self) -> Dict[str, float]:
        s2, c2 = self.street_confusion, self.chip_confusion
        return {
            "street_accuracy": accuracy(s2),
            "street_macro_accuracy": macro_accuracy(s2),
            "fault_detection": fault_detection(s2),
            "chip_accuracy": accuracy(c2),
            "chip_macro_accuracy": macro_accuracy(c2),
            "chip_fault_detection": fault_detection(c2),
            "found_rate": self.found_rate,
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            "summary": self.summary(),
            "street_raw": self.street_raw.tolist(),
            "street_confusion": self.street_confusion.tolist(),
            "street_confusion_normalized": normalized(self.street_confusion).tolist(),
            "chip_raw": self.chip_raw.tolist(),
            "chip_confusion": self.chip_confusion.tolist(),
            "chip_confusion_normalized": normalized(self.chip_confusion).tolist(),
            "total_streets": self.total_streets,
            "found_streets": self.found_streets,
            "n_inside": self.n_inside,
            "n_border": self.n_border,
            "border_mismatch": self.border_mismatch,
            "per_wafer": self.per_wafer,
            "grids": {k: list(v) for k, v in self.grids.items()},
            "precision": self.precision,
            "chips": [c.to_dict() for c in self.chips],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Self:
        return cls(
            street_raw=np.asarray(d["street_raw"], dtype=np.int64),
            chip_raw=np.asarray(d["chip_raw"], dtype=np.int64),
            total_streets=int(d["total_streets"]),
            found_streets=int(d["found_streets"]),
            n_inside=int(d["n_inside"]),
            n_border=int(d["n_border"]),
            border_mismatch=int(d.get("border_mismatch", 0)),
            per_wafer=dict(d.get("per_wafer", {})),
            grids={k: tuple(v) for k, v in d.get("grids", {}).items()},
            chips=[ChipVerdict.from_dict(c) for c in d.get("chips", [])],
            precision=dict(d.get("precision", {})),
        )


def compute_metrics(
    verdicts: Sequence[ChipVerdict],
    truth: Mapping[ChipKey, Mapping[Side, StreetClass]],
    grids: Mapping[str, Tuple[int, int]] | None = None,
) -> WaferReport:
    """Chips flagged border, by prediction or by ground truth, stay out of every denominator"""
    street_true, street_pred = list(), list()
    chip_true, chip_pred = list(), list()
    total = found = n_inside = n_border = mismatch = 0
    per_wafer: Dict[str, Dict[str, int]] = defaultdict(lambda: defaultdict(int))
    chips = list()
    for v in sorted(verdicts, key=lambda v: v.key):
        sides_truth = dict(truth.get(v.key, {}))
        v = dataclasses.replace(v, truth=sides_truth)
        if v.border_truth is not None and v.border_truth != v.border:
            mismatch += 1
        chips.append(v)
        if v.border or not sides_truth:
            n_border += 1
            continue
        n_inside += 1
        w = per_wafer[v.wafer_id]
        w["chips"] += 1
        for side in Side.streets():
            t = sides_truth.get(side)
            if t is None:
                continue
            total += 1
            w["streets"] += 1
            p = v.sides.get(side)
            if p is None:
                continue
            found += 1
            w["found"] += 1
            street_true.append(int(t))
            street_pred.append(int(p))
            w["street_correct"] += int(merge_label(t) == merge_label(p))
        ct, cp = v.true_class(), v.chip_class()
        chip_true.append(int(ct))
        chip_pred.append(int(cp))
        w["chip_correct"] += int(merge_label(ct) == merge_label(cp))
    breakdown = dict()
    for wafer_id, w in sorted(per_wafer.items()):
        breakdown[wafer_id] = {
            "chips": w["chips"],
            "streets": w["streets"],
            "found": w["found"],
            "found_rate": w["found"] / w["streets"] if w["streets"] else 0.0,
            "street_accuracy": w["street_correct"] / w["found"] if w["found"] else 0.0,
            "chip_accuracy": w["chip_correct"] / w["chips"] if w["chips"] else 0.0,
        }
    if not grids:
        grids = dict()
        for v in chips:
            cols, rows = grids.get(v.wafer_id, (0, 0))
            grids[v.wafer_id] = (max(cols, v.col + 1), max(rows, v.row + 1))
    n = len(StreetClass)
    return WaferReport(
        street_raw=confusion(street_true, street_pred, n),
        chip_raw=confusion(chip_true, chip_pred, n),
        total_streets=total,
        found_streets=found,
        n_inside=n_inside,
        n_border=n_border,
        border_mismatch=mismatch,
        per_wafer=breakdown,
        grids=dict(grids),
        chips=chips,
    )

# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

"""
Classifier training and evaluation on a dataset manifest.

Street networks read the stored street ROIs; chip and border networks read
the chip context crops, cut down to the chip plus a street margin. Samples
are augmented on the fly (training split only) and contrast normalized.
Early stopping watches the macro accuracy of the merged (good/bad)
validation confusion matrix.
"""

# --------------------
# System wide imports
# -------------------

import json
import time
import logging

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Sequence, Tuple

# ---------------------------
# Third-party library imports
# ----------------------------

import cv2
import numpy as np

from pubsub import pub

# --------------
# local imports
# -------------

from .. import Arch, Split, StreetClass
from ..error import DataError
from ..roi import contrast_normalize
from ..synth.dataset import chip_input
from ..synth.manifest import (
    DatasetManifest,
    ManifestRecord,
    class_balance,
    label_key,
    border_key,
)
from ..nn.archs import network_for
from ..nn.augment import AugmentSpec, augment
from ..nn.network import Network, build
from ..nn.optim import SGD, train_step
from .metrics import (
    confusion,
    merge_confusion,
    merge_label,
    accuracy,
    macro_accuracy,
    fault_detection,
    recalls,
)
from .types import Event

# -----------------------
# Module global variables
# -----------------------

log = logging.getLogger(__name__.split(".")[-1])


@dataclass(frozen=True)
class TrainParams:
    epochs: int = 60
    batch_size: int = 32
    lr: float = 1e-2
    momentum: float = 0.9
    patience: int = 10
    seed: int = 0
    num_classes: int = 3  # street and chip networks: 3 raw classes or 2 merged ones
    balance: bool = True
    augment: bool = True

    def __post_init__(self):
        if self.epochs <= 0 or self.batch_size <= 0 or self.patience <= 0:
            raise ValueError("epochs, batch_size and patience must be positive")
        if self.num_classes not in (2, 3):
            raise ValueError(f"num_classes must be 2 or 3, not {self.num_classes}")
        if self.lr < 0:
            raise ValueError("negative learning rate")


@dataclass
class EvalReport:
    arch: Arch
    raw: np.ndarray  # rows = truth, 3x3 (street, chip) or 2x2 (border)
    merged: np.ndarray  # 2x2

    @property
    def accuracy(self) -> float:
        return accuracy(self.merged)

    @property
    def macro_accuracy(self) -> float:
        return macro_accuracy(self.merged)

    @property
    def fault_detection(self) -> float:
        return fault_detection(self.merged)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "arch": str(self.arch),
            "raw": self.raw.tolist(),
            "merged": self.merged.tolist(),
            "accuracy": self.accuracy,
            "macro_accuracy": self.macro_accuracy,
            "fault_detection": self.fault_detection,
            "recalls": recalls(self.merged).tolist(),
        }


@dataclass
class TrainResult:
    network: Network
    history: List[Dict[str, float]] = field(default_factory=list)
    best_epoch: int = 0
    best_score: float = 0.0
    elapsed: float = 0.0

    def save_history(self, path: str) -> None:
        with open(path, "w") as fd:
            json.dump(
                {
                    "network": self.network.spec.name,
                    "best_epoch": self.best_epoch,
                    "best_score": self.best_score,
                    "elapsed": self.elapsed,
                    "epochs": self.history,
                },
                fd,
                indent=2,
            )


# ------------------
# Auxiliar functions
# ------------------


def kind_of(arch: Arch) -> str:
    return "street" if Arch(arch) == Arch.STREET else "chip"


def target_key(arch: Arch, num_classes: int) -> Callable[[ManifestRecord], int]:
    """Training target of a manifest record"""
    if Arch(arch) == Arch.BORDER:
        return border_key
    if num_classes == 2:
        return lambda r: merge_label(r.label)
    return label_key


def as_street_class(pred: int, num_classes: int) -> StreetClass:
    """Network output index back to a street class"""
    if num_classes == 2:
        return StreetClass.BAD if pred == 1 else StreetClass.GOOD
    return StreetClass(int(pred))


def usable(record: ManifestRecord, arch: Arch) -> bool:
    if record.kind != kind_of(arch):
        return False
    # border chips are never graded, so the chip network does not see them
    return not (Arch(arch) == Arch.CHIP and record.border)


def subset(manifest: DatasetManifest, arch: Arch) -> DatasetManifest:
    return DatasetManifest(
        records=[r for r in manifest.records if usable(r, arch)],
        spec=manifest.spec,
        format_version=manifest.format_version,
        base_dir=manifest.base_dir,
    )


class SampleLoader:
    """Reads (and caches) the classifier input image of each manifest record"""

    def __init__(self, manifest: DatasetManifest, arch: Arch):
        self.manifest = manifest
        self.arch = Arch(arch)
        self._cache: Dict[str, np.ndarray] = dict()

    def image(self, record: ManifestRecord) -> np.ndarray:
        img = self._cache.get(record.image_path)
        if img is None:
            path = self.manifest.path_of(record)
            raw = cv2.imread(path, cv2.IMREAD_GRAYSCALE)
            if raw is None:
                raise DataError(f"cannot read image {path}")
            if self.arch == Arch.STREET:
                img = raw
            else:
                img = chip_input(raw, record.margin_px, record.chip_px, record.street_width_px)
            self._cache[record.image_path] = img
        return img

    def batch(
        self,
        records: Sequence[ManifestRecord],
        spec: AugmentSpec | None = None,
        rng: np.random.Generator | None = None,
    ) -> np.ndarray:
        out = list()
        for r in records:
            img = self.image(r)
            if spec is not None:
                img = augment(img, spec, rng)
            out.append(contrast_normalize(img))
        return np.stack(out)[..., np.newaxis]


def predict_records(
    network: Network,
    loader: SampleLoader,
    records: Sequence[ManifestRecord],
    batch_size: int = 32,
) -> List[int]:
    """Raw network output index per record"""
    pred = list()
    for i in range(0, len(records), batch_size):
        batch = loader.batch(records[i : i + batch_size])
        pred.extend(int(p) for p in network.predict(batch, batch_size))
    return pred


def evaluate(
    network: Network,
    manifest: DatasetManifest,
    arch: Arch,
    split: Split | None = Split.TEST,
    loader: SampleLoader | None = None,
    batch_size: int = 32,
) -> EvalReport:
    """Confusion matrices on one split (None: every record) of the manifest"""
    arch = Arch(arch)
    records = [r for r in manifest.select(split) if usable(r, arch) and not r.duplicate]
    if not records:
        raise DataError(f"no {kind_of(arch)} records to evaluate (split {split})")
    loader = loader or SampleLoader(manifest, arch)
    pred = predict_records(network, loader, records, batch_size)
    if arch == Arch.BORDER:
        raw = confusion([border_key(r) for r in records], pred, 2)
        return EvalReport(arch, raw, raw.copy())
    classes = [int(as_street_class(p, network.num_classes)) for p in pred]
    raw = confusion([int(r.label) for r in records], classes, len(StreetClass))
    return EvalReport(arch, raw, merge_confusion(raw))


def train_classifier(
    manifest: DatasetManifest,
    arch: Arch,
    params: TrainParams = TrainParams(),
    augment_spec: AugmentSpec = AugmentSpec(),
) -> TrainResult:
    arch = Arch(arch)
    num_classes = 2 if arch == Arch.BORDER else params.num_classes
    key = target_key(arch, num_classes)
    data = subset(manifest, arch)
    if params.balance:
        data = class_balance(data, kind_of(arch), key=key, classes=range(num_classes))
    train = data.select(Split.TRAIN)
    if not train or not data.select(Split.VAL):
        raise DataError(f"{arch} training needs train and val {kind_of(arch)} records")
    rng = np.random.default_rng(params.seed)
    network = build(network_for(arch, num_classes), seed=params.seed)
    optimizer = SGD(params.lr, params.momentum)
    loader = SampleLoader(data, arch)
    spec = augment_spec if params.augment else None
    targets = np.array([key(r) for r in train], dtype=np.int64)
    result = TrainResult(network)
    best = (-1.0, None)
    stale = 0
    pub.sendMessage(
        Event.TRAIN_START, arch=arch, n_train=len(train), n_val=len(data.select(Split.VAL))
    )
    t0 = time.monotonic()
    for epoch in range(1, params.epochs + 1):
        order = rng.permutation(len(train))
        losses, hits = list(), list()
        for i in range(0, len(order), params.batch_size):
            idx = order[i : i + params.batch_size]
            x = loader.batch([train[j] for j in idx], spec, rng)
            stats = train_step(network, x, targets[idx], optimizer, rng)
            losses.append(stats["loss"] * len(idx))
            hits.append(stats["accuracy"] * len(idx))
        val = evaluate(network, data, arch, Split.VAL, loader, params.batch_size)
        entry = {
            "epoch": epoch,
            "loss": float(np.sum(losses) / len(order)),
            "train_accuracy": float(np.sum(hits) / len(order)),
            "val_accuracy": val.accuracy,
            "val_macro_accuracy": val.macro_accuracy,
        }
        result.history.append(entry)
        pub.sendMessage(Event.EPOCH, arch=arch, stats=entry)
        if val.macro_accuracy > best[0]:
            best = (val.macro_accuracy, {k: v.copy() for k, v in network.params.items()})
            result.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= params.patience:
                log.info("[%s] early stop at epoch %d", arch, epoch)
                break
    network.params = best[1]
    result.best_score = best[0]
    result.elapsed = time.monotonic() - t0
    pub.sendMessage(
        Event.TRAIN_END,
        arch=arch,
        best_epoch=result.best_epoch,
        best_score=result.best_score,
        elapsed=result.elapsed,
    )
    return result


def train_street_classifier(
    manifest: DatasetManifest,
    params: TrainParams = TrainParams(),
    augment_spec: AugmentSpec = AugmentSpec(),
) -> Tuple[TrainResult, EvalReport]:
    result = train_classifier(manifest, Arch.STREET, params, augment_spec)
    return result, evaluate(result.network, subset(manifest, Arch.STREET), Arch.STREET)


def train_chip_classifier(
    manifest: DatasetManifest,
    params: TrainParams = TrainParams(),
    augment_spec: AugmentSpec = AugmentSpec(),
) -> Tuple[TrainResult, EvalReport]:
    result = train_classifier(manifest, Arch.CHIP, params, augment_spec)
    return result, evaluate(result.network, subset(manifest, Arch.CHIP), Arch.CHIP)


def train_border_classifier(
    manifest: DatasetManifest,
    params: TrainParams = TrainParams(),
    augment_spec: AugmentSpec = AugmentSpec(),
) -> Tuple[TrainResult, EvalReport]:
    result = train_classifier(manifest, Arch.BORDER, params, augment_spec)
    return result, evaluate(result.network, manifest, Arch.BORDER)

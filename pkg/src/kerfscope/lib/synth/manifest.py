# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

"""
Dataset manifest.

JSON Lines file. The first line is a header object
{"format_version": "1", "spec": {...}} echoing the generator settings,
followed by one sample record per line. Image paths are relative to the
manifest directory.
"""

# --------------------
# System wide imports
# -------------------

import os
import json
import logging
import dataclasses

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Mapping, Sequence, Tuple

# ---------------------------
# Third-party library imports
# ----------------------------

import numpy as np

# --------------
# local imports
# -------------

from .. import MANIFEST_VERSION, Side, Split, StreetClass
from ..error import ManifestError, DataError

# ----------------
# Module constants
# ----------------

REQUIRED = ("image_path", "wafer_id", "chip_col", "chip_row", "side", "label", "split")
SPLIT_FRACTIONS = (0.5, 0.25, 0.25)

# -----------------------
# Module global variables
# -----------------------

# get the module logger
log = logging.getLogger(__name__.split(".")[-1])


@dataclass
class ManifestRecord:
    image_path: str
    wafer_id: str
    chip_col: int
    chip_row: int
    side: Side
    label: StreetClass
    split: Split
    duplicate: bool = False
    border: bool = False
    chip_px: int = 0
    street_width_px: int = 0
    margin_px: int = 0

    @property
    def kind(self) -> str:
        return "chip" if self.side == Side.CHIP else "street"

    def to_dict(self) -> Dict[str, Any]:
        d = dataclasses.asdict(self)
        d["side"] = str(self.side)
        d["label"] = int(self.label)
        d["split"] = str(self.split)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ManifestRecord":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown fields {sorted(unknown)}")
        for key in REQUIRED:
            if key not in d:
                raise ValueError(f"missing field '{key}'")
        values = dict(d)
        values["side"] = Side(d["side"])
        values["label"] = StreetClass(int(d["label"]))
        values["split"] = Split(d["split"])
        return cls(**values)


@dataclass
class DatasetManifest:
    records: List[ManifestRecord] = field(default_factory=list)
    spec: Dict[str, Any] = field(default_factory=dict)
    format_version: str = MANIFEST_VERSION
    base_dir: str = field(default=".", compare=False)

    def select(
        self, split: Split | None = None, kind: str | None = None
    ) -> List[ManifestRecord]:
        return [
            r
            for r in self.records
            if (split is None or r.split == split) and (kind is None or r.kind == kind)
        ]

    def path_of(self, record: ManifestRecord) -> str:
        return os.path.join(self.base_dir, record.image_path)

    def counts(
        self, split: Split, kind: str, key: Callable[[ManifestRecord], int] | None = None
    ) -> Dict[int, int]:
        key = key or label_key
        result: Dict[int, int] = defaultdict(int)
        for r in self.select(split, kind):
            result[key(r)] += 1
        return dict(result)


def label_key(record: ManifestRecord) -> int:
    return int(record.label)


def border_key(record: ManifestRecord) -> int:
    return int(record.border)


def write_manifest(path: str, manifest: DatasetManifest) -> None:
    with open(path, "w", encoding="utf-8") as fd:
        header = {"format_version": manifest.format_version, "spec": manifest.spec}
        fd.write(json.dumps(header, sort_keys=True) + "\n")
        for record in manifest.records:
            fd.write(json.dumps(record.to_dict()) + "\n")
    log.info("Written manifest %s with %d records", path, len(manifest.records))


def read_manifest(path: str, check_files: bool = True) -> DatasetManifest:
    if not os.path.isfile(path):
        raise ManifestError(path, "no such manifest file")
    with open(path, "r", encoding="utf-8") as fd:
        lines = fd.read().splitlines()
    if not lines:
        raise ManifestError(path, "empty manifest", line=1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise ManifestError(path, f"malformed header: {e}", line=1) from e
    version = str(header.get("format_version"))
    if version != MANIFEST_VERSION:
        raise ManifestError(path, f"unsupported manifest version {version}", line=1)
    manifest = DatasetManifest(
        spec=header.get("spec", {}),
        format_version=version,
        base_dir=os.path.dirname(os.path.abspath(path)),
    )
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            record = ManifestRecord.from_dict(json.loads(line))
        except (json.JSONDecodeError, ValueError, TypeError) as e:
            raise ManifestError(path, f"malformed record: {e}", line=lineno) from e
        if check_files and not os.path.isfile(manifest.path_of(record)):
            raise ManifestError(path, f"missing image {record.image_path}", line=lineno)
        manifest.records.append(record)
    log.info("Read manifest %s with %d records", path, len(manifest.records))
    return manifest


def assign_splits(
    records: Sequence[ManifestRecord],
    rng: np.random.Generator,
    fractions: Tuple[float, float, float] = SPLIT_FRACTIONS,
) -> None:
    """Stratified split per (record kind, class), in place"""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise DataError(f"split fractions {fractions} do not add up to 1")
    groups: Dict[Tuple[str, int], List[int]] = defaultdict(list)
    for i, r in enumerate(records):
        groups[(r.kind, int(r.label))].append(i)
    for key in sorted(groups):
        idx = groups[key]
        order = rng.permutation(len(idx))
        n_train = int(round(fractions[0] * len(idx)))
        n_val = int(round(fractions[1] * len(idx)))
        for rank, j in enumerate(order):
            if rank < n_train:
                records[idx[j]].split = Split.TRAIN
            elif rank < n_train + n_val:
                records[idx[j]].split = Split.VAL
            else:
                records[idx[j]].split = Split.TEST


def class_balance(
    manifest: DatasetManifest,
    kind: str = "street",
    mode: str = "duplicate",
    key: Callable[[ManifestRecord], int] | None = None,
    classes: Iterable[int] | None = None,
) -> DatasetManifest:
    """
    Oversample the minority classes of the training split by duplicating records
    (in order, cycling) until every class matches the majority count.
    Validation and test records are copied untouched.
    """
    if mode != "duplicate":
        raise DataError(f"unsupported balancing mode {mode}")
    key = key or label_key
    classes = tuple(classes) if classes is not None else tuple(int(c) for c in StreetClass)
    train = manifest.select(Split.TRAIN, kind)
    by_class: Dict[int, List[ManifestRecord]] = {c: [] for c in classes}
    for r in train:
        by_class.setdefault(key(r), []).append(r)
    for c, members in by_class.items():
        if not members:
            raise DataError(f"cannot balance empty class {c}")
    target = max(len(m) for m in by_class.values())
    extra = list()
    for c in sorted(by_class):
        members = by_class[c]
        for i in range(target - len(members)):
            extra.append(dataclasses.replace(members[i % len(members)], duplicate=True))
        log.debug("class %d: %d samples, %d duplicates", c, len(members), target - len(members))
    return DatasetManifest(
        records=[dataclasses.replace(r) for r in manifest.records] + extra,
        spec=dict(manifest.spec),
        format_version=manifest.format_version,
        base_dir=manifest.base_dir,
    )

# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

"""
Binary tensor container.

Layout: magic (4 bytes), version (u32), metadata length (u32), UTF-8 JSON metadata,
then the float32 little-endian payload of every tensor in the order listed under
the metadata "tensors" key, each one with its name and shape.
"""

# --------------------
# System wide imports
# -------------------

import json
import struct
import logging

from typing import Any, Mapping, Tuple, Dict

# ---------------------------
# Third-party library imports
# ----------------------------

import numpy as np

# --------------
# local imports
# -------------

from . import TENSOR_MAGIC, TENSOR_VERSION
from .error import DataError

# ----------------
# Module constants
# ----------------

HEADER = struct.Struct("<4sII")

# -----------------------
# Module global variables
# -----------------------

log = logging.getLogger(__name__.split(".")[-1])


def write_tensors(
    path: str, tensors: Mapping[str, np.ndarray], meta: Mapping[str, Any] | None = None
) -> None:
    arrays = {name: np.ascontiguousarray(t, dtype="<f4") for name, t in tensors.items()}
    header = {
        "meta": dict(meta or {}),
        "tensors": [{"name": name, "shape": list(a.shape)} for name, a in arrays.items()],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fd:
        fd.write(HEADER.pack(TENSOR_MAGIC, TENSOR_VERSION, len(blob)))
        fd.write(blob)
        for a in arrays.values():
            fd.write(a.tobytes())
    log.debug("Written %d tensors to %s", len(arrays), path)


def read_tensors(path: str) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    with open(path, "rb") as fd:
        raw = fd.read()
    if len(raw) < HEADER.size:
        raise DataError(f"{path}: truncated tensor container")
    magic, version, length = HEADER.unpack_from(raw)
    if magic != TENSOR_MAGIC:
        raise DataError(f"{path}: not a tensor container")
    if version != TENSOR_VERSION:
        raise DataError(f"{path}: unsupported tensor container version {version}")
    offset = HEADER.size
    header = json.loads(raw[offset : offset + length].decode("utf-8"))
    offset += length
    tensors = dict()
    for item in header["tensors"]:
        shape = tuple(item["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        end = offset + 4 * count
        if end > len(raw):
            raise DataError(f"{path}: payload too short for tensor {item['name']}")
        tensors[item["name"]] = np.frombuffer(raw[offset:end], dtype="<f4").reshape(shape).copy()
        offset = end
    return tensors, header["meta"]

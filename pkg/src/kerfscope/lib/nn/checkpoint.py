# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

# --------------------
# System wide imports
# -------------------

import os
import logging

from typing import Any, Dict, Mapping, Tuple

# --------------
# local imports
# -------------

from ..error import ConfigError, DataError
from ..tensorio import write_tensors, read_tensors
from .network import Network, NetworkSpec

# ----------------
# Module constants
# ----------------

CHECKPOINT_KIND = "kerfscope-model"
CHECKPOINT_VERSION = 1

# -----------------------
# Module global variables
# -----------------------

log = logging.getLogger(__name__.split(".")[-1])


def save_network(path: str, network: Network, meta: Mapping[str, Any] | None = None) -> None:
    header = {
        "kind": CHECKPOINT_KIND,
        "version": CHECKPOINT_VERSION,
        "spec": network.spec.to_dict(),
        "extra": dict(meta or {}),
    }
    write_tensors(path, network.params, header)
    log.info("Saved %s network to %s", network.spec.name, path)


def load_network(path: str) -> Tuple[Network, Dict[str, Any]]:
    if not os.path.isfile(path):
        raise ConfigError(f"model checkpoint not found: {path}")
    tensors, header = read_tensors(path)
    if header.get("kind") != CHECKPOINT_KIND or header.get("version") != CHECKPOINT_VERSION:
        raise DataError(f"{path}: not a model checkpoint of version {CHECKPOINT_VERSION}")
    network = Network(NetworkSpec.from_dict(header["spec"]))
    missing = set(network.params) - set(tensors)
    if missing:
        raise DataError(f"{path}: missing parameters {sorted(missing)}")
    for name in network.params:
        value = tensors[name]
        if value.shape != network.params[name].shape:
            raise DataError(f"{path}: parameter {name} has shape {value.shape}")
        network.params[name] = value.astype(network.dtype)
    log.info("Loaded %s network from %s", network.spec.name, path)
    return network, header["extra"]

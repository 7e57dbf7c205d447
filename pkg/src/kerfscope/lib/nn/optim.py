# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

# --------------------
# System wide imports
# -------------------

import math
import logging

from dataclasses import dataclass
from typing import Dict

# ---------------------------
# Third-party library imports
# ----------------------------

import numpy as np

# --------------
# local imports
# -------------

from ..error import ConvergenceError
from .network import Network, cross_entropy

# -----------------------
# Module global variables
# -----------------------

log = logging.getLogger(__name__.split(".")[-1])


@dataclass
class SGD:
    lr: float = 1e-2
    momentum: float = 0.9

    def __post_init__(self):
        self.velocity: Dict[str, np.ndarray] = dict()

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> None:
        for name, g in grads.items():
            v = self.velocity.get(name)
            if v is None:
                v = np.zeros_like(params[name])
            v = self.momentum * v - self.lr * g.astype(v.dtype, copy=False)
            self.velocity[name] = v
            params[name] += v


def train_step(
    network: Network,
    x: np.ndarray,
    y: np.ndarray,
    optimizer: SGD,
    rng: np.random.Generator | None = None,
) -> Dict[str, float]:
    logits = network.forward(x, training=True, rng=rng)
    loss, dlogits = cross_entropy(logits.astype(np.float64), y)
    if not math.isfinite(loss):
        norms = {k: float(np.abs(v).max()) for k, v in network.params.items()}
        worst = max(norms, key=norms.get)
        raise ConvergenceError(
            f"non finite loss in {network.spec.name} (largest weight {worst} = {norms[worst]:.3g}, "
            f"logits range [{float(logits.min()):.3g}, {float(logits.max()):.3g}])"
        )
    grads = network.backward(dlogits)
    optimizer.step(network.params, grads)
    accuracy = float((logits.argmax(axis=1) == y).mean())
    return {"loss": loss, "accuracy": accuracy}

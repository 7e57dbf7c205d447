# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

# --------------------
# System wide imports
# -------------------

from dataclasses import dataclass

# ---------------------------
# Third-party library imports
# ----------------------------

import cv2
import numpy as np


@dataclass(frozen=True)
class AugmentSpec:
    rotation_deg: float = 4.0
    scale: float = 0.04
    translate_x: float = 0.10  # fraction of the image width
    translate_y: float = 0.01
    flip_x: bool = True
    flip_y: bool = False

    def __post_init__(self):
        if min(self.rotation_deg, self.scale, self.translate_x, self.translate_y) < 0:
            raise ValueError("augmentation ranges must be non negative")

    @classmethod
    def identity(cls) -> "AugmentSpec":
        return cls(0.0, 0.0, 0.0, 0.0, False, False)


@dataclass(frozen=True)
class AugmentParams:
    angle: float
    scale: float
    tx: float  # pixels
    ty: float
    flip_x: bool
    flip_y: bool

    def is_identity(self) -> bool:
        return self.angle == 0 and self.scale == 1 and self.tx == 0 and self.ty == 0


def draw(spec: AugmentSpec, shape: tuple, rng: np.random.Generator) -> AugmentParams:
    rows, cols = shape[:2]
    return AugmentParams(
        angle=float(rng.uniform(-spec.rotation_deg, spec.rotation_deg)),
        scale=float(1.0 + rng.uniform(-spec.scale, spec.scale)),
        tx=float(rng.uniform(-spec.translate_x, spec.translate_x) * cols),
        ty=float(rng.uniform(-spec.translate_y, spec.translate_y) * rows),
        flip_x=bool(spec.flip_x and rng.random() < 0.5),
        flip_y=bool(spec.flip_y and rng.random() < 0.5),
    )


def apply(image: np.ndarray, params: AugmentParams) -> np.ndarray:
    out = image
    if not params.is_identity():
        rows, cols = image.shape[:2]
        m = cv2.getRotationMatrix2D(((cols - 1) / 2, (rows - 1) / 2), params.angle, params.scale)
        m[0, 2] += params.tx
        m[1, 2] += params.ty
        out = cv2.warpAffine(
            image, m, (cols, rows), flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_REFLECT
        )
    if params.flip_x:
        out = cv2.flip(out, 1)
    if params.flip_y:
        out = cv2.flip(out, 0)
    return out


def augment(image: np.ndarray, spec: AugmentSpec, rng: np.random.Generator) -> np.ndarray:
    return apply(image, draw(spec, image.shape, rng))

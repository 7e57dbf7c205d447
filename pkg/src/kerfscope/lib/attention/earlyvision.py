# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

"""
V1 front end: odd phase Gabor edge energy plus optional colour opponency,
and the 10x10 aligned max pooled layer the higher areas read from.
"""

# --------------------
# System wide imports
# -------------------

import math
import logging

from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

# ---------------------------
# Third-party library imports
# ----------------------------

import cv2
import numpy as np

# --------------
# local imports
# -------------

from .. import Resolution
from ..error import DataError
from ..tensorio import write_tensors, read_tensors

# ----------------
# Module constants
# ----------------

POOL_FACTOR = 10
MIN_SIDE = 16
ZERO_PLANE = 1e-4  # float residue of zero mean kernels on flat images

# -----------------------
# Module global variables
# -----------------------

log = logging.getLogger(__name__.split(".")[-1])


@dataclass(frozen=True)
class V1Params:
    n_orientations: int = 4
    wavelengths: Tuple[float, ...] = (6.0, 12.0)
    sigma_ratio: float = 0.56  # Gaussian envelope sigma / wavelength
    aspect: float = 0.5
    pool_factor: int = POOL_FACTOR
    color_enabled: bool = False

    def __post_init__(self):
        if self.pool_factor != POOL_FACTOR:
            raise ValueError(f"pool_factor must be {POOL_FACTOR}")
        if self.n_orientations <= 0 or not self.wavelengths:
            raise ValueError("need at least one orientation and one wavelength")
        if any(w <= 2 for w in self.wavelengths):
            raise ValueError("Gabor wavelengths must exceed 2 pixels")

    def orientations(self) -> List[float]:
        """Edge orientations in degrees, 0 = horizontal edge"""
        return [180.0 * i / self.n_orientations for i in range(self.n_orientations)]


@dataclass
class FeatureStack:
    planes: np.ndarray  # (features, rows, cols) float32
    features: List[Dict[str, Any]]
    resolution: Resolution
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.planes.ndim != 3 or self.planes.shape[0] != len(self.features):
            raise DataError(
                f"feature stack of shape {self.planes.shape} for {len(self.features)} features"
            )

    @property
    def shape(self) -> Tuple[int, int]:
        return self.planes.shape[1:]

    def __len__(self) -> int:
        return self.planes.shape[0]

    def edge_planes(self) -> np.ndarray:
        idx = [i for i, f in enumerate(self.features) if f["kind"] == "edge"]
        return self.planes[idx]


def gabor_kernel(orientation: float, wavelength: float, params: V1Params) -> np.ndarray:
    """Odd phase Gabor kernel tuned to edges of the given orientation (degrees)"""
    sigma = params.sigma_ratio * wavelength
    ksize = 2 * int(math.ceil(3 * sigma)) + 1
    # OpenCV theta is the direction of the carrier wave, normal to the edge
    theta = math.radians(orientation + 90.0)
    kernel = cv2.getGaborKernel(
        (ksize, ksize), sigma, theta, wavelength, params.aspect, math.pi / 2, ktype=cv2.CV_32F
    )
    return kernel - kernel.mean()


def _normalize(plane: np.ndarray) -> np.ndarray:
    top = float(plane.max())
    if top < ZERO_PLANE:
        return np.zeros_like(plane)
    return plane / top


def _as_float(image: np.ndarray) -> np.ndarray:
    img = image.astype(np.float32)
    if image.dtype == np.uint8:
        img /= 255.0
    return img


def v1_simple(image: np.ndarray, params: V1Params) -> FeatureStack:
    if image.ndim not in (2, 3) or min(image.shape[:2]) < MIN_SIDE:
        raise DataError(f"image of shape {image.shape} too small for V1 (min side {MIN_SIDE})")
    img = _as_float(image)
    if img.ndim == 3:
        gray = cv2.cvtColor(img, cv2.COLOR_BGR2GRAY)
    else:
        gray = img
    planes = list()
    features = list()
    for orientation in params.orientations():
        for wavelength in params.wavelengths:
            kernel = gabor_kernel(orientation, wavelength, params)
            response = np.abs(cv2.filter2D(gray, cv2.CV_32F, kernel, borderType=cv2.BORDER_REFLECT))
            planes.append(_normalize(response))
            features.append(
                {"kind": "edge", "orientation": orientation, "wavelength": float(wavelength)}
            )
    if params.color_enabled:
        if img.ndim == 3:
            b, g, r = img[..., 0], img[..., 1], img[..., 2]
        else:
            b = g = r = gray
        planes.append(_normalize(np.abs(r - g)))
        features.append({"kind": "color", "channel": "RG"})
        planes.append(_normalize(np.abs(b - (r + g) / 2)))
        features.append({"kind": "color", "channel": "BY"})
    stack = np.stack(planes).astype(np.float32)
    return FeatureStack(stack, features, Resolution.SIMPLE, {"shape": list(gray.shape)})


def v1_pool(simple: FeatureStack, factor: int = POOL_FACTOR) -> FeatureStack:
    """Block max pooling over aligned factor x factor blocks, reflect padding ragged edges"""
    planes = simple.planes
    n, rows, cols = planes.shape
    pad_r, pad_c = (-rows) % factor, (-cols) % factor
    if pad_r or pad_c:
        planes = np.pad(planes, ((0, 0), (0, pad_r), (0, pad_c)), mode="reflect")
    pooled = planes.reshape(n, planes.shape[1] // factor, factor, planes.shape[2] // factor, factor)
    pooled = pooled.max(axis=(2, 4))
    meta = dict(simple.meta)
    meta.update({"pool_factor": factor, "pad": [pad_r, pad_c]})
    return FeatureStack(pooled, list(simple.features), Resolution.POOL, meta)


def dump_stack(path: str, stack: FeatureStack) -> None:
    write_tensors(
        path,
        {"planes": stack.planes},
        {"features": stack.features, "resolution": str(stack.resolution), **stack.meta},
    )


def load_stack(path: str) -> FeatureStack:
    tensors, meta = read_tensors(path)
    features = meta.pop("features")
    resolution = Resolution(meta.pop("resolution"))
    return FeatureStack(tensors["planes"], features, resolution, meta)

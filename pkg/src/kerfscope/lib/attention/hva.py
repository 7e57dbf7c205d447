# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

"""
Higher visual area: one shot street templates, PFC feature gain,
reentrant FEF modulation and soft-max pooling from layer 4 to layer 2/3.
"""

# --------------------
# System wide imports
# -------------------

import os
import sys
import time
import logging
import dataclasses

from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence

if sys.version_info[1] < 11:
    from typing_extensions import Self
else:
    from typing import Self

# ---------------------------
# Third-party library imports
# ----------------------------

import cv2
import numpy as np

# --------------
# local imports
# -------------

from .. import Orientation, Polarity, Resolution
from ..error import TemplateError, DataError
from ..tensorio import write_tensors, read_tensors
from ..synth.wafer import PALETTE
from .earlyvision import V1Params, FeatureStack, v1_simple, v1_pool, POOL_FACTOR

# ----------------
# Module constants
# ----------------

WIDTH_CLASSES = (1, 2, 3)
# Street width in attention pixels for each width class
WIDTH_PX = {1: 4, 2: 8, 3: 12}
# Sketch canvas, chosen so that its center is the center of a pooled cell
SKETCH_PX = 49 * POOL_FACTOR
SKETCH_CENTER = 245
# Chip side in attention pixels (a 480 px context crop holds a chip of 320 px)
SKETCH_CHIP_PX = 320
SKETCH_STUB_PX = 48
TEMPLATE_FLOOR = 0.1
NORM_EPS = 1e-8

# -----------------------
# Module global variables
# -----------------------

log = logging.getLogger(__name__.split(".")[-1])


@dataclass(frozen=True)
class HVAPoolParams:
    p1: float = 8.0
    p2: float = 0.25
    v_hva4: float = 16.0
    sigma: float = 1.0  # Gaussian receptive field, in layer 4 cells
    stride: int = 1  # layer 4 cells per layer 2/3 cell

    def __post_init__(self):
        if self.p1 <= 0 or self.p2 <= 0 or self.v_hva4 <= 0 or self.sigma <= 0:
            raise ValueError("soft-max pooling parameters must be positive")
        if self.stride < 1:
            raise ValueError("layer 2/3 stride must be >= 1")

    def kernel(self) -> np.ndarray:
        """Receptive field weights g(x', 1, sigma) truncated at 3 sigma"""
        radius = int(np.ceil(3 * self.sigma))
        d = np.arange(-radius, radius + 1, dtype=np.float64)
        g = np.exp(-(d**2) / (2 * self.sigma**2))
        return np.outer(g, g)


@dataclass(frozen=True)
class ReentrantGains:
    v_fef_hva4: float = 3.0
    v_sp: float = 0.3

    def __post_init__(self):
        if self.v_fef_hva4 < 0 or self.v_sp < 0:
            raise ValueError("reentrant gains must be non negative")


@dataclass
class Template:
    weights: np.ndarray  # (features, rows, cols), non negative, unit L2 norm
    orientation: Orientation
    width_class: int
    polarity: Polarity
    sketch: str = ""

    def describe(self) -> Dict[str, Any]:
        return {
            "orientation": str(self.orientation),
            "width_class": self.width_class,
            "polarity": str(self.polarity),
            "sketch": self.sketch,
        }


@dataclass
class TemplateBank:
    templates: List[Template] = field(default_factory=list)
    v1: V1Params = field(default_factory=V1Params)

    def __len__(self) -> int:
        return len(self.templates)

    def __getitem__(self, i: int) -> Template:
        return self.templates[i]

    def width_px(self, i: int) -> int:
        return WIDTH_PX[self.templates[i].width_class]

    def save(self, path: str) -> None:
        tensors = {f"t{i:02d}": t.weights for i, t in enumerate(self.templates)}
        meta = {
            "templates": [t.describe() for t in self.templates],
            "v1": dataclasses.asdict(self.v1),
        }
        write_tensors(path, tensors, meta)
        log.info("Saved %d templates to %s", len(self.templates), path)

    @classmethod
    def load(cls, path: str) -> Self:
        if not os.path.isfile(path):
            raise TemplateError(f"template bank not found: {path}")
        tensors, meta = read_tensors(path)
        v1 = meta["v1"]
        v1["wavelengths"] = tuple(v1["wavelengths"])
        bank = cls(v1=V1Params(**v1))
        for i, info in enumerate(meta["templates"]):
            bank.templates.append(
                Template(
                    weights=tensors[f"t{i:02d}"],
                    orientation=Orientation(info["orientation"]),
                    width_class=int(info["width_class"]),
                    polarity=Polarity(info["polarity"]),
                    sketch=info.get("sketch", ""),
                )
            )
        log.info("Loaded %d templates from %s", len(bank), path)
        return bank


# ----------------
# Sketch rendering
# ----------------


def sketch_name(orientation: Orientation, width_class: int, polarity: Polarity) -> str:
    return f"street_{orientation}_w{width_class}_{polarity}.png"


def draw_street_sketch(
    orientation: Orientation, width_class: int, polarity: Polarity
) -> np.ndarray:
    """
    A street band one chip side long with short crossing stubs at both ends,
    centered on the sketch center. Horizontal sketches are transposed for V.
    """
    street, chip, _ = PALETTE[Polarity(polarity)]
    w = WIDTH_PX[width_class]
    img = np.full((SKETCH_PX, SKETCH_PX), chip, dtype=np.uint8)
    c, half = SKETCH_CENTER, SKETCH_CHIP_PX // 2
    top = c - w // 2
    img[top : top + w, c - half - SKETCH_STUB_PX : c + half + SKETCH_STUB_PX] = street
    for x in (c - half, c + half):
        img[top - SKETCH_STUB_PX : top + w + SKETCH_STUB_PX, x - w // 2 : x - w // 2 + w] = street
    if Orientation(orientation) == Orientation.V:
        img = np.ascontiguousarray(img.T)
    return img


def write_default_sketches(directory: str) -> List[str]:
    os.makedirs(directory, exist_ok=True)
    paths = list()
    for orientation in Orientation:
        for width_class in WIDTH_CLASSES:
            for polarity in Polarity:
                path = os.path.join(directory, sketch_name(orientation, width_class, polarity))
                cv2.imwrite(path, draw_street_sketch(orientation, width_class, polarity))
                paths.append(path)
    log.info("Written %d sketches to %s", len(paths), directory)
    return paths


# ------------------
# One shot learning
# ------------------


def one_shot_learn(
    sketch: np.ndarray,
    orientation: Orientation,
    width_class: int,
    polarity: Polarity,
    params: V1Params,
    floor: float = TEMPLATE_FLOOR,
    source: str = "",
) -> Template:
    pooled = v1_pool(v1_simple(sketch, params)).planes
    weights = np.where(pooled >= floor, pooled, 0.0)
    active = np.argwhere(weights.max(axis=0) > 0)
    if active.size == 0:
        raise TemplateError(f"empty template {source}".strip())
    # Crop symmetric around the sketch center cell so the response peaks on the street center
    rows, cols = pooled.shape[1:]
    cr, cc = rows // 2, cols // 2
    hr = int(np.abs(active[:, 0] - cr).max())
    hc = int(np.abs(active[:, 1] - cc).max())
    r0, r1 = max(0, cr - hr), min(rows, cr + hr + 1)
    c0, c1 = max(0, cc - hc), min(cols, cc + hc + 1)
    weights = weights[:, r0:r1, c0:c1].astype(np.float32)
    weights /= np.linalg.norm(weights)
    return Template(weights, Orientation(orientation), width_class, Polarity(polarity), source)


def learn_bank(sketch_dir: str, params: V1Params) -> TemplateBank:
    t0 = time.perf_counter()
    bank = TemplateBank(v1=params)
    for orientation in Orientation:
        for width_class in WIDTH_CLASSES:
            for polarity in Polarity:
                name = sketch_name(orientation, width_class, polarity)
                path = os.path.join(sketch_dir, name)
                sketch = cv2.imread(path, cv2.IMREAD_UNCHANGED)
                if sketch is None:
                    raise TemplateError(f"missing or unreadable sketch {path}")
                bank.templates.append(
                    one_shot_learn(sketch, orientation, width_class, polarity, params, source=name)
                )
    log.info("Learned %d templates in %.2f s", len(bank), time.perf_counter() - t0)
    return bank


# -------
# Layer 4
# -------


def template_responses(v1pool: FeatureStack, bank: TemplateBank) -> np.ndarray:
    """Raw correlation of every template with the pooled V1 stack, shape (templates, rows, cols)"""
    rows, cols = v1pool.shape
    out = np.zeros((len(bank), rows, cols), dtype=np.float32)
    for i, template in enumerate(bank.templates):
        n, th, tw = template.weights.shape
        if n != len(v1pool):
            raise DataError(f"template {i} has {n} features, V1 stack has {len(v1pool)}")
        if th > rows or tw > cols:
            raise DataError(f"template {i} ({th}x{tw}) larger than plane ({rows}x{cols})")
        for f in range(n):
            out[i] += cv2.filter2D(
                v1pool.planes[f], cv2.CV_32F, template.weights[f], borderType=cv2.BORDER_CONSTANT
            )
    return out


def modulate_layer4(
    responses: np.ndarray,
    bank: TemplateBank,
    pfc_gain: Sequence[float] | None = None,
    fef_feedback: np.ndarray | None = None,
    gains: ReentrantGains = ReentrantGains(),
    normalize: bool = True,
) -> FeatureStack:
    r = responses.astype(np.float64)
    if pfc_gain is not None:
        r = r * (1.0 + np.asarray(pfc_gain, dtype=np.float64))[:, None, None]
    if fef_feedback is not None:
        if fef_feedback.shape != r.shape[1:]:
            raise DataError(f"FEF feedback {fef_feedback.shape} does not match {r.shape[1:]}")
        r = r * (1.0 + gains.v_fef_hva4 * gains.v_sp * fef_feedback)[None]
    if normalize:
        top = r.max()
        if top > NORM_EPS:
            r = r / top
    features = [
        {"kind": "template", "index": i, **t.describe()} for i, t in enumerate(bank.templates)
    ]
    return FeatureStack(r.astype(np.float32), features, Resolution.POOL, {"layer": "hva4"})


def hva_layer4(
    v1pool: FeatureStack,
    bank: TemplateBank,
    pfc_gain: Sequence[float] | None = None,
    fef_feedback: np.ndarray | None = None,
    gains: ReentrantGains = ReentrantGains(),
    normalize: bool = True,
) -> FeatureStack:
    return modulate_layer4(
        template_responses(v1pool, bank), bank, pfc_gain, fef_feedback, gains, normalize
    )


# ---------
# Layer 2/3
# ---------


def hva_pool23(
    layer4: FeatureStack, params: HVAPoolParams = HVAPoolParams(), normalize: bool = True
) -> FeatureStack:
    """E = (v * sum_x' g(x') r(x + x')^p1)^p2 over a Gaussian receptive field"""
    kernel = params.kernel()
    r = np.clip(layer4.planes.astype(np.float64), 0.0, None)
    out = np.empty_like(r)
    for i, plane in enumerate(r):
        acc = cv2.filter2D(plane**params.p1, cv2.CV_64F, kernel, borderType=cv2.BORDER_CONSTANT)
        out[i] = (params.v_hva4 * np.clip(acc, 0.0, None)) ** params.p2
    if params.stride > 1:
        out = out[:, :: params.stride, :: params.stride]
    if normalize:
        top = out.max()
        if top > NORM_EPS:
            out = out / top
        out = np.clip(out, 0.0, 1.0)
    return FeatureStack(
        out.astype(np.float32), list(layer4.features), Resolution.POOL, {"layer": "hva23"}
    )


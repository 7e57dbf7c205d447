# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

"""
Frontal eye field visual cell dynamics.

    tau dr/dt = -r + C(Q(F)),   F = [E_hva2 * (1 + 2 min(a, r_ior))]_0^1

a is the external (signed) spatial attention map and r_ior the inhibition
of return map, decremented around every selected location.
"""

# --------------------
# System wide imports
# -------------------

import logging
import dataclasses

from dataclasses import dataclass
from typing import Callable, Tuple

# ---------------------------
# Third-party library imports
# ----------------------------

import cv2
import numpy as np

# --------------
# local imports
# -------------

from ..error import DataError

# ----------------
# Module constants
# ----------------

A_FEF_BOUND = 0.25
IOR_INIT = 0.25

# -----------------------
# Module global variables
# -----------------------

log = logging.getLogger(__name__.split(".")[-1])

Grid = Tuple[int, int]  # (rows, cols)
Drive = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FEFParams:
    tau: float = 10.0
    dt: float = 1.0
    n_steps_max: int = 200
    epsilon: float = 1e-6  # stalled dynamics threshold on max |dr|
    theta_sel: float = 0.9
    gamma: float = 3.0  # contrast non linearity C(u) = u^gamma
    q_gain: float = 2.0  # surround (mean) subtraction weight of Q
    second_ratio: float = 0.5
    v_ior: float = 0.75
    ior_sigma_div: float = 6.0  # IOR blob sigma = grid size / ior_sigma_div

    def __post_init__(self):
        if self.tau <= 0 or self.dt <= 0:
            raise ValueError("tau and dt must be positive")
        if not 0 < self.theta_sel <= 1:
            raise ValueError("theta_sel must lie in (0,1]")
        if self.n_steps_max <= 0 or self.gamma <= 0 or self.q_gain < 0:
            raise ValueError("invalid FEF dynamics parameters")

    def ior_sigma(self, grid: Grid) -> Tuple[float, float]:
        rows, cols = grid
        return cols / self.ior_sigma_div, rows / self.ior_sigma_div


@dataclass
class AttentionContext:
    a_fef: np.ndarray
    r_ior: np.ndarray
    v_ior: float = 0.75

    def __post_init__(self):
        if self.a_fef.shape != self.r_ior.shape:
            raise DataError(f"attention map {self.a_fef.shape} != IOR map {self.r_ior.shape}")
        if np.abs(self.a_fef).max(initial=0.0) > A_FEF_BOUND + 1e-12:
            log.warning("external attention map clipped to [-%.2f, %.2f]", A_FEF_BOUND, A_FEF_BOUND)
            self.a_fef = np.clip(self.a_fef, -A_FEF_BOUND, A_FEF_BOUND)

    @property
    def grid(self) -> Grid:
        return self.r_ior.shape

    @classmethod
    def fresh(
        cls, grid: Grid, a_fef: np.ndarray | None = None, v_ior: float = 0.75
    ) -> "AttentionContext":
        a = np.zeros(grid, dtype=np.float64) if a_fef is None else a_fef.astype(np.float64)
        return cls(a_fef=a, r_ior=np.full(grid, IOR_INIT, dtype=np.float64), v_ior=v_ior)


# ---------------------
# External attention maps
# ---------------------


def central_suppression(
    grid: Grid, level: float = -A_FEF_BOUND, box: Tuple[float, float] = (0.3, 0.7)
) -> np.ndarray:
    """Negative attention inside the central box of normalized chip coordinates"""
    rows, cols = grid
    y = (np.arange(rows) + 0.5) / rows
    x = (np.arange(cols) + 0.5) / cols
    inside = ((y > box[0]) & (y < box[1]))[:, None] & ((x > box[0]) & (x < box[1]))[None, :]
    return np.where(inside, level, 0.0)


def suppression_from_image(image: np.ndarray, grid: Grid) -> np.ndarray:
    """Map 8 bit gray levels linearly onto [-0.25, 0.25] at FEF resolution"""
    if image.ndim == 3:
        image = cv2.cvtColor(image, cv2.COLOR_BGR2GRAY)
    rows, cols = grid
    small = cv2.resize(image.astype(np.float32), (cols, rows), interpolation=cv2.INTER_AREA)
    return (-A_FEF_BOUND + 2 * A_FEF_BOUND * small / 255.0).astype(np.float64)


# -----------
# Dynamics
# -----------


def gaussian_blob(
    center: Tuple[float, float],
    amplitude: float,
    sigma: Tuple[float, float],
    grid: Grid,
) -> np.ndarray:
    """a * exp(-((x-cx)^2 / 2 sx^2 + (y-cy)^2 / 2 sy^2)), center and sigma as (x, y)"""
    if sigma[0] <= 0 or sigma[1] <= 0:
        raise DataError(f"Gaussian sigma must be positive, got {sigma}")
    rows, cols = grid
    x = np.arange(cols, dtype=np.float64)[None, :]
    y = np.arange(rows, dtype=np.float64)[:, None]
    return amplitude * np.exp(
        -((x - center[0]) ** 2 / (2 * sigma[0] ** 2) + (y - center[1]) ** 2 / (2 * sigma[1] ** 2))
    )


def fef_drive(e_hva2: np.ndarray, ctx: AttentionContext) -> np.ndarray:
    if e_hva2.shape != ctx.grid:
        raise DataError(f"HVA drive {e_hva2.shape} does not match FEF grid {ctx.grid}")
    return np.clip(e_hva2 * (1.0 + 2.0 * np.minimum(ctx.a_fef, ctx.r_ior)), 0.0, 1.0)


def enhance(u: np.ndarray, gain: float) -> np.ndarray:
    """Q: divisive normalization against the max after subtracting the weighted mean"""
    top = float(u.max())
    if top <= 0.0:
        return np.zeros_like(u)
    floor = gain * float(u.mean())
    if top - floor <= 1e-12:
        return np.clip(u / top, 0.0, 1.0)
    return np.clip((u - floor) / (top - floor), 0.0, 1.0)


def contrast(u: np.ndarray, gamma: float) -> np.ndarray:
    """C: power law widening the gap between low and high signals"""
    return u**gamma


def fef_step(r: np.ndarray, f: np.ndarray, params: FEFParams) -> np.ndarray:
    e = contrast(enhance(f, params.q_gain), params.gamma)
    return np.clip(r + (params.dt / params.tau) * (-r + e), 0.0, 1.0)


@dataclass
class Selection:
    r_fef: np.ndarray
    f: np.ndarray
    peak: Tuple[int, int] | None  # (row, col)
    value: float
    steps: int


def second_peak(r: np.ndarray, peak: Tuple[int, int], radius: float) -> float:
    rows, cols = r.shape
    yy, xx = np.ogrid[:rows, :cols]
    outside = (yy - peak[0]) ** 2 + (xx - peak[1]) ** 2 > radius**2
    return float(r[outside].max(initial=0.0))


def run_to_selection(
    drive: Drive | np.ndarray, ctx: AttentionContext, params: FEFParams = FEFParams()
) -> Selection:
    """
    Integrate the visual cell dynamics until one location wins.
    drive is either a fixed HVA 2/3 plane or a callable recomputing it
    from the current FEF activity (reentrant feedback).
    """
    r = np.zeros(ctx.grid, dtype=np.float64)
    radius = min(params.ior_sigma(ctx.grid))
    f = np.zeros_like(r)
    for step in range(1, params.n_steps_max + 1):
        e_hva2 = drive(r) if callable(drive) else drive
        f = fef_drive(e_hva2, ctx)
        r_next = fef_step(r, f, params)
        delta = float(np.abs(r_next - r).max())
        r = r_next
        peak = np.unravel_index(int(np.argmax(r)), r.shape)
        top = float(r[peak])
        if top > params.theta_sel and second_peak(r, peak, radius) < params.second_ratio * top:
            return Selection(r, f, (int(peak[0]), int(peak[1])), top, step)
        if delta < params.epsilon:
            log.debug("FEF dynamics stalled after %d steps (top %.3f)", step, top)
            break
    log.debug("no FEF selection after %d steps", step)
    return Selection(r, f, None, float(r.max()), step)


def apply_ior(
    ctx: AttentionContext, x_s: Tuple[float, float], params: FEFParams = FEFParams()
) -> AttentionContext:
    """Decrement r_ior by v_ior * g(x_s, 1, grid/6); x_s given as (x, y) in FEF cells"""
    g = gaussian_blob(x_s, 1.0, params.ior_sigma(ctx.grid), ctx.grid)
    return dataclasses.replace(ctx, r_ior=ctx.r_ior - ctx.v_ior * g)


def readout(r: np.ndarray, peak: Tuple[int, int]) -> Tuple[float, float]:
    """Activity weighted centroid (x, y) of the 3x3 neighbourhood around the winner"""
    rows, cols = r.shape
    r0, r1 = max(0, peak[0] - 1), min(rows, peak[0] + 2)
    c0, c1 = max(0, peak[1] - 1), min(cols, peak[1] + 2)
    w = r[r0:r1, c0:c1]
    total = float(w.sum())
    if total <= 0:
        return float(peak[1]), float(peak[0])
    yy, xx = np.mgrid[r0:r1, c0:c1]
    return float((w * xx).sum() / total), float((w * yy).sum() / total)

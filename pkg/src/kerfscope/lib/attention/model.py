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

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

# ---------------------------
# Third-party library imports
# ----------------------------

import cv2
import numpy as np

from pubsub import pub

# --------------
# local imports
# -------------

from .. import Side
from ..config import Config
from ..error import ConfigError
from ..roi import side_of, in_center
from ..tensorio import write_tensors
from ..controller.types import Event
from .earlyvision import v1_simple, v1_pool, POOL_FACTOR
from .hva import (
    TemplateBank,
    HVAPoolParams,
    ReentrantGains,
    template_responses,
    modulate_layer4,
    hva_pool23,
)
from .fef import (
    FEFParams,
    AttentionContext,
    central_suppression,
    suppression_from_image,
    run_to_selection,
    apply_ior,
    readout,
)

# ----------------
# Module constants
# ----------------

N_SACCADES = 4

# -----------------------
# Module global variables
# -----------------------

log = logging.getLogger(__name__.split(".")[-1])


@dataclass(frozen=True)
class AttentionParams:
    attention_px: int = 480
    n_saccades: int = N_SACCADES
    suppress: bool = True
    suppress_map: str | None = None  # gray image, mid gray = neutral
    pfc_gain: Tuple[float, ...] | None = None

    def __post_init__(self):
        if self.attention_px % POOL_FACTOR or self.attention_px < 16 * POOL_FACTOR:
            raise ValueError(
                f"attention_px {self.attention_px} must be a multiple of {POOL_FACTOR}, "
                f"at least {16 * POOL_FACTOR}"
            )
        if not 1 <= self.n_saccades <= N_SACCADES:
            raise ValueError(f"n_saccades must lie in [1, {N_SACCADES}]")


@dataclass
class Saccade:
    x: float  # normalized chip context coordinates
    y: float
    peak: float  # FEF movement cell value at selection
    steps: int
    template: int  # winning template index
    width_px: float  # street width estimate, chip context crop pixels
    side: Side
    valid: bool

    @property
    def fixation(self) -> Tuple[float, float]:
        return self.x, self.y


@dataclass
class SaccadePlan:
    chip_id: str
    saccades: List[Saccade] = field(default_factory=list)
    attempts: int = 0

    @property
    def valid(self) -> bool:
        return len(self.saccades) == N_SACCADES and all(s.valid for s in self.saccades)

    def fixations(self) -> List[Tuple[float, float]]:
        return [s.fixation for s in self.saccades]


class AttentionModel:
    """One shot template attention model, one instance may serve many chips sequentially"""

    def __init__(
        self,
        bank: TemplateBank,
        pool: HVAPoolParams = HVAPoolParams(),
        gains: ReentrantGains = ReentrantGains(),
        fef: FEFParams = FEFParams(),
        params: AttentionParams = AttentionParams(),
    ):
        if len(bank) == 0:
            raise ConfigError("empty template bank")
        if params.pfc_gain is not None and len(params.pfc_gain) != len(bank):
            raise ConfigError(f"{len(params.pfc_gain)} PFC gains for {len(bank)} templates")
        self.bank = bank
        self.pool = pool
        self.gains = gains
        self.fef = fef
        self.params = params
        n = params.attention_px // POOL_FACTOR
        self.grid = (n // pool.stride + (n % pool.stride > 0),) * 2
        if params.suppress_map is not None:
            image = cv2.imread(params.suppress_map, cv2.IMREAD_GRAYSCALE)
            if image is None:
                raise ConfigError(f"cannot read suppression map {params.suppress_map}")
            self.a_fef = suppression_from_image(image, self.grid)
        elif params.suppress:
            self.a_fef = central_suppression(self.grid)
        else:
            self.a_fef = np.zeros(self.grid)

    @classmethod
    def from_config(
        cls, bank: TemplateBank, config: Config, suppress_map: str | None = None
    ) -> "AttentionModel":
        """suppress_map, when given, replaces the configured suppression map"""
        return cls(
            bank,
            pool=config.build("hva", HVAPoolParams, shared=(ReentrantGains,)),
            gains=config.build("hva", ReentrantGains, shared=(HVAPoolParams,)),
            fef=config.build("fef", FEFParams),
            params=config.build("attention", AttentionParams, suppress_map=suppress_map),
        )

    def prepare(self, chip_image: np.ndarray) -> np.ndarray:
        n = self.params.attention_px
        return cv2.resize(chip_image, (n, n), interpolation=cv2.INTER_AREA)

    def find_streets(
        self, chip_image: np.ndarray, chip_id: str = "", dump_dir: str | None = None
    ) -> SaccadePlan:
        img = self.prepare(chip_image)
        scale = chip_image.shape[1] / img.shape[1]
        v1 = v1_pool(v1_simple(img, self.bank.v1))
        responses = template_responses(v1, self.bank)
        l4_shape = responses.shape[1:]
        last = dict()

        def drive(r_fef: np.ndarray) -> np.ndarray:
            feedback = r_fef
            if r_fef.shape != l4_shape:
                feedback = cv2.resize(r_fef, l4_shape[::-1], interpolation=cv2.INTER_LINEAR)
            l4 = modulate_layer4(responses, self.bank, self.params.pfc_gain, feedback, self.gains)
            l23 = hva_pool23(l4, self.pool)
            last["l4"], last["l23"] = l4, l23
            return l23.planes.max(axis=0)

        ctx = AttentionContext.fresh(self.grid, self.a_fef, self.fef.v_ior)
        plan = SaccadePlan(chip_id)
        rows, cols = self.grid
        for k in range(self.params.n_saccades):
            plan.attempts += 1
            sel = run_to_selection(drive, ctx, self.fef)
            if sel.peak is None:
                log.warning(
                    "[%s] saccade %d: no street selected in %d steps", chip_id, k + 1, sel.steps
                )
                break
            cx, cy = readout(sel.r_fef, sel.peak)
            x, y = (cx + 0.5) / cols, (cy + 0.5) / rows
            template = int(np.argmax(last["l23"].planes[:, sel.peak[0], sel.peak[1]]))
            saccade = Saccade(
                x=x,
                y=y,
                peak=sel.value,
                steps=sel.steps,
                template=template,
                width_px=self.bank.width_px(template) * scale,
                side=side_of((x, y)),
                valid=not in_center((x, y)),
            )
            plan.saccades.append(saccade)
            if dump_dir is not None:
                self._dump(dump_dir, chip_id, k, v1.planes, last, sel, ctx)
            pub.sendMessage(Event.SACCADE, chip_id=chip_id, index=k, saccade=saccade)
            ctx = apply_ior(ctx, (float(sel.peak[1]), float(sel.peak[0])), self.fef)
        return plan

    def _dump(self, dump_dir, chip_id, k, v1_planes, last, sel, ctx) -> None:
        os.makedirs(dump_dir, exist_ok=True)
        path = os.path.join(dump_dir, f"{chip_id or 'chip'}_saccade{k + 1}.kstc")
        write_tensors(
            path,
            {
                "v1_pool": v1_planes,
                "hva4": last["l4"].planes,
                "hva23": last["l23"].planes,
                "fef_drive": sel.f,
                "r_fef": sel.r_fef,
                "r_ior": ctx.r_ior,
                "a_fef": ctx.a_fef,
            },
            {"chip_id": chip_id, "saccade": k + 1, "peak": list(sel.peak), "steps": sel.steps},
        )
        log.debug("Activity dump %s", path)


def fixation_to_chip(
    fixation: Tuple[float, float], chip_px: int, margin_px: int
) -> Tuple[float, float]:
    """Normalized context crop coordinates to chip pixel coordinates"""
    n = chip_px + 2 * margin_px
    return fixation[0] * n - margin_px, fixation[1] * n - margin_px


def pairwise_separation(fixations: Sequence[Tuple[float, float]]) -> float:
    best = np.inf
    for i in range(len(fixations)):
        for j in range(i + 1, len(fixations)):
            d = np.hypot(fixations[i][0] - fixations[j][0], fixations[i][1] - fixations[j][1])
            best = min(best, d)
    return float(best)


def find_streets(
    chip_image: np.ndarray,
    bank: TemplateBank,
    params: AttentionParams = AttentionParams(),
    fef: FEFParams = FEFParams(),
    pool: HVAPoolParams = HVAPoolParams(),
    gains: ReentrantGains = ReentrantGains(),
) -> SaccadePlan:
    return AttentionModel(bank, pool, gains, fef, params).find_streets(chip_image)

# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# see the AUTHORS file for authors
# ----------------------------------------------------------------------

# ---------------------
# Third party libraries
# ---------------------

import enum

from lica import StrEnum


class StreetClass(enum.IntEnum):
    GOOD = 0
    ANOMALY = 1
    BAD = 2

    def __str__(self):
        return self.name.lower()


class Side(StrEnum):
    N = "N"
    E = "E"
    S = "S"
    W = "W"
    CHIP = "chip"

    @classmethod
    def streets(cls) -> tuple["Side", ...]:
        return (cls.N, cls.E, cls.S, cls.W)

    def horizontal(self) -> bool:
        return self in (Side.N, Side.S)


class Split(StrEnum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


class Polarity(StrEnum):
    DARK = "dark"  # dark street, light chip
    LIGHT = "light"  # light street, dark chip


class Orientation(StrEnum):
    H = "H"
    V = "V"


class Arch(StrEnum):
    STREET = "street"
    CHIP = "chip"
    BORDER = "border"


class Resolution(StrEnum):
    SIMPLE = "simple"
    POOL = "pool"


# Manifest format
MANIFEST_VERSION = "1"

# Tensor container format
TENSOR_MAGIC = b"KSTC"
TENSOR_VERSION = 1

# Canonical classifier input shapes (H, W)
STREET_INPUT = (60, 192)
CHIP_INPUT = (96, 96)

# Chip context crop margin, as a fraction of the chip side
CHIP_MARGIN = 0.25

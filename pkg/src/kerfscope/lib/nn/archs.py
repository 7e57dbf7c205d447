# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

"""Network layouts for streets, whole chips and inside/border chips"""

from typing import Tuple

from .. import Arch, STREET_INPUT, CHIP_INPUT
from .network import NetworkSpec, conv, maxpool, dropout, dense, softmax_layer

CONV_DROPOUT = 0.25
DENSE_DROPOUT = 0.5


def _vgg_like(
    name: str,
    input_shape: Tuple[int, int, int],
    pool3: Tuple[Tuple[int, int], Tuple[int, int]],
    num_classes: int,
) -> NetworkSpec:
    return NetworkSpec(
        name=name,
        input_shape=input_shape,
        layers=(
            conv("conv1_1", 5, 32),
            conv("conv1_2", 3, 48),
            maxpool("pool1", 3, 3),
            dropout("dropout1", CONV_DROPOUT),
            conv("conv2_1", 3, 64),
            conv("conv2_2", 3, 96),
            maxpool("pool2", 2, 2),
            dropout("dropout2", CONV_DROPOUT),
            conv("conv3_1", 3, 144),
            conv("conv3_2", 3, 192),
            maxpool("pool3", pool3[0], pool3[1]),
            dropout("dropout3", CONV_DROPOUT),
            dense("dense1", 192),
            dropout("dropout4", DENSE_DROPOUT),
            dense("dense2", num_classes),
            softmax_layer(),
        ),
        num_classes=num_classes,
    )


def street_network(num_classes: int = 3) -> NetworkSpec:
    """Street classifier; the last pooling shrinks only along the street (x)"""
    return _vgg_like("street", (*STREET_INPUT, 1), ((1, 3), (1, 3)), num_classes)


def chip_network(num_classes: int = 3) -> NetworkSpec:
    return _vgg_like("chip", (*CHIP_INPUT, 1), ((2, 2), (2, 2)), num_classes)


def border_network() -> NetworkSpec:
    """Single VGG block: two convolutions, one max pooling, one dense and the output layer"""
    return NetworkSpec(
        name="border",
        input_shape=(*CHIP_INPUT, 1),
        layers=(
            conv("conv1", 5, 16),
            conv("conv2", 3, 16),
            maxpool("pool1", 3, 3),
            dropout("dropout1", CONV_DROPOUT),
            dense("dense1", 64),
            dropout("dropout2", DENSE_DROPOUT),
            dense("dense2", 2),
            softmax_layer(),
        ),
        num_classes=2,
    )


def network_for(arch: Arch, num_classes: int = 3) -> NetworkSpec:
    arch = Arch(arch)
    if arch == Arch.STREET:
        return street_network(num_classes)
    if arch == Arch.CHIP:
        return chip_network(num_classes)
    return border_network()

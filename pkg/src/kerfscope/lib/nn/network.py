# ----------------------------------------------------------------------
# Copyright (c) 2024 Rafael Gonzalez.
#
# See the LICENSE file for details
# ----------------------------------------------------------------------

"""
Minimal convolutional network engine.

Batches are NHWC arrays. Convolutions are 'valid' (no padding) and are
computed as one matrix product per kernel offset, which keeps memory
proportional to the layer output instead of the full im2col matrix.
Every conv and dense layer but the last is followed by a rectifier; the
softmax lives in the loss.
"""

# --------------------
# System wide imports
# -------------------

import logging

from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Mapping, Tuple

# ---------------------------
# Third-party library imports
# ----------------------------

import numpy as np

from numpy.lib.stride_tricks import sliding_window_view

# --------------
# local imports
# -------------

from ..error import ShapeError

# ----------------
# Module constants
# ----------------

CONV = "conv"
POOL = "maxpool"
DROPOUT = "dropout"
DENSE = "dense"
SOFTMAX = "softmax"

# -----------------------
# Module global variables
# -----------------------

log = logging.getLogger(__name__.split(".")[-1])

Shape = Tuple[int, ...]


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    name: str
    kernel: Tuple[int, int] = (1, 1)
    stride: Tuple[int, int] = (1, 1)
    channels: int = 0  # conv output channels
    units: int = 0  # dense output units
    rate: float = 0.0  # dropout rate

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "LayerSpec":
        values = dict(d)
        values["kernel"] = tuple(values.get("kernel", (1, 1)))
        values["stride"] = tuple(values.get("stride", (1, 1)))
        return cls(**values)


def conv(name: str, kernel: int | Tuple[int, int], channels: int, stride: int = 1) -> LayerSpec:
    k = (kernel, kernel) if isinstance(kernel, int) else tuple(kernel)
    return LayerSpec(CONV, name, kernel=k, stride=(stride, stride), channels=channels)


def maxpool(
    name: str, kernel: int | Tuple[int, int], stride: int | Tuple[int, int] | None = None
) -> LayerSpec:
    k = (kernel, kernel) if isinstance(kernel, int) else tuple(kernel)
    s = k if stride is None else (stride, stride) if isinstance(stride, int) else tuple(stride)
    return LayerSpec(POOL, name, kernel=k, stride=s)


def dropout(name: str, rate: float) -> LayerSpec:
    return LayerSpec(DROPOUT, name, rate=rate)


def dense(name: str, units: int) -> LayerSpec:
    return LayerSpec(DENSE, name, units=units)


def softmax_layer(name: str = "softmax") -> LayerSpec:
    return LayerSpec(SOFTMAX, name)


@dataclass(frozen=True)
class NetworkSpec:
    name: str
    input_shape: Shape  # (H, W, C)
    layers: Tuple[LayerSpec, ...] = field(default_factory=tuple)
    num_classes: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "input_shape": list(self.input_shape),
            "layers": [layer.to_dict() for layer in self.layers],
            "num_classes": self.num_classes,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "NetworkSpec":
        return cls(
            name=d["name"],
            input_shape=tuple(d["input_shape"]),
            layers=tuple(LayerSpec.from_dict(x) for x in d["layers"]),
            num_classes=int(d["num_classes"]),
        )


def infer_shapes(spec: NetworkSpec) -> List[Tuple[str, Shape]]:
    """Per layer output shapes (batch axis excluded), starting with the input"""
    shapes: List[Tuple[str, Shape]] = [("input", tuple(spec.input_shape))]
    shape = tuple(spec.input_shape)
    for layer in spec.layers:
        if layer.kind in (CONV, POOL):
            if len(shape) != 3:
                raise ShapeError(layer.name, f"expects an image input, got {shape}")
            h, w, c = shape
            (kh, kw), (sh, sw) = layer.kernel, layer.stride
            if kh > h or kw > w:
                raise ShapeError(layer.name, f"kernel {kh}x{kw} larger than input {h}x{w}")
            if sh <= 0 or sw <= 0:
                raise ShapeError(layer.name, f"invalid stride {layer.stride}")
            out_c = layer.channels if layer.kind == CONV else c
            if out_c <= 0:
                raise ShapeError(layer.name, "no output channels")
            shape = ((h - kh) // sh + 1, (w - kw) // sw + 1, out_c)
        elif layer.kind == DENSE:
            if layer.units <= 0:
                raise ShapeError(layer.name, "no output units")
            shape = (layer.units,)
        elif layer.kind == DROPOUT:
            if not 0.0 <= layer.rate < 1.0:
                raise ShapeError(layer.name, f"dropout rate {layer.rate} out of [0,1)")
        elif layer.kind != SOFTMAX:
            raise ShapeError(layer.name, f"unknown layer kind {layer.kind}")
        shapes.append((layer.name, shape))
    if spec.num_classes and shape != (spec.num_classes,):
        last = spec.layers[-1].name if spec.layers else "input"
        raise ShapeError(last, f"output shape {shape} does not match {spec.num_classes} classes")
    return shapes


# -----------
# Layer math
# -----------


def conv_forward(
    x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: Tuple[int, int]
) -> np.ndarray:
    n, h, wd, c = x.shape
    kh, kw, _, f = w.shape
    sh, sw = stride
    ho, wo = (h - kh) // sh + 1, (wd - kw) // sw + 1
    out = np.zeros((n, ho, wo, f), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            patch = x[:, i : i + (ho - 1) * sh + 1 : sh, j : j + (wo - 1) * sw + 1 : sw, :]
            out += patch @ w[i, j]
    return out + b


def conv_backward(
    x: np.ndarray, w: np.ndarray, dout: np.ndarray, stride: Tuple[int, int]
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    kh, kw, c, f = w.shape
    sh, sw = stride
    _, ho, wo, _ = dout.shape
    dx = np.zeros_like(x)
    dw = np.zeros_like(w)
    flat = dout.reshape(-1, f)
    for i in range(kh):
        for j in range(kw):
            rows = slice(i, i + (ho - 1) * sh + 1, sh)
            cols = slice(j, j + (wo - 1) * sw + 1, sw)
            dw[i, j] = x[:, rows, cols, :].reshape(-1, c).T @ flat
            dx[:, rows, cols, :] += dout @ w[i, j].T
    return dx, dw, flat.sum(axis=0)


def pool_forward(x: np.ndarray, kernel: Tuple[int, int], stride: Tuple[int, int]) -> np.ndarray:
    kh, kw = kernel
    sh, sw = stride
    ho, wo = (x.shape[1] - kh) // sh + 1, (x.shape[2] - kw) // sw + 1
    windows = sliding_window_view(x, (kh, kw), axis=(1, 2))[:, ::sh, ::sw][:, :ho, :wo]
    return windows.max(axis=(4, 5))


def pool_backward(
    x: np.ndarray,
    out: np.ndarray,
    dout: np.ndarray,
    kernel: Tuple[int, int],
    stride: Tuple[int, int],
) -> np.ndarray:
    """Route each output gradient to the first maximum of its window"""
    kh, kw = kernel
    sh, sw = stride
    _, ho, wo, _ = out.shape
    dx = np.zeros_like(x)
    taken = np.zeros(out.shape, dtype=bool)
    for i in range(kh):
        for j in range(kw):
            rows = slice(i, i + (ho - 1) * sh + 1, sh)
            cols = slice(j, j + (wo - 1) * sw + 1, sw)
            hit = (x[:, rows, cols, :] == out) & ~taken
            dx[:, rows, cols, :] += np.where(hit, dout, 0)
            taken |= hit
    return dx


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean categorical cross entropy of softmax(logits) and its gradient w.r.t. the logits"""
    n = logits.shape[0]
    z = logits - logits.max(axis=1, keepdims=True)
    log_p = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -float(log_p[np.arange(n), labels].mean())
    grad = np.exp(log_p)
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


# -------
# Network
# -------


class Network:
    def __init__(self, spec: NetworkSpec, seed: int = 0, dtype: Any = np.float32):
        self.spec = spec
        self.dtype = np.dtype(dtype)
        self.shapes = infer_shapes(spec)
        self.params: Dict[str, np.ndarray] = dict()
        rng = np.random.default_rng(seed)
        dense_layers = [layer.name for layer in spec.layers if layer.kind == DENSE]
        self._last_dense = dense_layers[-1] if dense_layers else None
        for (_, in_shape), layer in zip(self.shapes[:-1], spec.layers):
            if layer.kind == CONV:
                kh, kw = layer.kernel
                fan_in = kh * kw * in_shape[2]
                shape = (kh, kw, in_shape[2], layer.channels)
                self._init(rng, layer.name, shape, fan_in, layer.channels)
            elif layer.kind == DENSE:
                fan_in = int(np.prod(in_shape))
                self._init(rng, layer.name, (fan_in, layer.units), fan_in, layer.units)
        self._cache: List[Any] = list()

    def _init(self, rng, name, shape, fan_in, fan_out) -> None:
        """He initialization, zero biases"""
        self.params[f"{name}.W"] = (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(
            self.dtype
        )
        self.params[f"{name}.b"] = np.zeros(fan_out, dtype=self.dtype)

    @property
    def num_classes(self) -> int:
        return self.shapes[-1][1][0]

    def forward(
        self, x: np.ndarray, training: bool = False, rng: np.random.Generator | None = None
    ) -> np.ndarray:
        if tuple(x.shape[1:]) != tuple(self.spec.input_shape):
            expected = tuple(self.spec.input_shape)
            raise ShapeError("input", f"batch of shape {x.shape}, expected (N, *{expected})")
        x = x.astype(self.dtype, copy=False)
        trace: List[Any] = list()
        for layer in self.spec.layers:
            if layer.kind == CONV:
                w, b = self.params[f"{layer.name}.W"], self.params[f"{layer.name}.b"]
                pre = conv_forward(x, w, b, layer.stride)
                out = np.maximum(pre, 0)
                trace.append((layer, x, pre))
            elif layer.kind == POOL:
                out = pool_forward(x, layer.kernel, layer.stride)
                trace.append((layer, x, out))
            elif layer.kind == DROPOUT:
                if training and layer.rate > 0:
                    rng = rng if rng is not None else np.random.default_rng()
                    mask = (rng.random(x.shape) >= layer.rate).astype(self.dtype) / (1 - layer.rate)
                    out = x * mask
                else:
                    mask = None
                    out = x
                trace.append((layer, mask, None))
            elif layer.kind == DENSE:
                flat = x.reshape(x.shape[0], -1)
                w, b = self.params[f"{layer.name}.W"], self.params[f"{layer.name}.b"]
                pre = flat @ w + b
                out = pre if layer.name == self._last_dense else np.maximum(pre, 0)
                trace.append((layer, x, pre))
            else:
                out = x
                trace.append((layer, None, None))
            x = out
        # only training passes keep activations, inference is thread safe
        if training:
            self._cache = trace
        return x

    def backward(self, dlogits: np.ndarray) -> Dict[str, np.ndarray]:
        """Gradients of every parameter given dLoss/dlogits of the last training forward pass"""
        grads: Dict[str, np.ndarray] = dict()
        d = dlogits.astype(self.dtype, copy=False)
        for layer, a, b in reversed(self._cache):
            if layer.kind == CONV:
                d = d * (b > 0)
                d, dw, db = conv_backward(a, self.params[f"{layer.name}.W"], d, layer.stride)
                grads[f"{layer.name}.W"], grads[f"{layer.name}.b"] = dw, db
            elif layer.kind == POOL:
                d = pool_backward(a, b, d, layer.kernel, layer.stride)
            elif layer.kind == DROPOUT:
                if a is not None:
                    d = d * a
            elif layer.kind == DENSE:
                if layer.name != self._last_dense:
                    d = d * (b > 0)
                flat = a.reshape(a.shape[0], -1)
                grads[f"{layer.name}.W"] = flat.T @ d
                grads[f"{layer.name}.b"] = d.sum(axis=0)
                d = (d @ self.params[f"{layer.name}.W"].T).reshape(a.shape)
        return grads

    def predict_proba(self, x: np.ndarray, batch_size: int = 32) -> np.ndarray:
        out = [
            softmax(self.forward(x[i : i + batch_size]).astype(np.float64))
            for i in range(0, len(x), batch_size)
        ]
        return np.concatenate(out) if out else np.zeros((0, self.num_classes))

    def predict(self, x: np.ndarray, batch_size: int = 32) -> np.ndarray:
        return self.predict_proba(x, batch_size).argmax(axis=1)


def build(spec: NetworkSpec, seed: int = 0, dtype: Any = np.float32) -> Network:
    network = Network(spec, seed, dtype)
    log.debug("Built %s with %d parameter tensors", spec.name, len(network.params))
    return network

"""Reference kernels: plain dense loops on flat arrays, no segment pool.

These define the expected numerics for every segment-aware kernel.  They
share :func:`segmem.kernels.quant.requantize` with the pool kernels and
nothing else, so an agreement check exercises the whole segment machinery.
"""

from __future__ import annotations

import numpy as np

from ..specs import LayerSpec, ModuleSpec, Padding, pad_and_out
from .quant import requantize
from .weights import BottleneckWeights, ConvWeights, DepthwiseWeights, LinearWeights


def fc_reference(x: np.ndarray, weights: LinearWeights) -> np.ndarray:
    acc = x.astype(np.int32) @ weights.w.astype(np.int32) + weights.bias
    return requantize(acc, weights.qparams)


def _pad_image(x: np.ndarray, pad_h: int, pad_w: int, r: int, s: int,
               out_h: int, out_w: int, stride: int) -> np.ndarray:
    """Zero pad so every window read is in bounds (zero taps contribute nothing)."""
    need_h = (out_h - 1) * stride + r
    need_w = (out_w - 1) * stride + s
    padded = np.zeros((need_h, need_w, x.shape[2]), dtype=np.int8)
    padded[pad_h:pad_h + x.shape[0], pad_w:pad_w + x.shape[1]] = x
    return padded


def conv2d_reference(x: np.ndarray, weights: ConvWeights, stride: int = 1,
                     padding: Padding = Padding.VALID) -> np.ndarray:
    h, w, _ = x.shape
    r, s, _, k = weights.w.shape
    pad_h, out_h = pad_and_out(h, r, stride, padding)
    pad_w, out_w = pad_and_out(w, s, stride, padding)
    padded = _pad_image(x, pad_h, pad_w, r, s, out_h, out_w, stride)
    w32 = weights.w.astype(np.int32)
    out = np.empty((out_h, out_w, k), dtype=np.int8)
    for p in range(out_h):
        for q in range(out_w):
            patch = padded[p * stride:p * stride + r, q * stride:q * stride + s]
            acc = np.einsum("rsc,rsck->k", patch.astype(np.int32), w32) + weights.bias
            out[p, q] = requantize(acc, weights.qparams)
    return out


def depthwise_reference(x: np.ndarray, weights: DepthwiseWeights, stride: int = 1,
                        padding: Padding = Padding.SAME) -> np.ndarray:
    h, w, c = x.shape
    r, s, _ = weights.w.shape
    pad_h, out_h = pad_and_out(h, r, stride, padding)
    pad_w, out_w = pad_and_out(w, s, stride, padding)
    padded = _pad_image(x, pad_h, pad_w, r, s, out_h, out_w, stride)
    w32 = weights.w.astype(np.int32)
    out = np.empty((out_h, out_w, c), dtype=np.int8)
    for p in range(out_h):
        for q in range(out_w):
            patch = padded[p * stride:p * stride + r, q * stride:q * stride + s]
            acc = np.einsum("rsc,rsc->c", patch.astype(np.int32), w32) + weights.bias
            out[p, q] = requantize(acc, weights.qparams)
    return out


def add_reference(a: np.ndarray, b: np.ndarray, qparams) -> np.ndarray:
    return requantize(a.astype(np.int32) + b.astype(np.int32), qparams)


def bottleneck_reference(x: np.ndarray, weights: BottleneckWeights,
                         module: ModuleSpec) -> np.ndarray:
    """Chained oracle for the fused module: expand, depthwise, project, add."""
    s1, s2, _ = module.strides
    expand = ConvWeights(weights.expand.w[None, None], weights.expand.bias,
                         weights.expand.qparams)
    project = ConvWeights(weights.project.w[None, None], weights.project.bias,
                          weights.project.qparams)
    b = conv2d_reference(x, expand, stride=s1, padding=Padding.SAME)
    c = depthwise_reference(b, weights.depth, stride=s2, padding=Padding.SAME)
    d = conv2d_reference(c, project, stride=1, padding=Padding.SAME)
    if module.residual:
        return add_reference(x, d, weights.add_qparams)
    return d


def layer_reference(spec: LayerSpec, x: np.ndarray, weights) -> np.ndarray:
    from ..specs import LayerKind

    if spec.kind is LayerKind.FULLY_CONNECTED:
        return fc_reference(x, weights)
    if spec.kind is LayerKind.CONV2D:
        w = weights
        if isinstance(w, LinearWeights):
            w = ConvWeights(w.w[None, None], w.bias, w.qparams)
        return conv2d_reference(x, w, stride=spec.stride, padding=spec.padding)
    if spec.kind is LayerKind.DEPTHWISE:
        return depthwise_reference(x, weights, stride=spec.stride, padding=spec.padding)
    raise ValueError(f"no reference for {spec.kind}")

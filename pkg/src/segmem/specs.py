"""Layer and module shape descriptions plus the solved memory plan record.

Shapes are in elements; segment grids derived from them are in segments.
Planning for the classic GEMM formulation (where M, K, N already count
segments) goes through :func:`segmem.planner.plan_gemm` instead.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Tuple


class LayerKind(enum.Enum):
    FULLY_CONNECTED = "fc"
    CONV2D = "conv2d"
    DEPTHWISE = "depthwise"
    ADD = "add"


class Padding(enum.Enum):
    VALID = "valid"
    SAME = "same"


def pad_and_out(size: int, window: int, stride: int, padding: Padding) -> Tuple[int, int]:
    """Leading pad amount and output size along one spatial axis."""
    if padding is Padding.VALID:
        if window > size:
            raise ValueError(f"window {window} exceeds input size {size} with valid padding")
        return 0, (size - window) // stride + 1
    out = -(-size // stride)
    total = max(0, (out - 1) * stride + window - size)
    return total // 2, out


@dataclass(frozen=True)
class LayerSpec:
    """Shape of a single layer.  Use the classmethod constructors."""

    kind: LayerKind
    m: int = 1
    k: int = 1
    n: int = 1
    h: int = 1
    w: int = 1
    c: int = 1
    out_c: int = 1
    r: int = 1
    s: int = 1
    stride: int = 1
    padding: Padding = Padding.VALID

    def __post_init__(self) -> None:
        for name in ("m", "k", "n", "h", "w", "c", "out_c", "r", "s"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.stride not in (1, 2):
            raise ValueError("stride must be 1 or 2")
        if self.kind in (LayerKind.CONV2D, LayerKind.DEPTHWISE) and self.padding is Padding.VALID:
            if self.r > self.h or self.s > self.w:
                raise ValueError("window exceeds image under valid padding")

    @classmethod
    def fc(cls, m: int, k: int, n: int) -> "LayerSpec":
        return cls(LayerKind.FULLY_CONNECTED, m=m, k=k, n=n)

    @classmethod
    def conv2d(cls, h: int, w: int, c: int, out_c: int, r: int = 1, s: int = 1,
               stride: int = 1, padding: Padding = Padding.VALID) -> "LayerSpec":
        return cls(LayerKind.CONV2D, h=h, w=w, c=c, out_c=out_c, r=r, s=s,
                   stride=stride, padding=padding)

    @classmethod
    def depthwise(cls, h: int, w: int, c: int, r: int = 3, s: int = 3,
                  stride: int = 1, padding: Padding = Padding.SAME) -> "LayerSpec":
        return cls(LayerKind.DEPTHWISE, h=h, w=w, c=c, out_c=c, r=r, s=s,
                   stride=stride, padding=padding)

    @classmethod
    def add(cls, h: int, w: int, c: int) -> "LayerSpec":
        return cls(LayerKind.ADD, h=h, w=w, c=c, out_c=c)

    @property
    def out_h(self) -> int:
        return pad_and_out(self.h, self.r, self.stride, self.padding)[1]

    @property
    def out_w(self) -> int:
        return pad_and_out(self.w, self.s, self.stride, self.padding)[1]

    def input_bytes(self, dtype_bytes: int = 1) -> int:
        if self.kind is LayerKind.FULLY_CONNECTED:
            return self.m * self.k * dtype_bytes
        return self.h * self.w * self.c * dtype_bytes

    def output_bytes(self, dtype_bytes: int = 1) -> int:
        if self.kind is LayerKind.FULLY_CONNECTED:
            return self.m * self.n * dtype_bytes
        return self.out_h * self.out_w * self.out_c * dtype_bytes


@dataclass(frozen=True)
class ModuleSpec:
    """Inverted bottleneck: pointwise expand, depthwise, pointwise project, residual add.

    Mirrors one network-table row: input spatial size ``hw``, the three
    channel counts, the depthwise window ``rs`` and the three conv strides.
    The residual add is present exactly when the module preserves spatial
    size and channel count.
    """

    name: str
    hw: int
    c_in: int
    c_mid: int
    c_out: int
    rs: int
    strides: Tuple[int, int, int]

    def __post_init__(self) -> None:
        if min(self.hw, self.c_in, self.c_mid, self.c_out, self.rs) < 1:
            raise ValueError("all module dimensions must be at least 1")
        if self.c_mid < self.c_in:
            raise ValueError("expansion requires c_mid >= c_in")
        if any(s not in (1, 2) for s in self.strides):
            raise ValueError("strides must be 1 or 2")
        if self.strides[2] != 1:
            raise ValueError("projection conv stride must be 1")

    @property
    def mid_hw(self) -> int:
        """Spatial size of the expanded tensor (depthwise input)."""
        return -(-self.hw // self.strides[0])

    @property
    def out_hw(self) -> int:
        return -(-self.mid_hw // self.strides[1])

    @property
    def residual(self) -> bool:
        return self.c_in == self.c_out and self.out_hw == self.hw

    @property
    def fusable(self) -> bool:
        """Window-sliding fusion needs the depthwise window to fit its input image."""
        return self.rs <= self.mid_hw

    def tensor_bytes(self, dtype_bytes: int = 1):
        """Bytes of tensors A (input), B (expanded), C (after depthwise), D/E (output)."""
        a = self.hw * self.hw * self.c_in
        b = self.mid_hw * self.mid_hw * self.c_mid
        c = self.out_hw * self.out_hw * self.c_mid
        d = self.out_hw * self.out_hw * self.c_out
        return tuple(v * dtype_bytes for v in (a, b, c, d, d))


@dataclass(frozen=True)
class MemPlan:
    """Solved placement for one layer or fused module.

    ``offset_segments`` is the gap between the output and input base
    addresses (the empty segments reserved ahead of the input).
    ``workspace_segments`` counts scratch window slots (the R*S + 2 pipeline
    positions of a fused plan); ``workspace_pool_segments`` is the same
    scratch expressed in pool segments, which is what the footprint uses.
    """

    segment_bytes: int
    offset_segments: int
    in_segments: int
    out_segments: int
    workspace_segments: int
    workspace_pool_segments: int
    footprint_segments: int
    footprint_bytes: int
    baseline_bytes: int
    baseline_no_overlap_bytes: int
    fused: bool = False

    def __post_init__(self) -> None:
        if self.offset_segments < 0:
            raise ValueError("offset must be non-negative")
        if self.footprint_segments * self.segment_bytes != self.footprint_bytes:
            raise ValueError("footprint bytes must equal segments times segment size")

    @property
    def reduction(self) -> float:
        return 1.0 - self.footprint_bytes / self.baseline_bytes


def segments_for(elements: int, seg_elems: int) -> int:
    return math.ceil(elements / seg_elems)


def select_segment_size(spec, dtype_bytes: int = 1) -> int:
    """Segment size in bytes: min row size for FC, min channel size for conv shapes."""
    if isinstance(spec, ModuleSpec):
        return min(spec.c_in, spec.c_out) * dtype_bytes
    if spec.kind is LayerKind.FULLY_CONNECTED:
        return min(spec.k, spec.n) * dtype_bytes
    return min(spec.c, spec.out_c) * dtype_bytes


def baseline_footprint(spec, strategy: str = "inplace_dw", dtype_bytes: int = 1) -> int:
    """Tensor-level footprint in bytes when tensors get disjoint allocations.

    ``inplace_dw`` lets depthwise overlap its input and output fully (the
    tensor-level trick mature MCU engines apply); ``no_overlap`` allocates
    every tensor separately.  Modules take the max across their layers with
    intermediates materialized.
    """
    if strategy not in ("inplace_dw", "no_overlap"):
        raise ValueError(f"unknown baseline strategy {strategy!r}")
    if isinstance(spec, ModuleSpec):
        a, b, c, d, e = spec.tensor_bytes(dtype_bytes)
        layers = [a + b, max(b, c) if strategy == "inplace_dw" else b + c, c + d]
        if spec.residual:
            layers.append(a + d + e)
        return max(layers)
    inp = spec.input_bytes(dtype_bytes)
    out = spec.output_bytes(dtype_bytes)
    if spec.kind is LayerKind.DEPTHWISE:
        return max(inp, out) if strategy == "inplace_dw" else inp + out
    if spec.kind is LayerKind.ADD:
        return 2 * inp + out
    return inp + out

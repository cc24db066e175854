"""Segment-aware 2D convolution kernel.

Raster order over output pixels, then output channel segments; the input
window is re-loaded for each output channel segment.  Segments are channel
vectors, so a window load is R*S pixel reads of the input channel grid.
"""

from __future__ import annotations

from typing import Dict, Optional

import numpy as np

from ..planner import layer_grids
from ..pool import SegmentPool
from ..schedules import conv_steps, conv_window, read_counts
from ..specs import LayerKind, LayerSpec, MemPlan, pad_and_out
from . import intrinsics
from .common import (
    free_dead_input,
    free_exhausted,
    input_phys_set,
    load_concat,
    out_pending_count,
    register_pending,
)
from .layout import pad_vector
from .weights import ConvWeights


def _padded_tap_weights(weights: ConvWeights, seg: int, csegs: int, ksegs: int) -> np.ndarray:
    r, s, c, k = weights.w.shape
    wpad = np.zeros((r, s, csegs * seg, ksegs * seg), dtype=np.int8)
    wpad[:, :, :c, :k] = weights.w
    return wpad


def conv2d_forward(pool: SegmentPool, in_base: int, weights: ConvWeights,
                   spec: LayerSpec, plan: MemPlan,
                   out_pending: Optional[Dict[int, int]] = None) -> int:
    if spec.kind is not LayerKind.CONV2D:
        raise ValueError("conv2d_forward requires a conv2d spec")
    seg = plan.segment_bytes
    in_grid, out_grid = layer_grids(spec, seg)
    csegs, ksegs = in_grid.dims[2], out_grid.dims[2]
    pad_h, out_h = pad_and_out(spec.h, spec.r, spec.stride, spec.padding)
    pad_w, out_w = pad_and_out(spec.w, spec.s, spec.stride, spec.padding)

    register_pending(pool, in_base, read_counts(conv_steps(spec, in_grid, out_grid)))
    in_phys = input_phys_set(pool, in_base, in_grid.total)

    wpad = _padded_tap_weights(weights, seg, csegs, ksegs)
    bpad = pad_vector(weights.bias, ksegs * seg)
    qp = weights.qparams
    out_base = in_base - plan.offset_segments

    for p in range(out_h):
        for q in range(out_w):
            window = conv_window(p, q, spec.h, spec.w, spec.r, spec.s,
                                 spec.stride, pad_h, pad_w)
            for ko in range(ksegs):
                addrs = [in_base + in_grid.linear(ih, iw, ci)
                         for ih, iw in window for ci in range(csegs)]
                lanes = slice(ko * seg, (ko + 1) * seg)
                acc = intrinsics.reg_alloc(seg)
                acc += bpad[lanes]
                pos = 0
                for ih, iw in window:
                    x = load_concat(pool, addrs[pos:pos + csegs])
                    pos += csegs
                    rr = ih - (p * spec.stride - pad_h)
                    ss = iw - (q * spec.stride - pad_w)
                    intrinsics.seg_accumulate(x, wpad[rr, ss, :, lanes], acc)
                payload = intrinsics.requantize_block(acc, qp.multiplier, qp.shift, qp.zero_point)
                free_exhausted(pool, addrs)
                idx = out_grid.linear(p, q, ko)
                target = out_base + idx
                free_dead_input(pool, target, in_phys)
                pool.store(target, payload, ("out", idx), out_pending_count(out_pending, idx))
    return out_base

"""Segment-aware depthwise convolution, running fully in place.

Depthwise has no cross-channel reuse, so the output can take over the
input's segments (base offset zero).  A computed output segment cannot be
stored while its target still feeds later windows, so finished segments
wait in a small register-file queue and flush as their targets die; the
queue never exceeds roughly one image row.
"""

from __future__ import annotations

from collections import deque
from typing import Dict, Optional

from ..planner import layer_grids
from ..pool import SegmentPool
from ..schedules import conv_window, depthwise_steps, read_counts
from ..specs import LayerKind, LayerSpec, MemPlan, pad_and_out
from . import intrinsics
from .common import (
    free_dead_input,
    free_exhausted,
    input_phys_set,
    out_pending_count,
    register_pending,
)
from .layout import pad_vector
from .weights import DepthwiseWeights


def depthwise_forward(pool: SegmentPool, in_base: int, weights: DepthwiseWeights,
                      spec: LayerSpec, plan: MemPlan,
                      out_pending: Optional[Dict[int, int]] = None) -> int:
    if spec.kind is not LayerKind.DEPTHWISE:
        raise ValueError("depthwise_forward requires a depthwise spec")
    seg = plan.segment_bytes
    in_grid, out_grid = layer_grids(spec, seg)
    csegs = in_grid.dims[2]
    pad_h, out_h = pad_and_out(spec.h, spec.r, spec.stride, spec.padding)
    pad_w, out_w = pad_and_out(spec.w, spec.s, spec.stride, spec.padding)

    register_pending(pool, in_base, read_counts(depthwise_steps(spec, in_grid, out_grid)))
    in_phys = input_phys_set(pool, in_base, in_grid.total)

    wpad = [[pad_vector(weights.w[rr, ss], csegs * seg).astype("int8")
             for ss in range(spec.s)] for rr in range(spec.r)]
    bpad = pad_vector(weights.bias, csegs * seg)
    qp = weights.qparams
    out_base = in_base - plan.offset_segments

    queue = deque()

    def flush(force: bool = False) -> None:
        while queue:
            target, payload, idx = queue[0]
            if force:
                free_dead_input(pool, target, in_phys)
            if not pool.is_writable(target):
                break
            queue.popleft()
            pool.store(target, payload, ("out", idx), out_pending_count(out_pending, idx))

    for p in range(out_h):
        for q in range(out_w):
            window = conv_window(p, q, spec.h, spec.w, spec.r, spec.s,
                                 spec.stride, pad_h, pad_w)
            for cs in range(csegs):
                lanes = slice(cs * seg, (cs + 1) * seg)
                addrs = [in_base + in_grid.linear(ih, iw, cs) for ih, iw in window]
                acc = intrinsics.reg_alloc(seg)
                acc += bpad[lanes]
                for (ih, iw), addr in zip(window, addrs):
                    x = pool.load(addr)
                    rr = ih - (p * spec.stride - pad_h)
                    ss = iw - (q * spec.stride - pad_w)
                    intrinsics.seg_dwmac(x, wpad[rr][ss][lanes], acc)
                payload = intrinsics.requantize_block(acc, qp.multiplier, qp.shift, qp.zero_point)
                free_exhausted(pool, addrs)
                idx = out_grid.linear(p, q, cs)
                queue.append((out_base + idx, payload, idx))
                flush()
    flush(force=True)
    if queue:
        raise RuntimeError("depthwise write queue failed to drain")
    return out_base

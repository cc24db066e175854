"""Segment-aware fully connected kernel.

Outer loop runs over the output segment grid in row-major order; the whole
input row is re-read for every output segment of that row, so input rows
become dead exactly at their row's last output segment.  Output stores are
more frequent than input frees whenever a row has more output segments
than input segments, which is what the planned base offset absorbs.
"""

from __future__ import annotations

from typing import Dict, Optional

from ..planner import layer_grids
from ..pool import SegmentPool
from ..schedules import fc_steps, read_counts
from ..specs import LayerKind, LayerSpec, MemPlan
from . import intrinsics
from .common import (
    free_dead_input,
    free_exhausted,
    input_phys_set,
    out_pending_count,
    register_pending,
)
from .layout import pad_matrix, pad_vector
from .weights import LinearWeights


def fc_forward(pool: SegmentPool, in_base: int, weights: LinearWeights,
               spec: LayerSpec, plan: MemPlan,
               out_pending: Optional[Dict[int, int]] = None) -> int:
    if spec.kind is not LayerKind.FULLY_CONNECTED:
        raise ValueError("fc_forward requires a fully connected spec")
    seg = plan.segment_bytes
    in_grid, out_grid = layer_grids(spec, seg)
    ksegs, nsegs = in_grid.dims[1], out_grid.dims[1]

    register_pending(pool, in_base, read_counts(fc_steps(in_grid, out_grid)))
    in_phys = input_phys_set(pool, in_base, in_grid.total)

    wpad = pad_matrix(weights.w, ksegs * seg, nsegs * seg)
    bpad = pad_vector(weights.bias, nsegs * seg)
    qp = weights.qparams
    out_base = in_base - plan.offset_segments

    for m in range(spec.m):
        row_addrs = [in_base + m * ksegs + kk for kk in range(ksegs)]
        for nn in range(nsegs):
            lanes = slice(nn * seg, (nn + 1) * seg)
            acc = intrinsics.reg_alloc(seg)
            acc += bpad[lanes]
            for kk, addr in enumerate(row_addrs):
                x = pool.load(addr)
                intrinsics.seg_accumulate(x, wpad[kk * seg:(kk + 1) * seg, lanes], acc)
            payload = intrinsics.requantize_block(acc, qp.multiplier, qp.shift, qp.zero_point)
            free_exhausted(pool, row_addrs)
            idx = m * nsegs + nn
            target = out_base + idx
            free_dead_input(pool, target, in_phys)
            pool.store(target, payload, ("out", idx), out_pending_count(out_pending, idx))
    return out_base

"""Elementwise residual add over segment grids (in place over its second operand)."""

from __future__ import annotations

from typing import Dict, Optional

from ..pool import SegmentPool
from ..schedules import image_grid
from ..specs import LayerKind, LayerSpec, MemPlan
from .common import free_exhausted, out_pending_count
from .quant import QuantParams
from . import intrinsics


def add_forward(pool: SegmentPool, a_base: int, b_base: int, qparams: QuantParams,
                spec: LayerSpec, plan: MemPlan,
                out_pending: Optional[Dict[int, int]] = None) -> int:
    """E[i] = requantize(A[i] + B[i]); the output replaces operand B segment-wise.

    Both operands must already carry one pending read per segment.
    """
    if spec.kind is not LayerKind.ADD:
        raise ValueError("add_forward requires an add spec")
    seg = plan.segment_bytes
    grid = image_grid(spec.h, spec.w, spec.c, seg)
    out_base = b_base
    for idx in range(grid.total):
        a = pool.load(a_base + idx)
        b = pool.load(b_base + idx)
        acc = intrinsics.reg_alloc(seg)
        acc += a.astype("int32")
        acc += b.astype("int32")
        payload = intrinsics.requantize_block(acc, qparams.multiplier, qparams.shift,
                                              qparams.zero_point)
        free_exhausted(pool, (a_base + idx, b_base + idx))
        pool.store(out_base + idx, payload, ("out", idx), out_pending_count(out_pending, idx))
    return out_base

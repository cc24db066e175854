"""Fused inverted-bottleneck kernel with a sliding expansion window.

Per output pixel: the expansion conv fills the fresh columns of an R*S
pixel window of the expanded tensor (kept in a small workspace ring inside
the pool), the depthwise conv reduces that window to one middle pixel, the
projection conv turns it into one output pixel, and the residual add folds
in the corresponding input pixel.  Output segments drop into pool
addresses freed by consumed input segments, so the intermediate tensors
never exist in memory beyond the R*S + 2 workspace slots.
"""

from __future__ import annotations

from typing import Dict, Optional, Tuple

import numpy as np

from ..pool import SegmentPool
from ..schedules import fresh_read_counts, module_geometry, module_steps, read_counts
from ..specs import MemPlan, ModuleSpec, Padding, pad_and_out
from . import intrinsics
from .common import (
    free_dead_input,
    free_exhausted,
    input_phys_set,
    load_concat,
    out_pending_count,
    register_pending,
)
from .layout import pad_matrix, pad_vector
from .weights import BottleneckWeights


class UnsupportedModuleError(ValueError):
    """Raised when the fused kernel cannot execute a module topology."""


def bottleneck_forward(pool: SegmentPool, in_base: int, weights: BottleneckWeights,
                       module: ModuleSpec, plan: MemPlan,
                       out_pending: Optional[Dict[int, int]] = None) -> int:
    if not module.fusable:
        raise UnsupportedModuleError(
            f"module {module.name}: depthwise window {module.rs} exceeds its "
            f"input image {module.mid_hw}"
        )
    if not plan.fused:
        raise UnsupportedModuleError("bottleneck_forward needs a fused plan")

    seg = plan.segment_bytes
    geo = module_geometry(module, seg)
    steps = list(module_steps(geo))
    slot_reads = fresh_read_counts(steps)
    s1, s2, _ = module.strides
    pad, out_hw = pad_and_out(module.mid_hw, module.rs, s2, Padding.SAME)

    register_pending(pool, in_base, read_counts(steps))
    in_phys = input_phys_set(pool, in_base, geo.a_grid.total)
    stored_phys: set = set()

    a_segs = geo.a_grid.dims[2]
    e_segs = geo.e_grid.dims[2]
    sB, sC, sD = geo.b_slot_segments, geo.c_slot_segments, geo.d_slot_segments

    # workspace ring lives just past the joint span of input and output
    span = max(geo.a_grid.total + plan.offset_segments, geo.e_grid.total)
    out_base = in_base - plan.offset_segments
    ws_base = out_base + span
    c_slot_base = ws_base + geo.window_slots * sB
    d_slot_base = c_slot_base + sC

    w1 = pad_matrix(weights.expand.w, a_segs * seg, sB * seg)
    b1 = pad_vector(weights.expand.bias, sB * seg)
    wd = np.zeros((module.rs, module.rs, sB * seg), dtype=np.int8)
    wd[:, :, : module.c_mid] = weights.depth.w
    bd = pad_vector(weights.depth.bias, sB * seg)
    w2 = pad_matrix(weights.project.w, sB * seg, sD * seg)
    b2 = pad_vector(weights.project.bias, sD * seg)
    qp1, qpd, qp2 = weights.expand.qparams, weights.depth.qparams, weights.project.qparams
    qpa = weights.add_qparams

    slot_of: Dict[Tuple[int, int], int] = {}
    free_slots = list(range(geo.window_slots - 1, -1, -1))

    def slot_addr(slot: int, j: int) -> int:
        return ws_base + slot * sB + j

    for t, step in enumerate(steps):
        # retire window pixels that slid out
        for pixel in step.evict_b:
            slot = slot_of.pop(pixel)
            for j in range(sB):
                pool.free(slot_addr(slot, j))
            free_slots.append(slot)

        # expansion conv for pixels entering the window
        for pb, qb in step.fresh_b:
            a_addrs = [in_base + geo.a_grid.linear(pb * s1, qb * s1, ci)
                       for ci in range(a_segs)]
            x = load_concat(pool, a_addrs)
            acc = intrinsics.reg_alloc(sB * seg)
            acc += b1
            intrinsics.seg_accumulate(x, w1, acc)
            bpix = intrinsics.requantize_block(acc, qp1.multiplier, qp1.shift, qp1.zero_point)
            reads = slot_reads[t][(pb, qb)]
            slot = free_slots.pop()
            slot_of[(pb, qb)] = slot
            for j in range(sB):
                pool.store(slot_addr(slot, j), bpix[j * seg:(j + 1) * seg],
                           ("ws", "b", pb, qb, j), pending_reads=reads)

        # depthwise over the window
        acc = intrinsics.reg_alloc(sB * seg)
        acc += bd
        for pb, qb in step.window_b:
            slot = slot_of[(pb, qb)]
            bpix = load_concat(pool, [slot_addr(slot, j) for j in range(sB)])
            rr = pb - (step.p * s2 - pad)
            ss = qb - (step.q * s2 - pad)
            intrinsics.seg_dwmac(bpix, wd[rr, ss], acc)
        cpix = intrinsics.requantize_block(acc, qpd.multiplier, qpd.shift, qpd.zero_point)
        for j in range(sC):
            pool.store(c_slot_base + j, cpix[j * seg:(j + 1) * seg],
                       ("ws", "c", step.p, step.q, j), pending_reads=1)

        # projection conv
        x = load_concat(pool, [c_slot_base + j for j in range(sC)])
        acc = intrinsics.reg_alloc(sD * seg)
        acc += b2
        intrinsics.seg_accumulate(x, w2, acc)
        dpix = intrinsics.requantize_block(acc, qp2.multiplier, qp2.shift, qp2.zero_point)
        for j in range(sC):
            pool.free(c_slot_base + j)

        # residual add through the workspace D slot
        if module.residual:
            for j in range(sD):
                pool.store(d_slot_base + j, dpix[j * seg:(j + 1) * seg],
                           ("ws", "d", step.p, step.q, j), pending_reads=1)
            apix = load_concat(pool, [in_base + addr for addr in step.residual_reads])
            dvec = load_concat(pool, [d_slot_base + j for j in range(sD)])
            acc = intrinsics.reg_alloc(sD * seg)
            acc += apix.astype(np.int32)
            acc += dvec.astype(np.int32)
            epix = intrinsics.requantize_block(acc, qpa.multiplier, qpa.shift, qpa.zero_point)
            for j in range(sD):
                pool.free(d_slot_base + j)
        else:
            epix = dpix

        free_exhausted(pool, [in_base + addr for addr in step.reads])
        for ko in range(e_segs):
            idx = step.e_writes[ko]
            target = out_base + idx
            free_dead_input(pool, target, in_phys, stored_phys)
            pool.store(target, epix[ko * seg:(ko + 1) * seg], ("out", idx),
                       out_pending_count(out_pending, idx))
            stored_phys.add(pool.resolve(target))

    # retire the final window and any input segments the schedule never read
    for slot in slot_of.values():
        for j in range(sB):
            pool.free(slot_addr(slot, j))
    slot_of.clear()
    for idx in range(geo.a_grid.total):
        free_dead_input(pool, in_base + idx, in_phys, stored_phys)
    return out_base

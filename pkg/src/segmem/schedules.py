"""Step streams: the exact read/write order of every segment kernel.

The planner minimizes the input/output base distance against these streams
and the kernels execute them, so the two cannot drift apart.  Addresses in
a step are grid-linear segment indices relative to the tensor's own base:
reads index the input grid, writes index the output grid.

Within one step all reads happen first, then segments whose scheduled
reads are exhausted are freed, then the step's outputs are stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Tuple

from .specs import LayerKind, LayerSpec, ModuleSpec, Padding, pad_and_out, segments_for


@dataclass(frozen=True)
class Step:
    reads: Tuple[int, ...]
    writes: Tuple[int, ...]


@dataclass(frozen=True)
class Grid:
    """Segment grid of one tensor: dims in segments, row-major."""

    dims: Tuple[int, ...]
    seg_elems: int
    tail_lanes: int

    @property
    def total(self) -> int:
        n = 1
        for d in self.dims:
            n *= d
        return n

    def linear(self, *index: int) -> int:
        addr = 0
        for d, i in zip(self.dims, index):
            addr = addr * d + i
        return addr


def matrix_grid(rows: int, cols_el: int, seg_elems: int) -> Grid:
    segs = segments_for(cols_el, seg_elems)
    tail = cols_el - (segs - 1) * seg_elems
    return Grid((rows, segs), seg_elems, tail)


def image_grid(h: int, w: int, c_el: int, seg_elems: int) -> Grid:
    segs = segments_for(c_el, seg_elems)
    tail = c_el - (segs - 1) * seg_elems
    return Grid((h, w, segs), seg_elems, tail)


# ---------------------------------------------------------------------------
# fully connected: for each output row, output segments are produced in row
# order and the whole input row is re-read for each one
# ---------------------------------------------------------------------------

def fc_steps(in_grid: Grid, out_grid: Grid) -> Iterator[Step]:
    rows, ksegs = in_grid.dims
    nsegs = out_grid.dims[1]
    for m in range(rows):
        row_reads = tuple(m * ksegs + kk for kk in range(ksegs))
        for nn in range(nsegs):
            yield Step(row_reads, (m * nsegs + nn,))


# ---------------------------------------------------------------------------
# 2D convolution: raster over output pixels and their channel segments; the
# input window is re-read for every output channel segment
# ---------------------------------------------------------------------------

def conv_window(p: int, q: int, spec_h: int, spec_w: int, r: int, s: int,
                stride: int, pad_h: int, pad_w: int) -> List[Tuple[int, int]]:
    pixels = []
    for rr in range(r):
        ih = p * stride + rr - pad_h
        if not 0 <= ih < spec_h:
            continue
        for ss in range(s):
            iw = q * stride + ss - pad_w
            if 0 <= iw < spec_w:
                pixels.append((ih, iw))
    return pixels


def conv_steps(spec: LayerSpec, in_grid: Grid, out_grid: Grid) -> Iterator[Step]:
    pad_h, out_h = pad_and_out(spec.h, spec.r, spec.stride, spec.padding)
    pad_w, out_w = pad_and_out(spec.w, spec.s, spec.stride, spec.padding)
    csegs = in_grid.dims[2]
    ksegs = out_grid.dims[2]
    for p in range(out_h):
        for q in range(out_w):
            window = conv_window(p, q, spec.h, spec.w, spec.r, spec.s,
                                 spec.stride, pad_h, pad_w)
            reads = tuple(in_grid.linear(ih, iw, ci) for ih, iw in window
                          for ci in range(csegs))
            for ko in range(ksegs):
                yield Step(reads, (out_grid.linear(p, q, ko),))


def depthwise_steps(spec: LayerSpec, in_grid: Grid, out_grid: Grid) -> Iterator[Step]:
    """Depthwise runs in place; steps are used for pending-read counts only."""
    pad_h, out_h = pad_and_out(spec.h, spec.r, spec.stride, spec.padding)
    pad_w, out_w = pad_and_out(spec.w, spec.s, spec.stride, spec.padding)
    csegs = in_grid.dims[2]
    for p in range(out_h):
        for q in range(out_w):
            window = conv_window(p, q, spec.h, spec.w, spec.r, spec.s,
                                 spec.stride, pad_h, pad_w)
            for cs in range(csegs):
                reads = tuple(in_grid.linear(ih, iw, cs) for ih, iw in window)
                yield Step(reads, (out_grid.linear(p, q, cs),))


# ---------------------------------------------------------------------------
# fused inverted bottleneck: raster over output pixels with a sliding
# window of expanded pixels kept in the workspace ring
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModuleStep:
    """One output pixel of the fused module.

    ``fresh_b`` are expanded-tensor pixels entering the window this step
    (each costs one read of its source input pixel), ``evict_b`` leave the
    window, ``window_b`` is the full depthwise footprint to read this step.
    ``a_reads``/``residual_reads``/``e_writes`` are grid-linear segment
    indices on the module input and output grids.
    """

    p: int
    q: int
    fresh_b: Tuple[Tuple[int, int], ...]
    evict_b: Tuple[Tuple[int, int], ...]
    window_b: Tuple[Tuple[int, int], ...]
    a_reads: Tuple[int, ...]
    residual_reads: Tuple[int, ...]
    e_writes: Tuple[int, ...]

    @property
    def reads(self) -> Tuple[int, ...]:
        return self.a_reads + self.residual_reads

    @property
    def writes(self) -> Tuple[int, ...]:
        return self.e_writes


@dataclass(frozen=True)
class ModuleGeometry:
    module: ModuleSpec
    seg_elems: int
    a_grid: Grid
    e_grid: Grid
    b_slot_segments: int
    c_slot_segments: int
    d_slot_segments: int

    @property
    def window_slots(self) -> int:
        return self.module.rs * self.module.rs

    @property
    def workspace_slots(self) -> int:
        return self.window_slots + 2

    @property
    def workspace_pool_segments(self) -> int:
        return (self.window_slots * self.b_slot_segments
                + self.c_slot_segments + self.d_slot_segments)


def module_geometry(module: ModuleSpec, seg_elems: int) -> ModuleGeometry:
    a_grid = image_grid(module.hw, module.hw, module.c_in, seg_elems)
    e_grid = image_grid(module.out_hw, module.out_hw, module.c_out, seg_elems)
    return ModuleGeometry(
        module, seg_elems, a_grid, e_grid,
        b_slot_segments=segments_for(module.c_mid, seg_elems),
        c_slot_segments=segments_for(module.c_mid, seg_elems),
        d_slot_segments=segments_for(module.c_out, seg_elems),
    )


def module_steps(geo: ModuleGeometry) -> Iterator[ModuleStep]:
    mod = geo.module
    if not mod.fusable:
        raise ValueError(
            f"module {mod.name}: depthwise window {mod.rs} exceeds its input "
            f"image {mod.mid_hw}; plan it unfused"
        )
    s1, s2, _ = mod.strides
    b_hw = mod.mid_hw
    pad, out_hw = pad_and_out(b_hw, mod.rs, s2, Padding.SAME)
    a_segs = geo.a_grid.dims[2]
    e_segs = geo.e_grid.dims[2]
    present: set = set()
    for p in range(out_hw):
        for q in range(out_hw):
            window = conv_window(p, q, b_hw, b_hw, mod.rs, mod.rs, s2, pad, pad)
            needed = set(window)
            evict = tuple(sorted(present - needed))
            fresh = tuple(sorted(needed - present))
            present = needed
            a_reads = tuple(
                geo.a_grid.linear(pb * s1, qb * s1, ci)
                for pb, qb in fresh for ci in range(a_segs)
            )
            residual = ()
            if mod.residual:
                residual = tuple(geo.a_grid.linear(p, q, ci) for ci in range(a_segs))
            writes = tuple(geo.e_grid.linear(p, q, ko) for ko in range(e_segs))
            yield ModuleStep(p, q, fresh, evict, tuple(sorted(needed)),
                             a_reads, residual, writes)


def read_counts(steps) -> Dict[int, int]:
    """Scheduled reads per input grid index (pending-read precomputation)."""
    counts: Dict[int, int] = {}
    for step in steps:
        for addr in step.reads:
            counts[addr] = counts.get(addr, 0) + 1
    return counts


def fresh_read_counts(steps: List[ModuleStep]) -> List[Dict[Tuple[int, int], int]]:
    """Window reads each fresh pixel will serve before its eviction.

    A window pixel may enter the ring more than once (it is recomputed when
    its rows re-enter the sliding window), so counts are per incarnation:
    result[t] maps each pixel fresh at step t to the reads of that stay.
    """
    owner_of: Dict[Tuple[int, int], Tuple[int, Tuple[int, int]]] = {}
    counts: Dict[Tuple[int, Tuple[int, int]], int] = {}
    fresh_keys = []
    for t, step in enumerate(steps):
        for pixel in step.evict_b:
            owner_of.pop(pixel)
        here = {}
        for pixel in step.fresh_b:
            key = (t, pixel)
            owner_of[pixel] = key
            counts[key] = 0
            here[pixel] = key
        fresh_keys.append(here)
        for pixel in step.window_b:
            counts[owner_of[pixel]] += 1
    return [{pixel: counts[key] for pixel, key in here.items()} for here in fresh_keys]


def axis_cover_count(coord: int, window: int, stride: int, pad: int, out_size: int) -> int:
    """How many output positions along one axis have ``coord`` in their window."""
    count = 0
    for tap in range(window):
        pos, rem = divmod(coord + pad - tap, stride)
        if rem == 0 and 0 <= pos < out_size:
            count += 1
    return count

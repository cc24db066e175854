"""Minimal-offset memory planning over a circular segment pool.

The core question: how many empty segments must be reserved ahead of the
input tensor so the output, written into the same pool region, never
overwrites data that is still scheduled to be read.  The reference solver
is exact pair enumeration in the kernel's lexicographic step order; closed
forms are provided where they exist and are checked against it.
"""

from __future__ import annotations

import math
from typing import Iterable, Optional, Tuple

from .affine import AccessFunction, IterationDomain, Linearization, enumerate_domain, row_major_strides
from .schedules import (
    Grid,
    Step,
    conv_steps,
    depthwise_steps,
    fc_steps,
    image_grid,
    matrix_grid,
    module_geometry,
    module_steps,
)
from .specs import (
    LayerKind,
    LayerSpec,
    MemPlan,
    ModuleSpec,
    baseline_footprint,
    segments_for,
    select_segment_size,
)

__all__ = [
    "LayerKind", "LayerSpec", "ModuleSpec", "MemPlan",
    "baseline_footprint", "select_segment_size",
    "min_offset_single", "min_offset_steps", "gemm_min_footprint",
    "gemm_formulation", "gemm_offset", "plan_gemm", "plan_layer", "plan_module",
]


def min_offset_steps(steps: Iterable) -> int:
    """Least input/output base distance feasible for an ordered step stream.

    A read at some step must sit strictly above every output segment stored
    at an earlier step (a store into the read's address would have replaced
    it); reads within a step precede its stores, so the step's own writes
    do not constrain it.  Equivalently this maximizes ``write - read + 1``
    over all ordered pairs, tracked with a running write frontier.
    """
    frontier: Optional[int] = None
    offset = 0
    for step in steps:
        if frontier is not None:
            for addr in step.reads:
                need = frontier + 1 - addr
                if need > offset:
                    offset = need
        for addr in step.writes:
            if frontier is None or addr > frontier:
                frontier = addr
    return offset


def min_offset_single(domain: IterationDomain,
                      in_access: AccessFunction, in_linear: Linearization,
                      out_access: AccessFunction, out_linear: Linearization) -> int:
    """Exact minimal offset for one kernel given its affine access model.

    Every iteration point reads one input segment and stores one output
    segment, in lexicographic domain order.  Base offsets on the
    linearizations are ignored; the result *is* the base distance.
    """
    zeroed_in = Linearization(in_linear.strides, 0)
    zeroed_out = Linearization(out_linear.strides, 0)

    def steps():
        for point in enumerate_domain(domain):
            read = zeroed_in.address(in_access.apply(point))
            write = zeroed_out.address(out_access.apply(point))
            yield Step((read,), (write,))

    return min_offset_steps(steps())


# ---------------------------------------------------------------------------
# GEMM (segment-unit formulation)
# ---------------------------------------------------------------------------

def gemm_formulation(m: int, n: int, k: int):
    """Iteration domain and access model of C[M,N] += A[M,K] * B[K,N].

    All of M, N, K count segments: the input grid is M x K with strides
    [K, 1], the output grid M x N with strides [N, 1].
    """
    domain = IterationDomain(((0, m), (0, n), (0, k)))
    in_access = AccessFunction(((1, 0, 0), (0, 0, 1)), (0, 0))
    out_access = AccessFunction(((1, 0, 0), (0, 1, 0)), (0, 0))
    return (domain,
            in_access, Linearization(row_major_strides((m, k))),
            out_access, Linearization(row_major_strides((m, n))))


def gemm_offset(m: int, n: int, k: int) -> int:
    """Brute-force minimal offset for the GEMM formulation."""
    return min_offset_single(*gemm_formulation(m, n, k))


def gemm_min_footprint(m: int, n: int, k: int) -> int:
    """Closed-form minimal GEMM footprint in segments: max(MN, MK) + min(N, K) - 1."""
    if min(m, n, k) < 1:
        raise ValueError("GEMM dimensions must be positive")
    return max(m * n, m * k) + min(n, k) - 1


def plan_gemm(m: int, n: int, k: int, segment_bytes: int = 1) -> MemPlan:
    """Plan a GEMM whose dimensions are already in segment units."""
    offset = gemm_offset(m, n, k)
    in_segs = m * k
    out_segs = m * n
    footprint = max(in_segs + offset, out_segs)
    baseline = (in_segs + out_segs) * segment_bytes
    return MemPlan(
        segment_bytes=segment_bytes,
        offset_segments=offset,
        in_segments=in_segs,
        out_segments=out_segs,
        workspace_segments=0,
        workspace_pool_segments=0,
        footprint_segments=footprint,
        footprint_bytes=footprint * segment_bytes,
        baseline_bytes=baseline,
        baseline_no_overlap_bytes=baseline,
    )


# ---------------------------------------------------------------------------
# element-level layers
# ---------------------------------------------------------------------------

def layer_grids(spec: LayerSpec, seg_elems: int) -> Tuple[Grid, Grid]:
    if spec.kind is LayerKind.FULLY_CONNECTED:
        return (matrix_grid(spec.m, spec.k, seg_elems),
                matrix_grid(spec.m, spec.n, seg_elems))
    in_grid = image_grid(spec.h, spec.w, spec.c, seg_elems)
    out_grid = image_grid(spec.out_h, spec.out_w, spec.out_c, seg_elems)
    return in_grid, out_grid


def layer_steps(spec: LayerSpec, in_grid: Grid, out_grid: Grid):
    if spec.kind is LayerKind.FULLY_CONNECTED:
        return fc_steps(in_grid, out_grid)
    if spec.kind is LayerKind.CONV2D:
        return conv_steps(spec, in_grid, out_grid)
    if spec.kind is LayerKind.DEPTHWISE:
        return depthwise_steps(spec, in_grid, out_grid)
    raise ValueError(f"no step stream for layer kind {spec.kind}")


def plan_layer(spec: LayerSpec, dtype_bytes: int = 1,
               segment_bytes: Optional[int] = None,
               pin_input: bool = False) -> MemPlan:
    """Plan one layer.

    ``pin_input`` marks the input tensor as having reads scheduled beyond
    this layer (a residual consumer), which forbids any overlap: the output
    is then placed entirely below the input.
    """
    seg_bytes = segment_bytes or select_segment_size(spec, dtype_bytes)
    seg_elems = seg_bytes // dtype_bytes
    in_grid, out_grid = layer_grids(spec, seg_elems)
    in_segs, out_segs = in_grid.total, out_grid.total

    if spec.kind is LayerKind.ADD:
        # elementwise: second operand is consumed in step order and the
        # output replaces it; the first operand stays resident
        offset = 0
        footprint = 2 * in_segs
    elif spec.kind is LayerKind.DEPTHWISE and not pin_input:
        # in-place family: stores are delayed until their target is dead
        offset = 0
        footprint = max(in_segs, out_segs)
    elif pin_input:
        offset = out_segs
        footprint = in_segs + out_segs
    else:
        offset = min_offset_steps(layer_steps(spec, in_grid, out_grid))
        footprint = max(in_segs + offset, out_segs)

    return MemPlan(
        segment_bytes=seg_bytes,
        offset_segments=offset,
        in_segments=in_segs,
        out_segments=out_segs,
        workspace_segments=0,
        workspace_pool_segments=0,
        footprint_segments=footprint,
        footprint_bytes=footprint * seg_bytes,
        baseline_bytes=baseline_footprint(spec, "inplace_dw", dtype_bytes),
        baseline_no_overlap_bytes=baseline_footprint(spec, "no_overlap", dtype_bytes),
    )


# ---------------------------------------------------------------------------
# fused inverted bottleneck modules
# ---------------------------------------------------------------------------

def min_offset_graph(module: ModuleSpec, dtype_bytes: int = 1) -> int:
    """Minimal whole-module offset (input tensor vs output tensor) when fused."""
    seg_elems = select_segment_size(module, dtype_bytes) // dtype_bytes
    geo = module_geometry(module, seg_elems)
    return min_offset_steps(module_steps(geo))


def _plan_module_fused(module: ModuleSpec, dtype_bytes: int) -> MemPlan:
    seg_bytes = select_segment_size(module, dtype_bytes)
    geo = module_geometry(module, seg_bytes // dtype_bytes)
    offset = min_offset_steps(module_steps(geo))
    in_segs = geo.a_grid.total
    out_segs = geo.e_grid.total
    span = max(in_segs + offset, out_segs)
    footprint = span + geo.workspace_pool_segments
    return MemPlan(
        segment_bytes=seg_bytes,
        offset_segments=offset,
        in_segments=in_segs,
        out_segments=out_segs,
        workspace_segments=geo.workspace_slots,
        workspace_pool_segments=geo.workspace_pool_segments,
        footprint_segments=footprint,
        footprint_bytes=footprint * seg_bytes,
        baseline_bytes=baseline_footprint(module, "inplace_dw", dtype_bytes),
        baseline_no_overlap_bytes=baseline_footprint(module, "no_overlap", dtype_bytes),
        fused=True,
    )


def module_layers(module: ModuleSpec) -> Tuple[LayerSpec, ...]:
    """The four constituent layers of an inverted bottleneck."""
    from .specs import Padding

    s1, s2, _ = module.strides
    pw1 = LayerSpec.conv2d(module.hw, module.hw, module.c_in, module.c_mid,
                           stride=s1, padding=Padding.SAME)
    dw = LayerSpec.depthwise(module.mid_hw, module.mid_hw, module.c_mid,
                             r=module.rs, s=module.rs, stride=s2, padding=Padding.SAME)
    pw2 = LayerSpec.conv2d(module.out_hw, module.out_hw, module.c_mid, module.c_out,
                           stride=1, padding=Padding.SAME)
    layers = [pw1, dw, pw2]
    if module.residual:
        layers.append(LayerSpec.add(module.out_hw, module.out_hw, module.c_out))
    return tuple(layers)


def _plan_module_unfused(module: ModuleSpec, dtype_bytes: int) -> MemPlan:
    """Per-layer planning with the residual input carried across the chain."""
    a, b, c, d, e = module.tensor_bytes(dtype_bytes)
    layers = module_layers(module)
    pw1, dw, pw2 = layers[0], layers[1], layers[2]
    if module.residual:
        # the residual add still reads A, so A is live through every stage
        # and the expansion conv cannot overlap its output into it
        stage_bytes = [
            plan_layer(pw1, dtype_bytes, pin_input=True).footprint_bytes,
            a + plan_layer(dw, dtype_bytes).footprint_bytes,
            a + plan_layer(pw2, dtype_bytes).footprint_bytes,
            plan_layer(layers[3], dtype_bytes).footprint_bytes,
        ]
    else:
        stage_bytes = [
            plan_layer(pw1, dtype_bytes).footprint_bytes,
            plan_layer(dw, dtype_bytes).footprint_bytes,
            plan_layer(pw2, dtype_bytes).footprint_bytes,
        ]
    footprint_bytes = max(stage_bytes)
    seg_bytes = select_segment_size(module, dtype_bytes)
    footprint_segments = math.ceil(footprint_bytes / seg_bytes)
    seg_elems = seg_bytes // dtype_bytes
    return MemPlan(
        segment_bytes=seg_bytes,
        offset_segments=0,
        in_segments=segments_for(a // dtype_bytes, seg_elems),
        out_segments=segments_for(e // dtype_bytes, seg_elems),
        workspace_segments=0,
        workspace_pool_segments=0,
        footprint_segments=footprint_segments,
        footprint_bytes=footprint_segments * seg_bytes,
        baseline_bytes=baseline_footprint(module, "inplace_dw", dtype_bytes),
        baseline_no_overlap_bytes=baseline_footprint(module, "no_overlap", dtype_bytes),
        fused=False,
    )


def plan_module(module: ModuleSpec, dtype_bytes: int = 1, fuse: str = "auto") -> MemPlan:
    """Plan an inverted bottleneck module.

    ``fuse`` is ``"auto"`` (fused when it fits and wins), ``"always"``
    (fused, raising when the window exceeds the image) or ``"never"``.
    """
    if fuse not in ("auto", "always", "never"):
        raise ValueError(f"unknown fuse policy {fuse!r}")
    if fuse == "always":
        if not module.fusable:
            raise ValueError(
                f"module {module.name}: window {module.rs} exceeds image "
                f"{module.mid_hw}, fused kernel unsupported"
            )
        return _plan_module_fused(module, dtype_bytes)
    unfused = _plan_module_unfused(module, dtype_bytes)
    if fuse == "never" or not module.fusable:
        return unfused
    fused = _plan_module_fused(module, dtype_bytes)
    return fused if fused.footprint_bytes <= unfused.footprint_bytes else unfused

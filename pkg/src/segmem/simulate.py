"""Run planned kernels on a pool and check them against the oracles.

The pool is sized to exactly the planned footprint, so a run that finishes
proves the plan sufficient, and the recorded peak equals the footprint
when the plan is tight.  ``offset_delta`` shifts the output base for fault
injection: one segment less than the planned offset must trip the pool's
clobber detection before any output is corrupted.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import IO, Optional

import numpy as np

from .kernels import (
    add_forward,
    bottleneck_forward,
    conv2d_forward,
    depthwise_forward,
    fc_forward,
)
from .kernels.layout import extract_tensor, place_tensor
from .kernels.oracles import bottleneck_reference, layer_reference
from .kernels.weights import (
    BottleneckWeights,
    ConvWeights,
    LinearWeights,
    random_activations,
    random_bottleneck,
    random_conv,
    random_depthwise,
    random_linear,
)
from .planner import layer_grids, module_layers, plan_layer, plan_module
from .pool import PoolConfig, PoolMetrics, SegmentPool
from .schedules import image_grid, module_geometry
from .specs import LayerKind, LayerSpec, MemPlan, ModuleSpec


@dataclass
class SimResult:
    output: np.ndarray
    expected: np.ndarray
    metrics: PoolMetrics
    plan: MemPlan

    @property
    def bit_exact(self) -> bool:
        return self.output.shape == self.expected.shape and bool(
            np.array_equal(self.output, self.expected)
        )

    @property
    def mismatches(self) -> int:
        if self.output.shape != self.expected.shape:
            return self.output.size
        return int(np.count_nonzero(self.output != self.expected))


def _adjusted(plan: MemPlan, offset_delta: int) -> MemPlan:
    if offset_delta == 0:
        return plan
    new_offset = plan.offset_segments + offset_delta
    if new_offset < 0:
        raise ValueError("offset delta drives the plan offset negative")
    return dataclasses.replace(plan, offset_segments=new_offset)


def run_layer(spec: LayerSpec, weights, x: np.ndarray,
              plan: Optional[MemPlan] = None, in_base: Optional[int] = None,
              offset_delta: int = 0, trace: Optional[IO[str]] = None,
              capacity_segments: Optional[int] = None) -> SimResult:
    """Execute one layer on a pool sized to its planned footprint."""
    plan = plan or plan_layer(spec)
    run_plan = _adjusted(plan, offset_delta)
    seg = plan.segment_bytes
    capacity = capacity_segments or plan.footprint_segments
    pool = SegmentPool(PoolConfig(capacity * seg, seg), trace=trace)
    in_grid, out_grid = layer_grids(spec, seg)
    base = plan.offset_segments if in_base is None else in_base
    place_tensor(pool, base, x, in_grid, tag="in")

    if spec.kind is LayerKind.FULLY_CONNECTED:
        out_base = fc_forward(pool, base, weights, spec, run_plan)
    elif spec.kind is LayerKind.CONV2D:
        w = weights
        if isinstance(w, LinearWeights):
            w = ConvWeights(w.w[None, None], w.bias, w.qparams)
        out_base = conv2d_forward(pool, base, w, spec, run_plan)
    elif spec.kind is LayerKind.DEPTHWISE:
        out_base = depthwise_forward(pool, base, weights, spec, run_plan)
    else:
        raise ValueError(f"run_layer does not support {spec.kind}")

    if spec.kind is LayerKind.FULLY_CONNECTED:
        out_shape = (spec.m, spec.n)
    else:
        out_shape = (spec.out_h, spec.out_w, spec.out_c)
    output = extract_tensor(pool, out_base, out_grid, out_shape)
    expected = layer_reference(spec, x, weights)
    return SimResult(output, expected, pool.metrics, plan)


def run_module(module: ModuleSpec, weights: BottleneckWeights, x: np.ndarray,
               plan: Optional[MemPlan] = None, in_base: Optional[int] = None,
               offset_delta: int = 0, trace: Optional[IO[str]] = None) -> SimResult:
    """Execute an inverted bottleneck, fused when the plan says so."""
    plan = plan or plan_module(module)
    expected = bottleneck_reference(x, weights, module)
    if not plan.fused:
        output, metrics = _run_module_unfused(module, weights, x, trace)
        return SimResult(output, expected, metrics, plan)

    run_plan = _adjusted(plan, offset_delta)
    seg = plan.segment_bytes
    geo = module_geometry(module, seg)
    pool = SegmentPool(PoolConfig(plan.footprint_segments * seg, seg), trace=trace)
    base = plan.offset_segments if in_base is None else in_base
    place_tensor(pool, base, x, geo.a_grid, tag="in")
    out_base = bottleneck_forward(pool, base, weights, module, run_plan)
    out_shape = (module.out_hw, module.out_hw, module.c_out)
    output = extract_tensor(pool, out_base, geo.e_grid, out_shape)
    return SimResult(output, expected, pool.metrics, plan)


def _run_module_unfused(module: ModuleSpec, weights: BottleneckWeights,
                        x: np.ndarray, trace: Optional[IO[str]]):
    """Chain the four constituent layers, each in its own pool."""
    layers = module_layers(module)
    pw1, dw, pw2 = layers[0], layers[1], layers[2]
    metrics = PoolMetrics()

    def merge(m: PoolMetrics) -> None:
        metrics.peak_live_segments = max(metrics.peak_live_segments, m.peak_live_segments)
        metrics.total_loads += m.total_loads
        metrics.total_stores += m.total_stores
        metrics.total_frees += m.total_frees
        metrics.modulo_wraps += m.modulo_wraps

    expand = ConvWeights(weights.expand.w[None, None], weights.expand.bias,
                         weights.expand.qparams)
    project = ConvWeights(weights.project.w[None, None], weights.project.bias,
                          weights.project.qparams)
    r1 = run_layer(pw1, expand, x,
                   plan=plan_layer(pw1, pin_input=module.residual), trace=trace)
    merge(r1.metrics)
    r2 = run_layer(dw, weights.depth, r1.output, trace=trace)
    merge(r2.metrics)
    r3 = run_layer(pw2, project, r2.output, trace=trace)
    merge(r3.metrics)
    if not module.residual:
        return r3.output, metrics

    add_spec = layers[3]
    plan = plan_layer(add_spec)
    seg = plan.segment_bytes
    grid = image_grid(add_spec.h, add_spec.w, add_spec.c, seg)
    pool = SegmentPool(PoolConfig(plan.footprint_segments * seg, seg), trace=trace)
    a_base, d_base = grid.total, 0
    place_tensor(pool, a_base, x, grid, tag="in-a",
                 pending={i: 1 for i in range(grid.total)})
    place_tensor(pool, d_base, r3.output, grid, tag="in-d",
                 pending={i: 1 for i in range(grid.total)})
    out_base = add_forward(pool, a_base, d_base, weights.add_qparams, add_spec, plan)
    output = extract_tensor(pool, out_base, grid, (add_spec.h, add_spec.w, add_spec.c))
    merge(pool.metrics)
    return output, metrics


def random_layer_weights(spec: LayerSpec, rng: np.random.Generator):
    if spec.kind is LayerKind.FULLY_CONNECTED:
        return random_linear(rng, spec.k, spec.n)
    if spec.kind is LayerKind.CONV2D:
        return random_conv(rng, spec.r, spec.s, spec.c, spec.out_c)
    if spec.kind is LayerKind.DEPTHWISE:
        return random_depthwise(rng, spec.r, spec.s, spec.c)
    raise ValueError(f"no random weights for {spec.kind}")


def random_layer_input(spec: LayerSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.kind is LayerKind.FULLY_CONNECTED:
        return random_activations(rng, spec.m, spec.k)
    return random_activations(rng, spec.h, spec.w, spec.c)


def simulate_layer(spec: LayerSpec, seed: int, offset_delta: int = 0,
                   trace: Optional[IO[str]] = None) -> SimResult:
    rng = np.random.default_rng(seed)
    weights = random_layer_weights(spec, rng)
    x = random_layer_input(spec, rng)
    return run_layer(spec, weights, x, offset_delta=offset_delta, trace=trace)


def simulate_module(module: ModuleSpec, seed: int, offset_delta: int = 0,
                    trace: Optional[IO[str]] = None) -> SimResult:
    rng = np.random.default_rng(seed)
    weights = random_bottleneck(rng, module.c_in, module.c_mid, module.c_out, module.rs)
    x = random_activations(rng, module.hw, module.hw, module.c_in)
    return run_module(module, weights, x, offset_delta=offset_delta, trace=trace)

"""segmem: segment-level memory planning and segment-aware kernel simulation.

Plans minimal-footprint layouts for quantized DNN layers on a circular
segment pool, then executes segment-aware int8 kernels against that pool
to prove the plans correct, reporting peak RAM against tensor-level
baselines.
"""

__version__ = "0.1.0"

from .planner import (
    LayerKind,
    LayerSpec,
    MemPlan,
    ModuleSpec,
    baseline_footprint,
    gemm_min_footprint,
    plan_gemm,
    plan_layer,
    plan_module,
    select_segment_size,
)
from .pool import (
    ClobberError,
    OutOfMemoryError,
    PoolConfig,
    SegmentPool,
    UseAfterFreeError,
)

__all__ = [
    "LayerKind", "LayerSpec", "ModuleSpec", "MemPlan",
    "baseline_footprint", "gemm_min_footprint", "select_segment_size",
    "plan_gemm", "plan_layer", "plan_module",
    "PoolConfig", "SegmentPool",
    "ClobberError", "UseAfterFreeError", "OutOfMemoryError",
]

"""Portable compute intrinsics with a compiled core and a Python fallback.

The segment kernels express their inner loops through a small fixed set of
operations: accumulator allocation (``reg_alloc``), the 2x2x16 int8 block
dot product (``dot_2x2x16``), a per-segment vector-matrix accumulate
(``seg_accumulate``), the depthwise lane MAC (``seg_dwmac``), scalar
broadcast, and block requantization.  Loads, stores and frees go through
the segment pool, and flash weight reads are plain array slicing.

At import time the compiled ``_hotcore`` extension is preferred; set
``SEGMEM_BACKEND=py`` (or ``c``) to force a backend.  Both backends do
exact integer arithmetic and produce bit-identical results.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import hotcore_py


@dataclass(frozen=True)
class KernelTilingConfig:
    """Inner tiling factors matched to the Dot lane (16-wide reduction, 2 outputs)."""

    ki: int = 16
    ni: int = 2


LANES = KernelTilingConfig()


def _select_backend():
    choice = os.environ.get("SEGMEM_BACKEND", "auto").lower()
    if choice not in ("auto", "c", "py", "python"):
        raise ValueError(f"unknown SEGMEM_BACKEND {choice!r}")
    if choice in ("py", "python"):
        return hotcore_py
    try:
        from . import _hotcore  # noqa: PLC0415

        return _hotcore
    except ImportError:
        if choice == "c":
            raise
        return hotcore_py


_core = _select_backend()


def backend_name() -> str:
    return _core.BACKEND


def reg_alloc(*shape: int) -> np.ndarray:
    """Fresh int32 accumulator block (register storage, never pool segments)."""
    return np.zeros(shape, dtype=np.int32)


def broadcast(value: int, lanes: int) -> np.ndarray:
    """Duplicate a scalar across a lane vector."""
    return np.full(lanes, value, dtype=np.int32)


def dot_2x2x16(a: np.ndarray, b: np.ndarray, acc: np.ndarray) -> None:
    _core.dot_2x2x16(np.ascontiguousarray(a, np.int8), np.ascontiguousarray(b, np.int8), acc)


def seg_accumulate(x: np.ndarray, w: np.ndarray, acc: np.ndarray) -> None:
    _core.seg_accumulate(np.ascontiguousarray(x, np.int8), np.ascontiguousarray(w, np.int8), acc)


def seg_dwmac(x: np.ndarray, w: np.ndarray, acc: np.ndarray) -> None:
    _core.seg_dwmac(np.ascontiguousarray(x, np.int8), np.ascontiguousarray(w, np.int8), acc)


def requantize_block(acc: np.ndarray, multiplier: int, shift: int, zero_point: int) -> np.ndarray:
    return _core.requantize_block(np.ascontiguousarray(acc, np.int32), multiplier, shift, zero_point)

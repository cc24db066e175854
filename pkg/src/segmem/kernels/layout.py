"""Moving tensors between element arrays and pool segment payloads.

Rows (FC) and pixels (NHWC images) pad their trailing segment with zeros,
which keeps segment grids rectangular and pool addressing affine.
"""

from __future__ import annotations

from typing import Dict, Optional

import numpy as np

from ..pool import SegmentPool
from ..schedules import Grid


def to_payloads(data: np.ndarray, grid: Grid) -> np.ndarray:
    """Flatten a tensor into (total_segments, seg_elems) int8 payloads."""
    seg = grid.seg_elems
    arr = np.asarray(data, dtype=np.int8)
    if len(grid.dims) == 2:
        rows, segs = grid.dims
        padded = np.zeros((rows, segs * seg), dtype=np.int8)
        padded[:, : arr.shape[1]] = arr
    else:
        h, w, segs = grid.dims
        padded = np.zeros((h, w, segs * seg), dtype=np.int8)
        padded[:, :, : arr.shape[2]] = arr
    return padded.reshape(grid.total, seg)


def from_payloads(payloads: np.ndarray, grid: Grid, elem_shape) -> np.ndarray:
    """Inverse of :func:`to_payloads`; strips the zero padding."""
    seg = grid.seg_elems
    if len(grid.dims) == 2:
        rows, segs = grid.dims
        data = payloads.reshape(rows, segs * seg)[:, : elem_shape[1]]
    else:
        h, w, segs = grid.dims
        data = payloads.reshape(h, w, segs * seg)[:, :, : elem_shape[2]]
    return data.copy()


def place_tensor(pool: SegmentPool, base: int, data: np.ndarray, grid: Grid,
                 tag: str = "in", pending: Optional[Dict[int, int]] = None) -> None:
    """Store a tensor's segments at consecutive addresses starting at ``base``."""
    payloads = to_payloads(data, grid)
    for idx in range(grid.total):
        n = pending.get(idx, 0) if pending else 0
        pool.store(base + idx, payloads[idx], owner=(tag, idx), pending_reads=n)


def extract_tensor(pool: SegmentPool, base: int, grid: Grid, elem_shape) -> np.ndarray:
    """Read a tensor back from the pool without touching liveness."""
    payloads = np.stack([pool.peek(base + idx) for idx in range(grid.total)])
    return from_payloads(payloads, grid, elem_shape)


def pad_matrix(w: np.ndarray, rows: int, cols: int) -> np.ndarray:
    out = np.zeros((rows, cols), dtype=np.int8)
    out[: w.shape[0], : w.shape[1]] = w
    return out


def pad_vector(v: np.ndarray, length: int) -> np.ndarray:
    out = np.zeros(length, dtype=np.int32)
    out[: v.shape[0]] = v
    return out

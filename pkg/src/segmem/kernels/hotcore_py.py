"""Pure-Python fallback for the hot compute core.

Same contract as the compiled ``_hotcore`` extension.  All arithmetic is
exact integer math, so results are bit-identical to the C loops regardless
of accumulation order.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def dot_2x2x16(a: np.ndarray, b: np.ndarray, acc: np.ndarray) -> None:
    """acc[i][j] += sum_k a[i][k] * b[k][j] for a 2x16 by 16x2 block."""
    if a.shape != (2, 16) or b.shape != (16, 2) or acc.shape != (2, 2):
        raise ValueError("dot_2x2x16 expects a 2x16 block, a 16x2 block and a 2x2 accumulator")
    acc += a.astype(np.int32) @ b.astype(np.int32)


def seg_accumulate(x: np.ndarray, w: np.ndarray, acc: np.ndarray) -> None:
    """acc[o] += sum_l x[l] * w[l][o] with int8 inputs and int32 accumulators."""
    acc += x.astype(np.int32) @ w.astype(np.int32)


def seg_dwmac(x: np.ndarray, w: np.ndarray, acc: np.ndarray) -> None:
    """Lane-wise multiply accumulate: acc[c] += x[c] * w[c]."""
    acc += x.astype(np.int32) * w.astype(np.int32)


def requantize_block(acc: np.ndarray, multiplier: int, shift: int, zero_point: int) -> np.ndarray:
    """Vector form of the shared requantization rule; returns int8."""
    scaled = acc.astype(np.int64) * multiplier
    if shift > 0:
        half = np.int64(1) << (shift - 1)
        scaled = np.sign(scaled) * ((np.abs(scaled) + half) >> shift)
    return np.clip(scaled + zero_point, -128, 127).astype(np.int8)

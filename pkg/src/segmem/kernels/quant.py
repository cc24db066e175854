"""Int8 tensors and the shared requantization primitive.

Segment kernels and the reference oracles both funnel their int32
accumulators through :func:`requantize`, so bit-exact agreement between the
two paths is well defined: fixed-point multiply, rounding right shift with
round-half-away-from-zero, output zero-point, saturation to [-128, 127].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class QuantParams:
    """Per-tensor output requantization: ``q = sat(rnd((acc * multiplier) >> shift) + zero_point)``."""

    multiplier: int = 1
    shift: int = 0
    zero_point: int = 0

    def __post_init__(self) -> None:
        if self.multiplier < 0:
            raise ValueError("multiplier must be non-negative")
        if not 0 <= self.shift < 32:
            raise ValueError("shift must be in [0, 32)")
        if not -128 <= self.zero_point <= 127:
            raise ValueError("zero_point must fit int8")

    @classmethod
    def identity(cls) -> "QuantParams":
        return cls(1, 0, 0)


def requantize(acc, params: QuantParams) -> np.ndarray:
    """Scale int32 accumulators down to int8.

    Works on scalars and arrays; intermediate math runs in int64 so the
    widest supported product (int32 acc times int32 multiplier) is exact.
    Monotone non-decreasing in ``acc``.
    """
    acc64 = np.asarray(acc, dtype=np.int64)
    scaled = acc64 * params.multiplier
    if params.shift > 0:
        half = np.int64(1) << (params.shift - 1)
        magnitude = (np.abs(scaled) + half) >> params.shift
        scaled = np.sign(scaled) * magnitude
    out = np.clip(scaled + params.zero_point, -128, 127)
    return out.astype(np.int8)


@dataclass
class QTensor:
    """Quantized tensor value: int8 data plus its requantization parameters.

    ``data`` is row-major; images use NHWC order with the batch axis
    dropped (H, W, C), fully connected activations are (M, K).
    """

    data: np.ndarray
    qparams: QuantParams = field(default_factory=QuantParams.identity)

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.int8)

    @property
    def shape(self):
        return self.data.shape

"""Read-only layer parameters: flash-resident, never in the segment pool."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quant import QuantParams


def _as_int8(a) -> np.ndarray:
    return np.asarray(a, dtype=np.int8)


def _as_int32(a) -> np.ndarray:
    return np.asarray(a, dtype=np.int32)


@dataclass
class LinearWeights:
    """Dense (in, out) weight matrix; also the 1x1 convolution parameter."""

    w: np.ndarray
    bias: np.ndarray
    qparams: QuantParams = field(default_factory=QuantParams.identity)

    def __post_init__(self) -> None:
        self.w = _as_int8(self.w)
        self.bias = _as_int32(self.bias)
        if self.bias.shape != (self.w.shape[1],):
            raise ValueError("bias length must match output width")


@dataclass
class ConvWeights:
    """Full convolution parameter (R, S, C, K)."""

    w: np.ndarray
    bias: np.ndarray
    qparams: QuantParams = field(default_factory=QuantParams.identity)

    def __post_init__(self) -> None:
        self.w = _as_int8(self.w)
        self.bias = _as_int32(self.bias)
        if self.w.ndim != 4:
            raise ValueError("conv weights must be (R, S, C, K)")
        if self.bias.shape != (self.w.shape[3],):
            raise ValueError("bias length must match output channels")


@dataclass
class DepthwiseWeights:
    """Per-channel window (R, S, C)."""

    w: np.ndarray
    bias: np.ndarray
    qparams: QuantParams = field(default_factory=QuantParams.identity)

    def __post_init__(self) -> None:
        self.w = _as_int8(self.w)
        self.bias = _as_int32(self.bias)
        if self.w.ndim != 3:
            raise ValueError("depthwise weights must be (R, S, C)")
        if self.bias.shape != (self.w.shape[2],):
            raise ValueError("bias length must match channels")


@dataclass
class BottleneckWeights:
    """Expand / depthwise / project parameters plus the residual-add scaling."""

    expand: LinearWeights
    depth: DepthwiseWeights
    project: LinearWeights
    add_qparams: QuantParams = field(default_factory=QuantParams.identity)


def _rand_qparams(rng: np.random.Generator) -> QuantParams:
    return QuantParams(
        multiplier=int(rng.integers(1, 64)),
        shift=int(rng.integers(4, 12)),
        zero_point=int(rng.integers(-16, 17)),
    )


def random_linear(rng: np.random.Generator, k: int, n: int) -> LinearWeights:
    return LinearWeights(
        rng.integers(-128, 128, size=(k, n), dtype=np.int16).astype(np.int8),
        rng.integers(-512, 512, size=n, dtype=np.int32),
        _rand_qparams(rng),
    )


def random_conv(rng: np.random.Generator, r: int, s: int, c: int, k: int) -> ConvWeights:
    return ConvWeights(
        rng.integers(-128, 128, size=(r, s, c, k), dtype=np.int16).astype(np.int8),
        rng.integers(-512, 512, size=k, dtype=np.int32),
        _rand_qparams(rng),
    )


def random_depthwise(rng: np.random.Generator, r: int, s: int, c: int) -> DepthwiseWeights:
    return DepthwiseWeights(
        rng.integers(-128, 128, size=(r, s, c), dtype=np.int16).astype(np.int8),
        rng.integers(-512, 512, size=c, dtype=np.int32),
        _rand_qparams(rng),
    )


def random_bottleneck(rng: np.random.Generator, c_in: int, c_mid: int, c_out: int,
                      rs: int) -> BottleneckWeights:
    return BottleneckWeights(
        expand=random_linear(rng, c_in, c_mid),
        depth=random_depthwise(rng, rs, rs, c_mid),
        project=random_linear(rng, c_mid, c_out),
        add_qparams=_rand_qparams(rng),
    )


def random_activations(rng: np.random.Generator, *shape: int) -> np.ndarray:
    return rng.integers(-128, 128, size=shape, dtype=np.int16).astype(np.int8)

"""Segment-aware kernels, their reference oracles, and the compute intrinsics."""

from .bottleneck import UnsupportedModuleError, bottleneck_forward
from .conv import conv2d_forward
from .depthwise import depthwise_forward
from .elementwise import add_forward
from .fc import fc_forward
from .quant import QTensor, QuantParams, requantize
from .weights import (
    BottleneckWeights,
    ConvWeights,
    DepthwiseWeights,
    LinearWeights,
)

__all__ = [
    "fc_forward", "conv2d_forward", "depthwise_forward", "add_forward",
    "bottleneck_forward", "UnsupportedModuleError",
    "QTensor", "QuantParams", "requantize",
    "LinearWeights", "ConvWeights", "DepthwiseWeights", "BottleneckWeights",
]

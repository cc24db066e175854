# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot compute core: int8 block dot products and requantization.

Mirrors hotcore_py exactly; integer math only, so both backends are
bit-identical.  The inner loops are blocked by the lane configuration the
portable Dot primitive assumes (16-wide reduction, 2 outputs at a time).
"""

import numpy as np

cimport cython

BACKEND = "c"

DEF LANE_K = 16
DEF LANE_N = 2


cdef inline long long _rshift_round(long long v, int shift) nogil:
    cdef long long half, mag
    if shift == 0:
        return v
    half = (<long long>1) << (shift - 1)
    if v >= 0:
        return (v + half) >> shift
    mag = ((-v) + half) >> shift
    return -mag


cdef inline int _saturate(long long v) nogil:
    if v > 127:
        return 127
    if v < -128:
        return -128
    return <int>v


def dot_2x2x16(signed char[:, :] a, signed char[:, :] b, int[:, :] acc):
    """acc[i][j] += sum_k a[i][k] * b[k][j] for a 2x16 by 16x2 block."""
    cdef int i, j, k
    cdef int s
    if a.shape[0] != 2 or a.shape[1] != LANE_K or b.shape[0] != LANE_K or b.shape[1] != 2:
        raise ValueError("dot_2x2x16 expects a 2x16 block, a 16x2 block and a 2x2 accumulator")
    with nogil:
        for i in range(2):
            for j in range(2):
                s = 0
                for k in range(LANE_K):
                    s += a[i, k] * b[k, j]
                acc[i, j] += s


def seg_accumulate(signed char[:] x, signed char[:, :] w, int[:] acc):
    """acc[o] += sum_l x[l] * w[l][o] with int8 inputs and int32 accumulators."""
    cdef Py_ssize_t length = x.shape[0]
    cdef Py_ssize_t width = w.shape[1]
    cdef Py_ssize_t o, l, l0, o0, lmax, omax
    cdef int s0, s1
    if w.shape[0] != length:
        raise ValueError("weight rows do not match input length")
    if acc.shape[0] != width:
        raise ValueError("accumulator width does not match weight columns")
    with nogil:
        o0 = 0
        while o0 + LANE_N <= width:
            s0 = 0
            s1 = 0
            l0 = 0
            while l0 + LANE_K <= length:
                for l in range(l0, l0 + LANE_K):
                    s0 += x[l] * w[l, o0]
                    s1 += x[l] * w[l, o0 + 1]
                l0 += LANE_K
            for l in range(l0, length):
                s0 += x[l] * w[l, o0]
                s1 += x[l] * w[l, o0 + 1]
            acc[o0] += s0
            acc[o0 + 1] += s1
            o0 += LANE_N
        for o in range(o0, width):
            s0 = 0
            for l in range(length):
                s0 += x[l] * w[l, o]
            acc[o] += s0


def seg_dwmac(signed char[:] x, signed char[:] w, int[:] acc):
    """Lane-wise multiply accumulate: acc[c] += x[c] * w[c]."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t c
    if w.shape[0] != n or acc.shape[0] != n:
        raise ValueError("lane counts do not match")
    with nogil:
        for c in range(n):
            acc[c] += x[c] * w[c]


def requantize_block(int[:] acc, int multiplier, int shift, int zero_point):
    """Vector form of the shared requantization rule; returns int8."""
    cdef Py_ssize_t n = acc.shape[0]
    cdef Py_ssize_t i
    cdef long long scaled
    out = np.empty(n, dtype=np.int8)
    cdef signed char[:] out_view = out
    with nogil:
        for i in range(n):
            scaled = <long long>acc[i] * multiplier
            scaled = _rshift_round(scaled, shift)
            out_view[i] = <signed char>_saturate(scaled + zero_point)
    return out

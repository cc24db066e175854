"""Affine model of segment-level kernel iteration.

A kernel step is an integer point in an :class:`IterationDomain`.  Each step
touches tensor segments through an :class:`AccessFunction` (an integer matrix
plus offset vector), and a segment index vector is turned into a linear pool
address by a :class:`Linearization` (row-major strides plus a base offset).

All addresses are plain Python ints (arbitrary precision), so pre-modulo
addresses never overflow.  Domains are rectangular by default; optional
affine constraint rows handle non-rectangular corner cases by point
filtering, which is cheap at the sizes this library targets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Tuple

IntVec = Tuple[int, ...]


@dataclass(frozen=True)
class IterationDomain:
    """Set of iteration points, one per segment-level computation step.

    ``bounds`` holds per-variable ``(lower, upper)`` pairs with inclusive
    lower and exclusive upper bound.  ``constraints`` is an optional tuple of
    ``(coeffs, const)`` rows; a point ``i`` is kept iff ``coeffs . i + const < 0``
    for every row.
    """

    bounds: Tuple[Tuple[int, int], ...]
    constraints: Tuple[Tuple[IntVec, int], ...] = field(default=())

    def __post_init__(self) -> None:
        for lo, hi in self.bounds:
            if lo > hi:
                raise ValueError(f"malformed bound ({lo}, {hi}): lower > upper")
        for coeffs, _ in self.constraints:
            if len(coeffs) != self.rank:
                raise ValueError("constraint row rank does not match domain rank")

    @property
    def rank(self) -> int:
        return len(self.bounds)

    def rectangular_size(self) -> int:
        """Point count ignoring extra constraints."""
        n = 1
        for lo, hi in self.bounds:
            n *= hi - lo
        return n

    def contains(self, point: Sequence[int]) -> bool:
        if len(point) != self.rank:
            return False
        for x, (lo, hi) in zip(point, self.bounds):
            if not lo <= x < hi:
                return False
        return all(_dot(coeffs, point) + const < 0 for coeffs, const in self.constraints)

    def points(self) -> Iterator[IntVec]:
        """Yield all points in strictly increasing lexicographic order."""
        ranges = [range(lo, hi) for lo, hi in self.bounds]
        if not self.constraints:
            yield from itertools.product(*ranges)
            return
        for point in itertools.product(*ranges):
            if all(_dot(coeffs, point) + const < 0 for coeffs, const in self.constraints):
                yield point


@dataclass(frozen=True)
class AccessFunction:
    """Affine map from an iteration point to one tensor segment index.

    ``u = matrix . i + offset``, all integer.
    """

    matrix: Tuple[IntVec, ...]
    offset: IntVec

    def __post_init__(self) -> None:
        if len(self.matrix) != len(self.offset):
            raise ValueError("access matrix row count does not match offset length")
        widths = {len(row) for row in self.matrix}
        if len(widths) > 1:
            raise ValueError("access matrix rows have inconsistent widths")

    @property
    def tensor_rank(self) -> int:
        return len(self.matrix)

    @property
    def domain_rank(self) -> int:
        return len(self.matrix[0]) if self.matrix else 0

    def apply(self, point: Sequence[int]) -> IntVec:
        if len(point) != self.domain_rank:
            raise ValueError(
                f"iteration point rank {len(point)} does not match access rank {self.domain_rank}"
            )
        return tuple(_dot(row, point) + off for row, off in zip(self.matrix, self.offset))


@dataclass(frozen=True)
class Linearization:
    """Row-major mapping from a segment index vector to a pool address.

    ``strides`` are in units of segments with the last stride equal to 1 for
    a contiguous row-major grid; ``base`` is the tensor's starting address.
    """

    strides: IntVec
    base: int = 0

    def address(self, index: Sequence[int]) -> int:
        if len(index) != len(self.strides):
            raise ValueError(
                f"index rank {len(index)} does not match stride rank {len(self.strides)}"
            )
        return _dot(self.strides, index) + self.base


def row_major_strides(shape: Sequence[int]) -> IntVec:
    """Row-major strides of a segment grid, in segments (last stride 1)."""
    strides = [1] * len(shape)
    for axis in range(len(shape) - 2, -1, -1):
        strides[axis] = strides[axis + 1] * shape[axis + 1]
    return tuple(strides)


def enumerate_domain(domain: IterationDomain) -> Iterator[IntVec]:
    """All iteration points of ``domain`` in lexicographic order."""
    return domain.points()


def segment_address(access: AccessFunction, linear: Linearization, point: Sequence[int]) -> int:
    """Pre-modulo pool address touched by ``point`` through ``access``.

    The caller applies the pool's modulo; the result may be negative or
    exceed the pool size.
    """
    return linear.address(access.apply(point))


def _dot(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(x * y for x, y in zip(a, b))

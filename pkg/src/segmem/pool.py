"""Virtual MCU RAM: a circular buffer of fixed-size segments.

The pool stores opaque segment payloads (int8 vectors of exactly
``segment_bytes`` entries) at addresses that wrap modulo the capacity.
Liveness is reference counted: every live segment carries the number of
reads the executing kernel still owes it, so a store that would overwrite
unread data fails loudly instead of corrupting the run silently.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import IO, Optional, Tuple

import numpy as np

Owner = Tuple[object, ...]


class PoolError(Exception):
    """Base class for segment pool faults."""


class ClobberError(PoolError):
    """Store would overwrite a segment that is still live."""


class UseAfterFreeError(PoolError):
    """Load from a segment that is empty or already freed."""


class OutOfMemoryError(PoolError):
    """Live segment count exceeded the pool capacity."""


class Status(enum.Enum):
    EMPTY = "empty"
    LIVE = "live"
    FREED = "freed"


@dataclass
class PoolConfig:
    mem_cap_bytes: int
    segment_bytes: int

    def __post_init__(self) -> None:
        if self.segment_bytes <= 0:
            raise ValueError("segment_bytes must be positive")
        if self.mem_cap_bytes < self.segment_bytes:
            raise ValueError("memory capacity smaller than one segment")

    @property
    def capacity_segments(self) -> int:
        return self.mem_cap_bytes // self.segment_bytes

    @property
    def wasted_bytes(self) -> int:
        """Trailing bytes unusable because the capacity is not a segment multiple."""
        return self.mem_cap_bytes - self.capacity_segments * self.segment_bytes


@dataclass
class PoolMetrics:
    peak_live_segments: int = 0
    total_loads: int = 0
    total_stores: int = 0
    total_frees: int = 0
    modulo_wraps: int = 0


@dataclass
class _Segment:
    status: Status = Status.EMPTY
    owner: Optional[Owner] = None
    pending_reads: int = 0
    payload: Optional[np.ndarray] = None


class SegmentPool:
    """Circular segment buffer with liveness tracking and usage metrics.

    A pool instance holds mutable run state and is single-threaded; create
    one pool per concurrent run.  ``trace`` may be a writable text stream;
    every store/load/free appends one ``EVENT addr phys owner`` line.
    """

    def __init__(self, config: PoolConfig, trace: Optional[IO[str]] = None):
        self.config = config
        self.metrics = PoolMetrics()
        self._segments = [_Segment() for _ in range(config.capacity_segments)]
        self._live = 0
        self._trace = trace

    @property
    def capacity_segments(self) -> int:
        return self.config.capacity_segments

    @property
    def live_segments(self) -> int:
        return self._live

    def resolve(self, addr: int) -> int:
        """Physical segment index for a pre-modulo address (non-negative modulo)."""
        return addr % self.capacity_segments

    def state(self, addr: int) -> _Segment:
        return self._segments[self.resolve(addr)]

    def pending_reads(self, addr: int) -> int:
        return self.state(addr).pending_reads

    def store(self, addr: int, payload: np.ndarray, owner: Owner, pending_reads: int = 0) -> None:
        """Place a payload at ``addr``; the target must be empty or freed."""
        phys = self.resolve(addr)
        seg = self._segments[phys]
        if seg.status is Status.LIVE:
            raise ClobberError(
                f"store by {owner} at addr {addr} (phys {phys}) would overwrite live "
                f"segment owned by {seg.owner} with {seg.pending_reads} pending reads"
            )
        data = np.asarray(payload, dtype=np.int8)
        if data.shape != (self.config.segment_bytes,):
            raise ValueError(
                f"payload has {data.size} bytes, segment holds {self.config.segment_bytes}"
            )
        seg.status = Status.LIVE
        seg.owner = owner
        seg.pending_reads = pending_reads
        seg.payload = data.copy()
        self._live += 1
        if self._live > self.capacity_segments:
            raise OutOfMemoryError(
                f"{self._live} live segments exceed capacity {self.capacity_segments}"
            )
        self.metrics.total_stores += 1
        if self._live > self.metrics.peak_live_segments:
            self.metrics.peak_live_segments = self._live
        if addr != phys:
            self.metrics.modulo_wraps += 1
        self._emit("STORE", addr, phys, owner)

    def load(self, addr: int) -> np.ndarray:
        """Read a live segment's payload, consuming one pending read."""
        phys = self.resolve(addr)
        seg = self._segments[phys]
        if seg.status is not Status.LIVE:
            raise UseAfterFreeError(
                f"load at addr {addr} (phys {phys}) hit a {seg.status.value} segment"
            )
        if seg.pending_reads <= 0:
            raise PoolError(
                f"load at addr {addr} (phys {phys}) was not scheduled: "
                f"no pending reads remain for {seg.owner}"
            )
        seg.pending_reads -= 1
        self.metrics.total_loads += 1
        if addr != phys:
            self.metrics.modulo_wraps += 1
        self._emit("LOAD", addr, phys, seg.owner)
        return seg.payload.copy()

    def peek(self, addr: int) -> np.ndarray:
        """Inspect a live segment without touching liveness or metrics."""
        seg = self.state(addr)
        if seg.status is not Status.LIVE:
            raise UseAfterFreeError(f"peek at addr {addr} hit a {seg.status.value} segment")
        return seg.payload.copy()

    def free(self, addr: int) -> None:
        """Release a live segment whose scheduled reads are all consumed."""
        phys = self.resolve(addr)
        seg = self._segments[phys]
        if seg.status is not Status.LIVE:
            raise PoolError(f"free at addr {addr} (phys {phys}): segment is {seg.status.value}")
        if seg.pending_reads != 0:
            raise PoolError(
                f"free at addr {addr} (phys {phys}): {seg.pending_reads} reads still pending"
            )
        owner = seg.owner
        seg.status = Status.FREED
        seg.owner = None
        seg.payload = None
        self._live -= 1
        self.metrics.total_frees += 1
        self._emit("FREE", addr, phys, owner)

    def add_pending(self, addr: int, count: int) -> None:
        """Register ``count`` additional scheduled reads on a live segment.

        Kernels call this before execution to announce their read plan for
        tensors that are already resident (for example a previous layer's
        output).
        """
        seg = self.state(addr)
        if seg.status is not Status.LIVE:
            raise PoolError(f"cannot schedule reads on a {seg.status.value} segment at {addr}")
        seg.pending_reads += count

    def is_writable(self, addr: int) -> bool:
        return self.state(addr).status is not Status.LIVE

    def _emit(self, event: str, addr: int, phys: int, owner: Optional[Owner]) -> None:
        if self._trace is not None:
            tag = "/".join(str(part) for part in owner) if owner else "-"
            self._trace.write(f"{event} {addr} {phys} {tag}\n")

"""Shared pieces of the segment-kernel run protocol.

Every kernel follows the same discipline per step: load the scheduled
input segments, free any input segment whose scheduled reads just ran out,
then store the step's outputs.  Stores therefore only ever land on freed
or empty segments; a store that meets live data is a planning fault and
surfaces as ClobberError.
"""

from __future__ import annotations

from typing import Dict, Iterable, Optional, Set

import numpy as np

from ..pool import SegmentPool, Status


def register_pending(pool: SegmentPool, base: int, counts: Dict[int, int]) -> None:
    for idx, n in counts.items():
        pool.add_pending(base + idx, n)


def free_exhausted(pool: SegmentPool, addrs: Iterable[int]) -> None:
    """Free just-read input segments whose pending count reached zero."""
    for addr in set(addrs):
        seg = pool.state(addr)
        if seg.status is Status.LIVE and seg.pending_reads == 0:
            pool.free(addr)


def free_dead_input(pool: SegmentPool, addr: int, input_phys: Set[int],
                    stored_phys: Optional[Set[int]] = None) -> None:
    """Free an input segment that was never scheduled for reading.

    Called on a store target before storing; only segments that belong to
    the kernel's own input may be reclaimed this way, anything else live at
    the target is a genuine clobber and is left for the store to trip on.
    ``stored_phys`` excludes addresses the kernel has already written, since
    an output segment may sit on a former input address.
    """
    phys = pool.resolve(addr)
    if phys not in input_phys or (stored_phys and phys in stored_phys):
        return
    seg = pool.state(addr)
    if seg.status is Status.LIVE and seg.pending_reads == 0:
        pool.free(addr)


def input_phys_set(pool: SegmentPool, base: int, total: int) -> Set[int]:
    return {pool.resolve(base + idx) for idx in range(total)}


def load_concat(pool: SegmentPool, addrs: Iterable[int]) -> np.ndarray:
    """Load several segments and concatenate their payloads."""
    return np.concatenate([pool.load(addr) for addr in addrs])


def out_pending_count(out_pending: Optional[Dict[int, int]], idx: int) -> int:
    if out_pending is None:
        return 0
    return out_pending.get(idx, 0)

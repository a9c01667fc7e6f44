"""Unions of closed integer intervals.

Relevance sets are always a handful of intervals, so they are kept symbolic and
only turned into dense masks over a shift window when a node needs them.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

Interval = tuple[int, int]


def normalize(intervals: Iterable[Interval]) -> list[Interval]:
    """Sort, drop empty intervals and merge overlapping or adjacent ones."""
    items = [(lo, hi) for lo, hi in intervals if lo <= hi]
    if len(items) < 2:
        return items
    items.sort()
    out: list[Interval] = []
    for lo, hi in items:
        if out and lo <= out[-1][1] + 1:
            if hi > out[-1][1]:
                out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return out


def clip(intervals: Iterable[Interval], lo: int, hi: int) -> list[Interval]:
    return normalize((max(a, lo), min(b, hi)) for a, b in intervals)


def dilate(intervals: Iterable[Interval], radius: int) -> list[Interval]:
    return normalize((a - radius, b + radius) for a, b in intervals)


def union(*parts: Iterable[Interval]) -> list[Interval]:
    return normalize(iv for part in parts for iv in part)


def contains(intervals: Iterable[Interval], s: int) -> bool:
    return any(a <= s <= b for a, b in intervals)


def size(intervals: Iterable[Interval]) -> int:
    return sum(b - a + 1 for a, b in intervals)


def members(intervals: Iterable[Interval]) -> list[int]:
    return [s for a, b in intervals for s in range(a, b + 1)]


def to_mask(intervals: Iterable[Interval], window: int) -> np.ndarray:
    """Boolean mask over shifts [-window..window] (index = shift + window)."""
    mask = np.zeros(2 * window + 1, dtype=bool)
    for a, b in intervals:
        a = max(a, -window)
        b = min(b, window)
        if a <= b:
            mask[a + window : b + window + 1] = True
    return mask

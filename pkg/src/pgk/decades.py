"""Per-decade counts: how witnesses spread over [1,10), [10,100), ..."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DecadeCount:
    lo: int  # inclusive, clipped to the scanned range
    hi: int  # inclusive
    count: int

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def as_dict(self):
        return {"lo": self.lo, "hi": self.hi, "count": self.count, "size": self.size}


def decade_counts(indices, first: int, last: int) -> list[DecadeCount]:
    """Histogram of sorted ``indices`` over the decades meeting [first, last]."""
    if last < first:
        return []
    idx = np.asarray(indices, dtype=np.int64)
    out = []
    lo = 10 ** (len(str(first)) - 1)
    while lo <= last:
        hi = lo * 10 - 1
        a, b = max(lo, first), min(hi, last)
        count = int(np.searchsorted(idx, b, side="right") - np.searchsorted(idx, a, side="left"))
        out.append(DecadeCount(a, b, count))
        lo *= 10
    return out


def merge_decades(parts: list[list[DecadeCount]]) -> list[DecadeCount]:
    """Combine histograms of disjoint index ranges (associative)."""
    acc: dict[int, list[int]] = {}
    for part in parts:
        for d in part:
            key = len(str(d.lo))
            if key in acc:
                lo, hi, c = acc[key]
                acc[key] = [min(lo, d.lo), max(hi, d.hi), c + d.count]
            else:
                acc[key] = [d.lo, d.hi, d.count]
    return [DecadeCount(*acc[k]) for k in sorted(acc)]

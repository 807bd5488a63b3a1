"""Consecutive primes: segmented sieve, 1-based index, persistent cache.

Every other module obtains primes through :class:`PrimeCache`.

Cache file layout (``primes-v1.pgkc``), a sequence of append-only segments::

    header   "PGKC" | version u32 | start u64 | length u64     (little endian)
    payload  bitmap of the odd numbers start+1, start+3, ...  (LSB first)
    trailer  crc32 of header + payload, u32

Segments are contiguous, start at even integers and have even length.  A
segment whose header, length or checksum does not verify ends the readable
prefix; everything after it is discarded by the next writer and re-sieved.
"""

from __future__ import annotations

import logging
import math
import os
import struct
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np
from filelock import FileLock

from pgk.errors import RangeTooLargeError, ResourceLimitError

log = logging.getLogger(__name__)

DEFAULT_SEGMENT = 1 << 20
DEFAULT_HARD_LIMIT = 1 << 34
CACHE_VERSION = 1
MAGIC = b"PGKC"
CACHE_NAME = f"primes-v{CACHE_VERSION}.pgkc"

_HEADER = struct.Struct("<4sIQQ")
_TRAILER = struct.Struct("<I")
_SMALL = 1 << 16


def _simple_primes(limit: int) -> np.ndarray:
    """All primes <= limit by a plain sieve (limit is small)."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if flags[p]:
            flags[p * p :: 2 * p] = False
    return np.flatnonzero(flags).astype(np.int64)


def base_primes(limit: int, segment_size: int = DEFAULT_SEGMENT) -> np.ndarray:
    """Primes <= limit, built from primes <= sqrt(limit) (recursively)."""
    if limit <= _SMALL:
        return _simple_primes(limit)
    base = base_primes(math.isqrt(limit), segment_size)
    parts = [np.array([2], dtype=np.int64)]
    start = 0
    while start <= limit:
        length = min(segment_size, limit + 1 - start)
        length += length & 1
        parts.append(_decode(start, _odd_bitmap(start, length, base)))
        start += length
    primes = np.concatenate(parts)
    return primes[primes <= limit]


def _odd_bitmap(start: int, length: int, base: np.ndarray) -> np.ndarray:
    """Primality flags of the odd numbers in [start, start + length); start even."""
    flags = np.ones(length // 2, dtype=bool)
    end = start + length
    if start == 0:
        flags[0] = False  # 1
    for p in base:
        p = int(p)
        if p == 2:
            continue
        pp = p * p
        if pp >= end:
            break
        m = max(pp, ((start + p) // p) * p)
        if not m & 1:
            m += p
        if m < end:
            flags[(m - start - 1) // 2 :: p] = False
    return flags


def _decode(start: int, flags: np.ndarray) -> np.ndarray:
    return start + 1 + 2 * np.flatnonzero(flags).astype(np.int64)


def sieve_range(lo: int, hi: int, segment_size: int = DEFAULT_SEGMENT) -> list[int]:
    """Primes in ``[lo, hi)``, ascending; the span must fit one segment."""
    if lo < 2:
        raise ValueError(f"lo must be >= 2, got {lo}")
    if hi <= lo:
        raise ValueError(f"hi must exceed lo, got [{lo}, {hi})")
    if hi - lo > segment_size:
        raise RangeTooLargeError(f"range of {hi - lo} integers exceeds the segment budget {segment_size}; split it")
    start = lo - (lo & 1)
    length = hi - start
    length += length & 1
    base = base_primes(math.isqrt(hi - 1), segment_size)
    primes = _decode(start, _odd_bitmap(start, length, base))
    out = primes[(primes >= lo) & (primes < hi)].tolist()
    if lo <= 2 < hi:
        out.insert(0, 2)
    return out


@dataclass(frozen=True)
class Segment:
    start: int
    length: int
    bitmap: bytes
    checksum: int

    @property
    def end(self) -> int:
        return self.start + self.length

    @classmethod
    def build(cls, start: int, flags: np.ndarray) -> "Segment":
        bitmap = np.packbits(flags, bitorder="little").tobytes()
        length = 2 * len(flags)
        header = _HEADER.pack(MAGIC, CACHE_VERSION, start, length)
        return cls(start, length, bitmap, zlib.crc32(header + bitmap))

    def encode(self) -> bytes:
        header = _HEADER.pack(MAGIC, CACHE_VERSION, self.start, self.length)
        return header + self.bitmap + _TRAILER.pack(self.checksum)

    def primes(self) -> np.ndarray:
        flags = np.unpackbits(np.frombuffer(self.bitmap, dtype=np.uint8), bitorder="little")[: self.length // 2]
        return _decode(self.start, flags.astype(bool))


def read_segments(path: Path) -> tuple[list[Segment], int]:
    """Parse a cache file; returns verified segments and the byte offset they end at."""
    segments: list[Segment] = []
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        return segments, 0
    pos = 0
    expected = 0
    while pos + _HEADER.size <= len(data):
        magic, version, start, length = _HEADER.unpack_from(data, pos)
        if magic != MAGIC or version != CACHE_VERSION or start != expected or length <= 0 or length & 1:
            log.warning("cache %s: bad segment header at byte %d; discarding tail", path, pos)
            break
        nbytes = (length // 2 + 7) // 8
        body_end = pos + _HEADER.size + nbytes
        if body_end + _TRAILER.size > len(data):
            log.warning("cache %s: truncated segment at byte %d; discarding tail", path, pos)
            break
        bitmap = data[pos + _HEADER.size : body_end]
        (checksum,) = _TRAILER.unpack_from(data, body_end)
        if zlib.crc32(data[pos:body_end]) != checksum:
            log.warning("cache %s: checksum mismatch at byte %d; discarding tail", path, pos)
            break
        segments.append(Segment(start, length, bitmap, checksum))
        expected = start + length
        pos = body_end + _TRAILER.size
    return segments, pos


class PrimeCache:
    """Indexed store of p_1 = 2, p_2 = 3, ... extended on demand.

    With ``cache_dir`` set, sieved segments are appended to a file there and
    reused by later runs.  Many processes may read the file; writers
    serialise on a lock file.
    """

    def __init__(
        self,
        cache_dir: str | os.PathLike | None = None,
        *,
        segment_size: int = DEFAULT_SEGMENT,
        hard_limit: int = DEFAULT_HARD_LIMIT,
        threads: int = 1,
    ):
        if segment_size < 2 or segment_size & 1:
            raise ValueError("segment_size must be an even integer >= 2")
        if hard_limit < 2:
            raise ValueError("hard_limit must be >= 2")
        self.segment_size = segment_size
        self.hard_limit = hard_limit
        self.threads = max(1, int(threads))
        self.path = Path(cache_dir) / CACHE_NAME if cache_dir is not None else None
        self.segments: list[Segment] = []
        self._chunks: list[np.ndarray] = []
        self._primes = np.zeros(0, dtype=np.int64)
        self._end = 0
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._load()

    # state ----------------------------------------------------------------

    @property
    def limit(self) -> int:
        """Largest integer known to be fully sieved."""
        return self._end - 1

    @property
    def count(self) -> int:
        return len(self.primes)

    @property
    def primes(self) -> np.ndarray:
        if self._chunks:
            self._primes = np.concatenate([self._primes, *self._chunks])
            self._chunks = []
        return self._primes

    @property
    def checksum(self) -> int:
        """Integrity token over all segment checksums."""
        token = 0
        for seg in self.segments:
            token = zlib.crc32(struct.pack("<QQI", seg.start, seg.length, seg.checksum), token)
        return token

    def _adopt(self, segments: list[Segment]) -> None:
        for seg in segments:
            ps = seg.primes()
            if seg.start == 0 and seg.end > 2:
                ps = np.concatenate([np.array([2], dtype=np.int64), ps])
            self._chunks.append(ps)
            self.segments.append(seg)
            self._end = seg.end

    def _load(self) -> None:
        segments, _ = read_segments(self.path)
        self._adopt(segments)

    # extension --------------------------------------------------------------

    def _plan(self, limit: int) -> list[tuple[int, int]]:
        plan = []
        start = self.segments[-1].end if self.segments else 0
        while start <= limit:
            plan.append((start, self.segment_size))
            start += self.segment_size
        return plan

    def extend_to(self, limit: int) -> None:
        """Make sure every integer <= ``limit`` is sieved."""
        if limit > self.hard_limit:
            raise ResourceLimitError(f"sieving to {limit} exceeds the hard limit {self.hard_limit}")
        if limit <= self.limit:
            return
        if self.path is not None:
            with FileLock(str(self.path) + ".lock"):
                # pick up segments another writer may have added meanwhile
                segments, good = read_segments(self.path)
                self._adopt(segments[len(self.segments):])
                if limit <= self.limit:
                    return
                new = self._sieve(self._plan(limit))
                with open(self.path, "r+b" if self.path.exists() else "wb") as fh:
                    fh.truncate(good)
                    fh.seek(good)
                    for seg in new:
                        fh.write(seg.encode())
                self._adopt(new)
        else:
            self._adopt(self._sieve(self._plan(limit)))

    def _sieve(self, plan: list[tuple[int, int]]) -> list[Segment]:
        if not plan:
            return []
        top = plan[-1][0] + plan[-1][1]
        base = base_primes(math.isqrt(top), self.segment_size)

        def work(item):
            start, length = item
            return Segment.build(start, _odd_bitmap(start, length, base))

        if self.threads > 1 and len(plan) > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                return list(pool.map(work, plan))
        return [work(item) for item in plan]

    def ensure_count(self, n: int) -> None:
        """Make sure at least ``n`` primes are stored."""
        while self.count < n:
            target = max(_nth_prime_upper(n), self.limit + self.segment_size)
            if target > self.hard_limit:
                if self.limit >= self.hard_limit:
                    raise ResourceLimitError(f"p_{n} lies beyond the hard limit {self.hard_limit}")
                target = self.hard_limit
            self.extend_to(target)

    # queries -----------------------------------------------------------------

    def nth_prime(self, n: int) -> int:
        """The n-th prime, 1-based (``nth_prime(1) == 2``)."""
        if n < 1:
            raise ValueError(f"prime index must be >= 1, got {n}")
        self.ensure_count(n)
        p = int(self.primes[n - 1])
        if p > self.hard_limit:
            # the last segment may overshoot; answers still respect the limit
            raise ResourceLimitError(f"p_{n} = {p} lies beyond the hard limit {self.hard_limit}")
        return p

    def prime_count(self, x: int) -> int:
        """Number of primes <= x."""
        if x < 2:
            return 0
        self.extend_to(x)
        return int(np.searchsorted(self.primes, x, side="right"))

    def primes_upto(self, x: int) -> np.ndarray:
        self.extend_to(x)
        return self.primes[: np.searchsorted(self.primes, x, side="right")]

    def slice(self, first: int, last: int) -> np.ndarray:
        """p_first .. p_last inclusive as an int64 array."""
        if first < 1:
            raise ValueError("prime index must be >= 1")
        if last < first:
            return np.zeros(0, dtype=np.int64)
        self.ensure_count(last)
        if self.primes[last - 1] > self.hard_limit:
            raise ResourceLimitError(f"p_{last} lies beyond the hard limit {self.hard_limit}")
        return self.primes[first - 1 : last]

    def pairs(self, first: int, last: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Arrays ``(n, p_n, p_{n+1})`` for first <= n <= last."""
        if last < first:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, empty
        ps = self.slice(first, last + 1)
        return np.arange(first, last + 1, dtype=np.int64), ps[:-1], ps[1:]

    def pairs_stream(self, first: int, last: int) -> Iterator[tuple[int, int, int]]:
        """Consecutive-prime pairs ``(n, p_n, p_{n+1})`` in index order."""
        if first < 1:
            raise ValueError("prime index must be >= 1")
        if last < first:
            return iter(())
        _, a, b = self.pairs(first, last)
        return zip(range(first, last + 1), map(int, a), map(int, b))


def _nth_prime_upper(n: int) -> int:
    """An upper bound for p_n (Rosser's bound for n >= 6)."""
    if n < 6:
        return 13
    ln = math.log(n)
    return int(n * (ln + math.log(ln))) + 1

"""Segmented sieve of Eratosthenes and an immutable prime table.

Primes are held as a read-only ``int64`` numpy array.  Indices follow the
mathematical convention ``p_1 = 2``.
"""

from __future__ import annotations

import os
import random
import struct
import tempfile
from dataclasses import dataclass
from math import isqrt, log
from pathlib import Path

import numpy as np

from .errors import DomainError, OutOfRangeError, QnrError, ResourceLimitError

__all__ = [
    "PrimeTable",
    "sieve_primes",
    "nth_prime",
    "prime_count",
    "extend",
    "is_prime",
    "primes_between",
    "save_cache",
    "load_cache",
    "DEFAULT_SEGMENT",
    "MAX_LIMIT",
]

#: Odd-number flags per segment.
DEFAULT_SEGMENT = 1 << 18
#: Default memory budget, in sieve bound.  About 1.6 GB of int64 primes.
MAX_LIMIT = 4 * 10**9
#: Hard ceiling from the data model.
_ABS_MAX = 1 << 40

_CACHE_MAGIC = b"QNRPRIME"
_CACHE_VERSION = 1
_HEADER = struct.Struct("<8sIQQ")


def _small_primes(n: int) -> np.ndarray:
    """Plain sieve up to ``n`` inclusive; used for base primes only."""
    if n < 2:
        return np.empty(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, isqrt(n) + 1, 2):
        if flags[p]:
            flags[p * p :: 2 * p] = False
    return np.flatnonzero(flags).astype(np.int64)


def _sieve_odd_range(lo: int, hi: int, base: np.ndarray, segment: int) -> list[np.ndarray]:
    """Odd primes in ``[lo, hi]`` (``lo`` odd, ``lo >= 3``), segment by segment.

    ``base`` must hold every odd prime up to ``isqrt(hi)``.
    """
    chunks = []
    start = lo
    while start <= hi:
        # flag i stands for start + 2*i
        size = min(segment, (hi - start) // 2 + 1)
        end = start + 2 * (size - 1)
        flags = np.ones(size, dtype=bool)
        for p in base:
            p = int(p)
            pp = p * p
            if pp > end:
                break
            first = max(pp, (start + p - 1) // p * p)
            if first % 2 == 0:
                first += p
            flags[(first - start) // 2 :: p] = False
        chunks.append(np.flatnonzero(flags).astype(np.int64) * 2 + start)
        start = end + 2
    return chunks


@dataclass(frozen=True, eq=False)
class PrimeTable:
    """All primes up to ``limit``, ascending.

    Instances are never mutated; :meth:`extend` builds a new table that
    shares nothing mutable with the old one.
    """

    limit: int
    primes: np.ndarray

    def __post_init__(self):
        self.primes.setflags(write=False)

    @property
    def count(self) -> int:
        return int(self.primes.shape[0])

    def __len__(self) -> int:
        return self.count

    def __iter__(self):
        return (int(p) for p in self.primes)

    def __eq__(self, other):
        if not isinstance(other, PrimeTable):
            return NotImplemented
        return self.limit == other.limit and np.array_equal(self.primes, other.primes)

    def __repr__(self):
        return f"PrimeTable(limit={self.limit}, count={self.count})"

    def nth(self, n: int) -> int:
        return nth_prime(self, n)

    def pi(self, x: int) -> int:
        return prime_count(self, x)

    def extend(self, new_limit: int, segment: int = DEFAULT_SEGMENT) -> "PrimeTable":
        return extend(self, new_limit, segment=segment)

    def covering(self, limit: int) -> "PrimeTable":
        """This table if it reaches ``limit``, otherwise a grown copy."""
        if limit <= self.limit:
            return self
        return self.extend(max(limit, 2 * self.limit))

    def with_count(self, n: int) -> "PrimeTable":
        """A table holding at least ``n`` primes."""
        table = self
        while table.count < n:
            # p_n < n (ln n + ln ln n) for n >= 6
            guess = int(n * (log(n) + log(log(n)))) + 10 if n >= 6 else 15
            table = table.covering(guess)
        return table


def _check_limit(limit: int, max_limit: int) -> None:
    if limit < 2:
        raise DomainError(f"sieve limit must be >= 2, got {limit}")
    if limit > min(max_limit, _ABS_MAX):
        raise ResourceLimitError(
            f"sieve limit {limit} exceeds the memory budget {min(max_limit, _ABS_MAX)}"
        )


def sieve_primes(
    limit: int, segment: int = DEFAULT_SEGMENT, max_limit: int = MAX_LIMIT
) -> PrimeTable:
    """Sieve all primes ``<= limit``.

    Odd numbers only, processed in segments of ``segment`` flags so that
    peak scratch memory stays bounded regardless of ``limit``.
    """
    limit = int(limit)
    _check_limit(limit, max_limit)
    base = _small_primes(isqrt(limit))[1:]
    chunks = [np.array([2], dtype=np.int64)]
    if limit >= 3:
        chunks += _sieve_odd_range(3, limit if limit % 2 else limit - 1, base, segment)
    return PrimeTable(limit, np.concatenate(chunks))


def extend(
    table: PrimeTable,
    new_limit: int,
    segment: int = DEFAULT_SEGMENT,
    max_limit: int = MAX_LIMIT,
) -> PrimeTable:
    """Return a table for ``new_limit`` whose prefix is ``table``'s primes."""
    new_limit = int(new_limit)
    if new_limit <= table.limit:
        raise DomainError(f"new limit {new_limit} must exceed current limit {table.limit}")
    _check_limit(new_limit, max_limit)
    lo = table.limit + 1
    if lo % 2 == 0:
        lo += 1
    lo = max(lo, 3)
    hi = new_limit if new_limit % 2 else new_limit - 1
    chunks = [table.primes.copy()]
    if lo <= hi:
        base = _small_primes(isqrt(new_limit))[1:]
        chunks += _sieve_odd_range(lo, hi, base, segment)
    return PrimeTable(new_limit, np.concatenate(chunks))


def nth_prime(table: PrimeTable, n: int) -> int:
    """The ``n``-th prime, 1-indexed."""
    if n < 1:
        raise DomainError(f"prime index must be >= 1, got {n}")
    if n > table.count:
        raise OutOfRangeError(
            f"p_{n} is beyond this table ({table.count} primes up to {table.limit}); "
            "extend the table first"
        )
    return int(table.primes[n - 1])


def prime_count(table: PrimeTable, x: int) -> int:
    """pi(x) by binary search."""
    if x > table.limit:
        raise OutOfRangeError(f"x={x} exceeds table limit {table.limit}; extend the table first")
    return int(np.searchsorted(table.primes, x, side="right"))


_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def save_cache(table: PrimeTable, path: str | os.PathLike) -> None:
    """Write ``table`` as header + little-endian uint64 primes, atomically."""
    path = Path(path)
    header = _HEADER.pack(_CACHE_MAGIC, _CACHE_VERSION, table.limit, table.count)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(table.primes.astype("<u8").tobytes())
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def load_cache(path: str | os.PathLike, spot_checks: int = 16, seed: int | None = None) -> PrimeTable:
    """Read a cache written by :func:`save_cache` and sanity-check it."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise QnrError(f"{path}: truncated prime cache header")
    magic, version, limit, count = _HEADER.unpack_from(raw)
    if magic != _CACHE_MAGIC or version != _CACHE_VERSION:
        raise QnrError(f"{path}: not a prime cache (magic={magic!r}, version={version})")
    body = raw[_HEADER.size :]
    if len(body) != 8 * count:
        raise QnrError(f"{path}: header says {count} primes, file holds {len(body) // 8}")
    primes = np.frombuffer(body, dtype="<u8").astype(np.int64)
    if count and (primes[-1] > limit or np.any(np.diff(primes) <= 0)):
        raise QnrError(f"{path}: primes not strictly increasing within limit")
    rng = random.Random(seed)
    for i in rng.sample(range(count), min(spot_checks, count)):
        if not is_prime(int(primes[i])):
            raise QnrError(f"{path}: entry {i} ({int(primes[i])}) is not prime")
    return PrimeTable(int(limit), primes)


def primes_between(lo: int, hi: int, window: int = 1 << 22):
    """Yield arrays of the primes in ``[lo, hi]``, one window at a time.

    Memory stays proportional to ``window`` however wide the range is.
    """
    lo = max(int(lo), 2)
    hi = int(hi)
    if lo > hi:
        return
    if lo == 2:
        yield np.array([2], dtype=np.int64)
        lo = 3
    if lo % 2 == 0:
        lo += 1
    base = _small_primes(isqrt(hi))[1:]
    start = lo
    while start <= hi:
        end = min(hi, start + 2 * window - 1)
        top = end if end % 2 else end - 1
        if top >= start:
            for chunk in _sieve_odd_range(start, top, base, DEFAULT_SEGMENT):
                if chunk.size:
                    yield chunk
        start = top + 2

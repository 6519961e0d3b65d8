"""Empirical scans over primes p <= x.

Per-prime work (n_1..n_k, residue pattern) runs in a compiled kernel over
contiguous shards of prime indices.  Every aggregate is an exact integer,
so merging shards in any order or grouping reproduces the sequential
result exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numba
import numpy as np

from . import _kernels
from .errors import DomainError, ResourceLimitError
from .primes import PrimeTable
from .quadratic import ResiduePattern
from .series import _check_z, gap_constant, m_average, mu_k

__all__ = [
    "ScanConfig",
    "ScanResult",
    "PrimeRows",
    "compute_rows",
    "aggregate",
    "scan",
    "pattern_density",
    "convergence_trace",
    "TRACE_COLUMNS",
    "MAX_PATTERN_N",
]

MAX_PATTERN_N = 20
TRACE_COLUMNS = ("x", "stat_name", "empirical", "theoretical", "abs_err")


@dataclass(frozen=True)
class ScanConfig:
    x: int
    k_max: int = 2
    z_list: tuple[Fraction, ...] = ()
    pattern_n: int = 0
    shards: int = 1
    threads: int | None = None

    def __post_init__(self):
        if self.x < 3:
            raise DomainError(f"scan bound x must be >= 3, got {self.x}")
        if self.k_max < 1:
            raise DomainError(f"k_max must be >= 1, got {self.k_max}")
        if not 0 <= self.pattern_n <= MAX_PATTERN_N:
            raise DomainError(f"pattern_n must lie in [0, {MAX_PATTERN_N}], got {self.pattern_n}")
        if self.shards < 1:
            raise DomainError(f"shards must be >= 1, got {self.shards}")
        object.__setattr__(self, "z_list", tuple(_check_z(z) for z in self.z_list))


@dataclass
class ScanResult:
    """Integer accumulators over a set of odd primes.

    ``max_m`` is ``(p, M(p))`` for the largest M seen, ties going to the
    smaller p; ``(0, 0)`` when nothing was scanned.
    """

    k_max: int
    z_list: tuple[Fraction, ...]
    pattern_n: int
    primes_scanned: int = 0
    sum_nk: list[int] = field(default_factory=list)
    sum_m: int = 0
    gap_counts: dict[Fraction, int] = field(default_factory=dict)
    pattern_counts: dict[str, int] = field(default_factory=dict)
    max_m: tuple[int, int] = (0, 0)

    @classmethod
    def empty(cls, k_max: int, z_list: Sequence[Fraction], pattern_n: int) -> "ScanResult":
        return cls(
            k_max,
            tuple(z_list),
            pattern_n,
            sum_nk=[0] * k_max,
            gap_counts={z: 0 for z in z_list},
        )

    def merge(self, other: "ScanResult") -> "ScanResult":
        if (self.k_max, self.z_list, self.pattern_n) != (other.k_max, other.z_list, other.pattern_n):
            raise DomainError("cannot merge scans with different configurations")
        patterns = dict(self.pattern_counts)
        for key, c in other.pattern_counts.items():
            patterns[key] = patterns.get(key, 0) + c
        return ScanResult(
            self.k_max,
            self.z_list,
            self.pattern_n,
            self.primes_scanned + other.primes_scanned,
            [a + b for a, b in zip(self.sum_nk, other.sum_nk)],
            self.sum_m + other.sum_m,
            {z: self.gap_counts[z] + other.gap_counts[z] for z in self.z_list},
            {key: patterns[key] for key in sorted(patterns)},
            _better_max(self.max_m, other.max_m),
        )

    def mean_nk(self, k: int) -> float:
        return self.sum_nk[k - 1] / self.primes_scanned

    def mean_m(self) -> float:
        return self.sum_m / self.primes_scanned

    def gap_frequency(self, z) -> float:
        """Fraction of scanned primes with n_2 > z n_1."""
        return self.gap_counts[_check_z(z)] / self.primes_scanned

    def to_json_dict(self) -> dict:
        return {
            "primes_scanned": self.primes_scanned,
            "sum_nk": list(self.sum_nk),
            "sum_m": self.sum_m,
            "gap_counts": {_z_key(z): c for z, c in self.gap_counts.items()},
            "pattern_counts": dict(self.pattern_counts),
            "max_m": {"p": self.max_m[0], "m": self.max_m[1]},
        }


def _z_key(z: Fraction) -> str:
    return f"{z.numerator}/{z.denominator}"


def _better_max(a: tuple[int, int], b: tuple[int, int]) -> tuple[int, int]:
    if a[1] != b[1]:
        return a if a[1] > b[1] else b
    if a[0] == 0 or b[0] == 0:
        return a if b[0] == 0 else b
    return a if a[0] < b[0] else b


@dataclass
class PrimeRows:
    """Per-prime values for odd primes ``p``: ``nk[i, j] = n_{j+1}(p[i])``.

    ``pattern[i]`` is the pattern bit index (bit j set iff (p_{j+1}/p) = -1),
    or -1 when p is one of the first ``pattern_n`` primes.
    """

    p: np.ndarray
    nk: np.ndarray
    pattern: np.ndarray
    pattern_n: int


def _split(lo: int, hi: int, shards: int) -> np.ndarray:
    return np.linspace(lo, hi, shards + 1).round().astype(np.int64)


def compute_rows(
    table: PrimeTable,
    x: int,
    k: int,
    pattern_n: int = 0,
    shards: int = 1,
    threads: int | None = None,
) -> tuple[PrimeRows, PrimeTable]:
    """Kernel pass over the odd primes <= x.  Returns the rows and the
    (possibly grown) table."""
    kk = max(k, 2)
    table = table.covering(max(x, 1000)).with_count(pattern_n + 1)
    hi = table.pi(x)
    n_threads = min(threads or os.cpu_count() or 1, numba.config.NUMBA_NUM_THREADS)
    numba.set_num_threads(max(1, n_threads))
    for _ in range(64):
        nk = np.zeros((table.count, kk), dtype=np.int64)
        pat = np.full(table.count, -1, dtype=np.int64)
        status = _kernels.scan_shards(table.primes, _split(1, hi, shards), kk, pattern_n, nk, pat)
        if status == _kernels.OK:
            rows = PrimeRows(table.primes[1:hi], nk[1:hi], pat[1:hi], pattern_n)
            return rows, table
        table = table.extend(2 * table.limit)
    raise ResourceLimitError("non-residue search outgrew the prime table")


def aggregate(rows: PrimeRows, k_max: int, z_list: Sequence[Fraction]) -> ScanResult:
    """Integer accumulators for a block of rows."""
    res = ScanResult.empty(k_max, tuple(z_list), rows.pattern_n)
    count = int(rows.p.shape[0])
    if count == 0:
        return res
    n1, n2 = rows.nk[:, 0], rows.nk[:, 1]
    m = np.minimum(n1, n2 - n1)
    res.primes_scanned = count
    res.sum_nk = [int(v) for v in rows.nk[:, :k_max].sum(axis=0)]
    res.sum_m = int(m.sum())
    for z in res.z_list:
        res.gap_counts[z] = int(np.count_nonzero(z.denominator * n2 > z.numerator * n1))
    if rows.pattern_n:
        valid = rows.pattern[rows.pattern >= 0]
        counts = np.bincount(valid, minlength=1 << rows.pattern_n)
        res.pattern_counts = {
            str(ResiduePattern.from_index(int(i), rows.pattern_n)): int(counts[i])
            for i in np.flatnonzero(counts)
        }
        res.pattern_counts = dict(sorted(res.pattern_counts.items()))
    best = int(np.argmax(m))
    res.max_m = (int(rows.p[best]), int(m[best]))
    return res


def _slice(rows: PrimeRows, a: int, b: int) -> PrimeRows:
    return PrimeRows(rows.p[a:b], rows.nk[a:b], rows.pattern[a:b], rows.pattern_n)


def scan(config: ScanConfig, table: PrimeTable) -> ScanResult:
    """Accumulate n_k sums, M sums, gap counts and pattern counts over odd p <= x."""
    rows, _ = compute_rows(
        table, config.x, config.k_max, config.pattern_n, config.shards, config.threads
    )
    bounds = _split(0, rows.p.shape[0], config.shards)
    result = ScanResult.empty(config.k_max, config.z_list, config.pattern_n)
    for a, b in zip(bounds[:-1], bounds[1:]):
        result = result.merge(aggregate(_slice(rows, int(a), int(b)), config.k_max, config.z_list))
    return result


def pattern_density(x: int, pattern: ResiduePattern, table: PrimeTable) -> tuple[int, float]:
    """Primes p <= x outside the first n primes realizing ``pattern``, and pi(x) / 2**n.

    p = 2 is never counted, so an empty pattern gives pi(x) - 1 against pi(x).
    """
    n = pattern.n
    table = table.covering(max(x, 3)).with_count(n + 1)
    if n and x < table.nth(n):
        raise DomainError(f"x={x} must be at least p_{n}={table.nth(n)}")
    pi_x = table.pi(x)
    if x < 3:
        return 0, pi_x / 2**n
    rows, _ = compute_rows(table, x, 1, n)
    if n == 0:
        return int(rows.p.shape[0]), float(pi_x)
    return int(np.count_nonzero(rows.pattern == pattern.index)), pi_x / 2**n


def convergence_trace(
    config: ScanConfig,
    table: PrimeTable,
    checkpoints: Iterable[int] | None = None,
    eps: float = 1e-9,
) -> tuple[ScanResult, list[dict]]:
    """Full scan plus CSV-ready rows comparing empirical means to series limits.

    One kernel pass serves every checkpoint; prefixes are re-aggregated.
    """
    rows, table = compute_rows(
        table, config.x, config.k_max, config.pattern_n, config.shards, config.threads
    )
    if checkpoints is None:
        checkpoints = [10**e for e in range(2, 20) if 10**e < config.x]
    points = sorted({int(c) for c in checkpoints if 3 <= c <= config.x} | {config.x})
    theory = {f"mean_n{k}": mu_k(k, eps, table).value for k in range(1, config.k_max + 1)}
    theory["mean_M"] = m_average(eps, table).value
    for z in config.z_list:
        theory[f"gap_gt_{_z_key(z)}"] = gap_constant(z, eps, table).value

    bounds = _split(0, rows.p.shape[0], config.shards)
    trace: list[dict] = []
    final = None
    for x in points:
        end = int(np.searchsorted(rows.p, x, side="right"))
        res = ScanResult.empty(config.k_max, config.z_list, config.pattern_n)
        for a, b in zip(bounds[:-1], bounds[1:]):
            a, b = int(min(a, end)), int(min(b, end))
            res = res.merge(aggregate(_slice(rows, a, b), config.k_max, config.z_list))
        if res.primes_scanned == 0:
            continue
        emp = {f"mean_n{k}": res.mean_nk(k) for k in range(1, config.k_max + 1)}
        emp["mean_M"] = res.mean_m()
        for z in config.z_list:
            emp[f"gap_gt_{_z_key(z)}"] = res.gap_frequency(z)
        for name, value in emp.items():
            trace.append(
                {
                    "x": x,
                    "stat_name": name,
                    "empirical": value,
                    "theoretical": theory[name],
                    "abs_err": abs(value - theory[name]),
                }
            )
        final = res
    return final, trace

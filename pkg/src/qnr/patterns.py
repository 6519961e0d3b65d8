"""Residue classes realizing a prescribed pattern of Legendre symbols, and
the construction of primes with large M(p).

For a pattern eps over the first n primes, put q = 8 * p_2 * ... * p_n.
A prime p > p_n has (p_j / p) = eps_j for all j exactly when p mod q lies
in a set S of phi(q) / 2**n units.  By the second supplement the class of
p mod 8 fixes (2/p); by reciprocity each odd condition becomes one on
p mod p_j, with a sign twist when p = 3 mod 4.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd, prod

import numpy as np

from .errors import DomainError, ResourceLimitError
from .primes import PrimeTable, primes_between
from .quadratic import ResiduePattern, jacobi, m_statistic, nk_nonresidues, residue_pattern

__all__ = [
    "PatternClassSet",
    "build_pattern_classes",
    "max_pattern_length",
    "find_prime_with_pattern",
    "default_search_limit",
    "LargeMRecord",
    "large_m_construction",
]

_Q_MAX = 2**63 - 1
#: Refuse to list more classes than this; membership tests still work.
MAX_MATERIALIZED = 10**7

_MOD8_FOR = {1: (1, 7), -1: (3, 5)}


def _modulus(table: PrimeTable, n: int) -> int:
    return 8 * prod(int(p) for p in table.with_count(n).primes[1:n])


def max_pattern_length(table: PrimeTable) -> int:
    """Largest n whose modulus 8 * p_2 * ... * p_n fits in a signed 64-bit integer."""
    n = 1
    while _modulus(table, n + 1) <= _Q_MAX:
        n += 1
    return n


@dataclass(frozen=True, eq=False)
class PatternClassSet:
    """The units t mod q whose primes realize ``pattern``.

    Stored in product form: for each admissible t mod 8, a boolean mask
    over residues mod p_j for j = 2..n.
    """

    pattern: ResiduePattern
    q: int
    odd_primes: tuple[int, ...]
    masks: dict[int, tuple[np.ndarray, ...]]

    @property
    def n(self) -> int:
        return self.pattern.n

    def __len__(self) -> int:
        return sum(prod(int(m.sum()) for m in masks) for masks in self.masks.values())

    def __contains__(self, t: int) -> bool:
        t = int(t) % self.q
        masks = self.masks.get(t % 8)
        if masks is None:
            return False
        return all(mask[t % p] for p, mask in zip(self.odd_primes, masks))

    def contains_array(self, values: np.ndarray) -> np.ndarray:
        """Vectorized membership of ``values mod q``."""
        values = np.asarray(values, dtype=np.int64) % self.q
        out = np.zeros(values.shape, dtype=bool)
        for t8, masks in self.masks.items():
            hit = values % 8 == t8
            for p, mask in zip(self.odd_primes, masks):
                hit &= mask[values % p]
            out |= hit
        return out

    @property
    def classes(self) -> np.ndarray:
        """All members in ascending order, assembled by CRT."""
        size = len(self)
        if size > MAX_MATERIALIZED:
            raise ResourceLimitError(
                f"{size} classes mod {self.q}; listing is capped at {MAX_MATERIALIZED}"
            )
        parts = []
        for t8, masks in self.masks.items():
            residues = np.array([t8], dtype=np.int64)
            modulus = 8
            for p, mask in zip(self.odd_primes, masks):
                allowed = np.flatnonzero(mask).astype(np.int64)
                inv = pow(modulus, -1, p)
                # x = a + modulus * ((r - a) * inv mod p)
                lift = ((allowed[None, :] - residues[:, None] % p) % p) * inv % p
                residues = (residues[:, None] + modulus * lift).ravel()
                modulus *= p
            parts.append(residues)
        return np.sort(np.concatenate(parts))


def build_pattern_classes(pattern: ResiduePattern, table: PrimeTable) -> PatternClassSet:
    n = pattern.n
    if n < 1:
        raise DomainError("pattern must prescribe at least one symbol")
    q = _modulus(table, n)
    if q > _Q_MAX:
        raise ResourceLimitError(
            f"modulus for n={n} does not fit in 64 bits; "
            f"maximal feasible pattern length is {max_pattern_length(table)}"
        )
    odd = tuple(int(p) for p in table.with_count(n).primes[1:n])
    symbols = {p: np.array([jacobi(r, p) for r in range(p)]) for p in odd}
    masks = {}
    for t8 in _MOD8_FOR[pattern.epsilons[0]]:
        branch = []
        for p, eps in zip(odd, pattern.epsilons[1:]):
            # p = 1 mod 4 leaves the symbol unchanged under reciprocity
            target = eps if t8 % 4 == 1 else (-1) ** ((p - 1) // 2) * eps
            branch.append(symbols[p] == target)
        masks[t8] = tuple(branch)
    return PatternClassSet(pattern, q, odd, masks)


def default_search_limit(q: int) -> int:
    return min(10**9, 10**4 * q)


def find_prime_with_pattern(
    pattern: ResiduePattern,
    limit: int,
    table: PrimeTable,
    classes: PatternClassSet | None = None,
) -> int | None:
    """Smallest prime p in (p_n, limit] with p mod q in the class set, or None.

    A hit is re-checked symbol by symbol before it is returned.
    """
    classes = classes or build_pattern_classes(pattern, table)
    p_n = table.with_count(pattern.n).nth(pattern.n)
    for chunk in primes_between(p_n + 1, limit):
        hits = np.flatnonzero(classes.contains_array(chunk))
        if hits.size:
            p = int(chunk[hits[0]])
            if residue_pattern(p, pattern.n, table) != pattern:
                raise RuntimeError(f"class set admitted {p}, whose pattern differs")
            return p
    return None


@dataclass(frozen=True)
class LargeMRecord:
    """Outcome of the large-M construction; ``prime`` is None when the search failed."""

    y: int
    q: int
    m_index: int
    n_index: int
    guarantee: int
    prime: int | None = None
    m_value: int | None = None

    def to_json_dict(self) -> dict:
        return {
            "y": self.y,
            "q": self.q,
            "m_index": self.m_index,
            "n_index": self.n_index,
            "prime": self.prime,
            "m_value": self.m_value,
            "guarantee": self.guarantee,
        }


def large_m_construction(y: int, search_limit: int | None, table: PrimeTable) -> LargeMRecord:
    """Find a prime whose two smallest prime non-residues are far apart.

    With p_m the largest prime <= y/2 and p_n the largest prime <= y, ask
    for p_m to be the only non-residue among p_1..p_n.  Then n_1(p) = p_m,
    n_2(p) > p_n, and M(p) >= min(p_m, p_n - p_m).
    """
    if y < 4:
        raise DomainError(f"y must be >= 4, got {y}")
    table = table.covering(y)
    m = table.pi(y // 2)
    n = table.pi(y)
    p_m, p_n = table.nth(m), table.nth(n)
    guarantee = min(p_m, p_n - p_m)
    pattern = ResiduePattern(tuple(-1 if j == m else 1 for j in range(1, n + 1)))
    classes = build_pattern_classes(pattern, table)
    limit = default_search_limit(classes.q) if search_limit is None else search_limit
    record = LargeMRecord(y, classes.q, m, n, guarantee)
    p = find_prime_with_pattern(pattern, limit, table, classes)
    if p is None:
        return record
    n1, n2 = nk_nonresidues(p, 2, table).values
    value = m_statistic(p, table)
    if n1 != p_m or n2 <= p_n or value < guarantee:
        raise RuntimeError(
            f"prime {p} breaks the construction: n_1={n1}, n_2={n2}, M={value}, "
            f"expected n_1={p_m}, n_2>{p_n}, M>={guarantee}"
        )
    return LargeMRecord(y, classes.q, m, n, guarantee, p, value)

"""Legendre/Jacobi symbols, prime non-residues n_k(p), M(p), residue patterns."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DomainError, ResourceLimitError
from .primes import PrimeTable, is_prime

__all__ = [
    "jacobi",
    "NkResult",
    "ResiduePattern",
    "nk_nonresidues",
    "m_statistic",
    "residue_pattern",
    "DEFAULT_SCAN_CAP",
]

#: Candidate primes examined before n_k gives up.
DEFAULT_SCAN_CAP = 10**6


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a/n) for odd positive n.

    Binary algorithm: strip factors of two using n mod 8, then swap with
    reciprocity.  Equals the Legendre symbol when n is an odd prime.
    """
    if n <= 0 or n % 2 == 0:
        raise DomainError(f"Jacobi symbol needs odd positive n, got {n}")
    a %= n
    t = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                t = -t
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            t = -t
        a %= n
    return t if n == 1 else 0


@dataclass(frozen=True)
class NkResult:
    p: int
    values: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ResiduePattern:
    """Prescribed symbols ``(p_j / p) = epsilons[j-1]`` for the first n primes.

    String form uses one character per prime, ``+`` or ``-``.
    """

    epsilons: tuple[int, ...]

    def __post_init__(self):
        eps = tuple(int(e) for e in self.epsilons)
        if any(e not in (1, -1) for e in eps):
            raise DomainError(f"pattern entries must be +1 or -1, got {self.epsilons}")
        object.__setattr__(self, "epsilons", eps)

    @property
    def n(self) -> int:
        return len(self.epsilons)

    @classmethod
    def parse(cls, text: str) -> "ResiduePattern":
        bad = set(text) - {"+", "-"}
        if bad or not text:
            raise DomainError(f"pattern string must be a non-empty run of '+'/'-', got {text!r}")
        return cls(tuple(1 if c == "+" else -1 for c in text))

    @classmethod
    def from_index(cls, index: int, n: int) -> "ResiduePattern":
        """Inverse of :attr:`index`."""
        return cls(tuple(-1 if index >> j & 1 else 1 for j in range(n)))

    @property
    def index(self) -> int:
        """Bit j set iff entry j is -1."""
        return sum(1 << j for j, e in enumerate(self.epsilons) if e < 0)

    def __str__(self):
        return "".join("+" if e > 0 else "-" for e in self.epsilons)


def _check_odd_prime(p: int) -> None:
    if p < 3 or p % 2 == 0 or not is_prime(p):
        raise DomainError(f"p must be an odd prime, got {p}")


def _candidate_primes(table: PrimeTable, cap: int) -> Iterable[int]:
    i = 0
    while True:
        if i >= table.count:
            if i >= cap:
                return
            table = table.with_count(min(2 * table.count + 16, cap))
        yield int(table.primes[i])
        i += 1
        if i >= cap:
            return


def nk_nonresidues(
    p: int, k: int, table: PrimeTable, scan_cap: int = DEFAULT_SCAN_CAP
) -> NkResult:
    """The k smallest primes q != p with (q/p) = -1.

    The table is grown internally when it runs out; the caller's table is
    untouched.
    """
    _check_odd_prime(p)
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    found: list[int] = []
    for q in _candidate_primes(table, scan_cap):
        if q == p:
            continue
        if jacobi(q, p) == -1:
            found.append(q)
            if len(found) == k:
                return NkResult(p, tuple(found))
    raise ResourceLimitError(
        f"only {len(found)} of {k} non-residues mod {p} among the first {scan_cap} primes"
    )


def m_statistic(p: int, table: PrimeTable) -> int:
    """min(n_1(p), n_2(p) - n_1(p))."""
    n1, n2 = nk_nonresidues(p, 2, table).values
    return min(n1, n2 - n1)


def residue_pattern(p: int, n: int, table: PrimeTable) -> ResiduePattern:
    """Symbols (p_j / p) for j = 1..n."""
    _check_odd_prime(p)
    if n < 1:
        raise DomainError(f"pattern length must be >= 1, got {n}")
    small = table.with_count(n).primes[:n]
    if p <= int(small[-1]) and p in set(int(q) for q in small):
        raise DomainError(f"p={p} is one of the first {n} primes; its pattern contains a 0")
    return ResiduePattern(tuple(jacobi(int(q), p) for q in small))


def pattern_of_symbols(symbols: Sequence[int]) -> ResiduePattern:
    return ResiduePattern(tuple(symbols))

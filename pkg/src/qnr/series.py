"""Limit constants as truncated series with certified tail bounds.

Every evaluator returns a :class:`SeriesValue`.  Tails of series weighted
by primes are bounded by a geometric majorant: for ``n`` past the stopping
index the ratio of consecutive terms is bounded using an explicit
prime-gap result (Bertrand, Nagura, Dusart), so the omitted mass is at most
``first_omitted / (1 - rho)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Callable

from .errors import ContractError, DomainError, ResourceLimitError
from .primes import PrimeTable

__all__ = [
    "SeriesValue",
    "GrowthBound",
    "parse_z",
    "prime_ratio_cap",
    "weighted_prime_tail",
    "mu_k",
    "n_of_m_z",
    "gap_constant",
    "m_average",
    "general_expectation",
    "binom_identity",
    "binom_tail",
    "mu_ratio_check",
    "MAX_GROWTH_EXPONENT",
]

#: Growth exponents must stay strictly below 4*sqrt(e).
MAX_GROWTH_EXPONENT = 4 * math.sqrt(math.e)

_MAX_TERMS = 200_000


@dataclass(frozen=True)
class SeriesValue:
    value: float
    tail_bound: float
    terms_used: int

    def __post_init__(self):
        if not (self.tail_bound >= 0 and math.isfinite(self.tail_bound)):
            raise ValueError(f"tail bound must be finite and >= 0, got {self.tail_bound}")


@dataclass(frozen=True)
class GrowthBound:
    """Caller's certificate that ``|f(t_1..t_k)| <= scale * max(t)**exponent``."""

    scale: float
    exponent: float

    def __post_init__(self):
        if not self.scale >= 0:
            raise ContractError(f"growth scale must be >= 0, got {self.scale}")
        if not 0 <= self.exponent < MAX_GROWTH_EXPONENT:
            raise ContractError(
                f"growth exponent must lie in [0, 4*sqrt(e)), got {self.exponent}"
            )


def parse_z(text) -> Fraction:
    """Exact rational from ``"3/2"``, ``"2"``, an int or a Fraction.  Floats are refused."""
    if isinstance(text, float):
        raise DomainError("z must be given as an exact rational such as '3/2', not a float")
    try:
        z = Fraction(text)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise DomainError(f"malformed rational z: {text!r}") from exc
    if isinstance(text, str) and any(c in text.lower() for c in ".e"):
        raise DomainError(f"z must be num/den with integers, got {text!r}")
    return z


def _check_eps(eps: float) -> None:
    if not eps > 0:
        raise DomainError(f"eps must be > 0, got {eps}")


def _check_z(z: Fraction) -> Fraction:
    z = parse_z(z) if not isinstance(z, Fraction) else z
    if z <= 1:
        raise DomainError(f"z must exceed 1, got {z}")
    return z


def prime_ratio_cap(p: int) -> float:
    """Upper bound on p'/q' for every pair of consecutive primes q' >= p.

    Bertrand gives 2; Nagura (1952) gives 6/5 once q' >= 25; Dusart (1998)
    gives 1 + 1/(2 ln^2 q') once q' >= 3275.  All are non-increasing in p.
    """
    if p >= 3275:
        return min(1.2, 1 + 1 / (2 * math.log(p) ** 2))
    if p >= 25:
        return 1.2
    return 2.0


def _prime(table_box: list, n: int) -> int:
    table = table_box[0]
    if n > table.count:
        table = table.with_count(n)
        table_box[0] = table
    return int(table.primes[n - 1])


def _tuple_count_ratio(n: int, k: int) -> float:
    # C(n, k-1) / C(n-1, k-1)
    return n / (n - k + 1)


def weighted_prime_tail(
    k: int, exponent: float, scale: float, last: int, table: PrimeTable
) -> float | None:
    """Certified bound on ``sum_{n > last} scale * p_n**exponent * C(n-1,k-1) / 2**n``.

    Returns None when the geometric majorant is not yet valid at ``last``.
    """
    box = [table]
    n = last + 1
    if n < k:
        return None
    p_next = _prime(box, n)
    rho = prime_ratio_cap(p_next) ** exponent * _tuple_count_ratio(n, k) / 2
    if rho >= 1:
        return None
    first = scale * p_next**exponent * (math.comb(n - 1, k - 1) / 2**n)
    return first / (1 - rho)


def mu_k(k: int, eps: float, table: PrimeTable, terms: int | None = None) -> SeriesValue:
    """Average of n_k(p): sum over n >= k of p_n * C(n-1, k-1) / 2**n.

    With ``terms`` set, exactly that many terms are summed and the bound
    covers everything left over; otherwise summation stops at the first
    n > 3k whose certified remainder is <= eps.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    _check_eps(eps)
    box = [table]
    parts: list[float] = []
    n = k
    t = _prime(box, k) * 2.0**-k
    tail = None
    while True:
        parts.append(t)
        if terms is not None:
            if len(parts) >= terms:
                break
        elif n > 3 * k:
            tail = weighted_prime_tail(k, 1, 1.0, n, box[0])
            if tail is not None and tail <= eps:
                break
        if len(parts) > _MAX_TERMS:
            raise ResourceLimitError(f"mu_{k} did not reach eps={eps} in {_MAX_TERMS} terms")
        p_n, p_next = _prime(box, n), _prime(box, n + 1)
        t *= (p_next / p_n) * _tuple_count_ratio(n, k) / 2
        n += 1
    if tail is None:
        tail = _remainder_after(k, 1, 1.0, n, box)
    return SeriesValue(math.fsum(parts), tail, len(parts))


def _remainder_after(k: int, exponent: float, scale: float, last: int, box: list) -> float:
    """Explicit terms up to the first certifiable index, plus the majorant."""
    extra = []
    n = last
    while True:
        tail = weighted_prime_tail(k, exponent, scale, n, box[0])
        if tail is not None:
            return math.fsum(extra) + tail
        n += 1
        extra.append(scale * _prime(box, n) ** exponent * (math.comb(n - 1, k - 1) / 2**n))


def n_of_m_z(m: int, z, table: PrimeTable) -> int:
    """Largest n with p_n <= z * p_m, decided in integer arithmetic."""
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    z = _check_z(z)
    table = table.with_count(m)
    bound = z.numerator * int(table.primes[m - 1]) // z.denominator
    table = table.covering(bound)
    return table.pi(bound)


def gap_constant(z, eps: float, table: PrimeTable, terms: int | None = None) -> SeriesValue:
    """Limit density of primes p with n_2(p) > z * n_1(p): sum over m of 2**-n(m, z).

    Since n(m, z) >= m, the remainder after M terms is at most 2**-M.
    """
    z = _check_z(z)
    _check_eps(eps)
    if terms is None:
        terms = max(1, math.ceil(-math.log2(eps)))
        while 2.0**-terms > eps:
            terms += 1
    parts = [2.0 ** -n_of_m_z(m, z, table) for m in range(1, terms + 1)]
    return SeriesValue(math.fsum(parts), 2.0**-terms, terms)


def m_average(eps: float, table: PrimeTable) -> SeriesValue:
    """Average of M(p): sum over m < k of min(p_m, p_k - p_m) / 2**k.

    For fixed m the inner sum is closed: once p_k > 2 p_m the minimum is
    p_m, contributing p_m * 2**-n(m, 2).  Only the outer sum is truncated,
    and its remainder is dominated by sum_{m > M} p_m / 2**m.
    """
    _check_eps(eps)
    box = [table]
    two = Fraction(2)
    parts: list[float] = []
    m = 0
    while True:
        m += 1
        p_m = _prime(box, m)
        cut = n_of_m_z(m, two, box[0])
        _prime(box, cut)
        inner = [(_prime(box, k) - p_m) * 2.0**-k for k in range(m + 1, cut + 1)]
        inner.append(p_m * 2.0**-cut)
        parts.append(math.fsum(inner))
        tail = weighted_prime_tail(1, 1, 1.0, m, box[0])
        if tail is not None and tail <= eps:
            return SeriesValue(math.fsum(parts), tail, m)
        if m > _MAX_TERMS:
            raise ResourceLimitError("m_average did not converge")


def general_expectation(
    f: Callable[..., float],
    k: int,
    eps: float,
    table: PrimeTable,
    growth: GrowthBound | None = None,
) -> SeriesValue:
    """Sum of f(p_{m_1}, ..., p_{m_k}) / 2**m_k over 1 <= m_1 < ... < m_k.

    ``growth`` certifies ``|f| <= scale * max(t)**exponent``; the remainder
    over m_k > M is then at most
    ``scale * sum_{m > M} p_m**exponent * C(m-1, k-1) / 2**m``.
    ``terms_used`` counts distinct values of m_k summed.
    """
    if growth is None:
        raise ContractError("general_expectation needs a GrowthBound certificate for f")
    if not isinstance(growth, GrowthBound):
        raise ContractError(f"expected GrowthBound, got {type(growth).__name__}")
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    _check_eps(eps)
    box = [table]
    parts: list[float] = []
    m = k - 1
    while True:
        m += 1
        top = _prime(box, m)
        ps = [int(v) for v in box[0].primes[: m - 1]]
        vals = [f(*lower, top) for lower in combinations(ps, k - 1)]
        parts.append(math.fsum(vals) * 2.0**-m)
        tail = weighted_prime_tail(k, growth.exponent, growth.scale, m, box[0])
        if tail is not None and tail <= eps:
            return SeriesValue(math.fsum(parts), tail, m - k + 1)
        if m > _MAX_TERMS:
            raise ResourceLimitError("general_expectation did not converge")


def binom_identity(k: int, last: int) -> float:
    """Partial sum of C(n, k) / 2**n for n = k..last; tends to 2."""
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    if last < k:
        raise DomainError(f"last={last} must be >= k={k}")
    t = 2.0**-k
    parts = [t]
    for n in range(k, last):
        t *= (n + 1) / (n + 1 - k) / 2
        parts.append(t)
    return math.fsum(parts)


def binom_tail(k: int, rel_tol: float = 1e-15) -> float:
    """Sum over n > 3k of n * C(n, k) / 2**n, until terms drop below rel_tol of the total."""
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    n = 3 * k + 1
    t = n * math.comb(n, k) / 2**n
    parts = [t]
    total = t
    while t >= rel_tol * total:
        t *= (n + 1) / n * (n + 1) / (n + 1 - k) / 2
        n += 1
        parts.append(t)
        total += t
    return math.fsum(parts)


def mu_ratio_check(k: int, table: PrimeTable, eps: float = 1e-9) -> float:
    """mu_k / p_{2k}; tends to 1 as k grows."""
    value = mu_k(k, eps, table).value
    return value / table.with_count(2 * k).nth(2 * k)

"""Prime quadratic non-residues: computation, limit constants, constructions."""

__version__ = "0.1.0"

from .errors import ContractError, DomainError, OutOfRangeError, QnrError, ResourceLimitError
from .primes import PrimeTable, extend, is_prime, nth_prime, prime_count, sieve_primes
from .quadratic import NkResult, ResiduePattern, jacobi, m_statistic, nk_nonresidues, residue_pattern
from .series import (
    GrowthBound,
    SeriesValue,
    binom_identity,
    binom_tail,
    gap_constant,
    general_expectation,
    m_average,
    mu_k,
    mu_ratio_check,
    n_of_m_z,
    parse_z,
)
from .empirical import ScanConfig, ScanResult, convergence_trace, pattern_density, scan
from .patterns import (
    LargeMRecord,
    PatternClassSet,
    build_pattern_classes,
    find_prime_with_pattern,
    large_m_construction,
)

"""Compiled inner loops for bulk scans over many primes p."""

import numba as nb
import numpy as np

# The bundled TBB is often too old; prefer layers that need nothing extra.
nb.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

# Return codes of scan_block.
OK = 0
EXHAUSTED = 1


@nb.njit(cache=True, nogil=True)
def jacobi64(a, n):
    a = a % n
    t = 1
    while a != 0:
        while (a & 1) == 0:
            a >>= 1
            r = n & 7
            if r == 3 or r == 5:
                t = -t
        a, n = n, a
        if (a & 3) == 3 and (n & 3) == 3:
            t = -t
        a = a % n
    if n == 1:
        return t
    return 0


@nb.njit(cache=True, nogil=True)
def scan_block(primes, lo, hi, kk, pattern_n, out_nk, out_pat):
    """Fill rows [lo, hi) for p = primes[lo:hi].

    out_nk[i, j] = n_{j+1}(p); out_pat[i] = pattern index or -1 when p is
    among the first pattern_n primes.  Returns EXHAUSTED if some p needs
    candidates beyond the end of ``primes``.
    """
    total = primes.shape[0]
    for i in range(lo, hi):
        p = primes[i]
        found = 0
        pat = 0
        j = 0
        while found < kk or j < pattern_n:
            if j >= total:
                return EXHAUSTED
            q = primes[j]
            if q == p:
                if j < pattern_n:
                    pat = -1
                j += 1
                continue
            s = jacobi64(q, p)
            if s < 0:
                if found < kk:
                    out_nk[i, found] = q
                    found += 1
                if j < pattern_n and pat >= 0:
                    pat |= 1 << j
            j += 1
        out_pat[i] = pat
    return OK


@nb.njit(cache=True, parallel=True)
def scan_shards(primes, bounds, kk, pattern_n, out_nk, out_pat):
    nshards = bounds.shape[0] - 1
    status = np.zeros(nshards, dtype=np.int64)
    for s in nb.prange(nshards):
        status[s] = scan_block(primes, bounds[s], bounds[s + 1], kk, pattern_n, out_nk, out_pat)
    return status.max()

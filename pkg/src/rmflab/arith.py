"""Smallest-prime-factor sieve and the factorization statistics built on it.

The sieve is a flat uint32 table from a linear (Euler) sieve, immutable after
construction and shareable across threads.  Any integer up to ``limit**2`` can
be factored: values within the table walk the spf chain, larger values fall
back to trial division by the sieved primes (the leftover cofactor is then
automatically prime).
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import ConsistencyError, ResourceError, UsageError
from .hashing import hash64_int

DEFAULT_LIMIT_CAP = 200_000_000

_CACHE_MAGIC = b"RMFSIEVE"
_CACHE_VERSION = 1


@dataclass(frozen=True)
class PolySpec:
    """Integer polynomial, coefficients in ascending degree order."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        coeffs = tuple(int(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if len(coeffs) < 2:
            raise UsageError("polynomial degree must be at least 1")
        if coeffs[-1] == 0:
            raise UsageError("leading coefficient must be nonzero")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, n: int) -> int:
        v = 0
        for c in reversed(self.coeffs):
            v = v * n + c
        return v

    def evaluate_range(self, start: int, stop: int) -> list[int]:
        """Values at start..stop inclusive, in exact integer arithmetic."""
        return [self(n) for n in range(start, stop + 1)]

    def label(self) -> str:
        return ",".join(str(c) for c in self.coeffs)


@dataclass(frozen=True)
class FactorSieve:
    """Smallest-prime-factor table for 2..limit plus the sieved prime list."""

    limit: int
    spf: np.ndarray = field(repr=False)
    primes: np.ndarray = field(repr=False)

    @property
    def factorable_bound(self) -> int:
        return self.limit * self.limit


@njit(cache=True)
def _linear_sieve(limit, prime_cap):
    spf = np.zeros(limit + 1, dtype=np.uint32)
    if limit >= 1:
        spf[1] = 1
    primes = np.empty(prime_cap, dtype=np.uint32)
    cnt = 0
    for i in range(2, limit + 1):
        if spf[i] == 0:
            spf[i] = i
            primes[cnt] = i
            cnt += 1
        j = 0
        while j < cnt:
            p = np.int64(primes[j])
            if p > np.int64(spf[i]) or i * p > limit:
                break
            spf[i * p] = primes[j]
            j += 1
    return spf, primes[:cnt].copy()


def _prime_count_bound(limit: int) -> int:
    if limit < 17:
        return 16
    return int(1.26 * limit / math.log(limit)) + 16


def build_sieve(limit: int, cap: int = DEFAULT_LIMIT_CAP) -> FactorSieve:
    """Build the spf table for 2..limit.

    Raises UsageError for limit < 2 and ResourceError past the memory cap
    (default 2e8 entries).
    """
    limit = int(limit)
    if limit < 2:
        raise UsageError(f"sieve limit must be >= 2, got {limit}")
    if limit > cap:
        raise ResourceError(
            f"sieve limit {limit} exceeds configured cap {cap}")
    spf, primes = _linear_sieve(limit, _prime_count_bound(limit))
    return FactorSieve(limit=limit, spf=spf, primes=primes)


def _check_value(sieve: FactorSieve, n: int) -> int:
    n = int(n)
    if n < 1 or n > sieve.factorable_bound:
        raise UsageError(
            f"value {n} outside factorable range [1, {sieve.factorable_bound}]")
    return n


def factorize(sieve: FactorSieve, n: int) -> list[tuple[int, int]]:
    """Prime factorization of n as (prime, exponent) pairs, ascending.

    Values above the sieve limit (up to limit**2) use trial division by the
    sieved primes; the cofactor left after that is prime.
    """
    n = _check_value(sieve, n)
    out: list[tuple[int, int]] = []
    if n <= sieve.limit:
        spf = sieve.spf
        m = n
        while m > 1:
            p = int(spf[m])
            a = 0
            while m % p == 0:
                m //= p
                a += 1
            out.append((p, a))
        return out
    m = n
    for p in sieve.primes:
        p = int(p)
        if p * p > m:
            break
        if m % p == 0:
            a = 0
            while m % p == 0:
                m //= p
                a += 1
            out.append((p, a))
    if m > 1:
        out.append((m, 1))
    return out


def largest_prime_factor(sieve: FactorSieve, n: int) -> int:
    """P+(n); the convention P+(1) = 1 keeps degenerate slices representable."""
    n = _check_value(sieve, n)
    if n == 1:
        return 1
    return factorize(sieve, n)[-1][0]


def omega_big(sieve: FactorSieve, n: int) -> int:
    """Number of prime factors counted with multiplicity."""
    n = _check_value(sieve, n)
    return sum(a for _, a in factorize(sieve, n))


def squarefree_kernel(sieve: FactorSieve, n: int) -> int:
    """Product of the primes dividing n to an odd power."""
    n = _check_value(sieve, n)
    k = 1
    for p, a in factorize(sieve, n):
        if a & 1:
            k *= p
    return k


def is_squarefree(sieve: FactorSieve, n: int) -> bool:
    return squarefree_kernel(sieve, n) == n


def tau3(sieve: FactorSieve, n: int) -> int:
    """3-fold divisor function: product of C(a+2, 2) over prime powers."""
    n = _check_value(sieve, n)
    t = 1
    for _, a in factorize(sieve, n):
        t *= (a + 1) * (a + 2) // 2
    return t


# ---------------------------------------------------------------------------
# bulk kernels


@njit(cache=True)
def _bulk_stats(values, spf, primes, limit):
    n = values.shape[0]
    pplus = np.empty(n, dtype=np.int64)
    omega = np.zeros(n, dtype=np.int64)
    sqfree = np.ones(n, dtype=np.uint8)
    kern = np.ones(n, dtype=np.int64)
    for i in range(n):
        v = values[i]
        if v <= 0:
            raise ValueError("values must be positive")
        if v == 1:
            pplus[i] = 1
            continue
        m = v
        last = np.int64(1)
        if v <= limit:
            while m > 1:
                p = np.int64(spf[m])
                a = 0
                while m % p == 0:
                    m //= p
                    a += 1
                omega[i] += a
                if a & 1:
                    kern[i] *= p
                if a > 1:
                    sqfree[i] = 0
                last = p
        else:
            for j in range(primes.shape[0]):
                p = np.int64(primes[j])
                if p * p > m:
                    break
                if m % p == 0:
                    a = 0
                    while m % p == 0:
                        m //= p
                        a += 1
                    omega[i] += a
                    if a & 1:
                        kern[i] *= p
                    if a > 1:
                        sqfree[i] = 0
                    last = p
            if m > 1:
                omega[i] += 1
                kern[i] *= m
                last = m
        pplus[i] = last
    return pplus, omega, sqfree, kern


def bulk_stats(sieve: FactorSieve, values: np.ndarray):
    """Vectorized (P+, Omega, squarefree flag, kernel) for an int64 array."""
    values = np.ascontiguousarray(values, dtype=np.int64)
    if values.size and (values.max(initial=1) > sieve.factorable_bound):
        raise UsageError("value exceeds the sieve's factorable range")
    return _bulk_stats(values, sieve.spf, sieve.primes, sieve.limit)


@njit(cache=True)
def _bulk_factor_csr(values, spf, primes, limit):
    n = values.shape[0]
    counts = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        v = values[i]
        m = v
        c = 0
        if v <= limit:
            while m > 1:
                p = np.int64(spf[m])
                while m % p == 0:
                    m //= p
                c += 1
        else:
            for j in range(primes.shape[0]):
                p = np.int64(primes[j])
                if p * p > m:
                    break
                if m % p == 0:
                    while m % p == 0:
                        m //= p
                    c += 1
            if m > 1:
                c += 1
        counts[i + 1] = c
    indptr = np.cumsum(counts)
    nnz = indptr[n]
    prime_col = np.empty(nnz, dtype=np.int64)
    exp_col = np.empty(nnz, dtype=np.int64)
    for i in range(n):
        v = values[i]
        m = v
        w = indptr[i]
        if v <= limit:
            while m > 1:
                p = np.int64(spf[m])
                a = 0
                while m % p == 0:
                    m //= p
                    a += 1
                prime_col[w] = p
                exp_col[w] = a
                w += 1
        else:
            for j in range(primes.shape[0]):
                p = np.int64(primes[j])
                if p * p > m:
                    break
                if m % p == 0:
                    a = 0
                    while m % p == 0:
                        m //= p
                        a += 1
                    prime_col[w] = p
                    exp_col[w] = a
                    w += 1
            if m > 1:
                prime_col[w] = m
                exp_col[w] = 1
                w += 1
    return indptr, prime_col, exp_col


def bulk_factor_csr(sieve: FactorSieve, values: np.ndarray):
    """Distinct-prime factorizations of an int64 array in CSR layout.

    Returns (indptr, primes, exponents): element i owns slots
    indptr[i]:indptr[i+1].
    """
    values = np.ascontiguousarray(values, dtype=np.int64)
    if values.size and (values.max(initial=1) > sieve.factorable_bound):
        raise UsageError("value exceeds the sieve's factorable range")
    if values.size and values.min(initial=1) < 1:
        raise UsageError("values must be positive")
    return _bulk_factor_csr(values, sieve.spf, sieve.primes, sieve.limit)


# ---------------------------------------------------------------------------
# counting lemmas


def tau3_interval_sum(sieve: FactorSieve, Q: PolySpec, N: int, H: int) -> int:
    """Exact sum of tau3(|Q(n)|) over N < n <= N+H."""
    if H < 1:
        raise UsageError("H must be >= 1")
    vals = Q.evaluate_range(N + 1, N + H)
    out = []
    for n, v in zip(range(N + 1, N + H + 1), vals):
        if v == 0:
            raise UsageError(f"Q({n}) = 0 inside the summation range")
        v = abs(v)
        if v > sieve.factorable_bound:
            raise UsageError(
                f"|Q({n})| = {v} exceeds the sieve's factorable range")
        out.append(v)
    arr = np.asarray(out, dtype=np.int64)
    indptr, _, exps = bulk_factor_csr(sieve, arr)
    total = 0
    for i in range(arr.size):
        t = 1
        for a in exps[indptr[i]:indptr[i + 1]]:
            t *= (a + 1) * (a + 2) // 2
        total += t
    return total


@njit(cache=True)
def _psi_smooth(N, y, spf):
    count = 1  # n = 1
    for n in range(2, N + 1):
        m = n
        ok = True
        while m > 1:
            p = np.int64(spf[m])
            if p > y:
                ok = False
                break
            m //= p
        if ok:
            count += 1
    return count


def psi_smooth(sieve: FactorSieve, N: int, y: int) -> int:
    """#{n <= N : P+(n) <= y}, counting n = 1."""
    N, y = int(N), int(y)
    if N < 1 or N > sieve.limit:
        raise UsageError("N outside sieve range")
    if y < 1:
        raise UsageError("y must be >= 1")
    if N == 1:
        return 1
    return int(_psi_smooth(N, y, sieve.spf))


def hmyrova_curve(N: int, y: int) -> float:
    """Comparison value N*(e/u)^u with u = log N / log y (natural logs)."""
    if N < 1:
        raise UsageError("N must be >= 1")
    if N == 1:
        return 1.0
    if y <= 1:
        return 0.0
    u = math.log(N) / math.log(y)
    if u == 0.0:
        return float(N)
    return N * (math.e / u) ** u


def psi_poly_smooth(sieve: FactorSieve, P: PolySpec, N: int, y: int
                    ) -> tuple[int, float]:
    """#{n <= N : P(n) is y-smooth} plus the comparison curve value.

    The curve is returned alongside, never asserted: it tracks an asymptotic
    upper-bound shape, not a pointwise bound.
    """
    N, y = int(N), int(y)
    if N < 1:
        raise UsageError("N must be >= 1")
    vals = P.evaluate_range(1, N)
    for n, v in zip(range(1, N + 1), vals):
        if v <= 0:
            raise UsageError(f"P({n}) = {v} is not positive")
        if v > sieve.factorable_bound:
            raise UsageError(f"P({n}) exceeds the sieve's factorable range")
    arr = np.asarray(vals, dtype=np.int64)
    pplus, _, _, _ = bulk_stats(sieve, arr)
    count = int(np.count_nonzero(pplus <= y))
    return count, hmyrova_curve(N, y)


def count_omega_exceed(sieve: FactorSieve, N: int, H: int, eps: float
                       ) -> tuple[int, float]:
    """Count of n in (N-H, N] with Omega(n) > (1+eps)*loglog N.

    Also returns eps' = (1+eps)*log(1+eps) - eps, the exponent this count
    decays with.
    """
    N, H = int(N), int(H)
    if not (0 < H <= N <= sieve.limit):
        raise UsageError("need 0 < H <= N <= limit")
    if eps <= 0:
        raise UsageError("eps must be positive")
    if N <= math.e:
        raise UsageError("N must exceed e so loglog N is positive")
    threshold = (1.0 + eps) * math.log(math.log(N))
    values = np.arange(N - H + 1, N + 1, dtype=np.int64)
    _, omega, _, _ = bulk_stats(sieve, values)
    count = int(np.count_nonzero(omega > threshold))
    eps_prime = (1.0 + eps) * math.log1p(eps) - eps
    return count, eps_prime


def count_squarefree_rough(sieve: FactorSieve, N: int, H: int, alpha: float
                           ) -> int:
    """#{n in (N-H, N] : n squarefree and P+(n) > N**alpha}."""
    N, H = int(N), int(H)
    if not (0 < H <= N <= sieve.limit):
        raise UsageError("need 0 < H <= N <= limit")
    if not (0.0 <= alpha <= 1.0):
        raise UsageError("alpha must lie in [0, 1]")
    floor = N ** alpha
    values = np.arange(N - H + 1, N + 1, dtype=np.int64)
    pplus, _, sqfree, _ = bulk_stats(sieve, values)
    return int(np.count_nonzero((sqfree == 1) & (pplus > floor)))


# ---------------------------------------------------------------------------
# binary cache

def save_sieve(sieve: FactorSieve, path: str | os.PathLike) -> None:
    """Write the cache: magic, version (u32 LE), limit (u64 LE), spf[2..limit]
    as u32 LE."""
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<I", _CACHE_VERSION))
        fh.write(struct.pack("<Q", sieve.limit))
        fh.write(np.ascontiguousarray(sieve.spf[2:], dtype="<u4").tobytes())


def load_sieve(path: str | os.PathLike, spot_checks: int = 1000) -> FactorSieve:
    """Read a cache written by save_sieve, validating header and sampling the
    spf-divides-n invariant on ``spot_checks`` deterministic entries."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _CACHE_MAGIC:
            raise ConsistencyError(f"bad cache magic {magic!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != _CACHE_VERSION:
            raise ConsistencyError(f"unsupported cache version {version}")
        (limit,) = struct.unpack("<Q", fh.read(8))
        body = fh.read()
    expected = (limit - 1) * 4
    if len(body) != expected:
        raise ConsistencyError(
            f"cache body has {len(body)} bytes, expected {expected}")
    spf = np.empty(limit + 1, dtype=np.uint32)
    spf[0] = 0
    spf[1] = 1
    spf[2:] = np.frombuffer(body, dtype="<u4")
    n_checks = min(spot_checks, limit - 1)
    for j in range(n_checks):
        n = 2 + hash64_int(0xC0FFEE, j) % (limit - 1)
        p = int(spf[n])
        if p < 2 or p > n or n % p != 0:
            raise ConsistencyError(
                f"cache spot check failed at n={n}: spf={p}")
    primes = np.flatnonzero(
        spf[: limit + 1] == np.arange(limit + 1, dtype=np.uint32))
    primes = primes[primes >= 2].astype(np.uint32)
    return FactorSieve(limit=int(limit), spf=spf, primes=primes)

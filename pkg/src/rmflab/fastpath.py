"""Streaming evaluator for Rademacher sums over products of distinct linear
factors, all Monte Carlo trials at once.

Values P(n) = prod(a_j*n + b_j) are factored block by block with the primes
up to sqrt(max piece value); each surviving n contributes the XOR of its
primes' per-trial sign masks (64 trials per machine word), accumulated in a
carry-save vertical counter.  One pass over n <= max scale therefore yields
every trial's normalized partial sum at every checkpoint, at a cost that is
independent of the trial count up to word width.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

from .arith import PolySpec
from .errors import UsageError
from .hashing import GOLD, mix64_int, trial_seeds

U64 = np.uint64

_COUNTER_DEPTH = 20


def linear_pieces(poly: PolySpec) -> list[tuple[int, int]] | None:
    """Distinct positive linear factors (a, b) with unit content, or None
    when the polynomial does not qualify for the streaming path."""
    import sympy

    x = sympy.symbols("x")
    expr = sum(c * x ** i for i, c in enumerate(poly.coeffs))
    coeff, factors = sympy.factor_list(sympy.Poly(expr, x))
    if coeff != 1:
        return None
    pieces: list[tuple[int, int]] = []
    for f, mult in factors:
        if mult != 1 or f.degree() != 1:
            return None
        b, a = int(f.nth(0)), int(f.nth(1))
        if a < 1 or a + b < 1:
            return None
        pieces.append((a, b))
    return pieces or None


def _resultant_primes(pieces) -> list[int]:
    out: set[int] = set()
    for i in range(len(pieces)):
        for j in range(i + 1, len(pieces)):
            a1, b1 = pieces[i]
            a2, b2 = pieces[j]
            r = abs(a1 * b2 - a2 * b1)
            if r == 0:
                raise UsageError("repeated linear factor")
            m = r
            d = 2
            while d * d <= m:
                if m % d == 0:
                    out.add(d)
                    while m % d == 0:
                        m //= d
                d += 1
            if m > 1:
                out.add(m)
    return sorted(out)


def _inv_mod(a: int, p: int) -> int:
    return pow(a % p, p - 2, p)


@njit(cache=True, parallel=True)
def _build_masks(primes, keymix, nw, T):
    masks = np.zeros((primes.shape[0], nw), dtype=np.uint64)
    for i in prange(primes.shape[0]):
        x = U64(primes[i]) * U64(GOLD)
        for w in range(nw):
            word = U64(0)
            hi = min(64, T - 64 * w)
            for b in range(hi):
                z = x ^ keymix[64 * w + b]
                z ^= z >> U64(30)
                z *= U64(0xBF58476D1CE4E5B9)
                z ^= z >> U64(27)
                z *= U64(0x94D049BB133111EB)
                z ^= z >> U64(31)
                word |= (z >> U64(63)) << U64(b)
            masks[i, w] = word
    return masks


@njit(cache=True)
def _flush(vc, base, nw, T):
    for t in range(T):
        w = t >> 6
        bit = U64(t & 63)
        val = 0
        for d in range(vc.shape[0]):
            val += int((vc[d, w] >> bit) & U64(1)) << d
        base[t] += val
    for d in range(vc.shape[0]):
        for w in range(nw):
            vc[d, w] = U64(0)


@njit(cache=True)
def _scan(pieces_a, pieces_b, small_primes, roots, special_primes,
          special_idx, masks, pi_of, checkpoints, nw, T):
    M = checkpoints[-1]
    k = checkpoints.shape[0]
    npieces = pieces_a.shape[0]
    counts = np.zeros(k, dtype=np.int64)
    minus = np.zeros((k, T), dtype=np.int64)
    vc = np.zeros((_COUNTER_DEPTH, nw), dtype=np.uint64)
    base = np.zeros(T, dtype=np.int64)
    adds = 0
    live = 0
    cp = 0
    B = 1 << 15
    work = np.empty((npieces, B), dtype=np.int64)
    accm = np.zeros((B, nw), dtype=np.uint64)
    excl = np.zeros(B, dtype=np.uint8)
    lo = 1
    while lo <= M:
        hi = min(lo + B, M + 1)
        bs = hi - lo
        for i in range(bs):
            excl[i] = 0
            for w in range(nw):
                accm[i, w] = U64(0)
        for j in range(npieces):
            a = pieces_a[j]
            b = pieces_b[j]
            for i in range(bs):
                work[j, i] = a * (lo + i) + b
        # primes shared between pieces: total exponent decides
        for si in range(special_primes.shape[0]):
            p = special_primes[si]
            mi = special_idx[si]
            for i in range(bs):
                e = 0
                for j in range(npieces):
                    while work[j, i] % p == 0:
                        work[j, i] //= p
                        e += 1
                if e >= 2:
                    excl[i] = 1
                elif e == 1:
                    for w in range(nw):
                        accm[i, w] ^= masks[mi, w]
        # remaining small primes, piece by piece
        for j in range(npieces):
            for pj in range(small_primes.shape[0]):
                r = roots[j, pj]
                if r < 0:
                    continue
                p = small_primes[pj]
                start = (r - lo) % p
                mi = pi_of[p]
                for i in range(start, bs, p):
                    e = 0
                    while work[j, i] % p == 0:
                        work[j, i] //= p
                        e += 1
                    if e >= 2:
                        excl[i] = 1
                    else:
                        for w in range(nw):
                            accm[i, w] ^= masks[mi, w]
        # leftover cofactors are prime
        for j in range(npieces):
            for i in range(bs):
                m = work[j, i]
                if m > 1:
                    mi = pi_of[m]
                    for w in range(nw):
                        accm[i, w] ^= masks[mi, w]
        for i in range(bs):
            n = lo + i
            if excl[i] == 0:
                live += 1
                for d in range(_COUNTER_DEPTH):
                    any_carry = False
                    for w in range(nw):
                        tmp = vc[d, w] & accm[i, w]
                        vc[d, w] ^= accm[i, w]
                        accm[i, w] = tmp
                        if tmp != U64(0):
                            any_carry = True
                    if not any_carry:
                        break
                adds += 1
                if adds >= (1 << _COUNTER_DEPTH) - 1:
                    _flush(vc, base, nw, T)
                    adds = 0
            while cp < k and n == checkpoints[cp]:
                _flush(vc, base, nw, T)
                adds = 0
                counts[cp] = live
                for t in range(T):
                    minus[cp, t] = base[t]
                cp += 1
        lo = hi
    return counts, minus


def rademacher_linear_scan(pieces: list[tuple[int, int]],
                           checkpoints, trials: int, master_seed: int
                           ) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial normalized sums at each checkpoint for squarefree-filtered
    Rademacher sums over prod(a*n+b).

    Returns (sizes, sums): sizes[l] counts the surviving n <= checkpoint l,
    sums is (trials, k).  Signs match the generic engine exactly: trial i
    uses seed hash(master_seed, i) and the sign bit of each prime's hash.
    """
    cps = np.asarray(sorted(int(c) for c in checkpoints), dtype=np.int64)
    if cps.size == 0 or cps[0] < 1:
        raise UsageError("checkpoints must be positive")
    M = int(cps[-1])
    max_val = max(a * M + b for a, b in pieces)
    # primality table and prime indexing up to the largest piece value
    mask = np.ones(max_val + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, math.isqrt(max_val) + 1):
        if mask[p]:
            mask[p * p::p] = False
    primes = np.flatnonzero(mask).astype(np.int64)
    pi_of = np.zeros(max_val + 1, dtype=np.uint32)
    pi_of[primes] = np.arange(primes.size, dtype=np.uint32)
    del mask
    root_bound = math.isqrt(max_val)
    small = primes[primes <= root_bound]
    special = _resultant_primes(pieces)
    if special and special[-1] > root_bound:
        raise UsageError("shared-prime bound exceeds the sieving range")
    special_set = set(special)
    roots = np.empty((len(pieces), small.size), dtype=np.int64)
    for j, (a, b) in enumerate(pieces):
        for pj, p in enumerate(small):
            p = int(p)
            if p in special_set or a % p == 0:
                roots[j, pj] = -1
            else:
                roots[j, pj] = (-b * _inv_mod(a, p)) % p
    seeds = trial_seeds(master_seed, trials)
    keymix = np.array([mix64_int(int(s) + GOLD) for s in seeds],
                      dtype=np.uint64)
    nw = (trials + 63) // 64
    masks = _build_masks(primes, keymix, nw, trials)
    special_arr = np.asarray(special, dtype=np.int64)
    special_idx = np.asarray([int(pi_of[p]) for p in special],
                             dtype=np.int64)
    counts, minus = _scan(
        np.asarray([a for a, _ in pieces], dtype=np.int64),
        np.asarray([b for _, b in pieces], dtype=np.int64),
        small.astype(np.int64), roots, special_arr, special_idx,
        masks, pi_of, cps, nw, trials)
    sizes = counts.astype(np.int64)
    if np.any(sizes == 0):
        raise UsageError("a checkpoint has no surviving elements")
    sums = (sizes[None, :] - 2.0 * minus.T) / np.sqrt(sizes)[None, :]
    return sizes, sums

"""Rademacher / Steinhaus random multiplicative functions and the twisted
sums built from them.

A sample is a pure function of (model, seed): the value at a prime comes from
the keyed hash of the prime, so evaluation is lazy, stateless and identical
across platforms and worker counts.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .arith import FactorSieve, factorize
from .errors import UsageError
from .hashing import (hash64_array, hash64_int, rademacher_signs,
                      steinhaus_angles, trial_seeds)
from .sets import PreparedSet, prepare_set

SQRT2 = math.sqrt(2.0)


class RmfModel(Enum):
    RADEMACHER = "rademacher"
    STEINHAUS = "steinhaus"


class TwistSelector(Enum):
    IDENTITY = "identity"
    SQRT2_RE = "sqrt2re"
    SQRT2_IM = "sqrt2im"


def default_twist(model: RmfModel) -> TwistSelector:
    if model is RmfModel.RADEMACHER:
        return TwistSelector.IDENTITY
    return TwistSelector.SQRT2_RE


def validate_twist(model: RmfModel, twist: TwistSelector) -> TwistSelector:
    if twist is TwistSelector.IDENTITY and model is not RmfModel.RADEMACHER:
        raise UsageError("identity twist is only defined for Rademacher")
    if twist is not TwistSelector.IDENTITY and model is RmfModel.RADEMACHER:
        raise UsageError("sqrt2 twists are only defined for Steinhaus")
    return twist


@dataclass(frozen=True)
class RmfSample:
    """One realization of the random function, keyed by a 64-bit seed."""

    model: RmfModel
    master_seed: int

    def value_at_prime(self, p: int):
        h = hash64_int(self.master_seed, p)
        if self.model is RmfModel.RADEMACHER:
            return 1 if (h >> 63) == 0 else -1
        theta = 2.0 * math.pi * ((h >> 11) * 2.0 ** -53)
        return cmath.exp(1j * theta)

    def prime_signs(self, primes: np.ndarray) -> np.ndarray:
        return rademacher_signs(self.master_seed, primes)

    def prime_angles(self, primes: np.ndarray) -> np.ndarray:
        return steinhaus_angles(self.master_seed, primes)


def f_at(sample: RmfSample, sieve: FactorSieve, n: int):
    """f(n): multiplicative over the factorization; f(1) = 1.

    Rademacher is supported on squarefree integers only, so non-squarefree n
    is a caller error there.
    """
    n = int(n)
    if n == 1:
        return 1 if sample.model is RmfModel.RADEMACHER else complex(1.0)
    fac = factorize(sieve, n)
    if sample.model is RmfModel.RADEMACHER:
        if any(a > 1 for _, a in fac):
            raise UsageError(
                f"Rademacher f is undefined at non-squarefree n={n}")
        v = 1
        for p, _ in fac:
            v *= sample.value_at_prime(p)
        return v
    v = complex(1.0)
    for p, a in fac:
        v *= sample.value_at_prime(p) ** a
    return v


def apply_twist(z, twist: TwistSelector) -> float:
    if twist is TwistSelector.IDENTITY:
        return float(z)
    if twist is TwistSelector.SQRT2_RE:
        return SQRT2 * z.real
    return SQRT2 * z.imag


def _as_prepared(sieve: FactorSieve, aset) -> PreparedSet:
    if isinstance(aset, PreparedSet):
        return aset
    return prepare_set(sieve, aset)


def _check_model_set(model: RmfModel, prep: PreparedSet) -> None:
    if model is RmfModel.RADEMACHER and not prep.aset.squarefree_only:
        raise UsageError(
            "Rademacher sums need the squarefree filter on the set "
            f"({prep.label()})")


class TrialEngine:
    """Vectorized evaluator of twisted sums over one prepared set.

    Trials are batched: a batch hashes the set's distinct primes for each
    seed, reduces per-element products/angles through the CSR factorization,
    and emits either full sums or prefix sums at checkpoint positions.
    """

    def __init__(self, sieve: FactorSieve, prep: PreparedSet, model: RmfModel,
                 twist: TwistSelector | None = None):
        _check_model_set(model, prep)
        self.model = model
        self.twist = validate_twist(model, twist or default_twist(model))
        self.prep = prep
        indptr, primes, pcol, exps = prep.factor_csr(sieve)
        self.indptr = indptr
        self.primes = primes
        self.pcol = pcol
        self.exps = exps.astype(np.float64)
        self.empty_rows = indptr[:-1] == indptr[1:]
        nnz = int(pcol.size)
        self.batch = max(1, int(4_000_000 // max(nnz, 1)))

    def _tf_batch(self, seeds: np.ndarray) -> np.ndarray:
        """(B, n_elements) matrix of twisted f values."""
        # the reduced array carries one trailing zero so a start index of
        # nnz (an empty row at the end, i.e. a value-1 element) stays legal
        # for reduceat; empty rows are overwritten afterwards anyway
        starts = self.indptr[:-1]
        if self.model is RmfModel.RADEMACHER:
            out = np.empty((seeds.size, self.prep.size))
            buf = np.zeros(self.pcol.size + 1, dtype=np.int64)
            for r, s in enumerate(seeds):
                b = (hash64_array(int(s), self.primes) >> np.uint64(63))
                buf[:-1] = b[self.pcol]
                par = np.add.reduceat(buf, starts)
                par[self.empty_rows] = 0
                out[r] = 1.0 - 2.0 * (par & 1)
            return out
        out = np.empty((seeds.size, self.prep.size))
        buf = np.zeros(self.pcol.size + 1)
        for r, s in enumerate(seeds):
            theta = steinhaus_angles(int(s), self.primes)
            buf[:-1] = theta[self.pcol] * self.exps
            ang = np.add.reduceat(buf, starts)
            ang[self.empty_rows] = 0.0
            if self.twist is TwistSelector.SQRT2_RE:
                out[r] = SQRT2 * np.cos(ang)
            else:
                out[r] = SQRT2 * np.sin(ang)
        return out

    def sums(self, seeds: np.ndarray, checkpoints: np.ndarray | None = None,
             normalized: bool = True) -> np.ndarray:
        """Twisted sums per trial.

        With ``checkpoints`` (element-count cutoffs, ascending) the result is
        (T, k): prefix sums over the first c elements, each normalized by
        sqrt(c) when ``normalized``.  Without, it is (T,) full sums divided
        by sqrt(size) when ``normalized``.
        """
        seeds = np.asarray(seeds, dtype=np.uint64)
        n = self.prep.size
        if n == 0:
            shape = (seeds.size,) if checkpoints is None \
                else (seeds.size, len(checkpoints))
            return np.zeros(shape)
        if checkpoints is None:
            out = np.empty(seeds.size)
            norm = math.sqrt(n) if (normalized and n) else 1.0
            for lo in range(0, seeds.size, self.batch):
                chunk = seeds[lo:lo + self.batch]
                tf = self._tf_batch(chunk)
                out[lo:lo + chunk.size] = tf.sum(axis=1) / norm
            return out
        cps = np.asarray(checkpoints, dtype=np.int64)
        if cps.size and (cps.min() < 0 or cps.max() > n):
            raise UsageError("checkpoint out of range")
        norms = np.sqrt(np.maximum(cps, 1)) if normalized else np.ones(cps.size)
        out = np.empty((seeds.size, cps.size))
        for lo in range(0, seeds.size, self.batch):
            chunk = seeds[lo:lo + self.batch]
            tf = self._tf_batch(chunk)
            csum = np.cumsum(tf, axis=1)
            padded = np.concatenate(
                [np.zeros((chunk.size, 1)), csum], axis=1)
            out[lo:lo + chunk.size] = padded[:, cps] / norms
        return out


def twisted_sum(sample: RmfSample, sieve: FactorSieve, aset,
                twist: TwistSelector | None = None) -> float:
    """Sum of twisted f over the set's values; empty set gives 0."""
    prep = _as_prepared(sieve, aset)
    _check_model_set(sample.model, prep)
    twist = validate_twist(sample.model, twist or default_twist(sample.model))
    if prep.size == 0:
        return 0.0
    engine = TrialEngine(sieve, prep, sample.model, twist)
    return float(engine.sums(np.asarray([sample.master_seed], dtype=np.uint64),
                             normalized=False)[0])


def normalized_sum(sample: RmfSample, sieve: FactorSieve, aset,
                   twist: TwistSelector | None = None) -> float:
    """Twisted sum divided by sqrt(set size)."""
    prep = _as_prepared(sieve, aset)
    if prep.size == 0:
        raise UsageError("normalized sum over an empty set")
    return twisted_sum(sample, sieve, prep, twist) / math.sqrt(prep.size)


def martingale_slices(sieve: FactorSieve, aset) -> dict[int, PreparedSet]:
    """Partition of the set keyed by P+(value); key 1 holds value-1 elements."""
    prep = _as_prepared(sieve, aset)
    out = {}
    for p, pos in prep.slices_by_top_prime().items():
        out[p] = PreparedSet(
            aset=prep.aset,
            indices=prep.indices[pos],
            values=prep.values[pos],
            pplus=prep.pplus[pos],
            omega=prep.omega[pos],
            sqfree=prep.sqfree[pos],
            kernel=prep.kernel[pos],
        )
    return out


def m_values(sample: RmfSample, sieve: FactorSieve,
             slices: dict[int, PreparedSet],
             twist: TwistSelector | None = None) -> dict[int, float]:
    """Martingale increments M_p: per-slice twisted sums over sqrt(total size).

    Summing the returned values over p reproduces the normalized sum of the
    whole set.
    """
    total = sum(s.size for s in slices.values())
    if total == 0:
        raise UsageError("empty slice partition")
    root = math.sqrt(total)
    return {p: twisted_sum(sample, sieve, s, twist) / root
            for p, s in slices.items()}


@dataclass
class ConditionalSplit:
    """Rough part (elements with P+ > threshold, with cofactors) and the
    smooth remainder."""

    threshold: int
    rough: dict[int, list[tuple[int, int, int]]]  # p -> (index, value, cofactor)
    smooth: PreparedSet
    unique_large_prime: bool


def conditional_decompose(sieve: FactorSieve, aset, P: int) -> ConditionalSplit:
    """Split the set at top-prime threshold P.

    Each rough element is recorded under its top prime with cofactor
    value/P+(value).  ``unique_large_prime`` reports whether every rough
    element's top prime divides it exactly once, which is automatic whenever
    P >= sqrt(max value).
    """
    prep = _as_prepared(sieve, aset)
    P = int(P)
    rough_mask = prep.pplus > P
    rough: dict[int, list[tuple[int, int, int]]] = {}
    unique = True
    for pos in np.flatnonzero(rough_mask):
        p = int(prep.pplus[pos])
        v = int(prep.values[pos])
        cof = v // p
        if cof % p == 0:
            unique = False
        rough.setdefault(p, []).append((int(prep.indices[pos]), v, cof))
    keep = ~rough_mask
    smooth = PreparedSet(
        aset=prep.aset,
        indices=prep.indices[keep],
        values=prep.values[keep],
        pplus=prep.pplus[keep],
        omega=prep.omega[keep],
        sqfree=prep.sqfree[keep],
        kernel=prep.kernel[keep],
    )
    if prep.size and P * P >= int(prep.values.max()) and not unique:
        # cannot happen: p > P >= sqrt(max) forces p*p > value
        raise AssertionError("large-prime uniqueness violated unexpectedly")
    return ConditionalSplit(threshold=P, rough=rough, smooth=smooth,
                            unique_large_prime=unique)


def monte_carlo_sums(model: RmfModel, sieve: FactorSieve, aset,
                     twist: TwistSelector | None, trials: int,
                     master_seed: int, workers: int = 1) -> np.ndarray:
    """Normalized-sum realizations, one per trial.

    Trial i draws its own sample from seed hash(master_seed, i), so results
    are independent of batching, ordering and worker count.
    """
    if trials < 1:
        raise UsageError("trials must be >= 1")
    prep = _as_prepared(sieve, aset)
    if prep.size == 0:
        raise UsageError("Monte Carlo over an empty set")
    engine = TrialEngine(sieve, prep, model, twist)
    seeds = trial_seeds(master_seed, trials)
    if workers <= 1:
        return engine.sums(seeds)
    out = np.empty(trials)
    bounds = np.linspace(0, trials, workers + 1, dtype=int)

    def run(w):
        lo, hi = bounds[w], bounds[w + 1]
        if hi > lo:
            out[lo:hi] = engine.sums(seeds[lo:hi])

    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(run, range(workers)))
    return out

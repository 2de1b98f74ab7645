"""Finite index-value sets the sums range over: short intervals and
polynomial images, with squarefree / top-prime / Omega filters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arith import FactorSieve, PolySpec, bulk_factor_csr, bulk_stats
from .errors import UsageError


@dataclass(frozen=True)
class Interval:
    """Integers in (N-H, N]; the index of an element is the element itself."""

    N: int
    H: int

    def __post_init__(self):
        if not (0 < self.H <= self.N):
            raise UsageError(f"need 0 < H <= N, got N={self.N}, H={self.H}")

    def label(self) -> str:
        return f"interval:{self.N},{self.H}"


@dataclass(frozen=True)
class PolyImage:
    """Values P(n) for 1 <= n <= N; indices n with P(n) <= 0 are dropped."""

    poly: PolySpec
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise UsageError("PolyImage needs N >= 1")

    def label(self) -> str:
        return f"poly:{self.poly.label()}:{self.N}"


@dataclass(frozen=True)
class ArithSet:
    kind: Interval | PolyImage
    squarefree_only: bool = False
    top_prime_floor: int | None = None
    omega_ceiling: int | None = None

    def label(self) -> str:
        tags = []
        if self.squarefree_only:
            tags.append("sqfree")
        if self.top_prime_floor is not None:
            tags.append(f"pfloor={self.top_prime_floor}")
        if self.omega_ceiling is not None:
            tags.append(f"omax={self.omega_ceiling}")
        base = self.kind.label()
        return base if not tags else base + "[" + ",".join(tags) + "]"


def _raw_pairs(aset: ArithSet) -> tuple[np.ndarray, np.ndarray]:
    kind = aset.kind
    if isinstance(kind, Interval):
        idx = np.arange(kind.N - kind.H + 1, kind.N + 1, dtype=np.int64)
        return idx, idx.copy()
    indices = []
    values = []
    for n in range(1, kind.N + 1):
        v = kind.poly(n)
        if v > 0:
            indices.append(n)
            values.append(v)
    return (np.asarray(indices, dtype=np.int64),
            np.asarray(values, dtype=np.int64))


def enumerate_set(sieve: FactorSieve, aset: ArithSet
                  ) -> tuple[np.ndarray, np.ndarray]:
    """All surviving (index, value) pairs, ascending by index."""
    prep = prepare_set(sieve, aset)
    return prep.indices, prep.values


@dataclass
class PreparedSet:
    """An enumerated set with its per-element factorization statistics."""

    aset: ArithSet
    indices: np.ndarray
    values: np.ndarray
    pplus: np.ndarray
    omega: np.ndarray
    sqfree: np.ndarray
    kernel: np.ndarray
    _csr: tuple | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return int(self.values.size)

    def label(self) -> str:
        return self.aset.label()

    def slices_by_top_prime(self) -> dict[int, np.ndarray]:
        """Element positions grouped by P+(value); keys ascending."""
        if self.size == 0:
            return {}
        order = np.argsort(self.pplus, kind="stable")
        sorted_p = self.pplus[order]
        cuts = np.flatnonzero(np.diff(sorted_p)) + 1
        starts = np.concatenate(([0], cuts))
        groups = np.split(order, cuts)
        return {int(sorted_p[s]): g for s, g in zip(starts, groups)}

    def factor_csr(self, sieve: FactorSieve):
        """CSR factorizations (indptr, prime-index, exponent) plus the
        distinct prime table, built once and cached."""
        if self._csr is None:
            indptr, pcol, exps = bulk_factor_csr(sieve, self.values)
            primes, inv = np.unique(pcol, return_inverse=True)
            self._csr = (indptr.astype(np.int64), primes.astype(np.uint64),
                         inv.astype(np.int64), exps.astype(np.int64))
        return self._csr


def explicit_set(sieve: FactorSieve, values, squarefree_only: bool = False
                 ) -> PreparedSet:
    """Ad-hoc set from explicit positive integers (index = value).

    Mostly useful for counting experiments on hand-picked sets; the values
    are sorted ascending and deduplicated.
    """
    vals = np.unique(np.asarray(sorted(int(v) for v in values),
                                dtype=np.int64))
    if vals.size == 0:
        raise UsageError("explicit set must be nonempty")
    if vals[0] < 1:
        raise UsageError("values must be positive")
    top = int(vals[-1])
    aset = ArithSet(Interval(top, top), squarefree_only=squarefree_only)
    pplus, omega, sqfree, kern = bulk_stats(sieve, vals)
    keep = (sqfree == 1) if squarefree_only else np.ones(vals.size, bool)
    return PreparedSet(aset=aset, indices=vals[keep], values=vals[keep],
                       pplus=pplus[keep], omega=omega[keep],
                       sqfree=sqfree[keep], kernel=kern[keep])


def prepare_set(sieve: FactorSieve, aset: ArithSet) -> PreparedSet:
    indices, values = _raw_pairs(aset)
    if values.size and int(values.max()) > sieve.factorable_bound:
        raise UsageError(
            f"set {aset.label()} has values beyond the sieve's factorable "
            f"range (limit**2 = {sieve.factorable_bound})")
    pplus, omega, sqfree, kern = bulk_stats(sieve, values)
    keep = np.ones(values.size, dtype=bool)
    if aset.squarefree_only:
        keep &= sqfree == 1
    if aset.top_prime_floor is not None:
        keep &= pplus > aset.top_prime_floor
    if aset.omega_ceiling is not None:
        keep &= omega <= aset.omega_ceiling
    return PreparedSet(
        aset=aset,
        indices=indices[keep],
        values=values[keep],
        pplus=pplus[keep],
        omega=omega[keep],
        sqfree=sqfree[keep],
        kernel=kern[keep],
    )

"""Exact solution counting for the fourth-moment equations and the closed-form
Gaussian-approximation bounds derived from those counts.

Two equation kinds are supported, matching the two random models:

* ``SQUARE_PRODUCT``: v1*v2*v3*v4 is a perfect square (Rademacher);
* ``RATIO_MATCH``: v1*v2 == v3*v4, slots 3 and 4 carrying the conjugated
  factors (Steinhaus).

The paired top-prime constraint ties each unconjugated slot to its
conjugated mate, so its slot pairing depends on the kind: (1,2)/(3,4) for
SQUARE_PRODUCT and (1,3)/(2,4) for RATIO_MATCH.  With the RATIO_MATCH
equation, pairing (1,2)/(3,4) instead would force all four top primes equal
and the quadratic-variation moment B could come out negative.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numba import njit, prange

from .arith import FactorSieve
from .errors import ResourceError, UsageError
from .sets import PreparedSet, prepare_set


class EquationKind(Enum):
    SQUARE_PRODUCT = "square"
    RATIO_MATCH = "ratio"


class TopPrimeConstraint(Enum):
    NONE = "none"
    PAIRED_TWO_TWO = "paired"
    ALL_EQUAL = "allequal"


DEFAULT_PAIR_BUDGET = 10_000_000_000


@dataclass
class SolutionTally:
    total: int
    trivial: int
    nontrivial: int
    per_pairing: dict[str, int]

    def __post_init__(self):
        if self.total != self.trivial + self.nontrivial:
            raise AssertionError("tally additivity violated")

    def to_json_dict(self) -> dict:
        return {"total": self.total, "trivial": self.trivial,
                "nontrivial": self.nontrivial,
                "per_pairing": dict(self.per_pairing)}


@dataclass
class EpsilonReport:
    eps1: float
    eps1prime: float
    eps2: float
    eps1_witness: tuple[int, int, int, int]
    eps1prime_witness: tuple[int, int, int, int]
    eps2_witness: tuple[int, int]

    def to_json_dict(self) -> dict:
        return {"eps1": self.eps1, "eps1prime": self.eps1prime,
                "eps2": self.eps2,
                "eps1_witness": list(self.eps1_witness),
                "eps1prime_witness": list(self.eps1prime_witness),
                "eps2_witness": list(self.eps2_witness)}


@dataclass
class CoefficientVector:
    c: tuple[float, ...]

    def __post_init__(self):
        self.c = tuple(float(x) for x in self.c)
        norm = sum(x * x for x in self.c)
        if abs(norm - 1.0) > 1e-12:
            raise UsageError(f"coefficients must have unit norm, got {norm}")

    def __len__(self) -> int:
        return len(self.c)


@dataclass
class CltDiagnostics:
    k: int
    eps1: float
    eps1prime: float
    eps2: float
    A: float | None = None
    B: float | None = None
    max_ratio: float = 0.0
    iii_b: bool = False

    def to_json_dict(self) -> dict:
        return {"k": self.k, "eps1": self.eps1, "eps1prime": self.eps1prime,
                "eps2": self.eps2, "A": self.A, "B": self.B,
                "max_ratio": self.max_ratio, "iii_b": self.iii_b}


def _as_prepared(sieve: FactorSieve, aset) -> PreparedSet:
    return aset if isinstance(aset, PreparedSet) else prepare_set(sieve, aset)


def _kern_combine(a: int, b: int) -> int:
    g = math.gcd(a, b)
    return (a // g) * (b // g)


def _slice_sizes(prep: PreparedSet) -> Counter:
    return Counter(int(p) for p in prep.pplus)


def _pair_cost(pa: PreparedSet, pb: PreparedSet, restricted: bool) -> int:
    if not restricted:
        return pa.size * pb.size
    sa, sb = _slice_sizes(pa), _slice_sizes(pb)
    return sum(n * sb.get(p, 0) for p, n in sa.items())


def _left_restricted(kind: EquationKind,
                     constraint: TopPrimeConstraint) -> bool:
    """Whether the (1,2) [and (3,4)] pair enumeration may skip pairs with
    mismatched top primes."""
    if constraint is TopPrimeConstraint.NONE:
        return False
    if kind is EquationKind.SQUARE_PRODUCT:
        return True  # pairing (1,2)/(3,4) lives inside each side
    return constraint is TopPrimeConstraint.ALL_EQUAL


def _pair_counter(pa: PreparedSet, pb: PreparedSet, kind: EquationKind,
                  constraint: TopPrimeConstraint) -> Counter:
    """Multiset of join keys over ordered pairs from (pa, pb).

    The key is built so that ``sum(left[k] * right[k])`` counts exactly the
    constrained solutions: the equation key (product or combined kernel)
    plus whatever top-prime data the constraint transports across sides.
    """
    ratio = kind is EquationKind.RATIO_MATCH
    restricted = _left_restricted(kind, constraint)
    out: Counter = Counter()
    va, vb = pa.values, pb.values
    ka, kb = pa.kernel, pb.kernel
    ta, tb = pa.pplus, pb.pplus
    if restricted:
        sb = {}
        for j in range(pb.size):
            sb.setdefault(int(tb[j]), []).append(j)
        for i in range(pa.size):
            p = int(ta[i])
            for j in sb.get(p, ()):
                eq = int(va[i]) * int(vb[j]) if ratio \
                    else _kern_combine(int(ka[i]), int(kb[j]))
                if constraint is TopPrimeConstraint.ALL_EQUAL:
                    out[(eq, p)] += 1
                else:
                    out[eq] += 1
        return out
    for i in range(pa.size):
        vi, ki, ti = int(va[i]), int(ka[i]), int(ta[i])
        for j in range(pb.size):
            eq = vi * int(vb[j]) if ratio else _kern_combine(ki, int(kb[j]))
            if constraint is TopPrimeConstraint.NONE:
                out[eq] += 1
            else:  # RATIO_MATCH paired (1,3)/(2,4): carry both top primes
                out[(eq, ti, int(tb[j]))] += 1
    return out


def _value_counter(prep: PreparedSet) -> Counter:
    return Counter(int(v) for v in prep.values)


def _match_by_value(pa: PreparedSet, pb: PreparedSet,
                    per_top_prime: bool = False):
    """Sum over common values of multiplicity products; optionally split by
    the value's top prime."""
    ca, cb = _value_counter(pa), _value_counter(pb)
    if not per_top_prime:
        return sum(m * cb.get(v, 0) for v, m in ca.items())
    tp = {int(v): int(p) for v, p in zip(pa.values, pa.pplus)}
    out: Counter = Counter()
    for v, m in ca.items():
        n = cb.get(v, 0)
        if n:
            out[tp[v]] += m * n
    return out


def _dot(c1, c2) -> int:
    if len(c2) < len(c1):
        c1, c2 = c2, c1
    return sum(n * c2.get(k, 0) for k, n in c1.items())


def _all_equal_count(preps) -> int:
    c = _value_counter(preps[0])
    for p in preps[1:]:
        nxt = _value_counter(p)
        c = Counter({v: m * nxt.get(v, 0) for v, m in c.items()
                     if nxt.get(v, 0)})
    return sum(c.values())


def _pairing_count(pa, pb, pc, pd, link_top_prime: bool) -> int:
    """Count tuples (a, b, a', b') with a=a' drawn from (pa, pc) and b=b'
    from (pb, pd); with ``link_top_prime`` the two common values must share
    their largest prime factor."""
    if not link_top_prime:
        return _match_by_value(pa, pc) * _match_by_value(pb, pd)
    left = _match_by_value(pa, pc, per_top_prime=True)
    right = _match_by_value(pb, pd, per_top_prime=True)
    return sum(n * right.get(p, 0) for p, n in left.items())


def _trivial_count(preps, kind: EquationKind,
                   constraint: TopPrimeConstraint) -> tuple[int, dict]:
    """Inclusion-exclusion count of tuples equal in value pairs under the
    kind's admissible pairings, restricted to the constraint."""
    p1, p2, p3, p4 = preps
    all_eq = _all_equal_count(preps)
    cons_all = constraint is TopPrimeConstraint.ALL_EQUAL
    cons_any = constraint is not TopPrimeConstraint.NONE
    per: dict[str, int] = {}
    if kind is EquationKind.RATIO_MATCH:
        # {v1=v3, v2=v4}: top primes already agree inside each matched pair
        per["13|24"] = _pairing_count(p1, p2, p3, p4, link_top_prime=cons_all)
        # {v1=v4, v2=v3}: the paired constraint crosses the two common values
        per["14|23"] = _pairing_count(p1, p2, p4, p3, link_top_prime=cons_any)
        total = per["13|24"] + per["14|23"] - all_eq
        return total, per
    per["12|34"] = _pairing_count(p1, p3, p2, p4, link_top_prime=cons_all)
    per["13|24"] = _pairing_count(p1, p2, p3, p4, link_top_prime=cons_any)
    per["14|23"] = _pairing_count(p1, p2, p4, p3, link_top_prime=cons_any)
    total = per["12|34"] + per["13|24"] + per["14|23"] - 2 * all_eq
    return total, per


def count_fourth_moment(sieve: FactorSieve, sets, kind: EquationKind,
                        constraint: TopPrimeConstraint = TopPrimeConstraint.NONE,
                        budget: int = DEFAULT_PAIR_BUDGET) -> SolutionTally:
    """Exact tally of constrained solutions over the four sets.

    Counting is hashed: ordered pairs from slots (1,2) and (3,4) are keyed by
    the equation invariant (value product, or combined squarefree kernel) and
    joined, so cost is pairs enumerated rather than tuples.
    """
    preps = [_as_prepared(sieve, s) for s in sets]
    if len(preps) != 4:
        raise UsageError("count_fourth_moment needs exactly four sets")
    restricted = _left_restricted(kind, constraint)
    cost_l = _pair_cost(preps[0], preps[1], restricted)
    cost_r = _pair_cost(preps[2], preps[3], restricted)
    if cost_l + cost_r > budget:
        raise ResourceError(
            f"pair enumeration needs {max(cost_l, cost_r)} operations on the "
            f"dominating side, over budget {budget}")
    left = _pair_counter(preps[0], preps[1], kind, constraint)
    right = _pair_counter(preps[2], preps[3], kind, constraint)
    total = _dot(left, right)
    trivial, per = _trivial_count(preps, kind, constraint)
    return SolutionTally(total=total, trivial=trivial,
                         nontrivial=total - trivial, per_pairing=per)


# ---------------------------------------------------------------------------
# independent quadruple-loop oracle


@njit(cache=True, parallel=True)
def _oracle_kernel(v1, t1, k1, v2, t2, k2, v3, t3, k3, v4, t4, k4,
                   ratio, cons):
    total = 0
    trivial = 0
    for i1 in prange(v1.shape[0]):
        a, pa, ka = v1[i1], t1[i1], k1[i1]
        for i2 in range(v2.shape[0]):
            b, pb, kb = v2[i2], t2[i2], k2[i2]
            if cons == 2 and pa != pb:
                continue
            if ratio == 0 and cons == 1 and pa != pb:
                continue
            if ratio == 1:
                lhs = a * b
            else:
                g = ka
                h = kb
                while h != 0:
                    g, h = h, g % h
                lhs = (ka // g) * (kb // g)
            for i3 in range(v3.shape[0]):
                c, pc, kc = v3[i3], t3[i3], k3[i3]
                if cons == 2 and pc != pa:
                    continue
                if ratio == 1 and cons >= 1 and pc != pa:
                    continue
                for i4 in range(v4.shape[0]):
                    d, pd, kd = v4[i4], t4[i4], k4[i4]
                    if cons == 2 and pd != pa:
                        continue
                    if cons == 1:
                        if ratio == 1:
                            if pd != pb:
                                continue
                        else:
                            if pd != pc:
                                continue
                    if ratio == 1:
                        if lhs != c * d:
                            continue
                    else:
                        g = kc
                        h = kd
                        while h != 0:
                            g, h = h, g % h
                        if lhs != (kc // g) * (kd // g):
                            continue
                    total += 1
                    if ratio == 1:
                        if (a == c and b == d) or (a == d and b == c):
                            trivial += 1
                    else:
                        if (a == b and c == d) or (a == c and b == d) \
                                or (a == d and b == c):
                            trivial += 1
    return total, trivial


def count_fourth_moment_oracle(sieve: FactorSieve, sets, kind: EquationKind,
                               constraint: TopPrimeConstraint
                               ) -> tuple[int, int, int]:
    """Brute-force (total, trivial, nontrivial) by literal quadruple loops.

    Kept deliberately independent of the hashed path; intended for
    verification on small sets.
    """
    preps = [_as_prepared(sieve, s) for s in sets]
    args = []
    for p in preps:
        args += [p.values.astype(np.int64), p.pplus.astype(np.int64),
                 p.kernel.astype(np.int64)]
    ratio = 1 if kind is EquationKind.RATIO_MATCH else 0
    cons = {TopPrimeConstraint.NONE: 0, TopPrimeConstraint.PAIRED_TWO_TWO: 1,
            TopPrimeConstraint.ALL_EQUAL: 2}[constraint]
    total, trivial = _oracle_kernel(*args, ratio, cons)
    return int(total), int(trivial), int(total - trivial)


# ---------------------------------------------------------------------------
# epsilon quantities and the moment sums A, B


def count_top_prime_pairs(sieve: FactorSieve, set_a, set_b) -> int:
    """#{(n1, n2) in A x B : P+(v1) = P+(v2)}."""
    pa, pb = _as_prepared(sieve, set_a), _as_prepared(sieve, set_b)
    ca, cb = _slice_sizes(pa), _slice_sizes(pb)
    return sum(n * cb.get(p, 0) for p, n in ca.items())


def epsilon_report(sieve: FactorSieve, sets, kind: EquationKind,
                   budget: int = DEFAULT_PAIR_BUDGET) -> EpsilonReport:
    """Normalized worst-case solution densities over all index tuples.

    eps1 scans the paired-top-prime constraint, eps1prime the all-equal one
    (nontrivial counts over the geometric mean of set sizes); eps2 scans
    top-prime collisions between pairs of sets.
    """
    preps = [_as_prepared(sieve, s) for s in sets]
    k = len(preps)
    if k < 1:
        raise UsageError("need at least one set")
    eps1 = eps1p = eps2 = 0.0
    w1 = w1p = (0, 0, 0, 0)
    w2 = (0, 0)
    tallies: dict[tuple, SolutionTally] = {}

    def tally(ls, constraint):
        key = (ls, constraint)
        if key not in tallies:
            tallies[key] = count_fourth_moment(
                sieve, [preps[i] for i in ls], kind, constraint, budget)
        return tallies[key]

    for ls in itertools.product(range(k), repeat=4):
        root = math.sqrt(math.prod(preps[i].size for i in ls))
        if root == 0:
            continue
        t = tally(ls, TopPrimeConstraint.PAIRED_TWO_TWO)
        val = t.nontrivial / root
        if val > eps1:
            eps1, w1 = val, ls
        t = tally(ls, TopPrimeConstraint.ALL_EQUAL)
        val = t.nontrivial / root
        if val > eps1p:
            eps1p, w1p = val, ls
    for l1 in range(k):
        for l2 in range(k):
            denom = preps[l1].size * preps[l2].size
            if denom == 0:
                continue
            val = count_top_prime_pairs(sieve, preps[l1], preps[l2]) / denom
            if val > eps2:
                eps2, w2 = val, (l1, l2)
    return EpsilonReport(eps1=eps1, eps1prime=eps1p, eps2=eps2,
                         eps1_witness=tuple(w1), eps1prime_witness=tuple(w1p),
                         eps2_witness=w2)


def _weights(preps, coeffs: CoefficientVector) -> list[float]:
    if len(coeffs) != len(preps):
        raise UsageError("coefficient count must match the number of sets")
    return [c / math.sqrt(p.size) for c, p in zip(coeffs.c, preps)]


def compute_A(sieve: FactorSieve, sets, coeffs: CoefficientVector,
              kind: EquationKind, budget: int = DEFAULT_PAIR_BUDGET) -> float:
    """Sum over primes of the fourth moment of the combined martingale
    increment, evaluated combinatorially: weighted all-equal-top-prime
    solution counts over all scale 4-tuples."""
    preps = [_as_prepared(sieve, s) for s in sets]
    w = _weights(preps, coeffs)
    out = 0.0
    cache: dict[tuple, int] = {}
    for ls in itertools.product(range(len(preps)), repeat=4):
        if ls not in cache:
            cache[ls] = count_fourth_moment(
                sieve, [preps[i] for i in ls], kind,
                TopPrimeConstraint.ALL_EQUAL, budget).total
        out += math.prod(w[i] for i in ls) * cache[ls]
    return out


def compute_B(sieve: FactorSieve, sets, coeffs: CoefficientVector,
              kind: EquationKind, budget: int = DEFAULT_PAIR_BUDGET) -> float:
    """Variance of the quadratic variation around 1.

    Combinatorial evaluation: (paired-top-prime fourth-moment sum, weighted)
    minus twice the (same-value pair sum, weighted) plus one.
    """
    preps = [_as_prepared(sieve, s) for s in sets]
    w = _weights(preps, coeffs)
    quad = 0.0
    cache: dict[tuple, int] = {}
    for ls in itertools.product(range(len(preps)), repeat=4):
        if ls not in cache:
            cache[ls] = count_fourth_moment(
                sieve, [preps[i] for i in ls], kind,
                TopPrimeConstraint.PAIRED_TWO_TWO, budget).total
        quad += math.prod(w[i] for i in ls) * cache[ls]
    pair = 0.0
    for l1 in range(len(preps)):
        for l2 in range(len(preps)):
            pair += w[l1] * w[l2] * _match_by_value(preps[l1], preps[l2])
    return quad - 2.0 * pair + 1.0


# ---------------------------------------------------------------------------
# bound evaluators (every asymptotic constant is an explicit knob, default 1)


@dataclass
class BoundValue:
    bound: float
    bracket: float

    def to_json_dict(self) -> dict:
        return {"bound": self.bound, "bracket": self.bracket}


def theorem_bound(diag: CltDiagnostics, x: float,
                  constant: float = 1.0) -> BoundValue:
    """Kolmogorov-distance bound for a unit-norm linear combination of the
    normalized sums, evaluated at threshold x."""
    k = diag.k
    if k < 1:
        raise UsageError("k must be >= 1")
    bracket = diag.eps2 + k * k * (diag.eps1 + diag.eps1prime)
    if not diag.iii_b:
        bracket += k * k * diag.eps2 + k * diag.max_ratio
    bound = constant * bracket ** 0.2 / (1.0 + abs(x) ** 3.2)
    return BoundValue(bound=bound, bracket=bracket)


def conditional_bound(eps1prime: float, eps2: float, k: int, x: float,
                      constant: float = 1.0, max_ratio: float = 0.0,
                      iii_b: bool = True) -> tuple[float, float]:
    """(probability defect, conditional Kolmogorov bound).

    The defect bounds the chance that conditioning on the small primes fails
    to control the conditional variance; the second value bounds the
    conditional distance at threshold x on the good event.
    """
    if k < 1:
        raise UsageError("k must be >= 1")
    base = k * math.sqrt(eps1prime + eps2)
    defect = base
    if not iii_b and base > 0:
        defect += k * max_ratio * base ** (1.0 / 12.0)
    defect *= constant
    kol = constant * base ** 0.1 / (1.0 + abs(x) ** 3.2)
    return defect, kol


def normal_comparison_bound(diag: CltDiagnostics, t: float, eta: float,
                            constant: float = 1.0) -> tuple[float, float]:
    """(unconditional, conditional) error terms for comparing
    P(max_l S_l <= t) with the Gaussian max at threshold t + eta.

    The value of t does not enter the error term; it is accepted so callers
    can carry the comparison location alongside.
    """
    k = diag.k
    if k < 1:
        raise UsageError("k must be >= 1")
    if eta <= 0:
        raise UsageError("eta must be positive")
    lead = constant * k ** 1.5 / eta
    uncond_base = k * k * (diag.eps1 + diag.eps1prime + diag.eps2) \
        + k * diag.max_ratio
    uncond = lead * uncond_base ** (1.0 / (5.0 * (k + 1)))
    cond_base = k * math.sqrt(diag.eps1prime + diag.eps2)
    cond = lead * cond_base ** (1.0 / (10.0 * (k + 1)))
    return uncond, cond


def fitted_exponent(xs, ys) -> tuple[float, float]:
    """Least-squares slope and intercept of log y against log x.

    Used to report measured growth exponents where only existential
    constants are available.
    """
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(intercept)

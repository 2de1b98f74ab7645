"""Multi-scale experiment designs: geometric scale ladders for polynomial
images and prime-indexed short-interval ladders with their pruning filters."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConsistencyError, UsageError

ADMISSIBLE_H_EXPONENT = 11.0 / 15.0


class HKind(Enum):
    POWER_LAW = "pow"
    LOG_POWER = "logpow"
    SUB_EXP = "subexp"


@dataclass(frozen=True)
class HSpec:
    """Interval-length law H(N): N**alpha, N/(log N)**A, or N/exp(sqrt(log N))."""

    kind: HKind
    param: float = 0.0

    def __post_init__(self):
        if self.kind is HKind.POWER_LAW and not (0.0 < self.param < 1.0):
            raise UsageError("power law needs alpha in (0, 1)")
        if self.kind is HKind.LOG_POWER and self.param <= 0.0:
            raise UsageError("log power needs A > 0")

    def __call__(self, N: float) -> float:
        if self.kind is HKind.POWER_LAW:
            return float(N) ** self.param
        if self.kind is HKind.LOG_POWER:
            return float(N) / math.log(N) ** self.param
        return float(N) / math.exp(math.sqrt(math.log(N)))

    def label(self) -> str:
        if self.kind is HKind.SUB_EXP:
            return "subexp"
        return f"{self.kind.value}:{self.param:g}"

    @staticmethod
    def parse(text: str) -> "HSpec":
        if text == "subexp":
            return HSpec(HKind.SUB_EXP)
        try:
            name, raw = text.split(":", 1)
            return HSpec(HKind(name), float(raw))
        except (ValueError, KeyError) as exc:
            raise UsageError(f"bad H spec {text!r}; expected pow:a, "
                             "logpow:A or subexp") from exc


@dataclass(frozen=True)
class PolyScaleFamily:
    """Scales N_l = round(lambda**l * X), 1 <= l <= k, all within (X, X**2]."""

    X: int
    eps0: float
    lam: float
    k: int
    scales: tuple[int, ...]
    forced_k: bool = False

    @property
    def max_scale(self) -> int:
        return self.scales[-1]

    def normalizers(self) -> dict[str, float]:
        return {
            "sqrt_2_log_k": math.sqrt(2.0 * math.log(self.k)) if self.k > 1
            else 0.0,
            "sqrt_loglog_X": math.sqrt(math.log(math.log(self.X))),
        }


def make_poly_scales(X: int, eps0: float,
                     k_override: int | None = None) -> PolyScaleFamily:
    """Geometric scale ladder anchored at X.

    Default recipe: lambda = exp(sqrt(log X)), k = floor((log X)**eps0).
    With ``k_override`` the count is forced and lambda is rescaled to
    X**(1/k), the largest ratio that keeps the whole ladder at or below
    X**2 (the default lambda would overshoot that cap for k > sqrt(log X)).
    """
    X = int(X)
    if X < 3:
        raise UsageError("X must be >= 3")
    if not (0.0 < eps0 < 1.0):
        raise UsageError("eps0 must lie in (0, 1)")
    logx = math.log(X)
    if k_override is None:
        lam = math.exp(math.sqrt(logx))
        k = int(math.floor(logx ** eps0))
        forced = False
        if k < 1:
            raise UsageError("scale count is zero; increase X or eps0")
    else:
        k = int(k_override)
        if k < 1:
            raise UsageError("k override must be >= 1")
        lam = X ** (1.0 / k)
        forced = True
    scales = [int(round(lam ** l * X)) for l in range(1, k + 1)]
    for a, b in zip(scales, scales[1:]):
        if b <= a:
            raise ConsistencyError("scales are not strictly increasing")
    if scales[-1] > X * X:
        raise ConsistencyError(
            f"top scale {scales[-1]} exceeds X**2 = {X * X}")
    return PolyScaleFamily(X=X, eps0=eps0, lam=lam, k=k,
                           scales=tuple(scales), forced_k=forced)


@dataclass(frozen=True)
class ShortScaleFamily:
    """Disjoint short intervals (N_l - H_l, N_l] at N_l = l*X for chosen
    primes l, with the top-prime floor and optional Omega ceiling used to
    prune them."""

    X: int
    hspec: HSpec
    delta: float
    eps0: float
    eps: float
    h: float
    prime_indices: tuple[int, ...]
    scales: tuple[int, ...]
    lengths: tuple[int, ...]
    gammas: tuple[float, ...]
    top_prime_floor: int
    omega_ceiling: int | None
    below_admissible_floor: bool

    @property
    def k(self) -> int:
        return len(self.scales)

    @property
    def max_scale(self) -> int:
        return self.scales[-1]

    def normalizers(self) -> dict[str, float]:
        hx = self.hspec(self.X)
        return {
            "sqrt_2_log_k": math.sqrt(2.0 * math.log(self.k)) if self.k > 1
            else 0.0,
            "sqrt_log_X_over_H": math.sqrt(math.log(self.X / hx)),
        }


def _primes_up_to(n: int) -> list[int]:
    if n < 2:
        return []
    mask = np.ones(n + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, int(math.isqrt(n)) + 1):
        if mask[p]:
            mask[p * p::p] = False
    return [int(p) for p in np.flatnonzero(mask)]


def make_short_scales(X: int, hspec: HSpec, delta: float, eps0: float,
                      eps: float = 0.5) -> ShortScaleFamily:
    """Short-interval ladder: k = floor((X/H(X))**eps0) scales at N_l = l*X
    for the k smallest primes l in (h/2, h], h = (X/H(X))**delta.

    The Omega ceiling (1+eps)*loglog X applies only in the long-interval
    regime H(N_1) > N_1/(log N_1)**2.  Smallest-first prime choice is
    deterministic and keeps the sieve footprint minimal.
    """
    X = int(X)
    if X < 3:
        raise UsageError("X must be >= 3")
    if delta <= 0 or eps0 <= 0:
        raise UsageError("delta and eps0 must be positive")
    if eps <= 0:
        raise UsageError("eps must be positive")
    hx = hspec(X)
    if not (0.0 < hx <= X):
        raise UsageError(f"H(X) = {hx} outside (0, X]")
    ratio = X / hx
    if ratio <= 1.0:
        raise UsageError("H(X) must be strictly less than X")
    h = ratio ** delta
    k = int(math.floor(ratio ** eps0))
    if k < 1:
        raise UsageError("scale count is zero; increase eps0")
    window = [p for p in _primes_up_to(int(math.floor(h)))
              if p > h / 2.0]
    if len(window) < k:
        raise UsageError(
            f"window ({h / 2:g}, {h:g}] holds {len(window)} primes, "
            f"need {k}; deficit {k - len(window)}")
    chosen = window[:k]
    scales = [l * X for l in chosen]
    lengths = []
    gammas = []
    below = False
    prev_h = None
    for N in scales:
        hn = hspec(N)
        if not (0.0 < hn <= N):
            raise ConsistencyError(f"H({N}) = {hn} outside (0, N]")
        if prev_h is not None and hn < prev_h:
            raise ConsistencyError("H is not nondecreasing over the scales")
        prev_h = hn
        if hn < N ** ADMISSIBLE_H_EXPONENT:
            below = True
        lengths.append(max(1, int(math.floor(hn))))
        gammas.append(hn / N)
    for i in range(1, k):
        if scales[i] - lengths[i] < scales[i - 1]:
            raise ConsistencyError(
                f"intervals at scales {scales[i - 1]} and {scales[i]} overlap")
    floor = int(math.floor((X * h) ** (2.0 / 3.0)))
    n1, h1 = scales[0], lengths[0]
    omega_ceiling = None
    if h1 > n1 / math.log(n1) ** 2:
        omega_ceiling = int(math.floor((1.0 + eps)
                                       * math.log(math.log(X))))
    return ShortScaleFamily(
        X=X, hspec=hspec, delta=delta, eps0=eps0, eps=eps, h=h,
        prime_indices=tuple(chosen), scales=tuple(scales),
        lengths=tuple(lengths), gammas=tuple(gammas),
        top_prime_floor=floor, omega_ceiling=omega_ceiling,
        below_admissible_floor=below)

"""Gaussian reference machinery: CDF/quantile, empirical distances to the
normal law, covariance estimation, correlated sampling and the quantitative
normal-comparison right-hand side."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .hashing import normal_draws


def std_normal_cdf(x: float) -> float:
    """Phi(x) through the complementary error function (abs error < 1e-15,
    well inside the 1e-7 budget every consumer assumes)."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def std_normal_cdf_array(xs: np.ndarray) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    out = np.empty_like(xs)
    flat = xs.ravel()
    res = out.ravel()
    for i in range(flat.size):
        res[i] = std_normal_cdf(flat[i])
    return out


def normal_quantile(p: float) -> float:
    """Inverse of std_normal_cdf by Newton iteration inside a bisection
    bracket.

    Runs past the contractual |Phi(q) - p| <= 1e-9 until the iterate itself
    stabilizes, so the argument error stays small even in the tails where
    the density is tiny.
    """
    if not (0.0 < p < 1.0):
        raise UsageError("quantile needs p strictly inside (0, 1)")
    lo, hi = -9.0, 9.0
    q = 0.0
    for _ in range(300):
        err = std_normal_cdf(q) - p
        if err > 0.0:
            hi = q
        elif err < 0.0:
            lo = q
        else:
            return q
        dens = math.exp(-0.5 * q * q) / math.sqrt(2.0 * math.pi)
        step = q - err / dens if dens > 0.0 else None
        new_q = step if step is not None and lo < step < hi \
            else 0.5 * (lo + hi)
        if abs(new_q - q) < 1e-12 and abs(err) <= 1e-9:
            return new_q
        q = new_q
    return q


@dataclass
class EmpiricalSample:
    """Sorted realizations of a scalar statistic."""

    values: np.ndarray
    count: int

    @classmethod
    def from_draws(cls, draws) -> "EmpiricalSample":
        arr = np.sort(np.asarray(draws, dtype=float))
        if arr.size < 1:
            raise UsageError("empirical sample needs at least one value")
        return cls(values=arr, count=int(arr.size))


def _as_sample(sample) -> EmpiricalSample:
    if isinstance(sample, EmpiricalSample):
        return sample
    return EmpiricalSample.from_draws(sample)


def kolmogorov_distance(sample, cdf=std_normal_cdf) -> float:
    """sup-norm distance between the empirical CDF and ``cdf``."""
    s = _as_sample(sample)
    T = s.count
    F = np.array([cdf(x) for x in s.values])
    hi = np.arange(1, T + 1) / T - F
    lo = F - np.arange(0, T) / T
    return float(max(hi.max(), lo.max()))


def wasserstein1_distance(sample) -> float:
    """W1 distance to the standard normal by quantile coupling at offsets
    (i - 0.5)/T."""
    s = _as_sample(sample)
    T = s.count
    q = np.array([normal_quantile((i - 0.5) / T) for i in range(1, T + 1)])
    return float(np.mean(np.abs(s.values - q)))


@dataclass
class CovarianceMatrix:
    k: int
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.shape != (self.k, self.k):
            raise UsageError("covariance shape mismatch")
        if not np.allclose(e, e.T, atol=1e-12):
            raise UsageError("covariance must be symmetric within 1e-12")
        if np.any(np.diag(e) < 0):
            raise UsageError("covariance needs nonnegative diagonal")
        self.entries = 0.5 * (e + e.T)


def empirical_covariance(vector_samples, centered: bool = False
                         ) -> CovarianceMatrix:
    """Second-moment matrix of T draws of k-vectors.

    Raw (uncentered) by default: the sums being estimated have mean zero by
    model symmetry, so centering only adds noise.
    """
    x = np.asarray(vector_samples, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise UsageError("need a (T, k) array with T >= 2")
    if centered:
        x = x - x.mean(axis=0, keepdims=True)
    m = x.T @ x / x.shape[0]
    m = 0.5 * (m + m.T)
    return CovarianceMatrix(k=x.shape[1], entries=m)


@dataclass
class CholeskyFactor:
    lower: np.ndarray
    ridge: float  # largest negative pivot clamped to zero (abs value)


def cholesky(cov) -> CholeskyFactor:
    """Lower-triangular factor with tolerance for tiny negative pivots.

    Pivots below -1e-10 raise; pivots in [-1e-10, 0] are clamped to zero and
    the largest clamp is reported as ``ridge``.
    """
    a = cov.entries if isinstance(cov, CovarianceMatrix) else \
        np.asarray(cov, dtype=float)
    n = a.shape[0]
    L = np.zeros((n, n))
    ridge = 0.0
    for j in range(n):
        d = a[j, j] - np.dot(L[j, :j], L[j, :j])
        if d < -1e-10:
            raise UsageError(
                f"matrix is not positive semidefinite: pivot {d} at {j}")
        if d < 0.0:
            ridge = max(ridge, -d)
            d = 0.0
        L[j, j] = math.sqrt(d)
        if j + 1 < n:
            if L[j, j] > 0:
                L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) \
                    / L[j, j]
            else:
                L[j + 1:, j] = 0.0
    return CholeskyFactor(lower=L, ridge=ridge)


@dataclass
class GaussianMaxReport:
    k: int
    t: float
    estimate: float
    stderr: float
    slepian_rhs: float | None

    def to_json_dict(self) -> dict:
        return {"k": self.k, "t": self.t, "estimate": self.estimate,
                "stderr": self.stderr, "slepian_rhs": self.slepian_rhs}


def slepian_rhs(k: int, delta: float, eps: float,
                constant: float = 1.0) -> float:
    """Upper bound for P(max of k standardized joint normals <= sqrt((2-delta)
    log k)) when pairwise correlations are at most eps.

    Admissible window: k >= 2 and 100*eps <= delta <= 1/100.  The Theta
    constant in the exponential term is the ``constant`` knob.
    """
    if k < 2:
        raise UsageError("k must be >= 2")
    if not (100.0 * eps <= delta <= 0.01):
        raise UsageError(
            f"(delta, eps) = ({delta}, {eps}) outside the admissible window "
            "100*eps <= delta <= 1/100")
    first = math.exp(-constant * k ** (delta / 20.0) / math.sqrt(math.log(k)))
    second = 0.0 if eps == 0.0 else k ** (-delta * delta / (50.0 * eps))
    return first + second


def gaussian_max_prob(cov, t: float, trials: int, seed: int,
                      slepian: tuple[float, float] | None = None
                      ) -> GaussianMaxReport:
    """Monte Carlo estimate of P(max_l Y_l <= t) for jointly normal Y.

    Draws are Box-Muller variates from the keyed-hash stream pushed through
    the Cholesky factor, so the estimate is seed-deterministic.  Passing
    ``slepian=(delta, eps)`` also evaluates the comparison right-hand side.
    """
    if trials < 1:
        raise UsageError("trials must be >= 1")
    a = cov.entries if isinstance(cov, CovarianceMatrix) else \
        np.asarray(cov, dtype=float)
    k = a.shape[0]
    L = cholesky(a).lower
    hits = 0
    chunk = max(1, 2_000_000 // max(k, 1))
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        z = normal_draws(seed, b * k, offset=done * k).reshape(b, k)
        y = z @ L.T
        hits += int(np.count_nonzero(y.max(axis=1) <= t))
        done += b
    p = hits / trials
    se = math.sqrt(max(p * (1.0 - p), 1e-300) / trials)
    rhs = None
    if slepian is not None:
        rhs = slepian_rhs(k, slepian[0], slepian[1])
    return GaussianMaxReport(k=k, t=float(t), estimate=p, stderr=se,
                             slepian_rhs=rhs)

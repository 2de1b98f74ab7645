"""End-to-end experiment pipelines: single- and multi-scale Gaussian
comparison, polynomial and short-interval fluctuation maxima, slow variation
between scales, and brute-force verification of the multi-scale solution
count."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .arith import FactorSieve, PolySpec, build_sieve, bulk_stats, \
    tau3_interval_sum
from .energy import (CltDiagnostics, CoefficientVector, EquationKind,
                     SolutionTally, TopPrimeConstraint, compute_A, compute_B,
                     count_fourth_moment, count_top_prime_pairs,
                     theorem_bound)
from .errors import ResourceError, UsageError
from .gaussian import EmpiricalSample, kolmogorov_distance, \
    wasserstein1_distance
from .hashing import trial_seeds
from .model import (RmfModel, TrialEngine, TwistSelector, default_twist,
                    validate_twist)
from .reporting import quantiles
from .scales import HSpec, ShortScaleFamily, make_poly_scales, \
    make_short_scales
from .sets import ArithSet, Interval, PolyImage, PreparedSet, prepare_set

EXCEEDANCE_THETAS = (0.5, 0.8, 1.0)
FAST_PATH_MIN_SCALE = 2_000_000
GENERIC_MAX_SCALE = 5_000_000


def _parallel_sums(engine: TrialEngine, seeds: np.ndarray, checkpoints,
                   workers: int, normalized: bool = True) -> np.ndarray:
    if workers <= 1 or seeds.size < 2 * workers:
        return engine.sums(seeds, checkpoints, normalized=normalized)
    shape = (seeds.size,) if checkpoints is None \
        else (seeds.size, len(checkpoints))
    out = np.empty(shape)
    bounds = np.linspace(0, seeds.size, workers + 1, dtype=int)

    def run(w):
        lo, hi = bounds[w], bounds[w + 1]
        if hi > lo:
            out[lo:hi] = engine.sums(seeds[lo:hi], checkpoints,
                                     normalized=normalized)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(run, range(workers)))
    return out


# ---------------------------------------------------------------------------
# Gaussian-comparison experiment


@dataclass
class CltSetReport:
    label: str
    size: int
    kolmogorov: float
    wasserstein1: float
    diagnostics: CltDiagnostics | None
    bound_at_zero: float | None
    bracket: float | None
    sums: np.ndarray = field(repr=False)

    def to_json_dict(self) -> dict:
        out = {"label": self.label, "size": self.size,
               "kolmogorov": self.kolmogorov,
               "wasserstein1": self.wasserstein1,
               "bound": self.bound_at_zero, "bracket": self.bracket,
               "sum_quantiles": quantiles(self.sums)}
        if self.diagnostics is not None:
            out.update(self.diagnostics.to_json_dict())
        return out


def _single_set_diagnostics(sieve: FactorSieve, prep: PreparedSet,
                            kind: EquationKind, budget: int
                            ) -> CltDiagnostics | None:
    size = prep.size
    try:
        p22 = count_fourth_moment(sieve, [prep] * 4, kind,
                                  TopPrimeConstraint.PAIRED_TWO_TWO, budget)
        alleq = count_fourth_moment(sieve, [prep] * 4, kind,
                                    TopPrimeConstraint.ALL_EQUAL, budget)
    except ResourceError:
        return None
    eps2 = count_top_prime_pairs(sieve, prep, prep) / (size * size)
    one = CoefficientVector((1.0,))
    return CltDiagnostics(
        k=1,
        eps1=p22.nontrivial / (size * size),
        eps1prime=alleq.nontrivial / (size * size),
        eps2=eps2,
        A=compute_A(sieve, [prep], one, kind, budget),
        B=compute_B(sieve, [prep], one, kind, budget),
        max_ratio=0.0,
        iii_b=True,
    )


def run_clt_experiment(model: RmfModel, sieve: FactorSieve, set_family,
                       twist: TwistSelector | None, trials: int, seed: int,
                       workers: int = 1,
                       diag_budget: int = 200_000_000) -> list[CltSetReport]:
    """Distances of the normalized-sum law to the standard normal, per set,
    with the exact counting diagnostics where the work budget admits."""
    if trials < 1:
        raise UsageError("trials must be >= 1")
    twist = validate_twist(model, twist or default_twist(model))
    kind = EquationKind.SQUARE_PRODUCT if model is RmfModel.RADEMACHER \
        else EquationKind.RATIO_MATCH
    seeds = trial_seeds(seed, trials)
    reports = []
    for aset in set_family:
        prep = aset if isinstance(aset, PreparedSet) \
            else prepare_set(sieve, aset)
        if prep.size == 0:
            raise UsageError(f"set {prep.label()} is empty")
        engine = TrialEngine(sieve, prep, model, twist)
        sums = _parallel_sums(engine, seeds, None, workers)
        sample = EmpiricalSample.from_draws(sums)
        diag = _single_set_diagnostics(sieve, prep, kind, diag_budget)
        bound = bracket = None
        if diag is not None:
            bv = theorem_bound(diag, 0.0)
            bound, bracket = bv.bound, bv.bracket
        reports.append(CltSetReport(
            label=prep.label(), size=prep.size,
            kolmogorov=kolmogorov_distance(sample),
            wasserstein1=wasserstein1_distance(sample),
            diagnostics=diag, bound_at_zero=bound, bracket=bracket,
            sums=sums))
    return reports


# ---------------------------------------------------------------------------
# fluctuation experiments


@dataclass
class FluctuationReport:
    kind: str
    model: str
    twist: str
    seed: int
    trials: int
    scale_values: tuple[int, ...]
    set_sizes: tuple[int, ...]
    normalizers: dict[str, float]
    thresholds: dict[float, float]
    exceed_fractions: dict[float, float]
    per_scale_sums: np.ndarray = field(repr=False)
    max_signed: np.ndarray = field(repr=False)
    max_abs: np.ndarray = field(repr=False)
    extra: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.scale_values)

    def mean_max(self) -> tuple[float, float]:
        """Mean of the per-trial signed maximum and its standard error."""
        m = self.max_signed
        return float(m.mean()), float(m.std(ddof=1) / math.sqrt(m.size))

    def csv_header(self) -> list[str]:
        cols = ["trial"]
        cols += [f"S_{N}" for N in self.scale_values]
        cols += ["max_signed", "max_abs"]
        if "good_count" in self.extra:
            cols.append("good_count")
        return cols

    def csv_rows(self):
        good = self.extra.get("good_count")
        for t in range(self.trials):
            row = [t] + list(self.per_scale_sums[t]) \
                + [self.max_signed[t], self.max_abs[t]]
            if good is not None:
                row.append(int(good[t]))
            yield row

    def json_summary(self) -> dict:
        mean, se = self.mean_max()
        out = {
            "kind": self.kind, "model": self.model, "twist": self.twist,
            "trials": self.trials, "k": self.k,
            "scales": list(self.scale_values),
            "set_sizes": list(self.set_sizes),
            "normalizers": self.normalizers,
            "thresholds": {str(th): v for th, v in self.thresholds.items()},
            "exceed_fractions": {str(th): v for th, v
                                 in self.exceed_fractions.items()},
            "mean_max_signed": mean,
            "stderr_max_signed": se,
            "mean_max_abs": float(self.max_abs.mean()),
            "max_quantiles": quantiles(self.max_abs),
        }
        for key, val in self.extra.items():
            if not isinstance(val, np.ndarray):
                out[key] = val
        return out


def _exceed_fractions(max_abs: np.ndarray, unit: float
                      ) -> tuple[dict, dict]:
    thresholds = {th: th * unit for th in EXCEEDANCE_THETAS}
    fractions = {th: float(np.mean(max_abs >= v))
                 for th, v in thresholds.items()}
    return thresholds, fractions


def run_poly_fluctuation(model: RmfModel, P: PolySpec, X: int, eps0: float,
                         twist: TwistSelector | None, trials: int, seed: int,
                         k_override: int | None = None,
                         sieve: FactorSieve | None = None,
                         workers: int = 1) -> FluctuationReport:
    """Max over the scale ladder of the normalized polynomial-image sums.

    Rademacher sums over products of distinct linear factors stream through
    the bit-sliced kernel once the top scale is large; everything else uses
    the generic engine, which caps the top scale to keep memory sane.
    """
    if trials < 1:
        raise UsageError("trials must be >= 1")
    family = make_poly_scales(X, eps0, k_override)
    twist = validate_twist(model, twist or default_twist(model))
    scales = family.scales
    use_fast = False
    if model is RmfModel.RADEMACHER and family.max_scale > FAST_PATH_MIN_SCALE:
        from .fastpath import linear_pieces
        pieces = linear_pieces(P)
        if pieces is None:
            raise ResourceError(
                f"top scale {family.max_scale} needs the streaming path, "
                "which requires a product of distinct linear factors; "
                "shrink X or eps0")
        use_fast = True
    if use_fast:
        from .fastpath import linear_pieces, rademacher_linear_scan
        pieces = linear_pieces(P)
        sizes, sums = rademacher_linear_scan(pieces, scales, trials, seed)
        sizes = tuple(int(s) for s in sizes)
    else:
        if family.max_scale > GENERIC_MAX_SCALE:
            raise ResourceError(
                f"top scale {family.max_scale} exceeds the generic engine "
                f"cap {GENERIC_MAX_SCALE}; shrink X or eps0")
        squarefree = model is RmfModel.RADEMACHER
        aset = ArithSet(PolyImage(P, family.max_scale),
                        squarefree_only=squarefree)
        if sieve is None:
            top = max(abs(P(family.max_scale)), abs(P(1)), family.max_scale)
            sieve = build_sieve(max(math.isqrt(top) + 1,
                                    family.max_scale + 1))
        prep = prepare_set(sieve, aset)
        cps = np.searchsorted(prep.indices, np.asarray(scales), side="right")
        if np.any(cps == 0):
            raise UsageError("a scale has no surviving elements")
        engine = TrialEngine(sieve, prep, model, twist)
        sums = _parallel_sums(engine, trial_seeds(seed, trials), cps, workers)
        sizes = tuple(int(c) for c in cps)
    max_signed = sums.max(axis=1)
    max_abs = np.abs(sums).max(axis=1)
    norms = family.normalizers()
    thresholds, fractions = _exceed_fractions(max_abs, norms["sqrt_2_log_k"])
    return FluctuationReport(
        kind="poly", model=model.value, twist=twist.value, seed=seed,
        trials=trials, scale_values=scales, set_sizes=sizes,
        normalizers=norms, thresholds=thresholds,
        exceed_fractions=fractions, per_scale_sums=sums,
        max_signed=max_signed, max_abs=max_abs,
        extra={"X": family.X, "lambda": family.lam, "eps0": family.eps0,
               "forced_k": family.forced_k, "poly": P.label(),
               "streaming_path": use_fast})


def _interval_subset(prep_full: PreparedSet, mask: np.ndarray,
                     aset: ArithSet) -> PreparedSet:
    return PreparedSet(aset=aset, indices=prep_full.indices[mask],
                       values=prep_full.values[mask],
                       pplus=prep_full.pplus[mask],
                       omega=prep_full.omega[mask],
                       sqfree=prep_full.sqfree[mask],
                       kernel=prep_full.kernel[mask])


def pruned_interval_sets(family: ShortScaleFamily, squarefree: bool
                         ) -> list[ArithSet]:
    """The pruned short-interval sets: top-prime floor plus, in the long
    interval regime, the Omega ceiling."""
    return [ArithSet(Interval(N, H), squarefree_only=squarefree,
                     top_prime_floor=family.top_prime_floor,
                     omega_ceiling=family.omega_ceiling)
            for N, H in zip(family.scales, family.lengths)]


def run_short_fluctuation(model: RmfModel, X: int, hspec: HSpec, delta: float,
                          eps0: float, eps: float,
                          twist: TwistSelector | None, trials: int, seed: int,
                          sieve: FactorSieve | None = None,
                          workers: int = 1) -> FluctuationReport:
    """Short-interval pipeline: pruned-set sums at every scale plus the
    diagnostic magnitudes of what the pruning threw away.

    Per trial and scale the report carries the normalized pruned sum, the
    smooth remainder (top prime at or below the floor) and, when the Omega
    ceiling is active, the many-prime-factor remainder, the latter two
    normalized by sqrt(interval length).  An ``l`` counts as good in a trial
    when its smooth remainder is at most (loglog X)**(1/3).
    """
    if trials < 1:
        raise UsageError("trials must be >= 1")
    family = make_short_scales(X, hspec, delta, eps0, eps)
    twist = validate_twist(model, twist or default_twist(model))
    squarefree = model is RmfModel.RADEMACHER
    if sieve is None:
        sieve = build_sieve(family.max_scale + 1)
    seeds = trial_seeds(seed, trials)
    k = family.k
    pruned_sums = np.empty((trials, k))
    smooth_sums = np.zeros((trials, k))
    omega_sums = np.zeros((trials, k)) if family.omega_ceiling is not None \
        else None
    sizes = []
    smooth_sizes = []
    omega_sizes = []
    for li, (N, H) in enumerate(zip(family.scales, family.lengths)):
        base = prepare_set(
            sieve, ArithSet(Interval(N, H), squarefree_only=squarefree))
        rough = base.pplus > family.top_prime_floor
        keep = rough.copy()
        if family.omega_ceiling is not None:
            keep &= base.omega <= family.omega_ceiling
        pruned = _interval_subset(
            base, keep, pruned_interval_sets(family, squarefree)[li])
        if pruned.size == 0:
            raise UsageError(
                f"pruned set at scale {N} is empty; the top-prime floor "
                f"{family.top_prime_floor} is too aggressive")
        sizes.append(pruned.size)
        engine = TrialEngine(sieve, pruned, model, twist)
        pruned_sums[:, li] = _parallel_sums(engine, seeds, None, workers)
        root_h = math.sqrt(H)
        smooth = _interval_subset(base, ~rough, base.aset)
        smooth_sizes.append(smooth.size)
        if smooth.size:
            sm_engine = TrialEngine(sieve, smooth, model, twist)
            smooth_sums[:, li] = _parallel_sums(
                sm_engine, seeds, None, workers, normalized=False) / root_h
        if omega_sums is not None:
            omask = base.omega > family.omega_ceiling
            om = _interval_subset(base, omask, base.aset)
            omega_sizes.append(om.size)
            if om.size:
                om_engine = TrialEngine(sieve, om, model, twist)
                omega_sums[:, li] = _parallel_sums(
                    om_engine, seeds, None, workers, normalized=False) / root_h
    max_signed = pruned_sums.max(axis=1)
    max_abs = np.abs(pruned_sums).max(axis=1)
    norms = family.normalizers()
    thresholds, fractions = _exceed_fractions(max_abs, norms["sqrt_2_log_k"])
    good_cut = math.log(math.log(X)) ** (1.0 / 3.0)
    good = np.abs(smooth_sums) <= good_cut
    good_count = good.sum(axis=1)
    extra = {
        "X": family.X, "hspec": hspec.label(), "delta": family.delta,
        "eps0": family.eps0, "eps": family.eps,
        "prime_indices": list(family.prime_indices),
        "interval_lengths": list(family.lengths),
        "top_prime_floor": family.top_prime_floor,
        "omega_ceiling": family.omega_ceiling,
        "below_admissible_floor": family.below_admissible_floor,
        "good_cutoff": good_cut,
        "good_fraction": float(good_count.mean() / k),
        "good_count": good_count,
        "smooth_sizes": smooth_sizes,
        "omega_sizes": omega_sizes,
        "smooth_mean_square": [float(np.mean(smooth_sums[:, i] ** 2))
                               for i in range(k)],
        "smooth_exact_mean_square": [
            s / H for s, H in zip(smooth_sizes, family.lengths)],
        "pruned_mean_square": [float(np.mean(pruned_sums[:, i] ** 2))
                               for i in range(k)],
        "smooth_sums": smooth_sums,
    }
    if omega_sums is not None:
        extra["omega_mean_square"] = [float(np.mean(omega_sums[:, i] ** 2))
                                      for i in range(k)]
        extra["omega_exact_mean_square"] = [
            s / H for s, H in zip(omega_sizes, family.lengths)]
        extra["omega_sums"] = omega_sums
    return FluctuationReport(
        kind="short", model=model.value, twist=twist.value, seed=seed,
        trials=trials, scale_values=family.scales, set_sizes=tuple(sizes),
        normalizers=norms, thresholds=thresholds, exceed_fractions=fractions,
        per_scale_sums=pruned_sums, max_signed=max_signed, max_abs=max_abs,
        extra=extra)


# ---------------------------------------------------------------------------
# multi-scale count verification


@dataclass
class ScaleCountReport:
    l1: int
    l2: int
    kind: str
    tally: SolutionTally
    budget_ratio: float
    set_labels: tuple[str, str, str, str]

    def to_json_dict(self) -> dict:
        out = {"l1": self.l1, "l2": self.l2, "kind": self.kind,
               "budget_ratio": self.budget_ratio,
               "set_labels": list(self.set_labels)}
        out.update(self.tally.to_json_dict())
        return out


def scale_pair_sets(sieve: FactorSieve, family: ShortScaleFamily,
                    l1: int, l2: int, kind: EquationKind
                    ) -> list[PreparedSet]:
    """The four pruned sets arranged so the paired-top-prime constraint ties
    slots across the two scales.

    With conjugation at slots 3 and 4, the slice mates are (1,3)/(2,4) for
    the ratio equation and (1,2)/(3,4) for the square equation, so the scale
    assignment differs per kind.
    """
    if l1 not in family.prime_indices or l2 not in family.prime_indices:
        raise UsageError(f"scales must be among {family.prime_indices}")
    squarefree = kind is EquationKind.SQUARE_PRODUCT
    sets = pruned_interval_sets(family, squarefree)
    by_prime = dict(zip(family.prime_indices, sets))
    b1 = prepare_set(sieve, by_prime[l1])
    b2 = prepare_set(sieve, by_prime[l2])
    if kind is EquationKind.SQUARE_PRODUCT:
        return [b1, b2, b1, b2]
    return [b1, b2, b2, b1]


def verify_count_at_scales(sieve: FactorSieve, family: ShortScaleFamily,
                           l1: int, l2: int, kind: EquationKind,
                           budget: int = 10_000_000_000) -> ScaleCountReport:
    """Exact constrained solution count across two scales of the family,
    with the count normalized by H_l1*H_l2/h**2 (finite, recorded, never
    asserted against a constant)."""
    sets = scale_pair_sets(sieve, family, l1, l2, kind)
    tally = count_fourth_moment(sieve, sets, kind,
                                TopPrimeConstraint.PAIRED_TWO_TWO, budget)
    pos = {p: i for i, p in enumerate(family.prime_indices)}
    h1 = family.lengths[pos[l1]]
    h2 = family.lengths[pos[l2]]
    denom = h1 * h2 / family.h ** 2
    return ScaleCountReport(
        l1=l1, l2=l2, kind=kind.value, tally=tally,
        budget_ratio=tally.nontrivial / denom,
        set_labels=tuple(s.label() for s in sets))


# ---------------------------------------------------------------------------
# slow variation between scales


@dataclass
class GapReport:
    l: int
    n_lo: int
    n_hi: int
    grid: tuple[int, ...]
    size: int
    maxima: np.ndarray = field(repr=False)
    full_sums: np.ndarray = field(repr=False)
    tau3_budget: int = 0
    normalizer: float = 0.0

    def mc_mean_square(self) -> float:
        return float(np.mean(self.full_sums ** 2))

    def to_json_dict(self) -> dict:
        return {"l": self.l, "n_lo": self.n_lo, "n_hi": self.n_hi,
                "grid_points": len(self.grid), "size": self.size,
                "mean_max": float(self.maxima.mean()),
                "max_quantiles": quantiles(self.maxima),
                "mc_mean_square": self.mc_mean_square(),
                "exact_second_moment": self.size,
                "tau3_budget": self.tau3_budget,
                "normalizer": self.normalizer}


@dataclass
class SlowVariationReport:
    model: str
    twist: str
    poly: str
    c: float
    seed: int
    trials: int
    decay_power: float
    gaps: list[GapReport]

    def json_summary(self) -> dict:
        return {"kind": "slowvar", "model": self.model, "twist": self.twist,
                "poly": self.poly, "c": self.c, "trials": self.trials,
                "decay_power": self.decay_power,
                "gaps": [g.to_json_dict() for g in self.gaps]}

    def csv_header(self) -> list[str]:
        return ["trial"] + [f"gapmax_{g.n_lo}_{g.n_hi}" for g in self.gaps]

    def csv_rows(self):
        for t in range(self.trials):
            yield [t] + [g.maxima[t] for g in self.gaps]


def _poly_segment(sieve: FactorSieve, P: PolySpec, lo: int, hi: int,
                  squarefree: bool) -> PreparedSet:
    """Prepared set of P(n) for lo < n <= hi."""
    indices = np.arange(lo + 1, hi + 1, dtype=np.int64)
    values = np.asarray(P.evaluate_range(lo + 1, hi), dtype=np.int64)
    keep = values > 0
    indices, values = indices[keep], values[keep]
    pplus, omega, sqfree, kern = bulk_stats(sieve, values)
    if squarefree:
        m = sqfree == 1
        indices, values = indices[m], values[m]
        pplus, omega, sqfree, kern = pplus[m], omega[m], sqfree[m], kern[m]
    return PreparedSet(aset=ArithSet(PolyImage(P, hi),
                                     squarefree_only=squarefree),
                       indices=indices, values=values, pplus=pplus,
                       omega=omega, sqfree=sqfree, kernel=kern)


def run_slow_variation(model: RmfModel, P: PolySpec, c: float, l_max: int,
                       grid_size: int, twist: TwistSelector | None,
                       trials: int, seed: int,
                       sieve: FactorSieve | None = None,
                       decay_power: float = 1.0,
                       workers: int = 1) -> SlowVariationReport:
    """Between consecutive scales N_l = floor(exp(l**c)), measure the maximal
    increment of the polynomial sum over a grid of cut points.

    Each gap also carries its exact increment second moment (the surviving
    index count) and the tau3 budget controlling the increment's fourth
    moment.
    """
    if not (0.0 < c < 1.0):
        raise UsageError("c must lie in (0, 1)")
    if trials < 1:
        raise UsageError("trials must be >= 1")
    if grid_size < 1:
        raise UsageError("grid size must be >= 1")
    if l_max < 2:
        raise UsageError("need l_max >= 2 for at least one gap")
    twist = validate_twist(model, twist or default_twist(model))
    scales = [int(math.floor(math.exp(l ** c))) for l in range(1, l_max + 1)]
    top = scales[-1]
    if sieve is None:
        peak = max(abs(P(top)), abs(P(1)), top)
        sieve = build_sieve(max(math.isqrt(peak) + 1, top + 1, 2))
    squarefree = model is RmfModel.RADEMACHER
    seeds = trial_seeds(seed, trials)
    gaps: list[GapReport] = []
    for l in range(1, l_max):
        lo, hi = scales[l - 1], scales[l]
        if hi <= lo:
            gaps.append(GapReport(
                l=l, n_lo=lo, n_hi=hi, grid=(), size=0,
                maxima=np.zeros(trials), full_sums=np.zeros(trials)))
            continue
        grid = sorted({lo + max(1, round(j * (hi - lo) / grid_size))
                       for j in range(1, grid_size + 1)} | {hi})
        seg = _poly_segment(sieve, P, lo, hi, squarefree)
        norm = math.sqrt(hi) / math.log(hi) ** decay_power
        t3 = tau3_interval_sum(sieve, P, lo, hi - lo)
        if seg.size == 0:
            gaps.append(GapReport(
                l=l, n_lo=lo, n_hi=hi, grid=tuple(grid), size=0,
                maxima=np.zeros(trials), full_sums=np.zeros(trials),
                tau3_budget=t3, normalizer=norm))
            continue
        cps = np.searchsorted(seg.indices, np.asarray(grid), side="right")
        engine = TrialEngine(sieve, seg, model, twist)
        prefixes = _parallel_sums(engine, seeds, cps, workers,
                                  normalized=False)
        gaps.append(GapReport(
            l=l, n_lo=lo, n_hi=hi, grid=tuple(grid), size=seg.size,
            maxima=np.abs(prefixes).max(axis=1),
            full_sums=prefixes[:, -1], tau3_budget=t3, normalizer=norm))
    return SlowVariationReport(
        model=model.value, twist=twist.value, poly=P.label(), c=c,
        seed=seed, trials=trials, decay_power=decay_power, gaps=gaps)

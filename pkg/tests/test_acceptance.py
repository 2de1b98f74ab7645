"""Acceptance suite: one test per release criterion, each printing a PASS
line with its runtime when it holds.  Tolerances and work sizes are pinned
here, not configurable."""

import itertools
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from rmflab import (ArithSet, CltDiagnostics, CoefficientVector,
                    EquationKind, HSpec, Interval, PolyImage, PolySpec,
                    RmfModel, TopPrimeConstraint, build_sieve, compute_B,
                    conditional_bound, count_fourth_moment,
                    count_fourth_moment_oracle, count_omega_exceed,
                    enumerate_set, gaussian_max_prob, make_short_scales,
                    monte_carlo_sums, normal_comparison_bound,
                    prepare_set, psi_poly_smooth, psi_smooth,
                    run_clt_experiment, run_poly_fluctuation,
                    run_short_fluctuation, scale_pair_sets, slepian_rhs,
                    std_normal_cdf, tau3_interval_sum, theorem_bound,
                    verify_count_at_scales)
from rmflab.hashing import hash64_array, trial_seeds, unit_fraction

XX1 = PolySpec((0, 1, 1))
X2P1 = PolySpec((1, 0, 1))
IDENT = PolySpec((0, 1))


class Stopwatch:
    def __init__(self, label, budget_s=None):
        self.label = label
        self.budget = budget_s

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        if exc_type is None:
            print(f"\nACCEPTANCE PASS {self.label} ({elapsed:.1f}s)")
            if self.budget is not None:
                assert elapsed < self.budget, \
                    f"{self.label}: {elapsed:.1f}s over budget {self.budget}s"
        else:
            print(f"\nACCEPTANCE FAIL {self.label} ({elapsed:.1f}s)")
        return False


@pytest.fixture(scope="module", autouse=True)
def warm_kernels():
    """Touch every jitted kernel once so criterion timings measure the
    algorithms, not compilation (no-op once the on-disk cache is hot)."""
    s = build_sieve(300)
    prepare_set(s, ArithSet(Interval(100, 30), squarefree_only=True))
    tiny = ArithSet(Interval(20, 10))
    count_fourth_moment_oracle(s, [prepare_set(s, tiny)] * 4,
                               EquationKind.RATIO_MATCH,
                               TopPrimeConstraint.NONE)
    from rmflab.fastpath import rademacher_linear_scan
    rademacher_linear_scan([(1, 0), (1, 1)], [50], 4, 1)
    monte_carlo_sums(RmfModel.RADEMACHER, s,
                     ArithSet(Interval(100, 30), squarefree_only=True),
                     None, 2, 1)


def test_criterion_01_squarefree_density():
    with Stopwatch("1 squarefree density", 5.0):
        sieve = build_sieve(10**6)
        _, values = enumerate_set(
            sieve, ArithSet(Interval(10**6, 10**5), squarefree_only=True))
        density = values.size / 10**5
        assert abs(density - 6.0 / math.pi**2) < 0.005


def test_criterion_02_oracle_equivalence_counting():
    with Stopwatch("2 oracle equivalence (counting)", 120.0):
        sieve = build_sieve(200)
        roster = [
            prepare_set(sieve, ArithSet(Interval(120, 30))),
            prepare_set(sieve, ArithSet(Interval(120, 30),
                                        squarefree_only=True)),
            prepare_set(sieve, ArithSet(Interval(60, 25))),
            prepare_set(sieve, ArithSet(PolyImage(XX1, 10),
                                        squarefree_only=True)),
            prepare_set(sieve, ArithSet(PolyImage(X2P1, 10))),
        ]
        assert max(int(p.values.max()) for p in roster) <= 120
        checked = 0
        for combo in itertools.product(range(len(roster)), repeat=4):
            four = [roster[i] for i in combo]
            for kind in EquationKind:
                for cons in TopPrimeConstraint:
                    t = count_fourth_moment(sieve, four, kind, cons)
                    o = count_fourth_moment_oracle(sieve, four, kind, cons)
                    assert (t.total, t.trivial, t.nontrivial) == o, \
                        (combo, kind, cons)
                    checked += 1
        assert checked == len(roster)**4 * 6


def test_criterion_03_fixed_point_tallies():
    with Stopwatch("3 fixed-point tallies"):
        sieve = build_sieve(50)
        r4 = prepare_set(sieve, ArithSet(Interval(4, 4)))
        t = count_fourth_moment(sieve, [r4] * 4, EquationKind.RATIO_MATCH,
                                TopPrimeConstraint.NONE)
        assert t.total == 32 and t.nontrivial == 4
        r3 = prepare_set(sieve, ArithSet(Interval(3, 3),
                                         squarefree_only=True))
        t = count_fourth_moment(sieve, [r3] * 4, EquationKind.SQUARE_PRODUCT,
                                TopPrimeConstraint.NONE)
        assert t.total == 21 and t.nontrivial == 0


def test_criterion_04_A_B_exactness_with_monte_carlo():
    with Stopwatch("4 A/B exactness + Monte Carlo", 30.0):
        from rmflab import explicit_set
        sieve = build_sieve(50)
        one = CoefficientVector((1.0,))
        T = 10**5

        b_rad = compute_B(sieve, [explicit_set(sieve, [2, 3, 5])], one,
                          EquationKind.SQUARE_PRODUCT)
        assert abs(b_rad - 0.0) <= 1e-12
        # Monte Carlo of the quadratic variation: with one +/-1 value per
        # slice it is deterministic, so the estimate matches exactly
        primes = np.array([2, 3, 5], dtype=np.uint64)
        q_sq = np.empty(T)
        for i, s in enumerate(trial_seeds(41, T)):
            f = 1.0 - 2.0 * (hash64_array(int(s), primes)
                             >> np.uint64(63)).astype(float)
            q_sq[i] = ((f**2).sum() / 3.0 - 1.0)**2
        mc = q_sq.mean()
        se = q_sq.std(ddof=1) / math.sqrt(T)
        assert abs(mc - b_rad) <= 5 * se + 1e-15

        b_st = compute_B(sieve, [explicit_set(sieve, [2, 4])], one,
                         EquationKind.RATIO_MATCH)
        assert abs(b_st - 0.5) <= 1e-12
        # quadratic variation minus one is cos(theta_2) per trial
        two = np.array([2], dtype=np.uint64)
        theta = np.array([
            2.0 * math.pi * unit_fraction(hash64_array(int(s), two))[0]
            for s in trial_seeds(42, T)])
        samples = np.cos(theta)**2
        se = samples.std(ddof=1) / math.sqrt(T)
        assert abs(samples.mean() - b_st) <= 5 * se


def test_criterion_05_unit_variance():
    with Stopwatch("5 unit variance of the normalized sum", 60.0):
        sieve = build_sieve(10**4)
        T = 10**5
        sums = monte_carlo_sums(
            RmfModel.RADEMACHER, sieve,
            ArithSet(Interval(10**4, 10**3), squarefree_only=True),
            None, T, 505, workers=2)
        sq = sums**2
        tol = 5.0 * sq.std(ddof=1) / math.sqrt(T)
        assert abs(sq.mean() - 1.0) <= tol


def test_criterion_06_clt_distance_decay():
    with Stopwatch("6 Gaussian-distance decay over N", 300.0):
        T = 2 * 10**4
        sieve = build_sieve(50_002)
        ks = []
        for i, N in enumerate((500, 5000, 50000)):
            reps = run_clt_experiment(
                RmfModel.RADEMACHER, sieve,
                [ArithSet(PolyImage(XX1, N), squarefree_only=True)],
                None, T, 606 + i, workers=2)
            ks.append(reps[0].kolmogorov)
        print(f"  kolmogorov by N: {[f'{v:.4f}' for v in ks]}")
        assert ks[2] < 0.05
        band = 2.0 / math.sqrt(T)
        assert ks[1] <= ks[0] + band
        assert ks[2] <= ks[1] + band


def test_criterion_07_gaussian_max_calibration():
    with Stopwatch("7 Gaussian max calibration", 30.0):
        T = 10**5
        for k in (1, 4, 16):
            for t in (0.0, 1.0, 2.0):
                rep = gaussian_max_prob(np.eye(k), t, T, seed=707)
                target = std_normal_cdf(t)**k
                assert abs(rep.estimate - target) <= \
                    5 * max(rep.stderr, math.sqrt(target * (1 - target) / T)
                            + 1e-12), (k, t)


def test_criterion_08_fluctuation_growth():
    with Stopwatch("8 fluctuation growth in the scale count", 600.0):
        T = 300
        means = []
        errs = []
        for k in (4, 16, 64):
            rep = run_poly_fluctuation(RmfModel.RADEMACHER, XX1, 10**4, 0.5,
                                       None, T, 808, k_override=k)
            mean, se = rep.mean_max()
            means.append(mean)
            errs.append(se)
        print(f"  mean max by k: {[f'{m:.3f}+-{e:.3f}' for m, e in zip(means, errs)]}")
        for i in (0, 1):
            gap = means[i + 1] - means[i]
            combined = math.hypot(errs[i], errs[i + 1])
            assert gap > 2.0 * combined, (i, gap, combined)


def test_criterion_09_short_interval_pipeline_identity():
    with Stopwatch("9 short-interval second-moment identity", 120.0):
        T = 10**4
        rep = run_short_fluctuation(RmfModel.RADEMACHER, 10**4,
                                    HSpec.parse("pow:0.75"), 1.25, 0.478,
                                    0.5, None, T, 909, workers=2)
        assert rep.k == 3
        # interval disjointness (exact)
        fam = make_short_scales(10**4, HSpec.parse("pow:0.75"), 1.25,
                                0.478, 0.5)
        spans = [(N - H, N) for N, H in zip(fam.scales, fam.lengths)]
        for (_, hi1), (lo2, _) in zip(spans, spans[1:]):
            assert hi1 <= lo2
        # unnormalized second moment of each pruned-set sum equals its size
        for li, size in enumerate(rep.set_sizes):
            u_sq = (rep.per_scale_sums[:, li] * math.sqrt(size))**2
            se = u_sq.std(ddof=1) / math.sqrt(T)
            assert abs(u_sq.mean() - size) <= 5 * se, (li, u_sq.mean(), size)


def test_criterion_10_multi_scale_counting():
    with Stopwatch("10 multi-scale counting vs oracle", 300.0):
        fam = make_short_scales(2000, HSpec.parse("pow:0.8"), 1.5, 0.456, 0.5)
        sieve = build_sieve(fam.max_scale + 1)
        assert len(fam.prime_indices) >= 2
        for kind in EquationKind:
            for l1 in fam.prime_indices:
                for l2 in fam.prime_indices:
                    rep = verify_count_at_scales(sieve, fam, l1, l2, kind)
                    sets = scale_pair_sets(sieve, fam, l1, l2, kind)
                    o = count_fourth_moment_oracle(
                        sieve, sets, kind, TopPrimeConstraint.PAIRED_TWO_TWO)
                    assert (rep.tally.total, rep.tally.trivial,
                            rep.tally.nontrivial) == o
                    assert math.isfinite(rep.budget_ratio)
                    assert rep.budget_ratio >= 0.0


def test_criterion_11_deterministic_bound_arithmetic():
    with Stopwatch("11 bound arithmetic", 1.0):
        d = CltDiagnostics(k=2, eps1=1e-4, eps1prime=1e-4, eps2=1e-4,
                           max_ratio=1.0, iii_b=False)
        bv = theorem_bound(d, 0.0)
        bracket = 1e-4 + 4 * (1e-4 + 1e-4) + (4 * 1e-4 + 2 * 1.0)
        assert abs(bv.bracket - bracket) <= 1e-12 * bracket
        assert abs(bv.bound - bracket**0.2) <= 1e-12 * bracket**0.2

        e1p, e2, k, x = 1e-4, 3e-4, 3, 0.7
        defect, kol = conditional_bound(e1p, e2, k, x)
        base = k * math.sqrt(e1p + e2)
        assert abs(defect - base) <= 1e-12 * base
        want_kol = base**0.1 / (1 + abs(x)**3.2)
        assert abs(kol - want_kol) <= 1e-12 * want_kol

        d1 = CltDiagnostics(k=1, eps1=1e-4, eps1prime=2e-4, eps2=3e-4,
                            max_ratio=0.25, iii_b=False)
        uncond, cond = normal_comparison_bound(d1, 1.0, 0.5)
        want_u = 2.0 * (6e-4 + 0.25)**(1.0 / 10.0)
        want_c = 2.0 * math.sqrt(5e-4)**(1.0 / 20.0)
        assert abs(uncond - want_u) <= 1e-12 * want_u
        assert abs(cond - want_c) <= 1e-12 * want_c

        k, delta, eps = 10**4, 1e-2, 1e-4
        want = math.exp(-k**(delta / 20.0) / math.sqrt(math.log(k))) \
            + k**(-delta * delta / (50.0 * eps))
        got = slepian_rhs(k, delta, eps)
        assert abs(got - want) <= 1e-12 * want


def test_criterion_12_lemma_level_counts():
    with Stopwatch("12 lemma-level counts"):
        sieve = build_sieve(200)
        eps = 2.0 / math.log(math.log(20)) - 1.0  # threshold exactly 2.0
        count, _ = count_omega_exceed(sieve, 20, 20, eps)
        assert count == 5
        assert tau3_interval_sum(sieve, IDENT, 0, 5) == 16
        assert psi_smooth(sieve, 100, 5) == 34
        assert psi_poly_smooth(sieve, XX1, 10, 5)[0] == 7


def _cli(args, cwd):
    env = dict(os.environ)
    env.pop("RMFLAB_SIEVE_CACHE", None)
    res = subprocess.run([sys.executable, "-m", "rmflab", *args],
                         capture_output=True, text=True, cwd=cwd, env=env)
    assert res.returncode == 0, (args, res.stderr)


def test_criterion_13_cli_determinism(tmp_path):
    with Stopwatch("13 CLI determinism across runs and workers", 120.0):
        commands = {
            "clt": ["clt", "--model", "rademacher", "--set",
                    "interval:2000,400", "--trials", "120", "--seed", "7"],
            "fluct-poly": ["fluct-poly", "--poly", "0,1,1", "--X", "60",
                           "--eps0", "0.4", "--trials", "80", "--seed", "7"],
            "fluct-short": ["fluct-short", "--X", "10000", "--hspec",
                            "pow:0.75", "--delta", "1.25", "--eps0", "0.478",
                            "--trials", "60", "--seed", "7"],
            "slowvar": ["slowvar", "--poly", "0,1,1", "--c", "0.7", "--lmax",
                        "6", "--grid", "8", "--trials", "60", "--seed", "7"],
            "gaussmax": ["gaussmax", "--k", "4", "--t", "1.0", "--trials",
                         "4000", "--seed", "7"],
        }
        for name, base in commands.items():
            per_trial_csv = name != "gaussmax"  # gaussmax is summary-only
            blobs = []
            for tag, workers in (("a", "1"), ("b", "1"), ("c", "8"),
                                 ("d", "8")):
                csv = tmp_path / f"{name}-{tag}.csv"
                js = tmp_path / f"{name}-{tag}.json"
                args = base + ["--workers", workers, "--json", str(js)]
                if per_trial_csv:
                    args += ["--out", str(csv)]
                _cli(args, tmp_path)
                blobs.append((csv.read_bytes() if per_trial_csv else b"",
                              js.read_bytes()))
            assert blobs[0] == blobs[1], f"{name}: rerun differs (workers 1)"
            assert blobs[2] == blobs[3], f"{name}: rerun differs (workers 8)"
            assert blobs[0] == blobs[2], f"{name}: workers change output"

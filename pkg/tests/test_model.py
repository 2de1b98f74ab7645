import math
import random

import numpy as np
import pytest

from rmflab import (ArithSet, Interval, PolyImage, PolySpec, RmfModel,
                    RmfSample, TwistSelector, UsageError,
                    conditional_decompose, default_twist, f_at,
                    is_squarefree, largest_prime_factor, m_values,
                    martingale_slices, monte_carlo_sums, normalized_sum,
                    prepare_set, twisted_sum, validate_twist)


def test_prime_values_are_unit(sieve2k):
    samp_r = RmfSample(RmfModel.RADEMACHER, 99)
    samp_s = RmfSample(RmfModel.STEINHAUS, 99)
    for p in map(int, sieve2k.primes[:200]):
        assert samp_r.value_at_prime(p) in (-1, 1)
        assert abs(abs(samp_s.value_at_prime(p)) - 1.0) < 1e-15


def test_f_at_basics(sieve200):
    samp = RmfSample(RmfModel.RADEMACHER, 5)
    assert f_at(samp, sieve200, 1) == 1
    assert f_at(samp, sieve200, 6) == \
        f_at(samp, sieve200, 2) * f_at(samp, sieve200, 3)
    with pytest.raises(UsageError):
        f_at(samp, sieve200, 4)


def test_multiplicativity_on_random_coprime_pairs(sieve20k):
    rng = random.Random(3)
    samp_r = RmfSample(RmfModel.RADEMACHER, 17)
    samp_s = RmfSample(RmfModel.STEINHAUS, 17)
    checked = 0
    while checked < 10_000:
        m = rng.randrange(1, 140)
        n = rng.randrange(1, 140)
        if math.gcd(m, n) != 1:
            continue
        if not (is_squarefree(sieve20k, m) and is_squarefree(sieve20k, n)):
            continue
        assert f_at(samp_r, sieve20k, m * n) == \
            f_at(samp_r, sieve20k, m) * f_at(samp_r, sieve20k, n)
        zs = f_at(samp_s, sieve20k, m * n)
        assert abs(zs - f_at(samp_s, sieve20k, m)
                   * f_at(samp_s, sieve20k, n)) < 1e-12
        checked += 1


def test_twist_validation():
    assert default_twist(RmfModel.RADEMACHER) is TwistSelector.IDENTITY
    assert default_twist(RmfModel.STEINHAUS) is TwistSelector.SQRT2_RE
    with pytest.raises(UsageError):
        validate_twist(RmfModel.STEINHAUS, TwistSelector.IDENTITY)
    with pytest.raises(UsageError):
        validate_twist(RmfModel.RADEMACHER, TwistSelector.SQRT2_RE)


def test_twisted_sum_examples(sieve200):
    samp = RmfSample(RmfModel.RADEMACHER, 1)
    one = ArithSet(Interval(1, 1), squarefree_only=True)
    assert twisted_sum(samp, sieve200, one) == 1.0
    st = RmfSample(RmfModel.STEINHAUS, 1)
    prime_set = ArithSet(Interval(7, 1))
    z = f_at(st, sieve200, 7)
    assert twisted_sum(st, sieve200, prime_set) == \
        pytest.approx(math.sqrt(2) * z.real, abs=1e-12)
    assert twisted_sum(
        st, sieve200, prime_set,
        TwistSelector.SQRT2_IM) == pytest.approx(math.sqrt(2) * z.imag,
                                                 abs=1e-12)


def test_twisted_sum_matches_pointwise_evaluation(sieve2k):
    aset = ArithSet(Interval(600, 200), squarefree_only=True)
    prep = prepare_set(sieve2k, aset)
    samp = RmfSample(RmfModel.RADEMACHER, 31)
    manual = sum(f_at(samp, sieve2k, int(v)) for v in prep.values)
    assert twisted_sum(samp, sieve2k, prep) == pytest.approx(manual, abs=1e-9)
    st = RmfSample(RmfModel.STEINHAUS, 31)
    aset = ArithSet(Interval(600, 200))
    prep = prepare_set(sieve2k, aset)
    manual = sum(math.sqrt(2) * f_at(st, sieve2k, int(v)).real
                 for v in prep.values)
    assert twisted_sum(st, sieve2k, prep) == pytest.approx(manual, abs=1e-9)


def test_rademacher_requires_squarefree_filter(sieve200):
    samp = RmfSample(RmfModel.RADEMACHER, 1)
    with pytest.raises(UsageError):
        twisted_sum(samp, sieve200, ArithSet(Interval(10, 5)))


def test_twisted_sum_empty_set_is_zero(sieve200):
    samp = RmfSample(RmfModel.RADEMACHER, 1)
    empty = ArithSet(Interval(8, 1), squarefree_only=True)  # {8} filtered out
    assert twisted_sum(samp, sieve200, empty) == 0.0
    with pytest.raises(UsageError):
        m_values(samp, sieve200, martingale_slices(sieve200, empty))


def test_normalized_sum(sieve200):
    samp = RmfSample(RmfModel.RADEMACHER, 12)
    singleton = ArithSet(Interval(7, 1), squarefree_only=True)
    assert normalized_sum(samp, sieve200, singleton) == \
        twisted_sum(samp, sieve200, singleton)
    pair = ArithSet(Interval(3, 2), squarefree_only=True)
    assert normalized_sum(samp, sieve200, pair) == pytest.approx(
        twisted_sum(samp, sieve200, pair) / math.sqrt(2))
    empty = ArithSet(Interval(8, 1), squarefree_only=True)  # 8 not squarefree
    with pytest.raises(UsageError):
        normalized_sum(samp, sieve200, empty)


def test_martingale_slices_examples(sieve200):
    slices = martingale_slices(sieve200, ArithSet(Interval(4, 3)))
    assert {p: sorted(map(int, s.values)) for p, s in slices.items()} == \
        {2: [2, 4], 3: [3]}
    primes_only = martingale_slices(
        sieve200, ArithSet(Interval(7, 3)))  # {5, 6, 7}
    assert {p: list(map(int, s.values)) for p, s in primes_only.items()} == \
        {3: [6], 5: [5], 7: [7]}


def test_slice_partition_and_sum_identity(sieve2k):
    rng = random.Random(11)
    for trial in range(100):
        n = rng.randrange(30, 900)
        h = rng.randrange(10, min(n, 300))
        aset = ArithSet(Interval(n, h), squarefree_only=True)
        prep = prepare_set(sieve2k, aset)
        if prep.size == 0:
            continue
        slices = martingale_slices(sieve2k, prep)
        assert sum(s.size for s in slices.values()) == prep.size
        keys = {int(largest_prime_factor(sieve2k, int(v)))
                for v in prep.values}
        assert set(slices) == keys
        samp = RmfSample(RmfModel.RADEMACHER, rng.getrandbits(63))
        total = sum(m_values(samp, sieve2k, slices).values())
        s_n = normalized_sum(samp, sieve2k, prep)
        assert total == pytest.approx(s_n, rel=1e-12, abs=1e-12)


def test_conditional_decompose(sieve2k):
    prep = prepare_set(sieve2k, ArithSet(Interval(1000, 100),
                                         squarefree_only=True))
    split = conditional_decompose(sieve2k, prep, 31)
    rough_n = sum(len(v) for v in split.rough.values())
    assert rough_n + split.smooth.size == prep.size
    for p, entries in split.rough.items():
        assert p > 31
        for idx, value, cof in entries:
            assert cof * p == value
            assert largest_prime_factor(sieve2k, value) == p
    # oracle by enumeration
    want_rough = {int(v) for v in prep.values
                  if largest_prime_factor(sieve2k, int(v)) > 31}
    got_rough = {value for entries in split.rough.values()
                 for _, value, _ in entries}
    assert got_rough == want_rough
    assert split.unique_large_prime  # 31 >= sqrt(1000)

    everything = conditional_decompose(sieve2k, prep, 1000)
    assert not everything.rough
    at_one = conditional_decompose(sieve2k, prep, 1)
    assert [int(v) for v in at_one.smooth.values] == \
        ([1] if 1 in map(int, prep.values) else [])


def test_monte_carlo_sums_contract(sieve2k):
    aset = ArithSet(Interval(900, 300), squarefree_only=True)
    one = monte_carlo_sums(RmfModel.RADEMACHER, sieve2k, aset, None, 1, 55)
    from rmflab.hashing import trial_seed
    samp = RmfSample(RmfModel.RADEMACHER, trial_seed(55, 0))
    assert one[0] == pytest.approx(normalized_sum(samp, sieve2k, aset))
    a = monte_carlo_sums(RmfModel.RADEMACHER, sieve2k, aset, None, 257, 55)
    b = monte_carlo_sums(RmfModel.RADEMACHER, sieve2k, aset, None, 257, 55)
    assert np.array_equal(a, b)
    c = monte_carlo_sums(RmfModel.RADEMACHER, sieve2k, aset, None, 257, 55,
                         workers=8)
    assert np.array_equal(a, c)
    with pytest.raises(UsageError):
        monte_carlo_sums(RmfModel.RADEMACHER, sieve2k, aset, None, 0, 55)


def test_trailing_value_one_element(sieve200):
    # bowl polynomial: values [2, 1] at n = 1, 2; the unit value sits last,
    # exercising the empty factorization row at the end of the CSR
    bowl = ArithSet(PolyImage(PolySpec((5, -4, 1)), 2), squarefree_only=True)
    samp = RmfSample(RmfModel.RADEMACHER, 77)
    expect = f_at(samp, sieve200, 2) + 1
    assert twisted_sum(samp, sieve200, bowl) == expect
    sums = monte_carlo_sums(RmfModel.RADEMACHER, sieve200, bowl, None, 64, 3)
    assert set(np.round(sums * math.sqrt(2), 9)) <= {-0.0, 0.0, 2.0}
    st = ArithSet(PolyImage(PolySpec((5, -4, 1)), 2))
    z = monte_carlo_sums(RmfModel.STEINHAUS, sieve200, st, None, 16, 3)
    assert np.all(np.isfinite(z))


def test_monte_carlo_moments_both_models(sieve2k):
    aset = ArithSet(Interval(1500, 500), squarefree_only=True)
    T = 4000
    for model in (RmfModel.RADEMACHER, RmfModel.STEINHAUS):
        use = aset if model is RmfModel.RADEMACHER \
            else ArithSet(Interval(1500, 500))
        sums = monte_carlo_sums(model, sieve2k, use, None, T, 321)
        se_mean = sums.std(ddof=1) / math.sqrt(T)
        assert abs(sums.mean()) <= 5 * se_mean
        sq = sums**2
        se_var = sq.std(ddof=1) / math.sqrt(T)
        assert abs(sq.mean() - 1.0) <= 5 * se_var

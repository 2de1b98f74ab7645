import math

import pytest

from rmflab import (HKind, HSpec, UsageError, make_poly_scales,
                    make_short_scales)


def test_poly_recipe_example():
    X = round(math.e ** 4)
    fam = make_poly_scales(X, 0.5)
    logx = math.log(X)
    assert fam.k == int(math.floor(logx ** 0.5)) == 2
    assert fam.lam == pytest.approx(math.exp(math.sqrt(logx)))
    for l, N in enumerate(fam.scales, start=1):
        assert N == round(fam.lam ** l * X)
    assert fam.max_scale <= X * X


def test_poly_small_eps0_gives_single_scale():
    fam = make_poly_scales(1000, 0.01)
    assert fam.k == 1


def test_poly_range_cap_identity():
    # k*sqrt(log X) <= log X keeps the ladder below X**2
    for X in (100, 10_000, 1_000_000):
        fam = make_poly_scales(X, 0.45)
        assert fam.k * math.sqrt(math.log(X)) <= math.log(X) + 1e-9
        assert fam.max_scale <= X * X


def test_poly_usage_errors():
    with pytest.raises(UsageError):
        make_poly_scales(2, 0.5)
    with pytest.raises(UsageError):
        make_poly_scales(100, 0.0)
    with pytest.raises(UsageError):
        make_poly_scales(100, 1.0)
    with pytest.raises(UsageError):
        make_poly_scales(100, 0.5, k_override=0)


def test_poly_forced_k():
    for k in (4, 16, 64):
        fam = make_poly_scales(10**4, 0.5, k_override=k)
        assert fam.k == k and fam.forced_k
        assert fam.max_scale == 10**8
        assert all(b > a for a, b in zip(fam.scales, fam.scales[1:]))
        assert fam.scales[0] > 10**4


def test_hspec_parsing_and_validation():
    assert HSpec.parse("pow:0.75").kind is HKind.POWER_LAW
    assert HSpec.parse("logpow:2.5")(math.e ** 2) == pytest.approx(
        math.e ** 2 / 2 ** 2.5)
    assert HSpec.parse("subexp")(100.0) == pytest.approx(
        100.0 / math.exp(math.sqrt(math.log(100.0))))
    with pytest.raises(UsageError):
        HSpec.parse("pow:1.5")
    with pytest.raises(UsageError):
        HSpec.parse("mystery:1")


def test_short_family_example():
    hs = HSpec.parse("pow:0.75")
    fam = make_short_scales(10**4, hs, delta=1.25, eps0=0.478, eps=0.5)
    assert fam.k == 3
    # three smallest primes in (h/2, h]
    assert fam.prime_indices == (11, 13, 17)
    assert fam.scales == (110000, 130000, 170000)
    assert fam.top_prime_floor == int((10**4 * fam.h) ** (2 / 3))
    # long-interval regime here, so the Omega ceiling is active
    assert fam.omega_ceiling == int((1.5) * math.log(math.log(10**4)))
    ratios = [g1 / g2 for g1 in fam.gammas for g2 in fam.gammas]
    assert all(0.25 <= r <= 4.0 for r in ratios)


def test_short_family_interval_disjointness():
    fam = make_short_scales(10**4, HSpec.parse("pow:0.75"),
                            delta=1.25, eps0=0.478)
    spans = [(N - H, N) for N, H in zip(fam.scales, fam.lengths)]
    for (lo1, hi1), (lo2, hi2) in zip(spans, spans[1:]):
        assert hi1 <= lo2


def test_short_family_prime_deficit_errors():
    with pytest.raises(UsageError) as err:
        make_short_scales(10**4, HSpec.parse("pow:0.75"),
                          delta=0.3, eps0=0.478)
    assert "deficit" in str(err.value)


def test_short_family_regime_toggle():
    # tiny H: short-interval regime, no Omega ceiling
    fam = make_short_scales(10**6, HSpec.parse("pow:0.4"),
                            delta=0.35, eps0=0.081)
    n1, h1 = fam.scales[0], fam.lengths[0]
    assert h1 <= n1 / math.log(n1) ** 2
    assert fam.omega_ceiling is None
    assert fam.below_admissible_floor  # 0.4 < 11/15, annotated not fatal


def test_short_family_admissible_flag_clear():
    fam = make_short_scales(10**4, HSpec.parse("pow:0.75"),
                            delta=1.25, eps0=0.478)
    assert not fam.below_admissible_floor

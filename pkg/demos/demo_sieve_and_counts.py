#!/usr/bin/env python3
"""Tour of the arithmetic kernel: sieve construction, factor statistics and
the short-interval counting estimates."""

import math

from rmflab import (PolySpec, build_sieve, count_omega_exceed,
                    count_squarefree_rough, factorize, hmyrova_curve,
                    largest_prime_factor, psi_poly_smooth, psi_smooth, tau3,
                    tau3_interval_sum)

sieve = build_sieve(10**6)
print(f"sieve to {sieve.limit:,}: {sieve.primes.size:,} primes")

n = 510510  # 2*3*5*7*11*13*17
print(f"\nfactorize({n}) = {factorize(sieve, n)}")
print(f"P+({n}) = {largest_prime_factor(sieve, n)}, tau3({n}) = {tau3(sieve, n)}")

# values way beyond the table still factor through trial division
big = 999983 * 999979
print(f"factorize({big}) = {factorize(sieve, big)}  (beyond the table)")

print("\nsmooth counts Psi(N, y) against the (e/u)^u comparison curve:")
N = 10**5
for y in (10, 100, 1000):
    exact = psi_smooth(sieve, N, y)
    curve = hmyrova_curve(N, y)
    print(f"  Psi({N}, {y:>4}) = {exact:>6}   curve = {curve:12.1f}")

xx1 = PolySpec((0, 1, 1))
count, curve = psi_poly_smooth(sieve, xx1, 500, 50)
print(f"\nn <= 500 with n(n+1) 50-smooth: {count} (curve {curve:.1f})")

print("\ntau3 sums over short intervals (fourth-moment budgets):")
for N in (10**4, 10**5):
    H = int(N ** (2 / 3)) + 1
    s = tau3_interval_sum(sieve, xx1, N, H)
    print(f"  sum tau3(n(n+1)) over ({N}, {N + H}] = {s:>10}  "
          f"(H (log N)^c with c = {math.log(s / H) / math.log(math.log(N)):.2f})")

print("\nintegers with many prime factors thin out fast:")
for eps in (0.25, 0.5, 1.0):
    count, eps_prime = count_omega_exceed(sieve, 10**6, 10**5, eps)
    print(f"  eps = {eps}: {count:>6} of 10^5 exceed (1+eps)loglog N"
          f"   (predicted decay exponent eps' = {eps_prime:.4f})")

rough = count_squarefree_rough(sieve, 10**6, 10**5, 0.5)
print(f"\nsquarefree with P+ > sqrt(N) in (N-H, N]: {rough} of 10^5 "
      f"({rough / 10**5:.3f})")

"""
How far is Bin(n, p) from its normal approximation?
====================================================

The Kolmogorov distance between a binomial law and the normal law with the
same mean and variance is attained at a jump of the binomial cdf.  Scaling it
by sqrt(n) / rho(p) gives T_n(p), the quantity whose supremum over n and p is
the Berry-Esseen constant for Bernoulli summands.
"""

import numpy as np

from bebound.discrepancy import Mode, delta_n, k_window, rho, script_E
from bebound.numerics import BinomialPoint

# The smallest case already shows the mechanics: one coin flip with p = 1/2.
rec = delta_n(BinomialPoint(1, 0.5))
print(f"n=1, p=0.5: delta={rec.delta:.7f} at jump i={rec.k_star}, T={rec.t_value:.7f}")

# For larger n the maximising jump sits within a few standard deviations of
# the mean, so only a short window of i has to be visited.
pt = BinomialPoint(3000, 0.42)
full = delta_n(pt, Mode.FULL_RANGE)
win = k_window(pt)
fast = delta_n(pt)
print(f"n=3000: window [{win.lo}, {win.hi}] ({len(win)} of 3001 jumps), "
      f"same answer: {full.delta == fast.delta}")

# T_n(p) across p for a few n.  The curves flatten towards the limit
# script_E(p), whose maximum over [0.1689, 0.5] is close to 0.41.
ps = np.linspace(0.1689, 0.5, 12)
print("\n      p " + "".join(f"{f'n={n}':>11}" for n in (10, 100, 1000)) + "   limit")
for p in ps:
    row = [delta_n(BinomialPoint(n, float(p))).t_value for n in (10, 100, 1000)]
    print(f"{p:7.4f} " + "".join(f"{v:11.6f}" for v in row) + f"{script_E(float(p)):8.5f}")

# rho(p) blows up as p -> 0, which is why small p is handled by a separate,
# n-free inequality rather than by scanning.
print(f"\nrho(0.5)={rho(0.5)}, rho(0.1689)={rho(0.1689):.6f}, rho(0.01)={rho(0.01):.3f}")

"""
Closed-form bounds for large n and for small p
===============================================

Above some n the grid scan is replaced by explicit majorants: the
expansion bound E(p, n), which decreases in n, and the simpler
E(p) + d / (sigma (p^2 + q^2)) forms with a constant d.  For small p an
n-free modified Berry-Esseen inequality takes over.
"""

from bebound.tailbounds import (
    ESSEEN_CONSTANT,
    INTERVAL_I,
    N0,
    B_func,
    E_bound,
    SmallPVariant,
    crossing_n,
    maximize_over_p,
    normal_part_bound,
    small_p_T_bound,
    small_p_crossing,
    table2,
)

print(f"Esseen's lower bound C_E = {ESSEEN_CONSTANT:.10f}")

print("\nmax over p in [0.1689, 0.5] of the expansion majorant:")
for n in (200, 1000, 10_000, 100_000, N0):
    val, arg = maximize_over_p(lambda p: E_bound(p, n), *INTERVAL_I)
    print(f"  n={n:>7}: {val:.9f} at p={arg:.6f}")

val, arg = maximize_over_p(lambda p: B_func(p, N0), *INTERVAL_I)
print(f"principal part B at n=5e5: {val:.11f} at p={arg:.9f}")

# Where does the constant-d bound fall below a level?
for d, level, lo, hi in ((0.05532, 0.409954, 900_000, 1_000_000),
                         (0.1618, 0.410031, 4_200_000, 4_600_000)):
    n = crossing_n(d, level, lo, hi)
    sup = maximize_over_p(lambda p: normal_part_bound(p, n, d), *INTERVAL_I)[0]
    print(f"d={d}: first n with sup < {level} is {n} (sup {sup:.9f})")

print("\nsmall-p bounds on (0, 0.1689]:")
for v in SmallPVariant:
    b = small_p_crossing(v)
    print(f"  {v.value:9s} {small_p_T_bound(0.1689, v):.7f}; stays below C_E up to p={b:.4f}")

print("\nD2 maxima (coefficient of 1/sigma^2) and sigma^2 R maxima:")
for c in table2():
    print(f"  I={c.interval} N={c.N:>6}: D2 {c.D2_max:.7f}   sigma^2 R {c.D2bar_max:.5f}")

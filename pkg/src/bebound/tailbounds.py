"""Closed-form majorants of T_n(p) for large n and for small p.

Large n: an explicit expansion bound

    delta_n(p) <= rho(p) E(p) / sqrt(n) + R(p, n),   4/n <= p <= 0.5, n >= 200,

with R = K1 + K2 + K3.  Dividing by rho(p) / sqrt(n) gives the majorant
E_bound(p, n) = E(p) + sqrt(n) R(p, n) / rho(p), which decreases in n.

Small p: modified Berry-Esseen inequalities delta_n <= a (rho + b) / sqrt(n)
give n-free bounds a (1 + b / rho(p)) on T_n(p).

All constants live in :class:`TailBoundParams` so a run can print exactly
what it used.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Callable, Iterable

from .discrepancy import rho, script_E
from .errors import DomainError, PreconditionError
from .numerics import binom_cdf_strict, normal_cdf

__all__ = [
    "ESSEEN_CONSTANT",
    "N0",
    "INTERVAL_I",
    "TailBoundParams",
    "PARAMS",
    "OmegaSet",
    "omegas",
    "A_k",
    "e_np",
    "chi",
    "K1",
    "K2",
    "K3",
    "R",
    "R0",
    "E_bound",
    "G2",
    "G2_limit",
    "D2_coeff",
    "D2_bar",
    "B_func",
    "corollary_C_bound",
    "neammanee_T_bound",
    "normal_part_bound",
    "SmallPVariant",
    "small_p_T_bound",
    "small_p_crossing",
    "UspenskyReference",
    "uspensky_reference",
    "x_n_pm",
    "edgeworth_G",
    "maximize_over_p",
    "bisect_decreasing",
    "Table2Cell",
    "table2",
    "crossing_n",
]

_PI = math.pi
_SQRT_2PI = math.sqrt(2.0 * math.pi)

ESSEEN_CONSTANT = (3.0 + math.sqrt(10.0)) / (6.0 * _SQRT_2PI)
N0 = 500_000
INTERVAL_I = (0.1689, 0.5)
COROLLARY_C_D = 0.05532
NEAMMANEE_D = 0.1618


@dataclass(frozen=True)
class TailBoundParams:
    c1: float = 0.516
    c2: float = 0.121
    c3: float = 0.271
    gamma: tuple[float, ...] = (
        1.0 / 9.0,
        5.0 * _SQRT_2PI / 96.0,
        24.0,
        7.0 * _SQRT_2PI / 384.0,
        192.0 / 14400.0,
    )
    gamma_tilde: tuple[float, ...] = (2.0 / 3.0, 7.0 / 8.0, 10.0 / 9.0, 11.0 / 8.0, 5.0 / 3.0)
    e5: float = 0.0277905
    A1: float = 5.405
    A2: float = 7.521
    A3: float = 5.233
    mu: float = (3.0 * _PI**2 - 16.0) / _PI**4
    chi_threshold: float = 0.085

    def to_dict(self) -> dict:
        return asdict(self)


PARAMS = TailBoundParams()


@dataclass(frozen=True)
class OmegaSet:
    omega: float
    omega3: float
    omega4: float
    omega5: float
    omega6: float
    omega5_tilde: float
    V: tuple[float, float, float, float, float]  # V6..V10
    zeta: float


def omegas(p: float, params: TailBoundParams = PARAMS) -> OmegaSet:
    if not (0.0 < p <= 0.5):
        raise DomainError(f"p must lie in (0, 0.5], got {p!r}")
    q = 1.0 - p
    pq = p * q
    w = p * p + q * q
    o3 = q - p
    o4 = abs(q**3 + p**3 - 3.0 * pq)
    o5 = q**4 - p**4
    o6 = q**5 + p**5 + 15.0 * pq * pq
    o5t = p**4 + q**4 + 120.0 * params.e5 * pq**1.5
    V = (
        o3 * o3,
        o3 * o4,
        2.0 * o5t * o3 / (120.0 * 6.0) + (o4 / 24.0) ** 2,
        o5t * o4,
        o5t * o5t,
    )
    return OmegaSet(w, o3, o4, o5, o6, o5t, V, (w / 6.0) ** (2.0 / 3.0))


def _check_theorem_a(p: float, n: int) -> None:
    if not (0.0 < p <= 0.5):
        raise DomainError(f"p must lie in (0, 0.5], got {p!r}")
    if n < 200 or int(n) != n:
        raise PreconditionError(f"expansion bound needs integer n >= 200, got {n!r}")
    if not (4.0 / n <= p <= 0.5):
        raise PreconditionError(f"expansion bound needs 4/n <= p <= 0.5, got p={p!r}")


def _sigma(p: float, n: int) -> float:
    return math.sqrt(n * p * (1.0 - p))


def A_k(k: int, n: int) -> float:
    return (n / (n - 2.0)) ** (k / 2.0) * (n - 1.0) / n


def e_np(n: int, p: float, params: TailBoundParams = PARAMS) -> float:
    z = omegas(p, params).zeta
    return math.exp(1.0 / (24.0 * _sigma(p, n) ** (2.0 / 3.0) * z * z))


def chi(p: float, n: int, params: TailBoundParams = PARAMS) -> float:
    if p >= params.chi_threshold:
        return 0.0
    return 2.0 * omegas(p, params).zeta / _sigma(p, n) ** (2.0 / 3.0)


def K1(p: float, n: int, params: TailBoundParams = PARAMS) -> float:
    _check_theorem_a(p, n)
    om = omegas(p, params)
    s = _sigma(p, n)
    r = n / (n - 1.0)
    return (
        om.omega3 / (4.0 * s * _SQRT_2PI * (n - 1.0)) * (1.0 + 1.0 / (4.0 * (n - 1.0)))
        + om.omega4 / (12.0 * s**2 * _PI) * r**2
        + om.omega5 / (40.0 * s**3 * _SQRT_2PI) * r**2.5
        + om.omega6 / (90.0 * s**4 * _PI) * r**3
    )


def K2(p: float, n: int, params: TailBoundParams = PARAMS) -> float:
    _check_theorem_a(p, n)
    om = omegas(p, params)
    s = _sigma(p, n)
    e = e_np(n, p, params)
    total = 0.0
    for j in range(1, 6):
        g = params.gamma[j - 1]
        gt = params.gamma_tilde[j - 1]
        total += (
            g * A_k(j + 5, n) * om.V[j - 1] / s**j
            * (1.0 + gt * e * n / (s * s * (n - 2.0)))
        )
    return total / (_PI * s)


def K3(p: float, n: int, params: TailBoundParams = PARAMS) -> float:
    _check_theorem_a(p, n)
    z = omegas(p, params).zeta
    s = _sigma(p, n)
    mu, A1, A2, A3 = params.mu, params.A1, params.A2, params.A3
    s23 = s ** (2.0 / 3.0)
    body = (
        1.0 / (12.0 * s**2)
        + (1.0 / 36.0 + mu / 8.0) / s**4
        + (math.exp(A1 / 6.0) / 36.0 + mu / 8.0) / s**6
        + 5.0 * mu / 24.0 * math.exp(A2 / 6.0) / s**8
        + math.exp(-s * math.sqrt(A1) + A1 / 6.0) / 3.0
        + (_PI - 2.0) * mu * math.exp(-s * math.sqrt(A2) + A2 / 6.0)
        + math.exp(-s * math.sqrt(A3) + A3 / 6.0) * 0.25 * math.log(_PI**4 * s * s / (4.0 * A3))
        + math.exp(-s23 / (2.0 * z))
        * (
            2.0 * z / s23
            + math.exp(A3 / 6.0) * (1.0 + chi(p, n, params)) / (24.0 * z * s ** (4.0 / 3.0))
        )
    )
    return body / _PI


def R(p: float, n: int, params: TailBoundParams = PARAMS) -> float:
    return K1(p, n, params) + K2(p, n, params) + K3(p, n, params)


def R0(p: float, n: int, params: TailBoundParams = PARAMS) -> float:
    return math.sqrt(n) / rho(p) * R(p, n, params)


def E_bound(p: float, n: int, params: TailBoundParams = PARAMS) -> float:
    """Majorant of T_n(p); nonincreasing in n."""
    return script_E(p) + R0(p, n, params)


def G2(p: float, n: int) -> float:
    """36 pi times the 1/sigma^2 coefficient of R(p, n)."""
    if not (0.0 < p <= 0.5):
        raise DomainError(f"p must lie in (0, 0.5], got {p!r}")
    if n <= 2:
        raise DomainError(f"n must exceed 2, got {n!r}")
    q = 1.0 - p
    r = n / (n - 1.0)
    return 3.0 * abs(q**3 + p**3 - 3.0 * p * q) * r * r + 4.0 * A_k(6, n) * (q - p) ** 2 + 3.0


def G2_limit(p: float) -> float:
    """lim_{n -> inf} G2(p, n), piecewise quadratic with a kink at (3 - sqrt 3)/6."""
    if not (0.0 < p <= 0.5):
        raise DomainError(f"p must lie in (0, 0.5], got {p!r}")
    if p <= (3.0 - math.sqrt(3.0)) / 6.0:
        return 2.0 * (17.0 * p * p - 17.0 * p + 5.0)
    return -2.0 * (p * p - p - 2.0)


def D2_coeff(p: float, n: int) -> float:
    return G2(p, n) / (36.0 * _PI)


def D2_bar(p: float, n: int, params: TailBoundParams = PARAMS) -> float:
    return _sigma(p, n) ** 2 * R(p, n, params)


def B_func(p: float, n: int) -> float:
    """Principal part of E_bound: script_E plus the 1/sigma terms of K1, K2, K3."""
    if not (0.0 < p <= 0.5):
        raise DomainError(f"p must lie in (0, 0.5], got {p!r}")
    om = omegas(p)
    s = _sigma(p, n)
    r = n / (n - 1.0)
    inner = om.omega4 * r * r + 12.0 * PARAMS.gamma[0] * A_k(6, n) * om.V[0] + 1.0
    return script_E(p) + inner / (12.0 * _PI * om.omega * s)


def normal_part_bound(p: float, n: int, d: float) -> float:
    """E(p) + d / (sigma (p^2 + q^2)): T-scale form of E1/sigma + d/sigma^2."""
    if not (0.0 < p <= 0.5):
        raise DomainError(f"p must lie in (0, 0.5], got {p!r}")
    q = 1.0 - p
    return script_E(p) + d / (_sigma(p, n) * (p * p + q * q))


def corollary_C_bound(p: float, n: int, d: float = COROLLARY_C_D) -> float:
    if not (INTERVAL_I[0] <= p <= INTERVAL_I[1]):
        raise PreconditionError(f"needs p in [0.1689, 0.5], got {p!r}")
    return normal_part_bound(p, n, d)


def neammanee_T_bound(p: float, n: int, d: float = NEAMMANEE_D) -> float:
    if not (0.0 < p <= 0.5):
        raise DomainError(f"p must lie in (0, 0.5], got {p!r}")
    if _sigma(p, n) ** 2 < 100.0:
        raise PreconditionError("needs sigma^2 >= 100")
    return normal_part_bound(p, n, d)


class SmallPVariant(str, enum.Enum):
    KS2010 = "KS2010"
    SHV2013A = "Shv2013a"
    SHV2013B = "Shv2013b"


# delta_n <= coeff (rho + add) / sqrt(n)
_SMALL_P = {
    SmallPVariant.KS2010: (0.33477, 0.429),
    SmallPVariant.SHV2013A: (0.33554, 0.415),
    SmallPVariant.SHV2013B: (0.3328, 0.429),
}


def small_p_T_bound(p: float, variant: SmallPVariant | str = SmallPVariant.KS2010) -> float:
    """n-free bound coeff * (1 + add / rho(p)) on T_n(p); increasing on (0, 0.5]."""
    try:
        variant = SmallPVariant(variant)
    except ValueError:
        raise DomainError(f"unknown small-p variant {variant!r}") from None
    if not (0.0 < p <= 0.5):
        raise DomainError(f"p must lie in (0, 0.5], got {p!r}")
    coeff, add = _SMALL_P[variant]
    return coeff * (1.0 + add / rho(p))


def small_p_crossing(
    variant: SmallPVariant | str,
    level: float = ESSEEN_CONSTANT,
    tol: float = 1e-4,
) -> float:
    """Largest b with small_p_T_bound(b) <= level, located by bisection."""
    f = lambda b: small_p_T_bound(b, variant) - level  # noqa: E731
    lo, hi = 1e-6, 0.5
    if f(lo) > 0 or f(hi) <= 0:
        raise DomainError("level is not crossed on (0, 0.5]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return lo


def x_n_pm(x: float, n: int, p: float) -> tuple[float, float]:
    """((x - np + 1/2)/sigma, (x - np - 1/2)/sigma)."""
    s = _sigma(p, n)
    return (x - n * p + 0.5) / s, (x - n * p - 0.5) / s


def edgeworth_G(x: float, n: int, p: float) -> float:
    """Phi(x) plus the one-term skewness correction."""
    q = 1.0 - p
    s = _sigma(p, n)
    return normal_cdf(x) + (q - p) / (6.0 * _SQRT_2PI * s) * (1.0 - x * x) * math.exp(-0.5 * x * x)


@dataclass(frozen=True)
class UspenskyReference:
    bound: float
    approx: float | None = None
    exact: float | None = None


def uspensky_reference(p: float, n: int, a: int | None = None, b: int | None = None) -> UspenskyReference:
    """Right side (0.13 + 0.18|p - q|)/sigma^2 + exp(-3 sigma/2), valid for sigma^2 >= 25.

    With integers a < b also returns the Edgeworth approximation
    G(b_n^+) - G(a_n^-) (continuity correction taken outward) and the exact
    P(a <= S_n <= b) for comparison.
    """
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    s2 = n * p * (1.0 - p)
    if s2 < 25.0:
        raise PreconditionError(f"needs sigma^2 >= 25, got {s2!r}")
    s = math.sqrt(s2)
    q = 1.0 - p
    bound = (0.13 + 0.18 * abs(p - q)) / s2 + math.exp(-1.5 * s)
    if a is None or b is None:
        return UspenskyReference(bound)
    if not a < b:
        raise DomainError("needs a < b")
    approx = edgeworth_G(x_n_pm(b, n, p)[0], n, p) - edgeworth_G(x_n_pm(a, n, p)[1], n, p)
    exact = binom_cdf_strict(n, b + 1, p) - binom_cdf_strict(n, a, p)
    return UspenskyReference(bound, approx, exact)


# ---------------------------------------------------------------------------
# one-dimensional maximisation
# ---------------------------------------------------------------------------

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def maximize_over_p(
    f: Callable[[float], float],
    a: float,
    b: float,
    nodes: int = 10_000,
    xtol: float = 1e-9,
) -> tuple[float, float]:
    """(max, argmax) of f on [a, b]: bracketing grid then golden section."""
    xs = [a + (b - a) * j / nodes for j in range(nodes + 1)]
    xs[-1] = b
    vals = [f(x) for x in xs]
    j = max(range(len(vals)), key=vals.__getitem__)
    best_x, best_v = xs[j], vals[j]
    lo, hi = xs[max(j - 1, 0)], xs[min(j + 1, nodes)]
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > xtol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = f(d)
    for x, v in ((c, fc), (d, fd)):
        if v > best_v:
            best_x, best_v = x, v
    return best_v, best_x


def bisect_decreasing(g: Callable[[int], float], level: float, n_lo: int, n_hi: int) -> int:
    """Smallest integer n in (n_lo, n_hi] with g(n) < level, g decreasing."""
    if not (g(n_lo) >= level > g(n_hi)):
        raise DomainError("level is not crossed between the given n values")
    while n_hi - n_lo > 1:
        mid = (n_lo + n_hi) // 2
        if g(mid) < level:
            n_hi = mid
        else:
            n_lo = mid
    return n_hi


def crossing_n(d: float, level: float, n_lo: int, n_hi: int, interval=INTERVAL_I) -> int:
    """First n at which sup_p normal_part_bound(p, n, d) drops below ``level``."""
    sup = lambda n: maximize_over_p(lambda p: normal_part_bound(p, n, d), *interval, nodes=2000)[0]  # noqa: E731
    return bisect_decreasing(sup, level, n_lo, n_hi)


# ---------------------------------------------------------------------------
# table of D2 / D2bar maxima
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Table2Cell:
    interval: tuple[float, float]
    N: int
    D2_max: float
    D2bar_max: float
    D2_argmax: float
    D2bar_argmax: float


DEFAULT_TABLE2 = (((0.02, 0.5), 200), ((0.1689, 0.5), 200), ((0.1689, 0.5), N0))


def table2(cells: Iterable[tuple[tuple[float, float], int]] = DEFAULT_TABLE2) -> list[Table2Cell]:
    """Maxima over p in each interval of D2(p, N) and sigma^2 R(p, N).

    Both sequences are taken at n = N, where their maxima over n >= N sit.
    """
    out = []
    for (a, b), N in cells:
        d2, d2x = maximize_over_p(lambda p: D2_coeff(p, N), a, b)
        db, dbx = maximize_over_p(lambda p: D2_bar(p, N), a, b)
        out.append(Table2Cell((a, b), N, d2, db, d2x, dbx))
    return out

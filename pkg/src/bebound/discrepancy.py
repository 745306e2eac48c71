"""Kolmogorov discrepancy between Bin(n, p) and its matching normal law.

With left-continuous F(x) = P(S_n < x) and G(x) = Phi((x - np) / sigma), the
supremum of |F - G| is attained at a jump of F, so

    delta_{n,i}(p) = max(|F(i) - G(i)|, |F(i+1) - G(i)|),
    delta_n(p)     = max_{0 <= i <= n} delta_{n,i}(p),
    T_n(p)         = sqrt(n) * delta_n(p) / rho(p).

For n > 200 the maximising i is known to lie in the window
np - (nu + 1) sigma <= i <= np + nu sigma with nu = sqrt(3 + sqrt 6), so only
O(sigma) terms are visited.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from numba import njit

from .errors import DomainError, PreconditionError
from .numerics import (
    BinomialPoint,
    _lower_tail_from,
    _norm_cdf,
    _norm_pdf,
    _pmf_run,
    _two_prod_err,
    binom_cdf_strict,
    binom_pmf,
    normal_cdf,
)

__all__ = [
    "NU",
    "WINDOW_MIN_N",
    "Mode",
    "KWindow",
    "DiscrepancyRecord",
    "rho",
    "script_E",
    "script_E1",
    "k_window",
    "delta_nk",
    "delta_n",
    "t_value",
    "local_delta",
    "char_fn_modulus",
]

NU = math.sqrt(3.0 + math.sqrt(6.0))
# the restricted window is only justified strictly above this n
WINDOW_MIN_N = 200
_SQRT_2PI = math.sqrt(2.0 * math.pi)


class Mode(str, enum.Enum):
    FULL_RANGE = "FullRange"
    RESTRICTED_WINDOW = "RestrictedWindow"


@dataclass(frozen=True)
class KWindow:
    lo: int
    hi: int

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise DomainError(f"empty window [{self.lo}, {self.hi}]")

    def __len__(self) -> int:
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class DiscrepancyRecord:
    point: BinomialPoint
    delta: float
    k_star: int
    t_value: float
    mode: Mode


def rho(p: float) -> float:
    """Normalised third absolute moment (p^2 + q^2) / sqrt(pq)."""
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    q = 1.0 - p
    return (p * p + q * q) / math.sqrt(p * q)


def _check_half(p: float) -> None:
    if not (0.0 < p <= 0.5):
        raise DomainError(f"p must lie in (0, 0.5], got {p!r}")


def script_E1(p: float) -> float:
    """(2 - p) / (3 sqrt(2 pi)); the leading coefficient of delta_n in 1/sigma."""
    _check_half(p)
    return (2.0 - p) / (3.0 * _SQRT_2PI)


def script_E(p: float) -> float:
    """Limit of T_n(p) as n grows: script_E1(p) / (p^2 + q^2)."""
    _check_half(p)
    q = 1.0 - p
    return script_E1(p) / (p * p + q * q)


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _window_bounds(n, p, restricted):
    if not restricted:
        return 0, n
    q = 1.0 - p
    mu = n * p
    s = math.sqrt(mu * q)
    lo = int(math.ceil(mu - (NU + 1.0) * s))
    hi = int(math.floor(mu + NU * s))
    if lo < 0:
        lo = 0
    if hi > n:
        hi = n
    return lo, hi


@njit(cache=True)
def _delta_n_kernel(n, p, lo, hi):
    """(delta, k_star) over i in [lo, hi]; smallest i wins ties."""
    q = 1.0 - p
    mu = n * p
    s = math.sqrt(mu * q)
    pm = _pmf_run(n, p, q, lo, hi)
    acc = 0.0
    comp = 0.0
    if lo > 0:
        acc = _lower_tail_from(n, p, q, lo, pm[0])
    # n*p rounds with an absolute error of order ulp(n); keep the lost part
    mu_lo = _two_prod_err(float(n), p, mu)
    best = -1.0
    kstar = lo
    for i in range(lo, hi + 1):
        f_left = acc + comp
        g = _norm_cdf(((i - mu) - mu_lo) / s)
        v = pm[i - lo]
        t = acc + v
        if abs(acc) >= abs(v):
            comp += (acc - t) + v
        else:
            comp += (v - t) + acc
        acc = t
        f_right = acc + comp
        d = max(abs(f_left - g), abs(f_right - g))
        if d > best:
            best = d
            kstar = i
    return best, kstar


@njit(cache=True)
def _rho(p):
    q = 1.0 - p
    return (p * p + q * q) / math.sqrt(p * q)


@njit(cache=True)
def _t_value(n, p):
    """T_n(p) with the default mode policy (window only for n > 200)."""
    lo, hi = _window_bounds(n, p, n > WINDOW_MIN_N)
    best, _ = _delta_n_kernel(n, p, lo, hi)
    return math.sqrt(n) * best / _rho(p)


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def _resolve_mode(point: BinomialPoint, mode: Mode | str | None) -> Mode:
    if mode is None:
        return Mode.RESTRICTED_WINDOW if point.n > WINDOW_MIN_N else Mode.FULL_RANGE
    mode = Mode(mode)
    if mode is Mode.RESTRICTED_WINDOW and point.n <= WINDOW_MIN_N:
        raise PreconditionError(
            f"restricted window needs n > {WINDOW_MIN_N}, got n={point.n}"
        )
    return mode


def _centred(point: BinomialPoint, x: float) -> float:
    """x - np with the rounding error of the product n*p restored."""
    mu = point.mean
    return (x - mu) - float(_two_prod_err(float(point.n), point.p, mu))


def k_window(point: BinomialPoint, mode: Mode | str | None = None) -> KWindow:
    mode = _resolve_mode(point, mode)
    lo, hi = _window_bounds(point.n, point.p, mode is Mode.RESTRICTED_WINDOW)
    return KWindow(int(lo), int(hi))


def delta_nk(point: BinomialPoint, i: int) -> float:
    """Discrepancy contributed by the jump of F at i (both one-sided limits)."""
    n = point.n
    if int(i) != i or not (0 <= i <= n):
        raise DomainError(f"i must be an integer in [0, {n}], got {i!r}")
    g = normal_cdf(_centred(point, i) / point.sigma)
    return max(
        abs(binom_cdf_strict(n, i, point.p) - g),
        abs(binom_cdf_strict(n, i + 1, point.p) - g),
    )


def delta_n(point: BinomialPoint, mode: Mode | str | None = None) -> DiscrepancyRecord:
    """Kolmogorov distance between Bin(n, p) and N(np, npq).

    ``mode=None`` picks the restricted window exactly when n > 200.
    """
    mode = _resolve_mode(point, mode)
    win = k_window(point, mode)
    best, kstar = _delta_n_kernel(point.n, point.p, win.lo, win.hi)
    best = float(best)
    return DiscrepancyRecord(
        point=point,
        delta=best,
        k_star=int(kstar),
        t_value=math.sqrt(point.n) * best / rho(point.p),
        mode=mode,
    )


def t_value(n: int, p: float) -> float:
    """T_n(p) = sqrt(n) delta_n(p) / rho(p)."""
    return delta_n(BinomialPoint(n, p)).t_value


def local_delta(point: BinomialPoint, k: int) -> float:
    """Signed local deviation P_n(k) - phi((k - np)/sigma) / sigma."""
    n = point.n
    if int(k) != k or not (0 <= k <= n):
        raise DomainError(f"k must be an integer in [0, {n}], got {k!r}")
    s = point.sigma
    return binom_pmf(n, k, point.p) - float(_norm_pdf(_centred(point, k) / s)) / s


def char_fn_modulus(p: float, t: float) -> float:
    """|q e^{-itp} + p e^{itq}|, written as sqrt(1 - 4pq sin^2(t/2))."""
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    q = 1.0 - p
    sh = math.sin(0.5 * t)
    return math.sqrt(max(0.0, 1.0 - 4.0 * p * q * sh * sh))

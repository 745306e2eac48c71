"""Binomial probabilities and the normal law in binary64.

The binomial pmf is anchored with Loader's saddle-point form (Stirling
remainders plus a stable deviance term), which keeps full relative accuracy
for large ``n`` where differences of ``lgamma`` values lose digits.  Runs of
consecutive pmf values are then produced by the ratio recurrence

    P(k+1) / P(k) = (n - k) / (k + 1) * p / q

and partial sums are accumulated with Neumaier compensation in a fixed order.

The ``_``-prefixed kernels are numba-compiled and shared with the
discrepancy and scan modules; the public functions validate their arguments
and delegate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import DomainError

__all__ = [
    "BinomialPoint",
    "PrecisionPolicy",
    "DEFAULT_PRECISION",
    "log_binom_pmf",
    "binom_pmf",
    "binom_pmf_vector",
    "binom_cdf_strict",
    "normal_cdf",
    "normal_pdf",
    "neumaier_sum",
]

SQRT2 = math.sqrt(2.0)
LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# stirlerr(k) = lgamma(k + 1) - (k + 1/2) log k + k - log sqrt(2 pi), k = 0..15,
# evaluated at 40 digits.
_STIRLERR_TABLE = np.array(
    [
        0.0,
        0.081061466795327258,
        0.041340695955409294,
        0.027677925684998339,
        0.020790672103765093,
        0.016644691189821192,
        0.013876128823070748,
        0.01189670994589177,
        0.010411265261972096,
        0.0092554621827127329,
        0.0083305634333628713,
        0.0075736754879518408,
        0.0069428401072095299,
        0.0064089941880042071,
        0.0059513701127588477,
        0.0055547335519628014,
    ]
)

_S0 = 1.0 / 12.0
_S1 = 1.0 / 360.0
_S2 = 1.0 / 1260.0
_S3 = 1.0 / 1680.0
_S4 = 1.0 / 1188.0

# Tail truncation: stop once the geometric bound on the remainder falls below
# this fraction of the partial sum.
_TAIL_REL = 1e-20


@dataclass(frozen=True)
class PrecisionPolicy:
    """Accuracy targets the numerical kernels are tested against."""

    pmf_rel_tol: float = 1e-13
    cdf_abs_tol: float = 1e-14
    phi_abs_tol: float = 1e-15

    def __post_init__(self) -> None:
        for name in ("pmf_rel_tol", "cdf_abs_tol", "phi_abs_tol"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")


DEFAULT_PRECISION = PrecisionPolicy()


@dataclass(frozen=True)
class BinomialPoint:
    """A binomial law Bin(n, p); ``q`` is formed once as ``1 - p``."""

    n: int
    p: float
    q: float = field(init=False)
    sigma: float = field(init=False)

    def __post_init__(self) -> None:
        n, p = self.n, self.p
        if isinstance(n, bool) or int(n) != n or n < 1:
            raise DomainError(f"n must be a positive integer, got {n!r}")
        if not (0.0 < p < 1.0):
            raise DomainError(f"p must lie in (0, 1), got {p!r}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "p", float(p))
        q = 1.0 - float(p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "sigma", math.sqrt(self.n * self.p * q))

    @property
    def mean(self) -> float:
        return self.n * self.p

    def reflected(self) -> "BinomialPoint":
        """Bin(n, 1 - p)."""
        return BinomialPoint(self.n, self.q)


# ---------------------------------------------------------------------------
# compiled kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _stirlerr(k):
    if k <= 15:
        return _STIRLERR_TABLE[int(k)]
    nn = k * k
    if k > 500:
        return (_S0 - _S1 / nn) / k
    if k > 80:
        return (_S0 - (_S1 - _S2 / nn) / nn) / k
    if k > 35:
        return (_S0 - (_S1 - (_S2 - _S3 / nn) / nn) / nn) / k
    return (_S0 - (_S1 - (_S2 - (_S3 - _S4 / nn) / nn) / nn) / nn) / k


@njit(cache=True)
def _bd0(x, m):
    """Deviance x log(x/m) + m - x without cancellation for x close to m."""
    d = x - m
    if abs(d) < 0.1 * (x + m):
        v = d / (x + m)
        s = d * v
        ej = 2.0 * x * v
        v2 = v * v
        for j in range(1, 1000):
            ej *= v2
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
        return s
    return x * math.log(x / m) + m - x


@njit(cache=True)
def _log_pmf(n, k, p, q):
    if k == 0:
        return n * math.log(q)
    if k == n:
        return n * math.log(p)
    fn = float(n)
    fk = float(k)
    fnk = fn - fk
    lc = (
        _stirlerr(fn)
        - _stirlerr(fk)
        - _stirlerr(fnk)
        - _bd0(fk, fn * p)
        - _bd0(fnk, fn * q)
    )
    return lc - LN_SQRT_2PI + 0.5 * math.log(fn / (fk * fnk))


@njit(cache=True)
def _split(a):
    c = 134217729.0 * a  # 2^27 + 1
    hi = c - (c - a)
    return hi, a - hi


@njit(cache=True)
def _two_prod_err(a, b, prod):
    """Exact a*b - prod for prod = fl(a*b) (Dekker), barring overflow."""
    ah, al = _split(a)
    bh, bl = _split(b)
    return ((ah * bh - prod) + ah * bl + al * bh) + al * bl


@njit(cache=True)
def _norm_cdf(x):
    if x < 0.0:
        return 0.5 * math.erfc(-x / SQRT2)
    return 1.0 - 0.5 * math.erfc(x / SQRT2)


@njit(cache=True)
def _norm_pdf(x):
    return INV_SQRT_2PI * math.exp(-0.5 * x * x)


@njit(cache=True)
def _mode(n, p):
    m = int(math.floor((n + 1) * p))
    if m > n:
        m = n
    return m


@njit(cache=True)
def _pmf_run(n, p, q, lo, hi):
    """P(k) for k = lo..hi, anchored at the mode clamped into [lo, hi]."""
    out = np.empty(hi - lo + 1)
    m = _mode(n, p)
    if m < lo:
        m = lo
    elif m > hi:
        m = hi
    r = p / q
    out[m - lo] = math.exp(_log_pmf(n, m, p, q))
    for k in range(m, hi):
        out[k + 1 - lo] = out[k - lo] * ((n - k) / (k + 1.0)) * r
    for k in range(m, lo, -1):
        out[k - 1 - lo] = out[k - lo] * (k / (n - k + 1.0)) / r
    return out


@njit(cache=True)
def _lower_tail_from(n, p, q, k, pk):
    """Sum of P(j) for j < k given P(k) = pk (descending compensated sum)."""
    s = 0.0
    c = 0.0
    t = pk
    r = p / q
    j = k
    while j > 0:
        ratio = (j / (n - j + 1.0)) / r
        t = t * ratio
        j -= 1
        u = s + t
        if abs(s) >= abs(t):
            c += (s - u) + t
        else:
            c += (t - u) + s
        s = u
        if t == 0.0:
            break
        if ratio < 1.0 and t * ratio / (1.0 - ratio) <= _TAIL_REL * (s + c):
            break
    return s + c


@njit(cache=True)
def _lower_cum(n, m, p, q):
    """P(S <= m) for 0 <= m <= n, summing from the anchor P(m) downward."""
    pm = math.exp(_log_pmf(n, m, p, q))
    return _lower_tail_from(n, p, q, m, pm) + pm


@njit(cache=True)
def _cdf_strict(n, x, p, q):
    if x <= 0:
        return 0.0
    if x > n:
        return 1.0
    # sum whichever tail is lighter
    if x - 1 <= n * p:
        return _lower_cum(n, x - 1, p, q)
    return 1.0 - _lower_cum(n, n - x, q, p)


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def _check_p(p: float) -> None:
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p!r}")


def _check_n(n: int) -> None:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")


def _check_k(n: int, k: int) -> None:
    if int(k) != k or not (0 <= k <= n):
        raise DomainError(f"k must be an integer in [0, {n}], got {k!r}")


def log_binom_pmf(n: int, k: int, p: float) -> float:
    """Natural log of C(n, k) p^k (1-p)^(n-k)."""
    _check_n(n)
    _check_p(p)
    _check_k(n, k)
    return float(_log_pmf(int(n), int(k), float(p), 1.0 - float(p)))


def binom_pmf(n: int, k: int, p: float) -> float:
    return math.exp(log_binom_pmf(n, k, p))


def binom_pmf_vector(n: int, p: float) -> np.ndarray:
    """All pmf values P(0..n), anchored at the mode."""
    _check_n(n)
    _check_p(p)
    return _pmf_run(int(n), float(p), 1.0 - float(p), 0, int(n))


def binom_cdf_strict(n: int, x: int, p: float) -> float:
    """Left-continuous binomial cdf P(S_n < x).

    Zero for ``x <= 0`` and one for ``x > n``.  Otherwise the lighter tail is
    summed from its largest term outward and the complement taken if needed.
    """
    _check_n(n)
    _check_p(p)
    if int(x) != x:
        raise DomainError(f"x must be an integer, got {x!r}")
    return float(_cdf_strict(int(n), int(x), float(p), 1.0 - float(p)))


def normal_cdf(x: float) -> float:
    """Standard normal distribution function via erfc in the lighter tail."""
    return float(_norm_cdf(float(x)))


def normal_pdf(x: float) -> float:
    return float(_norm_pdf(float(x)))


def neumaier_sum(values) -> float:
    """Compensated sum of ``values`` in the given order."""
    s = 0.0
    c = 0.0
    for v in values:
        v = float(v)
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c

"""Lipschitz control of T_n(p) in p and grid-to-interval certificates.

For 0 < p1 < p <= 0.5 and every n, k the normalised jump discrepancy
g_k(p) = delta_{n,k}(p) / rho(p) satisfies

    |g_k(p) - g_k(p1)| <= L(p1) (p - p1),
    |g_k(p) - g_k(p2)| <  L(p1) (p2 - p)     for p1 < p < p2 <= 0.5,

with L decreasing on (0, 0.5].  Taking the maximum over k transfers both
inequalities to T_n / sqrt(n).  Two certificates follow:

* the coarse one, ``grid_max + sqrt(n) * (h/2) * L(p_lo)``, valid on a
  uniform grid with step h starting at p_lo;
* a per-cell one, ``(T(a) + T(b))/2 + sqrt(n) * L(a) * (b - a)/2`` on a cell
  [a, b], which never exceeds the coarse bound and can be bisected until it
  drops under a target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from numba import njit

from .discrepancy import rho
from .errors import DomainError
from .numerics import _norm_pdf, binom_pmf

__all__ = [
    "LipschitzConstants",
    "CONSTANTS",
    "GridCertificate",
    "lipschitz_L",
    "L1",
    "L2",
    "L3",
    "A_func",
    "dF_dp",
    "dG_dp",
    "certify_interval",
    "cell_bound",
    "refine_cells",
]


@dataclass(frozen=True)
class LipschitzConstants:
    c1: float = 0.516
    c2: float = 0.121
    c3: float = 0.271


CONSTANTS = LipschitzConstants()
_C1, _C2, _C3 = CONSTANTS.c1, CONSTANTS.c2, CONSTANTS.c3


@dataclass(frozen=True)
class GridCertificate:
    """Upper bound on sup T_n over [p_lo, p_hi] from a uniform grid."""

    n: int
    p_lo: float
    p_hi: float
    step: float
    grid_max: float
    slack: float
    certified_bound: float


def _check_half(p: float) -> None:
    if not (0.0 < p <= 0.5):
        raise DomainError(f"p must lie in (0, 0.5], got {p!r}")


@njit(cache=True)
def _lipschitz_L(p):
    q = 1.0 - p
    pq = p * q
    w = 1.0 - 2.0 * pq
    return (_C1 / p + _C2 + _C3 * (1.0 - 2.0 * p) * (1.0 + 2.0 * pq) / w) / (
        w * math.sqrt(pq)
    )


def lipschitz_L(p: float) -> float:
    """Modulus L(p); decreasing on (0, 0.5]."""
    _check_half(p)
    return float(_lipschitz_L(float(p)))


def L1(p: float) -> float:
    """(c1/q + c2) / (pq): bound on d/dp [F(k+1) - G(k)]."""
    _check_half(p)
    q = 1.0 - p
    return (_C1 / q + _C2) / (p * q)


def L2(p: float) -> float:
    """(c1/p + c2) / (pq): bound on d/dp [F(k) - G(k)]."""
    _check_half(p)
    q = 1.0 - p
    return (_C1 / p + _C2) / (p * q)


def L3(p: float) -> float:
    """L2(p) / rho(p)."""
    return L2(p) / rho(p)


def A_func(p: float) -> float:
    """Twice the derivative of 1/rho(p)."""
    if not (0.0 < p < 0.5):
        raise DomainError(f"p must lie in (0, 0.5), got {p!r}")
    q = 1.0 - p
    pq = p * q
    w = 1.0 - 2.0 * pq
    return (1.0 - 2.0 * p) * (1.0 + 2.0 * pq) / (math.sqrt(pq) * w * w)


def dF_dp(n: int, k: int, p: float, shifted: bool = False) -> float:
    """Partial derivative in p of F(k) (or of F(k+1) when ``shifted``)."""
    if not (0 <= k <= n) or int(k) != k:
        raise DomainError(f"k must be an integer in [0, {n}], got {k!r}")
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    q = 1.0 - p
    if shifted:
        return -((n - k) / q) * binom_pmf(n, k, p)
    return -(k / p) * binom_pmf(n, k, p)


def dG_dp(n: int, k: float, p: float) -> float:
    """Partial derivative in p of Phi((k - np) / sqrt(npq)); real k allowed."""
    if not (0 <= k <= n):
        raise DomainError(f"k must lie in [0, {n}], got {k!r}")
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    q = 1.0 - p
    pq = p * q
    s = math.sqrt(n * pq)
    x = (k - n * p) / s
    return -(k * (1.0 - 2.0 * p) + n * p) / (2.0 * pq * s) * float(_norm_pdf(x))


def certify_interval(
    n: int, grid_max: float, p_lo: float, h: float, p_hi: float = 0.5
) -> GridCertificate:
    """Coarse certificate: every p in [p_lo, p_hi] is within h/2 of a node."""
    if not h > 0:
        raise DomainError(f"step must be positive, got {h!r}")
    if not (0.0 < p_lo < 0.5):
        raise DomainError(f"p_lo must lie in (0, 0.5), got {p_lo!r}")
    if not (p_lo < p_hi <= 0.5):
        raise DomainError(f"p_hi must lie in ({p_lo}, 0.5], got {p_hi!r}")
    slack = math.sqrt(n) * (h / 2.0) * lipschitz_L(p_lo)
    return GridCertificate(
        n=int(n),
        p_lo=float(p_lo),
        p_hi=float(p_hi),
        step=float(h),
        grid_max=float(grid_max),
        slack=slack,
        certified_bound=float(grid_max) + slack,
    )


@njit(cache=True)
def _cell_bound(sqrt_n, a, b, fa, fb):
    return 0.5 * (fa + fb) + sqrt_n * _lipschitz_L(a) * (b - a) * 0.5


def cell_bound(n: int, a: float, b: float, fa: float, fb: float) -> float:
    """Bound on sup of T_n over [a, b] from its endpoint values."""
    _check_half(a)
    _check_half(b)
    if not a < b:
        raise DomainError(f"cell must satisfy a < b, got [{a}, {b}]")
    return float(_cell_bound(math.sqrt(n), a, b, fa, fb))


def refine_cells(
    func: Callable[[float], float],
    n: int,
    nodes: Sequence[float],
    values: Sequence[float],
    target: float,
    max_depth: int = 40,
    allowance: float = 0.0,
) -> tuple[float, int]:
    """Bisect grid cells until each cell bound is below ``target``.

    ``func`` evaluates T_n.  Returns the largest leaf bound (plus
    ``allowance``) and the number of extra evaluations.  A cell that still
    exceeds the target at ``max_depth`` keeps its bound, so the result is
    always a valid upper bound; it is merely above the target.
    """
    sqrt_n = math.sqrt(n)
    worst = -math.inf
    evals = 0
    for j in range(len(nodes) - 1):
        stack = [(nodes[j], nodes[j + 1], values[j], values[j + 1], 0)]
        while stack:
            a, b, fa, fb, depth = stack.pop()
            bound = float(_cell_bound(sqrt_n, a, b, fa, fb)) + allowance
            if bound < target or depth >= max_depth:
                worst = max(worst, bound)
                continue
            m = 0.5 * (a + b)
            fm = func(m)
            evals += 1
            stack.append((m, b, fm, fb, depth + 1))
            stack.append((a, m, fa, fm, depth + 1))
    return worst, evals

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bebound.certify import (
    CONSTANTS,
    A_func,
    L1,
    L2,
    L3,
    cell_bound,
    certify_interval,
    dF_dp,
    dG_dp,
    lipschitz_L,
    refine_cells,
)
from bebound.discrepancy import delta_nk, rho, t_value
from bebound.errors import DomainError
from bebound.numerics import BinomialPoint, binom_cdf_strict, binom_pmf, normal_cdf, normal_pdf
from oracles import mp_rho

FD_STEP = 1e-6
FD_REL = 1e-6
c1, c2, c3 = CONSTANTS.c1, CONSTANTS.c2, CONSTANTS.c3


def central(f, x, h=FD_STEP):
    return (f(x + h) - f(x - h)) / (2 * h)


def mp_L(p):
    p = mpmath.mpf(p)
    pq = p * (1 - p)
    w = 1 - 2 * pq
    return (mpmath.mpf("0.516") / p + mpmath.mpf("0.121")
            + mpmath.mpf("0.271") * (1 - 2 * p) * (1 + 2 * pq) / w) / (w * mpmath.sqrt(pq))


def test_constants_are_fixed():
    assert (c1, c2, c3) == (0.516, 0.121, 0.271)
    with pytest.raises(AttributeError):
        CONSTANTS.c1 = 1.0


def test_L_values():
    assert 12.9 < lipschitz_L(0.1689) < 12.98
    assert lipschitz_L(0.1689) == pytest.approx(float(mp_L("0.1689")), rel=1e-14)
    assert lipschitz_L(0.5) == pytest.approx(4 * (2 * c1 + c2), rel=1e-15)
    with pytest.raises(DomainError):
        lipschitz_L(0.0)
    with pytest.raises(DomainError):
        lipschitz_L(0.51)


def test_L1_L2():
    assert L1(0.5) == L2(0.5) == pytest.approx(4 * (1.032 + 0.121), rel=1e-15)
    assert L2(0.25) / L1(0.25) == pytest.approx((c1 / 0.25 + c2) / (c1 / 0.75 + c2), rel=1e-15)
    p = mpmath.mpf("0.1689")
    want = (mpmath.mpf("0.516") / p + mpmath.mpf("0.121")) / (p * (1 - p))
    assert L2(0.1689) == pytest.approx(float(want), rel=1e-14)


@given(p=st.floats(1e-4, 0.5))
def test_L1_below_L2(p):
    assert L1(p) <= L2(p)


@given(p=st.floats(1e-3, 0.4999))
def test_L_identity(p):
    assert lipschitz_L(p) == pytest.approx(L2(p) / rho(p) + c3 * A_func(p), rel=1e-13)


def test_A_is_twice_derivative_of_inverse_rho():
    fd = central(lambda x: 2.0 / rho(x), 0.3)
    assert A_func(0.3) == pytest.approx(fd, rel=FD_REL)
    exact = 2 * mpmath.diff(lambda x: 1 / mp_rho(x), mpmath.mpf("0.3"))
    assert A_func(0.3) == pytest.approx(float(exact), rel=1e-14)
    assert A_func(0.5 - 1e-12) < 1e-10
    assert A_func(0.2) > A_func(0.3)
    with pytest.raises(DomainError):
        A_func(0.5)


@pytest.mark.parametrize("fn", [lipschitz_L, L3, A_func], ids=["L", "L2_over_rho", "A"])
def test_strictly_decreasing(fn):
    ps = np.linspace(1e-3, 0.5 - 1e-3, 5000)
    vals = [fn(float(p)) for p in ps]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_dF_dp_edges():
    assert dF_dp(20, 0, 0.3) == 0.0
    assert dF_dp(20, 20, 0.3, shifted=True) == 0.0


@pytest.mark.parametrize("n,k,p", [(20, 7, 0.3), (200, 50, 0.2), (1000, 480, 0.5), (60, 3, 0.05)])
def test_dF_dp_finite_difference(n, k, p):
    fd = central(lambda x: binom_cdf_strict(n, k, x), p)
    assert dF_dp(n, k, p) == pytest.approx(fd, rel=FD_REL)
    fd = central(lambda x: binom_cdf_strict(n, k + 1, x), p)
    assert dF_dp(n, k, p, shifted=True) == pytest.approx(fd, rel=FD_REL)


@given(n=st.integers(2, 2000), u=st.floats(0.0, 1.0), p=st.floats(0.02, 0.98))
def test_dF_dp_closed_form(n, u, p):
    k = int(u * n)
    assert dF_dp(n, k, p) == pytest.approx(-(k / p) * binom_pmf(n, k, p), rel=1e-15)


@pytest.mark.parametrize("n,k,p", [(20, 7, 0.3), (200, 50.5, 0.2), (1000, 480, 0.45)])
def test_dG_dp_finite_difference(n, k, p):
    G = lambda x: normal_cdf((k - n * x) / math.sqrt(n * x * (1 - x)))  # noqa: E731
    assert dG_dp(n, k, p) == pytest.approx(central(G, p), rel=FD_REL)


def test_dG_dp_special_points():
    n = 100
    s = math.sqrt(n * 0.25)
    assert dG_dp(n, 50, 0.5) == pytest.approx(-(n * 0.5) / (2 * 0.25 * s) * normal_pdf(0.0), rel=1e-15)
    # the numerator k(1-2p) + np vanishes only at k = np/(2p-1) > n, outside the domain
    p = 0.75
    with pytest.raises(DomainError):
        dG_dp(n, n * p / (2 * p - 1), p)


def test_certify_interval():
    cert = certify_interval(5 * 10**5, 0.4, 0.1689, 1e-12)
    assert cert.slack < 4.6e-9
    cert = certify_interval(200, 0.4, 0.1689, 1e-6)
    want = mpmath.sqrt(200) * mpmath.mpf("5e-7") * mp_L("0.1689")
    assert cert.slack == pytest.approx(float(want), rel=1e-14)
    assert cert.slack < 9.2e-5
    assert cert.certified_bound == cert.grid_max + cert.slack
    assert certify_interval(200, 0.4, 0.1689, 1e-300).certified_bound == 0.4
    for bad in [dict(h=0.0), dict(h=-1.0), dict(p_lo=0.0), dict(p_lo=0.5)]:
        kw = dict(n=10, grid_max=0.4, p_lo=0.2, h=1e-3) | bad
        with pytest.raises(DomainError):
            certify_interval(**kw)


@given(n=st.integers(1, 500), p1=st.floats(1e-3, 0.5), v=st.floats(0, 1), w=st.floats(0, 1))
def test_two_sided_lipschitz(n, p1, v, w):
    p = p1 + v * (0.5 - p1)
    k = int(w * n)
    g = lambda x: delta_nk(BinomialPoint(n, x), k) / rho(x)  # noqa: E731
    assert abs(g(p) - g(p1)) <= lipschitz_L(p1) * (p - p1) + 1e-12


@given(n=st.integers(1, 500), j=st.integers(0, 99), u=st.floats(0, 1))
def test_interpolation_soundness(n, j, u):
    h = (0.5 - 0.1689) / 100
    a = 0.1689 + j * h
    b = min(a + h, 0.5)
    p = a + u * (b - a)
    fa, fb = t_value(n, a), t_value(n, b)
    assert t_value(n, p) <= cell_bound(n, a, b, fa, fb) + 1e-12
    coarse = certify_interval(n, max(fa, fb), a, b - a, b).certified_bound
    assert cell_bound(n, a, b, fa, fb) <= coarse + 1e-15


def test_refine_cells_reaches_target():
    n = 50
    nodes = np.linspace(0.1689, 0.5, 41)
    vals = [t_value(n, float(p)) for p in nodes]
    target = max(vals) + 1e-3
    worst, evals = refine_cells(lambda p: t_value(n, p), n, nodes, vals, target)
    assert worst < target and evals > 0
    # a dense check never exceeds the refined bound
    dense = max(t_value(n, float(p)) for p in np.linspace(0.1689, 0.5, 20001))
    assert dense <= worst

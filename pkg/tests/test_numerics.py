import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bebound.errors import DomainError
from bebound.numerics import (
    DEFAULT_PRECISION,
    BinomialPoint,
    PrecisionPolicy,
    binom_cdf_strict,
    binom_pmf,
    binom_pmf_vector,
    log_binom_pmf,
    neumaier_sum,
    normal_cdf,
    normal_pdf,
)
from oracles import exact_cdf_strict, mp, mp_binom_pmf, mp_cdf_window

TOL = DEFAULT_PRECISION


def test_point_derived_fields():
    pt = BinomialPoint(10, 0.3)
    assert pt.q == 1.0 - 0.3
    assert pt.sigma == math.sqrt(10 * 0.3 * (1.0 - 0.3))
    assert pt.mean == 3.0
    assert pt.reflected().p == pt.q


@pytest.mark.parametrize("n,p", [(0, 0.3), (-1, 0.3), (2.5, 0.3), (True, 0.3), (5, 0.0), (5, 1.0), (5, 1.2)])
def test_point_rejects_bad_arguments(n, p):
    with pytest.raises(DomainError):
        BinomialPoint(n, p)


def test_precision_policy_is_positive():
    with pytest.raises(DomainError):
        PrecisionPolicy(pmf_rel_tol=0.0)


def test_log_pmf_small_case():
    want = math.log(math.comb(10, 5) * 0.3**5 * 0.7**5)
    assert log_binom_pmf(10, 5, 0.3) == pytest.approx(want, rel=1e-14)


@pytest.mark.parametrize("n", [1, 7, 60, 1000, 10**5, 10**6, 10**7])
@pytest.mark.parametrize("p", [1e-3, 0.1689, 0.3, 0.5, 0.9])
def test_pmf_relative_accuracy_against_mpmath(n, p):
    mu = n * p
    sd = math.sqrt(n * p * (1 - p))
    ks = {0, n, int(mu), min(n, int(mu + 3 * sd) + 1), max(0, int(mu - 3 * sd))}
    for k in ks:
        want = mp_binom_pmf(n, k, p)
        if want < mpmath.mpf("1e-300"):
            continue
        got = binom_pmf(n, k, p)
        assert abs(got - want) / want < 50 * TOL.pmf_rel_tol, (n, k)


def test_pmf_vector_sums_to_one_at_large_n():
    v = binom_pmf_vector(10**6, 0.3)
    assert math.fsum(v) == pytest.approx(1.0, abs=1e-12)


@given(n=st.integers(1, 60), num=st.integers(1, 63), x=st.integers(-2, 62))
def test_cdf_matches_exact_rationals(n, num, x):
    p = Fraction(num, 64)
    got = binom_cdf_strict(n, x, float(p))
    assert abs(got - mp(exact_cdf_strict(n, x, p))) < TOL.cdf_abs_tol


def test_cdf_conventions():
    assert binom_cdf_strict(5, 0, 0.3) == 0.0
    assert binom_cdf_strict(5, -3, 0.3) == 0.0
    assert binom_cdf_strict(5, 6, 0.3) == 1.0
    # left continuity: F(1) is the mass at 0
    assert binom_cdf_strict(5, 1, 0.3) == pytest.approx(0.7**5, rel=1e-14)


@pytest.mark.parametrize("n,p", [(10**5, 0.1689), (10**6, 0.5), (4_000_000, 0.42)])
def test_cdf_large_n_against_mpmath(n, p):
    mu = n * p
    sd = math.sqrt(n * p * (1 - p))
    for x in (int(mu - 2 * sd), int(mu), int(mu + 1.5 * sd)):
        want = mp_cdf_window(n, x, p)
        assert abs(binom_cdf_strict(n, x, p) - want) < 10 * TOL.cdf_abs_tol


@given(n=st.integers(1, 300), p=st.floats(0.01, 0.99), x=st.integers(0, 301))
def test_cdf_reflection(n, p, x):
    # P(S < x) under p equals P(S > n - x) under 1 - p
    x = min(x, n + 1)
    a = binom_cdf_strict(n, x, p)
    b = 1.0 - binom_cdf_strict(n, n - x + 1, 1.0 - p)
    assert abs(a - b) < 1e-13


@given(x=st.floats(-38.0, 38.0))
def test_normal_cdf_against_mpmath(x):
    want = mpmath.ncdf(x)
    got = normal_cdf(x)
    assert abs(got - want) < TOL.phi_abs_tol
    if -37.0 < x < -1:  # below -37 the result is subnormal
        # rounding of x/sqrt(2) is amplified by x^2 in the tail
        assert abs(got - want) <= (1e-15 + 4 * x * x * 2.0**-53) * want


def test_normal_reference_values():
    assert normal_cdf(0.0) == 0.5
    assert normal_cdf(1.0) == pytest.approx(float(mpmath.ncdf(1)), abs=1e-16)
    assert normal_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)


def test_neumaier_recovers_cancelled_terms():
    assert neumaier_sum([1.0, 1e100, 1.0, -1e100]) == 2.0
    rng = np.random.default_rng(3)
    xs = rng.standard_normal(10_000) * 10.0 ** rng.integers(-8, 8, 10_000)
    assert neumaier_sum(xs) == pytest.approx(math.fsum(xs), abs=1e-9)

import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bebound.discrepancy import (
    NU,
    Mode,
    char_fn_modulus,
    delta_n,
    delta_nk,
    k_window,
    local_delta,
    rho,
    script_E,
    script_E1,
    t_value,
)
from bebound.errors import DomainError, PreconditionError
from bebound.numerics import BinomialPoint, normal_cdf, normal_pdf
from oracles import exact_delta_n, mp_rho

PHI_M1 = float(mpmath.ncdf(-1))


def test_rho_values():
    assert rho(0.5) == 1.0
    assert 1 / rho(0.1689) == pytest.approx(0.52090548, abs=5e-9)
    assert rho(0.2) == pytest.approx(rho(0.8), rel=1e-15)
    assert rho(0.1689) == pytest.approx(float(mp_rho(mpmath.mpf("0.1689"))), rel=1e-15)
    with pytest.raises(DomainError):
        rho(1.0)


def test_script_E():
    assert script_E(0.5) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)
    assert script_E1(0.5) == pytest.approx(0.5 / math.sqrt(2 * math.pi), rel=1e-15)
    p = mpmath.mpf("0.1689")
    want = (2 - p) / (3 * mpmath.sqrt(2 * mpmath.pi) * (p**2 + (1 - p) ** 2))
    assert script_E(0.1689) == pytest.approx(float(want), rel=1e-15)
    with pytest.raises(DomainError):
        script_E(0.6)


def test_two_point_case_by_hand():
    pt = BinomialPoint(1, 0.5)
    assert delta_nk(pt, 0) == pytest.approx(0.5 - PHI_M1, abs=1e-16)
    assert delta_nk(pt, 1) == pytest.approx(normal_cdf(1.0) - 0.5, abs=1e-16)
    rec = delta_n(pt, Mode.FULL_RANGE)
    assert rec.delta == pytest.approx(0.3413447460685429, abs=1e-16)
    assert rec.t_value == rec.delta
    assert rec.k_star == 0  # tie with i=1 goes to the smaller index
    with pytest.raises(DomainError):
        delta_nk(pt, 2)


def test_restricted_window_needs_large_n():
    with pytest.raises(PreconditionError):
        delta_n(BinomialPoint(200, 0.3), Mode.RESTRICTED_WINDOW)
    assert delta_n(BinomialPoint(200, 0.3)).mode is Mode.FULL_RANGE
    assert delta_n(BinomialPoint(201, 0.3)).mode is Mode.RESTRICTED_WINDOW


def test_window_bounds():
    pt = BinomialPoint(300, 0.3)
    w = k_window(pt, Mode.RESTRICTED_WINDOW)
    assert w.lo == math.ceil(90 - (NU + 1) * pt.sigma)
    assert w.hi == math.floor(90 + NU * pt.sigma)
    assert k_window(pt, Mode.FULL_RANGE).hi == 300


def test_window_matches_full_range_at_n300():
    pt = BinomialPoint(300, 0.3)
    a = delta_n(pt, Mode.FULL_RANGE)
    b = delta_n(pt, Mode.RESTRICTED_WINDOW)
    assert (a.delta, a.k_star) == (b.delta, b.k_star)


@settings(max_examples=300)
@given(n=st.integers(1, 60), num=st.integers(1, 1023))
def test_delta_n_matches_exact_oracle(n, num):
    p = Fraction(num, 1024)
    rec = delta_n(BinomialPoint(n, float(p)), Mode.FULL_RANGE)
    want, arg = exact_delta_n(n, p)
    assert abs(rec.delta - want) < 1e-12
    if abs(rec.delta - want) < 1e-14:
        assert 0 <= rec.k_star <= n


@settings(max_examples=200)
@given(n=st.integers(201, 5000), p=st.floats(0.1689, 0.5))
def test_window_equals_full_range(n, p):
    pt = BinomialPoint(n, p)
    a = delta_n(pt, Mode.FULL_RANGE)
    b = delta_n(pt, Mode.RESTRICTED_WINDOW)
    assert a.delta == b.delta and a.k_star == b.k_star


@given(n=st.integers(1, 3000), p=st.floats(0.001, 0.999))
def test_delta_invariants(n, p):
    rec = delta_n(BinomialPoint(n, p))
    assert 0 <= rec.delta < 0.541
    assert 0 <= rec.k_star <= n
    assert rec.t_value == math.sqrt(n) * rec.delta / rho(p)


@given(n=st.integers(1, 1000), p=st.floats(0.01, 0.99))
def test_t_value_reflection_symmetry(n, p):
    assert t_value(n, p) == pytest.approx(t_value(n, 1.0 - p), abs=1e-13)


@given(n=st.integers(1000, 5000), p=st.floats(0.01, 0.99))
def test_delta_reflection_symmetry_large_n(n, p):
    # sqrt(n)/rho amplifies cdf rounding, so compare on the delta scale
    a = delta_n(BinomialPoint(n, p)).delta
    b = delta_n(BinomialPoint(n, 1.0 - p)).delta
    assert abs(a - b) < 5e-15


def test_local_delta_by_hand():
    pt = BinomialPoint(1, 0.5)
    assert local_delta(pt, 0) == pytest.approx(0.5 - 2 * normal_pdf(-1.0), abs=1e-16)
    with pytest.raises(DomainError):
        local_delta(pt, 3)


@given(n=st.integers(1, 3000), p=st.floats(0.001, 0.999), u=st.floats(0, 1))
def test_local_bound(n, p, u):
    k = int(u * n)
    pt = BinomialPoint(n, p)
    s = pt.sigma
    assert abs(local_delta(pt, k)) < min(1 / (s * math.sqrt(2 * math.e)), 0.516 / s**2)
    assert local_delta(pt, k) == pytest.approx(local_delta(pt.reflected(), n - k), rel=1e-12, abs=1e-15)


def test_char_fn_modulus_values():
    assert char_fn_modulus(0.3, 0.0) == 1.0
    assert char_fn_modulus(0.5, math.pi) == pytest.approx(0.0, abs=1e-8)
    assert char_fn_modulus(0.3, 1.0) <= math.exp(-2 * 0.21 * math.sin(0.5) ** 2)
    # against the complex form |q e^{-itp} + p e^{itq}|
    z = 0.7 * complex(math.cos(-0.3), math.sin(-0.3)) + 0.3 * complex(math.cos(0.7), math.sin(0.7))
    assert char_fn_modulus(0.3, 1.0) == pytest.approx(abs(z), rel=1e-15)


@given(p=st.floats(0.001, 0.999), t=st.floats(-math.pi, math.pi))
def test_char_fn_bound(p, t):
    q = 1 - p
    assert char_fn_modulus(p, t) <= math.exp(-2 * p * q * math.sin(t / 2) ** 2) + 1e-15

import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shearwave import (FlowParams, LaminarState, SingularCoefficientError, StagnationWarning,
                       evaluate_height, first_order_term, make_expansion, second_order_coeffs,
                       second_order_term, solve_dispersion, third_order_coeffs, third_order_term)
from shearwave.laminar import laminar_height
from shearwave.oracle import finite_difference_partials

from conftest import state_for

GAMMAS = (-4.5, -1.5, 0.0, 1.5, 3.0)


def test_make_expansion_validation():
    s = state_for(0.0)
    with pytest.raises(ValueError):
        make_expansion(s, 4)
    with pytest.raises(ValueError):
        make_expansion(s, 2, b=-0.1)


@pytest.mark.parametrize("gamma", GAMMAS)
@pytest.mark.parametrize("order", (1, 2, 3))
def test_bed_and_evenness(gamma, order):
    e = make_expansion(state_for(gamma), order, b=0.05, btilde=0.7)
    q = np.linspace(-np.pi, np.pi, 41)
    assert np.max(np.abs(evaluate_height(e, q, e.state.p0))) <= 1e-12
    for p in (-1.7, -0.6, 0.0):
        assert np.allclose(evaluate_height(e, q, p), evaluate_height(e, -q, p), rtol=0, atol=1e-14)
        d = evaluate_height(e, q, p, derivatives=True)
        d_neg = evaluate_height(e, -q, p, derivatives=True)
        assert np.allclose(d.h_q, -d_neg.h_q, atol=1e-13)
        assert np.allclose(d.h_qq, d_neg.h_qq, atol=1e-13)


def test_first_order_values():
    s0 = state_for(0.0)
    assert first_order_term(s0, 0.0, 0.0) == pytest.approx(np.sinh(2.0 / np.sqrt(s0.lambda_star)), rel=1e-14)
    s = state_for(-1.5)
    p = np.linspace(s.p0, 0, 17)
    assert np.allclose(first_order_term(s, np.pi, p), -first_order_term(s, 0.0, p), atol=1e-15)
    assert first_order_term(s, 0.3, s.p0) == 0.0


def test_order1_zero_amplitude_is_laminar():
    s = state_for(1.5)
    e = make_expansion(s, 1, b=0.0)
    q, p = np.meshgrid(np.linspace(-3, 3, 7), np.linspace(s.p0, 0, 9))
    d = evaluate_height(e, q, p, derivatives=True)
    assert np.allclose(d.h, laminar_height(s, p), atol=1e-15)
    assert np.all(d.h_q == 0)


@pytest.mark.parametrize("gamma", GAMMAS)
def test_fourier_content(gamma):
    s = state_for(gamma)
    nq = 64
    q = 2 * np.pi * np.arange(nq) / nq
    allowed = {1: {1}, 2: {0, 2}, 3: {1, 3}}
    for order in (1, 2, 3):
        lo = make_expansion(s, order - 1, b=1.0, btilde=0.4) if order > 1 else None
        hi = make_expansion(s, order, b=1.0, btilde=0.4)
        for p in (-1.3, -0.2, 0.0):
            term = evaluate_height(hi, q, p) - (evaluate_height(lo, q, p) if lo else laminar_height(s, p))
            amps = np.abs(np.fft.rfft(term)) / nq
            scale = amps.max()
            for k in range(nq // 2 + 1):
                if k not in allowed[order]:
                    assert amps[k] <= 1e-12 * scale, (order, p, k)


def test_second_order_irrotational_forms():
    s = state_for(0.0)
    c = second_order_coeffs(s)
    L, g = s.lambda_star, s.g
    assert c.a2_irr == pytest.approx((3 * g * g - L * L) / (8 * L * L), rel=1e-14)
    e = make_expansion(s, 2, b=1.0)
    q = np.linspace(-3, 3, 13)[:, None]
    p = np.linspace(s.p0, 0, 11)[None, :]
    arg = 2 * (p - s.p0) / np.sqrt(L)
    ref = 0.25 * np.sinh(arg) + c.a0_irr * (p - s.p0) + c.a2_irr * np.cos(2 * q) * np.sinh(arg)
    assert np.max(np.abs(second_order_term(e, q, p) - ref)) <= 1e-12
    # with r = sqrt(lambda) the rotational form collapses to A2 = C2 sqrt(lambda) + 1/4, A0 = C0
    assert c.c2 * np.sqrt(L) + 0.25 == pytest.approx(c.a2_irr, rel=1e-10)
    assert c.c0 == pytest.approx(c.a0_irr, rel=1e-10)


def test_second_order_continuity_in_gamma():
    e0 = make_expansion(state_for(0.0), 2, b=1.0)
    e1 = make_expansion(solve_dispersion(FlowParams(1e-7)), 2, b=1.0)
    assert abs(second_order_term(e1, 1.0, -1.0) - second_order_term(e0, 1.0, -1.0)) <= 1e-5


def test_third_order_bed_and_structure():
    s = state_for(-1.5)
    c3 = third_order_coeffs(s)
    a, b = c3.a_table, c3.b_table
    for j, n in ((0, 1), (0, 4), (1, 1), (1, 4), (2, 1), (2, 4), (3, 1)):
        assert a[j, n] == 0
    for j, n in ((0, 0), (1, 0), (1, 3), (1, 4), (2, 0), (2, 3), (2, 4), (3, 0), (3, 3), (3, 4)):
        assert b[j, n] == 0
    e = make_expansion(s, 3, b=1.0, btilde=2.5)
    q = np.linspace(-np.pi, np.pi, 33)
    assert np.max(np.abs(third_order_term(e, q, s.p0))) <= 1e-10
    # cos 3q content at the surface is nonzero
    nq = 32
    qq = 2 * np.pi * np.arange(nq) / nq
    assert abs(np.fft.rfft(third_order_term(e, qq, 0.0))[3]) / nq > 1e-3


def test_third_order_gamma_zero():
    s = state_for(0.0)
    c3 = third_order_coeffs(s)
    assert np.all(c3.b_table[:, 1:3] == 0)
    assert c3.btilde0 == pytest.approx(c3.b0, rel=1e-9)
    # frozen from an independent symbolic evaluation of the surface b^3 cos q projection
    assert third_order_coeffs(state_for(-1.5)).btilde0 == pytest.approx(3.094527226063593, rel=1e-9)


def test_singular_coefficient_reported():
    # lambda = g with gamma = 0 makes (g - gamma sqrt(lambda))^2 - lambda^2 vanish
    s = LaminarState.from_lambda(FlowParams(0.0), 9.8)
    with pytest.raises(SingularCoefficientError) as info:
        second_order_coeffs(s)
    assert "lambda^2" in str(info.value) and info.value.name


@pytest.mark.filterwarnings("ignore::shearwave.StagnationWarning")
@pytest.mark.parametrize("order", (1, 2, 3))
def test_irrotational_limit(order):
    rng = np.random.default_rng(7)
    s0 = state_for(0.0)
    q = rng.uniform(-np.pi, np.pi, 100)
    p = rng.uniform(s0.p0, 0.0, 100)
    ref = evaluate_height(make_expansion(s0, order, b=1.0), q, p, derivatives=True)
    for g in (1e-7, -1e-7):
        e = make_expansion(solve_dispersion(FlowParams(g)), order, b=1.0)
        got = evaluate_height(e, q, p, derivatives=True)
        for a, b in zip(got, ref):
            assert np.max(np.abs(a - b)) <= 1e-5


@pytest.mark.parametrize("gamma", (-1.5, 0.0, 1.5))
def test_wave_height_slope(gamma):
    s = state_for(gamma)
    m00 = first_order_term(s, 0.0, 0.0)
    bs = np.array([1e-4, 2e-4, 4e-4])
    e = make_expansion(s, 3)
    heights = [evaluate_height(e.with_amplitude(b), 0.0, 0.0) - evaluate_height(e.with_amplitude(b), np.pi, 0.0)
               for b in bs]
    slope = np.polyfit(bs, heights, 2)[1]
    assert slope == pytest.approx(2 * m00, rel=1e-3)


def test_stagnation_warning():
    e = make_expansion(state_for(-1.5), 1, b=5.0)
    with pytest.warns(StagnationWarning):
        evaluate_height(e, np.linspace(-3, 3, 20), 0.0, derivatives=True)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        evaluate_height(e, 0.0, 0.0, derivatives=True, warn=False)


@settings(max_examples=25, deadline=None)
@given(gamma=st.sampled_from([-3.0, -1.5, 0.0, 1.5]), order=st.integers(1, 3),
       q=st.floats(-3.0, 3.0), frac=st.floats(0.05, 0.95))
def test_partials_match_finite_differences(gamma, order, q, frac):
    s = state_for(gamma)
    e = make_expansion(s, order, b=0.03, btilde=1.0)
    p = s.p0 * (1 - frac)
    fd = finite_difference_partials(e, np.array([q]), np.array([p]))
    an = evaluate_height(e, np.array([q]), np.array([p]), derivatives=True)
    for name in ("h_q", "h_p", "h_qq", "h_qp", "h_pp"):
        a, f = getattr(an, name), getattr(fd, name)
        scale = max(np.max(np.abs(an.h_p)), 1e-300)
        assert np.max(np.abs(a - f)) <= 1e-6 * scale, name

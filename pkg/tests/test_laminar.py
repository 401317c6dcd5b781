import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from shearwave import (DomainError, FlowParams, LaminarState, NoDispersionRootError, hydraulic_head,
                       laminar_height, linear_wave_speed, r_profile, solve_dispersion)
from shearwave.laminar import dispersion_residual, solve_dispersion_irrotational

G, P0 = 9.8, -2.0


def test_flow_params_validation():
    with pytest.raises(ValueError):
        FlowParams(0.0, p0=1.0)
    with pytest.raises(ValueError):
        FlowParams(0.0, g=-1.0)


def test_r_profile_examples():
    st = LaminarState.from_lambda(FlowParams(0.0), 4.0)
    assert r_profile(st, -1.0) == pytest.approx(2.0, abs=1e-15)
    st = solve_dispersion(FlowParams(-1.5))
    # r^2 = lambda - 2 gamma p, so at the bed lambda - 6
    assert r_profile(st, P0) == pytest.approx(np.sqrt(st.lambda_star - 6.0), rel=1e-15)


def test_inadmissible_lambda_raises():
    with pytest.raises(DomainError):
        LaminarState.from_lambda(FlowParams(-1.5), 5.0)
    with pytest.raises(DomainError):
        hydraulic_head(FlowParams(-1.5), 5.0)


def test_laminar_height_examples():
    st = LaminarState.from_lambda(FlowParams(0.0), 4.0)
    assert laminar_height(st, P0) == 0.0
    assert laminar_height(st, 0.0) == pytest.approx(1.0, abs=1e-15)


def test_hydraulic_head_examples():
    assert hydraulic_head(FlowParams(0.0), 4.0) == pytest.approx(23.6, abs=1e-12)
    lam = solve_dispersion(FlowParams(0.0)).lambda_star
    assert hydraulic_head(FlowParams(0.0), lam) == pytest.approx(lam - 2 * G * P0 / np.sqrt(lam), rel=1e-14)


def test_irrotational_root_matches_independent_oracle():
    lam = solve_dispersion(FlowParams(0.0)).lambda_star
    ref = brentq(lambda x: x + G * np.tanh(P0 / np.sqrt(x)), 1e-6, 100.0, xtol=1e-15, rtol=1e-15)
    assert lam == pytest.approx(ref, rel=1e-12)
    assert lam == pytest.approx(6.441421165939238, rel=1e-12)
    assert solve_dispersion_irrotational(G, P0) == pytest.approx(lam, rel=1e-12)


@pytest.mark.parametrize("gamma, lam_ref", [(-1.5, 9.599434507845935), (1.5, None), (3.0, None)])
def test_rotational_roots(gamma, lam_ref):
    st = solve_dispersion(FlowParams(gamma))
    assert dispersion_residual(st.params, st.lambda_star) <= 1e-12
    assert st.lambda_star > st.params.lambda_min
    if lam_ref is not None:
        assert st.lambda_star == pytest.approx(lam_ref, rel=1e-12)
    assert st.q_star == pytest.approx(hydraulic_head(st.params, st.lambda_star), rel=1e-15)
    assert st.r0 == pytest.approx(np.sqrt(st.lambda_star - 2 * gamma * P0), rel=1e-15)


def test_no_root_reported():
    # a tiny gravity with a huge adverse vorticity leaves no sign change
    with pytest.raises((NoDispersionRootError, Exception)):
        solve_dispersion(FlowParams(50.0, g=1e-3))


@settings(max_examples=50, deadline=None)
@given(gamma=st.floats(-5, 5), lam_extra=st.floats(0.1, 50), p=st.floats(-2, 0))
def test_r_identities(gamma, lam_extra, p):
    params = FlowParams(gamma)
    lam = params.lambda_min + lam_extra
    s = LaminarState.from_lambda(params, lam)
    r = r_profile(s, p)
    assert r**2 + 2 * gamma * p == pytest.approx(lam, rel=1e-13)
    assert r - s.r0 == pytest.approx(-gamma * laminar_height(s, p), rel=1e-9, abs=1e-12)
    if abs(gamma) > 1e-3:
        assert (r - s.r0) / gamma == pytest.approx(-laminar_height(s, p), rel=1e-7, abs=1e-9)


def test_height_increasing_and_derivative():
    s = solve_dispersion(FlowParams(-1.5))
    p = np.linspace(P0, 0, 200)
    H = laminar_height(s, p)
    assert H[0] == 0 and np.all(np.diff(H) > 0)
    h = 1e-6
    fd = (laminar_height(s, p[1:-1] + h) - laminar_height(s, p[1:-1] - h)) / (2 * h)
    assert np.max(np.abs(fd - 1 / r_profile(s, p[1:-1]))) < 1e-8


def test_linear_wave_speed():
    k, d = 1.0, 1.0
    assert linear_wave_speed(0.0, k, d) == pytest.approx(np.sqrt(G * np.tanh(k * d) / k), rel=1e-15)
    for g0 in np.linspace(0.1, 5, 12):
        for k in (0.5, 1, 2):
            for d in (0.5, 1, 2):
                assert linear_wave_speed(-g0, k, d) > linear_wave_speed(0.0, k, d) > linear_wave_speed(g0, k, d)
    gs = np.linspace(-3, 3, 61)
    assert np.all(np.diff([linear_wave_speed(x, 5.0, 1.0) for x in gs]) < 0)
    with pytest.raises(ValueError):
        linear_wave_speed(0.0, -1.0, 1.0)

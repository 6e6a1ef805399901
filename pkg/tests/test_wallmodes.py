import math

import mpmath
import numpy as np
import pytest
from scipy import special

from softwall import wallmodes as wm
from softwall.phase import PhaseShiftFn

C1 = 3 ** (2 / 3) * math.gamma(4 / 3) / math.gamma(2 / 3)
C2 = 2 * math.gamma(1.25) / math.gamma(0.75)

M1 = wm.WallModel(1.0)
M2 = wm.WallModel(2.0)


def airy_delta_oracle(p):
    """Phase shift mod pi straight from mpmath Airy values."""
    ai = mpmath.airyai(-p * p)
    aip = mpmath.airyai(-p * p, derivative=1)
    return float(mpmath.atan2(-p * ai, aip))


def mod_pi(x):
    return (np.asarray(x) + np.pi / 2) % np.pi - np.pi / 2


# -- WallModel -----------------------------------------------------------------------

def test_wall_model_defaults_and_scale():
    assert M1.zhat == 1.0
    m = wm.WallModel(2.0, lambda0=4.0, z0=2.0)
    assert m.zhat == pytest.approx((2.0**2 / 4.0) ** 0.25)
    assert m.turning_point(2.0) == pytest.approx(2.0)
    assert m.potential(-1.0) == 0.0


@pytest.mark.parametrize("kw", [{"alpha": 0.5}, {"alpha": 1.0, "lambda0": 0.0}, {"alpha": 2.0, "z0": -1.0}])
def test_wall_model_rejects_bad_parameters(kw):
    with pytest.raises(ValueError):
        wm.WallModel(**kw)


# -- decaying solution ------------------------------------------------------------------

def test_p_alpha_airy_ratio_at_origin():
    P, dP = wm.p_alpha(M1, 0.0, 0.0)
    assert abs(P / dP) == pytest.approx(C1, rel=1e-12)
    assert P / dP < 0


def test_p_alpha_gaussian_ratio_for_alpha_two():
    P, dP = wm.p_alpha(M2, 1.0, 1.0)
    assert P / dP == pytest.approx(-1.0, rel=1e-12)


def test_p_alpha_zero_energy_matches_bessel_k():
    z = np.array([0.5, 2.0])
    P, _ = wm.p_alpha(M1, z, 0.0)
    k = np.sqrt(z) * special.kv(1 / 3, (2 / 3) * z**1.5)
    assert (P[0] / P[1]) == pytest.approx(k[0] / k[1], rel=1e-7)


def test_p_alpha_general_route_matches_closed_forms():
    z = np.array([0.0, 0.7, 1.9])
    for model, E in ((M1, 5.3), (M2, 7.1)):
        P, dP = wm.p_alpha(model, z, E)
        Q, dQ = wm.p_alpha(model, z, E, method=wm.ODE)
        assert np.allclose(Q / dQ, P / dP, rtol=1e-8)


def test_p_alpha_positive_far_out():
    for model in (M1, M2, wm.WallModel(3.0)):
        P, _ = wm.p_alpha(model, 8.0, 4.0)
        assert P > 0


def test_p_alpha_domain():
    with pytest.raises(ValueError):
        wm.p_alpha(M1, -0.1, 1.0)
    with pytest.raises(ValueError):
        wm.p_alpha(M1, 0.0, 500.0)


# -- exact phase shift --------------------------------------------------------------------

def test_small_p_limit_alpha_one():
    assert wm.phase_shift(M1, 0.01).delta / 0.01 == pytest.approx(1.37172, abs=1e-3)


def test_phase_shift_examples():
    assert wm.phase_shift(M1, 3.0).delta == pytest.approx(2 * 27 / 3 + math.pi / 4, abs=0.05)
    assert wm.phase_shift(M2, 2.0).delta == pytest.approx(5 * math.pi / 4, abs=0.1)


@pytest.mark.parametrize("p", [0.3, 1.1, 2.7, 4.4, 7.9, 12.0])
def test_phase_shift_agrees_with_mpmath_mod_pi(p):
    d = wm.phase_shift(M1, p).delta
    assert abs(mod_pi(d - airy_delta_oracle(p))) < 1e-10


def test_branch_consistency_tan_identity():
    for model, pmax in ((M1, 10.0), (M2, 12.0)):
        p = np.linspace(0.05, pmax, 300)
        d, _ = wm.phase_shift_grid(model, p)
        P, dP = np.array([wm.p_alpha(model, 0.0, q * q) for q in p]).T
        # compare angles, not tangents, so zeros of P' are harmless
        assert np.max(np.abs(mod_pi(d - np.arctan2(-p * P, dP)))) < 1e-8


def test_grid_continuity():
    p = np.linspace(0.05, 10.0, 4000)
    d, c2 = wm.phase_shift_grid(M1, p)
    assert np.max(np.abs(np.diff(d))) < np.pi / 2
    assert np.all(c2 > 0)


def test_normalization_from_asymptotic_amplitude():
    # C^2 (P^2 + P'^2/p^2) = 2/pi by construction; check against the closed form at one p
    p = 1.7
    sol = wm.phase_shift(M1, p)
    P, dP = wm.p_alpha(M1, 0.0, p * p)
    assert sol.c_norm_sq * (P * P + dP * dP / p**2) == pytest.approx(2 / math.pi, rel=1e-12)


@pytest.mark.parametrize("p", [0.4, 1.3, 2.6, 4.2])
def test_ode_route_matches_closed_forms(p):
    for model in (M1, M2):
        exact = wm.phase_shift(model, p)
        ode = wm.phase_shift(model, p, method=wm.ODE)
        assert ode.method == wm.ODE
        assert ode.delta == pytest.approx(exact.delta, abs=1e-8)
        # P has a route-dependent scale, so compare the normalized mode C P(0)
        P_ex, _ = wm.p_alpha(model, 0.0, p * p)
        P_ode, _ = wm.p_alpha(model, 0.0, p * p, method=wm.ODE)
        assert ode.c_norm_sq * P_ode**2 == pytest.approx(exact.c_norm_sq * P_ex**2, rel=1e-6)


def test_general_alpha_between_neighbours():
    # delta grows with p like p^(1+2/alpha); at fixed moderate p the alpha = 3/2 wall sits between
    p = 3.0
    d15 = wm.phase_shift(wm.WallModel(1.5), p).delta
    assert wm.phase_shift(M2, p).delta < d15 < wm.phase_shift(M1, p).delta
    assert d15 == pytest.approx(wm.delta_large_p(wm.WallModel(1.5), p), abs=0.05)


def test_scaling_with_zhat():
    m = wm.WallModel(1.0, lambda0=2.0, z0=1.5)
    p = np.array([0.5, 1.5, 3.0])
    d, _ = wm.phase_shift_grid(m, p)
    d0, _ = wm.phase_shift_grid(M1, m.zhat * p)
    assert np.allclose(d, d0, atol=1e-12)


def test_phase_shift_rejects_nonpositive_p():
    with pytest.raises(ValueError):
        wm.phase_shift(M1, 0.0)


# -- asymptotics ----------------------------------------------------------------------------

def test_small_p_coefficients():
    assert wm.small_p_slope(M1) == pytest.approx(C1, rel=1e-14)
    assert wm.delta_small_p(M1, 1.0) == pytest.approx(1.37172, abs=1e-5)
    assert wm.delta_small_p(M2, 1.0) == pytest.approx(C2, rel=1e-14)
    assert wm.delta_small_p(wm.WallModel(3.7), 0.0) == 0.0


def test_large_p_specialisations():
    p = np.array([0.5, 2.0, 5.0])
    assert np.allclose(wm.delta_large_p(M1, p), 2 * p**3 / 3 + np.pi / 4, rtol=1e-14)
    assert np.allclose(wm.delta_large_p(M2, p), np.pi * p**2 / 4 + np.pi / 4, rtol=1e-14)
    assert wm.delta_large_p(M1, 2.0) == pytest.approx(6.11873, abs=1e-5)
    assert wm.delta_large_p(M2, 2.0) == pytest.approx(3.92699, abs=1e-5)


def test_asymptote_gap_decreasing_alpha_one():
    p = np.array([2.0, 3.0, 4.0, 6.0])
    d, _ = wm.phase_shift_grid(M1, p)
    assert np.all(np.diff(np.abs(d - wm.delta_large_p(M1, p))) < 0)


def test_alpha_two_gap_vanishes_at_integer_order():
    # nu = (p^2-1)/2 integer makes P'(0) or P(0) vanish exactly on the asymptote
    for p in (1.0, math.sqrt(3.0), 3.0, math.sqrt(11.0)):
        d = wm.phase_shift(M2, p).delta
        assert abs(d - wm.delta_large_p(M2, p)) < 1e-12


def test_alpha_two_gap_envelope_decreasing():
    # half-integer orders sit on the envelope of the oscillating remainder
    p = np.array([2.0, math.sqrt(10.0), 4.0, 6.0])
    d, _ = wm.phase_shift_grid(M2, p)
    assert np.all(np.diff(np.abs(d - wm.delta_large_p(M2, p))) < 0)


@pytest.mark.parametrize("model", [M1, M2, wm.WallModel(3.0)])
def test_small_p_error_is_quadratic(model):
    c = wm.small_p_slope(model)
    errs = [abs(wm.phase_shift(model, p).delta / p - c) for p in (0.2, 0.1, 0.05, 0.025)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert min(ratios) >= 3.5


def test_hard_wall_trend():
    assert abs(wm.small_p_slope(wm.WallModel(50.0)) - 1) < 0.15
    # not monotone in alpha: the slope peaks near alpha = 2 before falling to 1
    slopes = [wm.small_p_slope(wm.WallModel(a)) for a in (5, 20, 50, 400)]
    assert np.all(np.diff(slopes) < 0)


# -- WKB ---------------------------------------------------------------------------------

def test_wkb_phase_integral_at_origin():
    # with z = 0 the phase is the full integral 2p^3/3 and the amplitude p^(-1/2)
    p = 2.3
    expected = p**-0.5 * math.cos(2 * p**3 / 3 - math.pi / 4)
    assert wm.wkb_mode(M1, p, 0.0) == pytest.approx(expected, rel=1e-12)


def test_wkb_outside_wall_is_free_wave():
    p, z = 1.7, -2.0
    phase = 2 * p**3 / 3 + p * 2.0
    assert wm.wkb_mode(M1, p, z) == pytest.approx(p**-0.5 * math.cos(phase - math.pi / 4), rel=1e-12)


def _exact_mode_scaled(model, p, z):
    # C P(z) rescaled to the WKB normalization sqrt(pi / 2p)
    sol = wm.phase_shift(model, p)
    P, _ = wm.p_alpha(model, np.asarray(z), p * p)
    return math.sqrt(sol.c_norm_sq) * P * math.sqrt(math.pi / (2 * p))


def test_wkb_matches_exact_mode_alpha_one():
    p, z = 3.0, 1.0
    env = (p * p - z) ** -0.25
    assert abs(wm.wkb_mode(M1, p, z) - _exact_mode_scaled(M1, p, z)) < 0.02 * env


@pytest.mark.parametrize("alpha,p", [(1.0, 5.0), (2.0, 3.0), (1.5, 3.0), (3.0, 4.0)])
def test_wkb_matches_exact_mode_shape(alpha, p):
    model = wm.WallModel(alpha)
    z = np.linspace(0, 0.5 * model.turning_point(p), 25)
    env = (p * p - model.potential(z)) ** -0.25
    assert np.max(np.abs(wm.wkb_mode(model, p, z) - _exact_mode_scaled(model, p, z)) / env) < 0.02


def test_wkb_guard_band():
    with pytest.raises(ValueError):
        wm.wkb_mode(M1, 3.0, 8.5)
    wm.wkb_mode(M1, 3.0, 8.0)


# -- packaged phase model ------------------------------------------------------------------

def test_phase_model_monotone_and_exact_inside():
    model = wm.make_phase_model(M1)
    p = np.linspace(0.1, 10, 3000)
    assert np.all(np.diff(model(p)) > 0)
    q = np.array([0.7, 3.3, 9.9])
    assert np.allclose(model(q), wm.phase_shift_grid(M1, q)[0], atol=1e-9)


def test_phase_model_blend_offset():
    assert abs(wm.make_phase_model(M1, p_max=6.0).params["offset"]) < 0.05
    model = wm.make_phase_model(M1, p_max=6.0)
    below, above = model(6.0 - 1e-9), model(6.0)
    assert above == pytest.approx(below, abs=1e-6)


def test_phase_model_refuses_small_p_max():
    with pytest.raises(wm.PhaseModelError):
        wm.make_phase_model(M1, p_max=0.5)


def test_phase_model_metadata():
    model = wm.make_phase_model(M2)
    assert model.kind == "soft_wall"
    assert model.large_p_exponent == 2.0
    assert model.small_p_slope == pytest.approx(C2)
    assert model.p_switch == 12.0


@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_exact_scattering_factor_on_real_axis(alpha):
    model = wm.make_phase_model(wm.WallModel(alpha))
    p = np.linspace(0.2, 9.9, 97)
    s = np.exp(model.log_scattering(p))
    assert np.max(np.abs(s - np.exp(-2j * model(p)))) < 1e-9


@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_exact_scattering_factor_bounded_below_axis(alpha):
    # |S| <= 1 in the lower half plane: no poles for the contour to cross
    model = wm.make_phase_model(wm.WallModel(alpha))
    x, y = np.meshgrid(np.linspace(0.3, 14, 120), np.linspace(-5, -0.01, 60))
    assert np.max(model.log_scattering(x + 1j * y).real) < 1e-9


@pytest.mark.parametrize("alpha,phi", [(1.0, math.pi / 6), (2.0, math.pi / 4)])
def test_edge_reflection_is_the_ray_remainder(alpha, phi):
    # on this ray the smooth factor has decayed away, leaving only the echo off z = 0
    model = wm.make_phase_model(wm.WallModel(alpha))
    p = 16.0 * np.exp(-1j * phi)
    remainder = np.exp(model.log_scattering(p)) * p ** (alpha + 2)
    assert remainder == pytest.approx(wm._edge_reflection(alpha), abs=1e-4)


def test_edge_reflection_values():
    assert wm._edge_reflection(1.0) == pytest.approx(0.125j)
    assert wm._edge_reflection(2.0) == pytest.approx(0.125)


@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_ode_phase_model_matches_closed_form(alpha):
    exact = wm.make_phase_model(wm.WallModel(alpha))
    ode = wm.make_phase_model(wm.WallModel(alpha), method=wm.ODE)
    q = np.linspace(0.2, 9.5, 50)
    gap = np.max(np.abs(ode(q) - exact(q)))
    assert gap < 1e-6
    assert gap <= ode.params["interp_err"]


def test_dirichlet_passes_through():
    d = PhaseShiftFn.dirichlet(1.3)
    p = np.array([0.1, 2.0, 50.0])
    assert np.array_equal(d(p), 1.3 * p)

"""Root solver vs dense eigenvalue oracle, derivative, slopes, edge cases."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pushsum_rate import (
    CorrelationParams,
    SeparationError,
    ValidationError,
    build_mixing_matrix,
    companion_matrix,
    complete_graph,
    cycle_graph,
    delta_argmax_check,
    delta_derivative,
    endpoint_slopes,
    largest_root,
    largest_root_from_coefficients,
    secular_coefficients,
    secular_roots_all,
    secular_value,
    symmetric_eigen,
    xi_derivative,
)
from conftest import random_instance, random_params


def _k3():
    mix = build_mixing_matrix(complete_graph(3), mode="row-stochastic-regular")
    return mix, symmetric_eigen(mix)


def _c6():
    mix = build_mixing_matrix(cycle_graph(6), mode="row-stochastic-regular")
    return mix, symmetric_eigen(mix)


K3_PARAMS = CorrelationParams(q=0.2, r=0.5, alpha=0.0, beta=0.0, u=1.0)


def test_k3_frozen_values():
    mix, s = _k3()
    point = largest_root(s, K3_PARAMS, mix.c)
    assert point.xi1 == pytest.approx(0.42, abs=2e-16)
    assert f"{point.xi1:.15g}" == "0.42"
    assert point.derivative == pytest.approx(-2.8, abs=1e-9)
    assert point.spectral_radius == pytest.approx(0.42, abs=2e-16)
    assert point.gamma_half == pytest.approx(0.5 * math.log(0.42), rel=1e-12)
    assert point.warnings == ()


def test_k3_closed_form_curve():
    # with alpha = beta = 0, r = 1/2: xi1(q) = 1 - 3q + q^2/2
    mix, s = _k3()
    for q in np.linspace(0.05, 0.6, 12):
        point = largest_root(s, K3_PARAMS, mix.c, q=float(q))
        assert point.xi1 == pytest.approx(1.0 - 3.0 * q + 0.5 * q * q, abs=1e-12)


def test_k3_companion_matrix_value():
    mix, s = _k3()
    coeffs = secular_coefficients(s, K3_PARAMS, mix.c)
    m = companion_matrix(coeffs)
    assert m == pytest.approx(np.array([[0.41, 0.01], [0.01, 0.41]]), abs=1e-15)
    assert sorted(np.linalg.eigvalsh(m)) == pytest.approx([0.40, 0.42], abs=1e-14)


def test_root_matches_companion_eigenvalue_random(rng):
    for _ in range(30):
        inst = random_instance(rng)
        point = largest_root(
            inst.spectrum, inst.params, inst.c, with_spectral_radius=False
        )
        eigs = np.linalg.eigvals(
            companion_matrix(
                secular_coefficients(inst.spectrum, inst.params, inst.c)
            )
        )
        assert np.max(np.abs(eigs.imag)) < 1e-9
        assert point.xi1 == pytest.approx(float(eigs.real.max()), abs=1e-10)


def test_all_roots_match_companion_spectrum(rng):
    for _ in range(15):
        inst = random_instance(rng)
        coeffs = secular_coefficients(inst.spectrum, inst.params, inst.c)
        roots = secular_roots_all(coeffs)
        eigs = np.sort(np.linalg.eigvals(companion_matrix(coeffs)).real)
        assert roots.shape == eigs.shape
        assert np.max(np.abs(np.sort(roots) - eigs)) < 1e-9


def test_spectral_radius_matches_lapack(rng):
    for _ in range(15):
        inst = random_instance(rng)
        point = largest_root(inst.spectrum, inst.params, inst.c)
        eigs = np.linalg.eigvals(
            companion_matrix(
                secular_coefficients(inst.spectrum, inst.params, inst.c)
            )
        )
        assert point.spectral_radius == pytest.approx(
            float(np.abs(eigs).max()), abs=1e-9
        )


def test_derivative_matches_finite_difference(rng):
    h = 1e-5
    for _ in range(25):
        inst = random_instance(rng)
        q = float(rng.uniform(0.05 + h, min(0.95, 0.99 / inst.params.sqrt_u) - h))
        point = largest_root(
            inst.spectrum, inst.params, inst.c, q=q, with_spectral_radius=False
        )
        if point.derivative is None:
            continue
        up = largest_root(
            inst.spectrum, inst.params, inst.c, q=q + h,
            with_spectral_radius=False, with_derivative=False,
        ).xi1
        dn = largest_root(
            inst.spectrum, inst.params, inst.c, q=q - h,
            with_spectral_radius=False, with_derivative=False,
        ).xi1
        assert point.derivative == pytest.approx((up - dn) / (2 * h), abs=1e-6)


def test_xi_derivative_accepts_rate_point_or_float():
    mix, s = _k3()
    coeffs = secular_coefficients(s, K3_PARAMS, mix.c)
    dd = delta_derivative(s, K3_PARAMS, K3_PARAMS.q)
    point = largest_root(s, K3_PARAMS, mix.c)
    assert xi_derivative(point, coeffs, dd) == pytest.approx(-2.8, abs=1e-12)
    assert xi_derivative(point.xi1, coeffs, dd) == pytest.approx(-2.8, abs=1e-12)


def test_sigma_increasing_above_top_pole():
    # sigma' = (q^2/n) sum b/(xi-delta)^2 > 0: the function rises from
    # -inf at the top pole toward 1, so the root bracket is one-sided
    mix, s = _c6()
    p = CorrelationParams(q=0.4, r=0.4, alpha=0.1, beta=0.0, u=1.0)
    coeffs = secular_coefficients(s, p, mix.c)
    top = float(coeffs.delta[1:][coeffs.b[1:] > 1e-12].max())
    xs = top + np.geomspace(1e-6, 1.0, 25)
    vals = [secular_value(float(x), coeffs) for x in xs]
    assert np.all(np.diff(vals) > 0.0)
    assert vals[0] < 0.0 < vals[-1]


def test_secular_value_raises_at_pole():
    mix, s = _k3()
    coeffs = secular_coefficients(s, K3_PARAMS, mix.c)
    with pytest.raises(SeparationError):
        secular_value(float(coeffs.delta[1]), coeffs)


@given(
    r=st.floats(0.2, 0.95),
    beta_frac=st.floats(0.0, 1.0),
    alpha_frac=st.floats(0.0, 1.0),
    c=st.floats(0.05, 0.98),
    lam=st.floats(-1.0, 1.0),
)
@settings(max_examples=200, deadline=None)
def test_generated_weights_are_nonnegative(r, beta_frac, alpha_frac, c, lam):
    # the generator's alpha cap keeps b(lambda) >= 0 for every lambda in
    # [-1, 1], not just at sampled eigenvalues
    beta = beta_frac * r * r / c
    alpha_cap = min(2.0, beta + r * r - 0.5 * beta * c, beta + 1.0)
    alpha = alpha_frac * max(alpha_cap, 0.0)
    one_m = 1.0 - lam
    b = one_m * ((beta - alpha) * one_m - beta * c + 2.0 * r * r)
    assert b >= -1e-12


def test_negative_weight_rejected():
    mix, s = _k3()
    # alpha far above the b >= 0 region makes the bottom eigenvalue's
    # weight negative
    p = CorrelationParams(q=0.2, r=0.3, alpha=1.9, beta=0.0, u=1.0)
    with pytest.raises(ValidationError, match="coupling weight"):
        largest_root(s, p, mix.c)


def test_q_zero_gives_exact_one():
    mix, s = _k3()
    point = largest_root(s, K3_PARAMS, mix.c, q=0.0)
    assert point.xi1 == 1.0
    assert point.gamma_half == 0.0
    assert point.warnings == ()
    assert point.derivative == pytest.approx(-3.0, abs=1e-12)


def test_all_b_zero_gives_max_delta():
    # r chosen so 2r^2 = alpha * 2 at lambda = -1 ... simplest: beta=0,
    # alpha=0 and r -> 0 is outside the valid box, so force b = 0 through
    # the coefficients directly
    mix, s = _k3()
    coeffs = secular_coefficients(s, K3_PARAMS, mix.c, q=0.3)
    zero = np.zeros_like(coeffs.b)
    from pushsum_rate import SecularCoefficients

    forced = SecularCoefficients(delta=coeffs.delta.copy(), b=zero, q=0.3, n=3)
    point = largest_root_from_coefficients(forced)
    assert point.xi1 == float(coeffs.delta[1:].max())
    assert any("vanish" in n for n in point.notes)


def test_unit_eigenvalue_contributes_inert_mode():
    mix, s = _k3()
    coeffs = secular_coefficients(s, K3_PARAMS, mix.c)
    assert float(coeffs.delta[0]) == 1.0
    assert abs(float(coeffs.b[0])) < 1e-12


def test_root_above_max_delta_when_spectrum_above_minus_one(rng):
    for _ in range(20):
        inst = random_instance(rng)
        if float(inst.spectrum.eigenvalues[-1]) <= -1.0 + 1e-12:
            continue
        coeffs = secular_coefficients(inst.spectrum, inst.params, inst.c)
        point = largest_root(
            inst.spectrum, inst.params, inst.c, with_spectral_radius=False
        )
        live = coeffs.b[1:] > 1e-12
        if live.any():
            assert point.xi1 > float(coeffs.delta[1:][live].max())


def test_endpoint_slopes_k3():
    mix, s = _k3()
    slopes = endpoint_slopes(s, K3_PARAMS, mix.c)
    assert slopes.at_zero == pytest.approx(-3.0, abs=1e-12)
    assert slopes.at_one == pytest.approx(3.0, abs=1e-12)
    assert slopes.tangent(0.2) == pytest.approx(0.4, abs=1e-12)


def test_endpoint_slopes_reject_bipartite():
    mix, s = _c6()
    with pytest.raises(ValidationError):
        endpoint_slopes(s, CorrelationParams(q=0.2, r=0.4, alpha=0.0, beta=0.0), mix.c)


def test_tangent_is_global_lower_bound(rng):
    for _ in range(10):
        inst = random_instance(rng)
        if float(inst.spectrum.eigenvalues[-1]) <= -1.0 + 1e-12:
            continue
        slopes = endpoint_slopes(inst.spectrum, inst.params, inst.c)
        hi = min(0.95, 0.99 / inst.params.sqrt_u)
        for q in np.linspace(0.05, hi, 16):
            point = largest_root(
                inst.spectrum, inst.params, inst.c, q=float(q),
                with_spectral_radius=False, with_derivative=False,
            )
            assert point.xi1 >= float(slopes.tangent(q)) - 1e-10


def test_convexity_second_difference(rng):
    # alpha >= 0 instances: central second difference of xi1(q) stays
    # nonnegative up to rounding
    for _ in range(10):
        inst = random_instance(rng)
        hi = min(0.95, 0.99 / inst.params.sqrt_u)
        qs = np.linspace(0.05, hi, 24)
        xs = [
            largest_root(
                inst.spectrum, inst.params, inst.c, q=float(q),
                with_spectral_radius=False, with_derivative=False,
            ).xi1
            for q in qs
        ]
        h = qs[1] - qs[0]
        d2 = np.diff(xs, 2) / (h * h)
        assert float(d2.min()) > -1e-7


def test_merge_tolerance_fault_injection():
    # a corrupted merge tolerance collapses distinct poles and must move
    # the root detectably; guards against silently over-merging
    mix, s = _c6()
    p = CorrelationParams(q=0.4, r=0.4, alpha=0.1, beta=0.0, u=1.0)
    good = largest_root(s, p, mix.c, with_spectral_radius=False)
    bad = largest_root(s, p, mix.c, merge_tol=0.5, with_spectral_radius=False)
    assert abs(good.xi1 - bad.xi1) > 1e-10


def test_merged_duplicate_poles_are_exact_roots():
    mix, s = _c6()
    p = CorrelationParams(q=0.3, r=0.4, alpha=0.1, beta=0.0, u=1.0)
    coeffs = secular_coefficients(s, p, mix.c)
    roots = secular_roots_all(coeffs)
    # C6 has doubled eigenvalues at +-1/2: each cluster leaves its pole
    # position as a polynomial root
    d = coeffs.delta[1:]
    for pole in (d[1], d[3]):
        assert np.min(np.abs(roots - pole)) < 1e-14


def test_gamma_half_domain_warnings():
    mix, s = _k3()
    # large q drives the root negative for this instance
    point = largest_root(s, K3_PARAMS, mix.c, q=0.9)
    assert point.xi1 < 0.0
    assert point.gamma_half is None
    assert any("<= 0" in w for w in point.warnings)


def test_delta_argmax_check_threshold():
    mix, s = _k3()
    assert delta_argmax_check(s, K3_PARAMS)
    steep = CorrelationParams(q=0.2, r=0.9, alpha=1.2, beta=0.8, u=1.0)
    assert not delta_argmax_check(s, steep)
    point = largest_root(s, steep, mix.c)
    assert any("argmax" in n for n in point.notes)


def test_heuristic_note_on_tight_c(rng):
    # N large ring with c = 1/2: 1 - lambda_2 - c < 0 triggers the
    # informational note without affecting the root
    mix = build_mixing_matrix(cycle_graph(24), mode="row-stochastic-regular")
    s = symmetric_eigen(mix)
    p = CorrelationParams(q=0.3, r=0.5, alpha=0.2, beta=0.2, u=1.0)
    point = largest_root(s, p, mix.c)
    assert any("heuristic" in n for n in point.notes)
    assert point.xi1 > 0.0


def test_random_params_box(rng):
    for _ in range(200):
        p = random_params(rng, 0.5)
        assert 0.0 < p.q < 1.0
        assert p.q * p.sqrt_u < 1.0
        assert p.alpha >= 0.0
        assert p.beta * 0.5 <= p.r * p.r + 1e-12

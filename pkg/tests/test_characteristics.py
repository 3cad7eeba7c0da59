"""Characteristic integration: start ansatz, shell conservation, chart
folding and target matching."""

from __future__ import annotations

import math

import numpy as np
import pytest

from rydopt.characteristics import (
    StartParams,
    closest_approach,
    init_at_epsilon,
    integrate,
    make_rhs,
    physical_coords,
    target_residuals,
)
from rydopt.errors import InconsistentStartError, UnsupportedVariantError
from rydopt.fields import (
    AMPLITUDE,
    GATE_PHASE,
    Variant,
    build_field,
    characteristic_rhs,
    eval_F,
    first_longitude_rate,
    random_on_shell_point,
)
from rydopt.search import target_library

V2A = Variant(2, AMPLITUDE, (1, 2))
V2G = Variant(2, GATE_PHASE, (1, 2))
V3G = Variant(3, GATE_PHASE, (1, 2, 3))


def test_start_params_validation():
    with pytest.raises(UnsupportedVariantError):
        StartParams(sigma=0)
    p = StartParams(0.3, (), (0.1,), (0.2,), -1)
    c = p.conjugate()
    assert c.p_theta1_0 == p.p_theta1_0 and c.sigma == p.sigma
    assert c.f_phi_0 == (-0.1,) and c.p_Phi_0 == (-0.2,)
    np.testing.assert_allclose(p.as_vector(), [0.3, 0.1, 0.2])


@pytest.mark.parametrize("variant", [V2A, V2G, V3G], ids=str)
@pytest.mark.parametrize("sigma", [-1, 1])
def test_start_is_on_shell_and_near_pole(variant, sigma):
    field = build_field(variant)
    rng = np.random.default_rng(2)
    for _ in range(10):
        nt = variant.n_tls - 1
        params = StartParams(
            rng.uniform(-1, 1), tuple(rng.uniform(-1, 1, max(0, nt - 1))),
            tuple(rng.uniform(-1, 1, variant.n_longitudes)),
            tuple(rng.uniform(-1, 1, variant.n_phases)), sigma)
        start = init_at_epsilon(field, params)
        assert abs(eval_F(field, start.x, start.p)) < 1e-6
        # latitudes depart from the all-ground pole proportionally to
        # sqrt(n_k): theta_k = pi + sigma*sqrt(n_k)*eps
        sqn = np.sqrt(np.asarray(variant.enhancements, float))
        np.testing.assert_allclose(
            start.x[variant.theta_slice], math.pi + sigma * sqn * params.epsilon,
            atol=1e-12)
        # exact momentum constraint sum sqrt(n_k) p_theta_k = sigma
        assert float(sqn @ start.p[variant.theta_slice]) == pytest.approx(
            sigma, abs=1e-12)


def test_start_epsilon_bounds():
    field = build_field(V2A)
    with pytest.raises(InconsistentStartError):
        init_at_epsilon(field, StartParams(0.0, (), (0.0,), (), -1, 1e-6))
    with pytest.raises(InconsistentStartError):
        init_at_epsilon(field, StartParams(0.0, (), (0.0,), (), -1, 1e-2))


@pytest.mark.parametrize("variant", [V2A, V2G], ids=str)
def test_integration_conserves_shell(variant):
    field = build_field(variant)
    rng = np.random.default_rng(4)
    for _ in range(5):
        params = StartParams(rng.uniform(-1, 1), (),
                             tuple(rng.uniform(-1, 1, 1)),
                             tuple(rng.uniform(-0.5, 0.5, variant.n_phases)),
                             -1)
        traj = integrate(field, init_at_epsilon(field, params), 6.0,
                         rtol=1e-10, atol=1e-12)
        assert traj.f_max < 1e-6
        # dense interpolant agrees with stored samples
        x, p, phi1 = traj.state_at(traj.s[len(traj.s) // 2])
        np.testing.assert_allclose(x, traj.x[len(traj.s) // 2], atol=1e-9)


def test_compiled_rhs_matches_generic():
    """The compiled ODE right-hand side must agree with the audited numpy
    formulation (including the eliminated first-longitude drift)."""
    rng = np.random.default_rng(6)
    for variant in (V2A, V2G, V3G, Variant(1, AMPLITUDE, (1,))):
        field = build_field(variant)
        rhs = make_rhs(field)
        for _ in range(20):
            x, p = random_on_shell_point(field, rng)
            y = np.concatenate([x, p, [0.3]])
            dy = np.asarray(rhs(0.0, y))
            dx, dp = characteristic_rhs(field, x, p)
            np.testing.assert_allclose(dy[: variant.dim], dx, atol=1e-12)
            np.testing.assert_allclose(dy[variant.dim : 2 * variant.dim], dp,
                                       atol=1e-12)
            assert dy[-1] == pytest.approx(
                first_longitude_rate(field, x, p), abs=1e-12)


def test_physical_coords_folding():
    # theta2 beyond the excited pole: fold back, longitude picks up pi
    x = np.array([2.0, -0.3, 0.4])
    out = physical_coords(V2A, x)
    assert out[0] == pytest.approx(2.0)
    assert out[1] == pytest.approx(0.3)
    assert math.cos(out[2] - (0.4 + math.pi)) == pytest.approx(1.0)
    # full revolution: no offset
    x = np.array([2.0, 0.3 + 2 * math.pi, 0.4])
    out = physical_coords(V2A, x)
    assert out[1] == pytest.approx(0.3)
    assert out[2] == pytest.approx(0.4)


def test_target_residuals_wrap():
    target = target_library("cz")
    x = np.array([math.pi, math.pi, 0.5, math.pi + 0.1 - 2 * math.pi])
    r = target_residuals(V2G, x, target.x_t, target.free)
    # free longitude skipped; gate phase wrapped
    assert r.size == 3
    assert r[-1] == pytest.approx(0.1, abs=1e-12)


def test_closest_approach_refines_between_samples():
    field = build_field(V2A)
    target = target_library("simexc", k=2)
    params = StartParams(0.0, (), (0.5,), (), -1)
    traj = integrate(field, init_at_epsilon(field, params), 8.0)
    s_c, d_c = closest_approach(traj, target, refine=False)
    s_r, d_r = closest_approach(traj, target, refine=True)
    assert d_r <= d_c + 1e-15
    assert abs(s_r - s_c) < 0.02  # within one sample spacing


def test_sigma_reflection_equivalence():
    """sigma = +1 with negated theta-momenta retraces the sigma = -1
    characteristic through reflected chart coordinates: the physical
    (folded) paths coincide."""
    field = build_field(V2G)
    rng = np.random.default_rng(9)
    for _ in range(5):
        pt1 = rng.uniform(-1, 1)
        f = rng.uniform(-1, 1)
        pP = rng.uniform(-0.5, 0.5)
        a = integrate(field, init_at_epsilon(
            field, StartParams(pt1, (), (f,), (pP,), -1)), 4.0)
        b = integrate(field, init_at_epsilon(
            field, StartParams(-pt1, (), (f,), (pP,), 1)), 4.0)
        for s in np.linspace(0.5, 3.5, 7):
            xa, _, _ = a.state_at(s)
            xb, _, _ = b.state_at(s)
            pa = physical_coords(V2G, xa)
            pb = physical_coords(V2G, xb)
            np.testing.assert_allclose(pa[:2], pb[:2], atol=1e-7)
            for j in (2, 3):
                d = (pa[j] - pb[j] + math.pi) % (2 * math.pi) - math.pi
                assert abs(d) < 1e-7


def test_trajectory_truncates_on_f_drift():
    field = build_field(V2A)
    params = StartParams(0.0, (), (0.3,), (), -1)
    traj = integrate(field, init_at_epsilon(field, params), 40.0,
                     rtol=1e-6, atol=1e-9, f_tol=1e-5)
    assert traj.reason in ("f-drift", "momentum-blowup", "s_max")
    assert traj.f_max <= 1e-5 + 1e-12

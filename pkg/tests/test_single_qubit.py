"""Single-qubit closed forms, the minimax value function and its shock."""

from __future__ import annotations

import math

import numpy as np
import pytest

from rydopt.errors import UnreachableTargetError
from rydopt.single_qubit import (
    closed_form,
    ellipse_estimate,
    minimax_value,
    shock_detect,
    xi_star_analytic,
)
from rydopt.search import solve_single_qubit

EQ = math.pi / 2.0


def test_closed_form_meridian():
    # p_phi = 0: pure latitude motion at unit rate, phi frozen
    th, ph = closed_form(EQ, 0.3, 0.0, -1, 0.4)
    assert th == pytest.approx(EQ + 0.4)
    assert ph == pytest.approx(0.3)
    th, ph = closed_form(EQ, 0.3, 0.0, 1, 0.4)
    assert th == pytest.approx(EQ - 0.4)


def test_closed_form_against_integration():
    from scipy.integrate import solve_ivp

    def rhs(s, y):
        th, _, pt, pf = y
        return [pt, pf / math.tan(th) ** 2,
                pf**2 / (math.tan(th) * math.sin(th) ** 2), 0.0]

    rng = np.random.default_rng(12)
    for _ in range(10):
        theta0 = rng.uniform(0.5, math.pi - 0.5)
        p_phi = rng.uniform(-0.9, 0.9) * abs(math.tan(theta0))
        sigma = int(rng.choice([-1, 1]))
        pt0 = sigma * math.sqrt(1.0 - p_phi**2 / math.tan(theta0) ** 2)
        sol = solve_ivp(rhs, (0.0, 1.5), [theta0, 0.1, pt0, p_phi],
                        method="DOP853", rtol=1e-12, atol=1e-13,
                        dense_output=True)
        for s in np.linspace(0.1, 1.5, 6):
            th_c, ph_c = closed_form(theta0, 0.1, p_phi, sigma, s)
            y = sol.sol(s)
            th_i = math.acos(max(-1.0, min(1.0, math.cos(y[0]))))
            assert th_c == pytest.approx(th_i, abs=1e-8)
            if min(abs(math.sin(y[0])), abs(math.sin(th_c))) > 1e-3 \
                    and math.sin(y[0]) > 0:
                d = (ph_c - y[1] + math.pi) % (2 * math.pi) - math.pi
                assert abs(d) < 1e-7


def test_xi_star_slope_and_admissibility():
    s = np.linspace(0.0, 1.0, 5)
    xi = xi_star_analytic(EQ - 0.3, 0.0, 0.2, 1, s)
    slopes = np.diff(xi) / np.diff(s)
    np.testing.assert_allclose(slopes, -0.2, atol=1e-12)
    with pytest.raises(UnreachableTargetError):
        xi_star_analytic(EQ - 0.3, 0.0, 10.0, 1, 0.0)


def test_minimax_value_basics():
    assert minimax_value(EQ, 0.0) == 0.0
    # meridian queries: value equals latitude distance
    for d in (0.1, 0.4, 1.0):
        assert minimax_value(EQ - d, 0.0) == pytest.approx(d, abs=1e-8)
        assert minimax_value(EQ + d, 0.0) == pytest.approx(d, abs=1e-8)
    # pole query: meridian arc
    assert minimax_value(1e-12, 1.0) == pytest.approx(EQ, abs=1e-9)


def test_minimax_symmetry_about_equator():
    for dth, dph in [(0.05, 0.3), (0.2, -0.7), (0.35, 1.2)]:
        above = minimax_value(EQ + dth, dph)
        below = minimax_value(EQ - dth, dph)
        assert above == pytest.approx(below, rel=1e-6)


def test_minimax_against_generic_solver():
    """Dual-route check: closed-form minimax vs the generic
    characteristic-integration solve."""
    for th, ph in [(EQ - 0.3, 0.4), (EQ + 0.5, -0.8), (EQ - 0.1, 1.5)]:
        a = minimax_value(th, ph)
        b = solve_single_qubit(th, ph)
        assert a == pytest.approx(b, rel=1e-5, abs=1e-7)


def test_ellipse_estimate_near_target():
    theta0 = EQ - 0.6
    for off in [(0.02, 0.0), (0.0, 0.015), (0.012, -0.012)]:
        q = (theta0 + off[0], 0.0 + off[1])
        est = ellipse_estimate(q[0], q[1], theta0, 0.0)
        val = minimax_value(q[0], q[1], theta0, 0.0)
        assert est == pytest.approx(val, rel=0.05)


def test_shock_on_equator():
    locus = shock_detect(n_phi=8)
    # shock along the equator except at the target's own longitude
    assert len(locus) >= 6
    assert all(th == pytest.approx(EQ) for th, _ in locus)
    assert all(abs(ph) > 1e-6 for _, ph in locus)


def test_return_arg_reproduces_value():
    j, (p_phi, sigma) = minimax_value(EQ - 0.4, 0.7, return_arg=True)
    th, ph = closed_form(EQ, 0.0, p_phi, sigma, j)
    assert th == pytest.approx(EQ - 0.4, abs=1e-7)
    d = (ph - 0.7 + math.pi) % (2 * math.pi) - math.pi
    assert abs(d) < 1e-6

"""Schrodinger-simulation layer: Rabi analytics, frame equivalence,
norm conservation, process verification."""

from __future__ import annotations

import math

import numpy as np
import pytest

from rydopt.dynamics import (
    BlochCoords,
    PulseProfile,
    PulseSegment,
    TLSAmplitudes,
    from_bloch,
    inverse_pulse,
    simulate,
    simulate_detuning,
    to_bloch,
    to_detuning_frame,
    verify_process,
)
from rydopt.errors import InvalidPulseError
from rydopt.search import target_library


def test_pulse_validation():
    with pytest.raises(InvalidPulseError):
        PulseSegment(np.array([0.0, 0.0]), np.array([0.0, 0.0]))
    with pytest.raises(InvalidPulseError):
        PulseProfile((PulseSegment(np.array([0.5, 1.0]),
                                   np.array([0.0, 0.0])),))
    with pytest.raises(InvalidPulseError):
        PulseProfile((
            PulseSegment(np.array([0.0, 1.0]), np.array([0.0, 0.0])),
            PulseSegment(np.array([1.5, 2.0]), np.array([0.0, 0.0])),
        ))


def test_bloch_round_trip():
    rng = np.random.default_rng(1)
    for _ in range(50):
        z = rng.normal(size=4)
        a = TLSAmplitudes(complex(z[0], z[1]), complex(z[2], z[3]))
        n = math.sqrt(abs(a.psi_g) ** 2 + abs(a.psi_e) ** 2)
        a = TLSAmplitudes(a.psi_g / n, a.psi_e / n)
        b = to_bloch(a)
        a2 = from_bloch(b)
        # round trip up to global phase
        ratio = None
        for u, v in ((a.psi_g, a2.psi_g), (a.psi_e, a2.psi_e)):
            if abs(v) > 1e-9:
                ratio = u / v if ratio is None else ratio
                assert abs(u - ratio * v) < 1e-9


def test_constant_pulse_rabi_oscillation():
    """Constant phase drive: analytic Rabi solution
    psi_g = cos(sqrt(n) t / 2), |psi_e| = |sin(sqrt(n) t / 2)|."""
    for n_k in (1, 2, 5):
        T = 1.3
        pulse = PulseProfile.constant(0.7, T)
        res = simulate(None, pulse, (n_k,), step=1e-3, record=False)
        a = res.final[0]
        half = math.sqrt(n_k) * T / 2.0
        assert abs(a.psi_g) == pytest.approx(abs(math.cos(half)), abs=1e-7)
        assert abs(a.psi_e) == pytest.approx(abs(math.sin(half)), abs=1e-7)
        # excited phase carries the drive phase: -i e^{-i xi} sin(...)
        expected = -1j * np.exp(-1j * 0.7) * math.sin(half)
        assert abs(a.psi_e - expected) < 1e-6


def test_norm_conservation_random_pulse():
    rng = np.random.default_rng(8)
    t = np.linspace(0.0, 3.0, 40)
    xi = np.cumsum(rng.normal(scale=0.2, size=40))
    pulse = PulseProfile.from_samples(t, xi)
    res = simulate(None, pulse, (1, 2), step=1e-3)
    norms = res.norms()
    assert np.max(np.abs(norms - 1.0)) < 1e-8


def test_detuning_frame_equivalence():
    """Phase-frame and detuning-frame simulations agree on populations
    and on relative phases up to the known frame factor."""
    t = np.linspace(0.0, 2.0, 21)
    xi = 0.4 * t**2 - 0.3 * t
    pulse = PulseProfile.from_samples(t, xi)
    det = to_detuning_frame(pulse)
    a = simulate(None, pulse, (1, 2), step=5e-4, record=False).final
    b = simulate_detuning(None, det, (1, 2), step=5e-4).final
    for k in range(2):
        assert abs(a[k].psi_g) == pytest.approx(abs(b[k].psi_g), abs=1e-6)
        # frame factor e^{-i(xi(T) - xi0)} on the excited amplitude
        fac = np.exp(-1j * (pulse.xi_at(pulse.duration) - det.xi0))
        assert abs(a[k].psi_e - fac * b[k].psi_e) < 1e-5


def test_inverse_pulse_round_trip():
    t = np.linspace(0.0, 2.5, 30)
    xi = np.sin(t)
    pulse = PulseProfile.from_samples(t, xi)
    fwd = simulate(None, pulse, (1, 2), step=5e-4, record=False).final
    back = simulate(fwd, inverse_pulse(pulse), (1, 2), step=5e-4,
                    record=False).final
    for k in range(2):
        assert abs(back[k].psi_e) < 1e-6
        assert abs(back[k].psi_g) == pytest.approx(1.0, abs=1e-6)


def test_verify_process_identity():
    target = target_library("cphi", phi=0.0)
    # a 2*pi rotation of a bare TLS is identity only for matching
    # enhancement; the trivial zero-duration limit is excluded by
    # construction, use a tiny null pulse instead
    pulse = PulseProfile.constant(0.0, 1e-6)
    report = verify_process(pulse, target)
    assert report.passed
    assert all(f > 1 - 1e-6 for f in report.fidelities)


def test_verify_process_detects_failure():
    target = target_library("cz")
    pulse = PulseProfile.constant(0.0, 1.0)
    report = verify_process(pulse, target)
    assert not report.passed
    assert report.details

"""Reduced dynamics of blockaded clusters under a phase-controlled drive.

Each cluster of n atoms behaves as an effective two-level system (TLS)
driven with enhanced Rabi frequency sqrt(n)*Omega; the global laser phase
xi(t) is the only control:

    d psi_g / dt = -(i/2) sqrt(n) Omega e^{+i xi} psi_e
    d psi_e / dt = -(i/2) sqrt(n) Omega e^{-i xi} psi_g

Pulses are piecewise-linear phase profiles organized in segments; a
discontinuity of xi is a segment boundary (jump marker).  Omega = 1
internally, times in units of 1/Omega.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IntegrationFailureError, InvalidPulseError

POLE_AMPLITUDE_TOL = 1e-9


@dataclass(frozen=True)
class TLSAmplitudes:
    """Ground/excited amplitude pair of one effective TLS."""

    psi_g: complex
    psi_e: complex

    @property
    def norm(self) -> float:
        return math.hypot(abs(self.psi_g), abs(self.psi_e))

    @staticmethod
    def ground() -> "TLSAmplitudes":
        return TLSAmplitudes(1.0 + 0.0j, 0.0j)


@dataclass(frozen=True)
class BlochCoords:
    """Bloch-sphere coordinates (theta, phi, phi_g) of one TLS.

    theta = pi is the ground state, theta = 0 the excited state.  phi and
    phi_g are None when undefined (at the respective poles).
    """

    theta: float
    phi: float | None
    phi_g: float | None

    @property
    def at_pole(self) -> bool:
        return self.phi is None


def to_bloch(a: TLSAmplitudes) -> BlochCoords:
    """Change of variables from amplitudes to (theta, phi, phi_g)."""
    abs_e = min(abs(a.psi_e), 1.0)
    theta = math.pi - 2.0 * math.asin(abs_e)
    phi_g = None if abs(a.psi_g) < POLE_AMPLITUDE_TOL else float(np.angle(a.psi_g))
    if abs_e < POLE_AMPLITUDE_TOL or phi_g is None:
        phi = None
    else:
        phi = _wrap(phi_g - float(np.angle(a.psi_e)))
    return BlochCoords(theta, phi, phi_g)


def from_bloch(b: BlochCoords) -> TLSAmplitudes:
    """Inverse change of variables; undefined phases are taken as zero."""
    phi_g = 0.0 if b.phi_g is None else b.phi_g
    phi = 0.0 if b.phi is None else b.phi
    half = b.theta / 2.0
    return TLSAmplitudes(
        math.sin(half) * np.exp(1j * phi_g),
        math.cos(half) * np.exp(1j * (phi_g - phi)),
    )


@dataclass(frozen=True)
class PulseSegment:
    """One continuous piece of a pulse: xi piecewise-linear over `times`."""

    times: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, float)
        x = np.asarray(self.xi, float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "xi", x)
        if t.ndim != 1 or t.size < 2 or x.shape != t.shape:
            raise InvalidPulseError("segment needs >= 2 matched (t, xi) samples")
        if not np.all(np.diff(t) > 0):
            raise InvalidPulseError("segment times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
            raise InvalidPulseError("non-finite pulse samples")

    def xi_at(self, t):
        return np.interp(t, self.times, self.xi)


@dataclass(frozen=True)
class PulseProfile:
    """Laser-phase profile xi(t) at constant Rabi frequency omega.

    The phase is piecewise-linear inside each segment; consecutive
    segments abut in time and may disagree in xi at the shared boundary,
    which represents a phase jump.
    """

    segments: tuple[PulseSegment, ...]
    omega: float = 1.0

    def __post_init__(self):
        if not self.segments:
            raise InvalidPulseError("pulse needs at least one segment")
        if abs(self.segments[0].times[0]) > 0:
            raise InvalidPulseError("pulse must start at t = 0")
        for a, b in zip(self.segments, self.segments[1:]):
            if abs(b.times[0] - a.times[-1]) > 1e-12:
                raise InvalidPulseError("segments must abut in time")

    @property
    def duration(self) -> float:
        return float(self.segments[-1].times[-1])

    @property
    def jumps(self) -> tuple[tuple[float, float], ...]:
        """Phase discontinuities as (time, delta_xi) markers."""
        out = []
        for a, b in zip(self.segments, self.segments[1:]):
            dxi = float(b.xi[0] - a.xi[-1])
            if dxi != 0.0:
                out.append((float(b.times[0]), dxi))
        return tuple(out)

    def xi_at(self, t) -> np.ndarray:
        """Evaluate xi(t); right-continuous at jumps."""
        t = np.asarray(t, float)
        out = np.empty(t.shape)
        starts = np.array([s.times[0] for s in self.segments])
        idx = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(self.segments) - 1)
        for k, seg in enumerate(self.segments):
            m = idx == k
            if np.any(m):
                out[m] = seg.xi_at(t[m])
        return out

    @staticmethod
    def from_samples(times, xi, omega: float = 1.0) -> "PulseProfile":
        return PulseProfile((PulseSegment(np.asarray(times, float), np.asarray(xi, float)),), omega)

    @staticmethod
    def constant(xi: float, duration: float, omega: float = 1.0) -> "PulseProfile":
        return PulseProfile.from_samples([0.0, duration], [xi, xi], omega)


@dataclass(frozen=True)
class DetuningProfile:
    """Equivalent-frame description: per-piece constant detuning delta = dxi/dt.

    `times` are the breakpoints (segment and sample boundaries of the
    source pulse), `delta[k]` the slope on (times[k], times[k+1]);
    `xi0` is the constant drive phase of this frame.  Excited-state
    amplitudes in this frame differ from the phase frame by the factor
    e^{-i(xi(t) - xi0)}.
    """

    times: np.ndarray
    delta: np.ndarray
    omega: float = 1.0
    xi0: float = 0.0

    @property
    def duration(self) -> float:
        return float(self.times[-1])


def to_detuning_frame(p: PulseProfile) -> DetuningProfile:
    """Differentiate the phase profile into piecewise-constant detunings."""
    times = [0.0]
    delta = []
    for seg in p.segments:
        for k in range(seg.times.size - 1):
            dt = seg.times[k + 1] - seg.times[k]
            delta.append((seg.xi[k + 1] - seg.xi[k]) / dt)
            times.append(float(seg.times[k + 1]))
    return DetuningProfile(np.array(times), np.array(delta), p.omega, float(p.segments[0].xi[0]))


def inverse_pulse(p: PulseProfile) -> PulseProfile:
    """Pulse xi'(t) = xi(T - t) + pi driving the reversed process."""
    T = p.duration
    segs = tuple(
        PulseSegment(T - seg.times[::-1], seg.xi[::-1] + math.pi)
        for seg in reversed(p.segments)
    )
    return PulseProfile(segs, p.omega)


def _breakpoints(p: PulseProfile) -> np.ndarray:
    pts = [seg.times for seg in p.segments]
    return np.unique(np.concatenate(pts))


@dataclass(frozen=True)
class SimulationResult:
    """Time series of amplitudes, one column per TLS."""

    times: np.ndarray
    psi_g: np.ndarray  # shape (n_times, n_tls)
    psi_e: np.ndarray

    @property
    def final(self) -> list[TLSAmplitudes]:
        return [TLSAmplitudes(self.psi_g[-1, k], self.psi_e[-1, k])
                for k in range(self.psi_g.shape[1])]

    def norms(self) -> np.ndarray:
        return np.sqrt(np.abs(self.psi_g) ** 2 + np.abs(self.psi_e) ** 2)


def _rk4_drive(psi_g, psi_e, rabi, xi_fn, t0, t1, step):
    """Fixed-step RK4 over [t0, t1] for all TLSs at once."""
    n_steps = max(1, int(math.ceil((t1 - t0) / step)))
    h = (t1 - t0) / n_steps
    t = t0
    for _ in range(n_steps):
        xs = xi_fn(np.array([t, t + h / 2.0, t + h]))
        e_p = np.exp(1j * xs)
        k1g = -0.5j * rabi * e_p[0] * psi_e
        k1e = -0.5j * rabi * np.conj(e_p[0]) * psi_g
        k2g = -0.5j * rabi * e_p[1] * (psi_e + h / 2.0 * k1e)
        k2e = -0.5j * rabi * np.conj(e_p[1]) * (psi_g + h / 2.0 * k1g)
        k3g = -0.5j * rabi * e_p[1] * (psi_e + h / 2.0 * k2e)
        k3e = -0.5j * rabi * np.conj(e_p[1]) * (psi_g + h / 2.0 * k2g)
        k4g = -0.5j * rabi * e_p[2] * (psi_e + h * k3e)
        k4e = -0.5j * rabi * np.conj(e_p[2]) * (psi_g + h * k3g)
        psi_g = psi_g + h / 6.0 * (k1g + 2 * k2g + 2 * k3g + k4g)
        psi_e = psi_e + h / 6.0 * (k1e + 2 * k2e + 2 * k3e + k4e)
        t += h
    return psi_g, psi_e


def simulate(start, pulse: PulseProfile, enhancements, step: float = 1e-3,
             record: bool = True) -> SimulationResult:
    """Integrate the reduced Schrodinger dynamics for each TLS.

    Parameters
    ----------
    start : list of TLSAmplitudes (or None for all-ground starts).
    pulse : the driving phase profile.
    enhancements : Rabi enhancement integers n_k, one per TLS.
    step : maximum RK4 step; steps are broken at pulse breakpoints so
        xi is smooth inside every step.
    record : if False only the endpoint states are stored.
    """
    if step <= 0:
        raise InvalidPulseError("step must be positive")
    n = len(enhancements)
    if start is None:
        start = [TLSAmplitudes.ground()] * n
    if len(start) != n:
        raise InvalidPulseError("start states and enhancements disagree in length")
    rabi = pulse.omega * np.sqrt(np.asarray(enhancements, float))
    psi_g = np.array([a.psi_g for a in start], complex)
    psi_e = np.array([a.psi_e for a in start], complex)
    bps = _breakpoints(pulse)
    times = [0.0]
    gs, es = [psi_g.copy()], [psi_e.copy()]
    for t0, t1 in zip(bps[:-1], bps[1:]):
        if record:
            sub = np.linspace(t0, t1, max(2, int(math.ceil((t1 - t0) / max(step, 1e-12) / 10.0)) + 1))
        else:
            sub = np.array([t0, t1])
        for a, b in zip(sub[:-1], sub[1:]):
            psi_g, psi_e = _rk4_drive(psi_g, psi_e, rabi, pulse.xi_at, a, b, step)
            if record:
                times.append(float(b))
                gs.append(psi_g.copy())
                es.append(psi_e.copy())
    if not record:
        times += [pulse.duration]
        gs.append(psi_g.copy())
        es.append(psi_e.copy())
    res = SimulationResult(np.array(times), np.array(gs), np.array(es))
    if not np.all(np.isfinite(res.psi_g.view(float))) or not np.all(
        np.isfinite(res.psi_e.view(float))
    ):
        raise IntegrationFailureError("non-finite amplitudes during simulation")
    return res


def simulate_detuning(start, det: DetuningProfile, enhancements,
                      step: float = 1e-3) -> SimulationResult:
    """Integrate in the detuning frame: constant drive phase xi0, detuning
    delta(t) acting on the excited amplitudes:

        d psi_e / dt = +i delta psi_e - (i/2) sqrt(n) Omega e^{-i xi0} psi_g
        d psi_g / dt =               - (i/2) sqrt(n) Omega e^{+i xi0} psi_e
    """
    n = len(enhancements)
    if start is None:
        start = [TLSAmplitudes.ground()] * n
    rabi = det.omega * np.sqrt(np.asarray(enhancements, float))
    e0 = np.exp(1j * det.xi0)
    psi_g = np.array([a.psi_g for a in start], complex)
    psi_e = np.array([a.psi_e for a in start], complex)
    times = [0.0]
    gs, es = [psi_g.copy()], [psi_e.copy()]

    for k in range(det.delta.size):
        t0, t1 = det.times[k], det.times[k + 1]
        d = det.delta[k]

        def rhs(pg, pe):
            return (-0.5j * rabi * e0 * pe,
                    1j * d * pe - 0.5j * rabi * np.conj(e0) * pg)

        n_steps = max(1, int(math.ceil((t1 - t0) / step)))
        h = (t1 - t0) / n_steps
        for _ in range(n_steps):
            k1g, k1e = rhs(psi_g, psi_e)
            k2g, k2e = rhs(psi_g + h / 2 * k1g, psi_e + h / 2 * k1e)
            k3g, k3e = rhs(psi_g + h / 2 * k2g, psi_e + h / 2 * k2e)
            k4g, k4e = rhs(psi_g + h * k3g, psi_e + h * k3e)
            psi_g = psi_g + h / 6 * (k1g + 2 * k2g + 2 * k3g + k4g)
            psi_e = psi_e + h / 6 * (k1e + 2 * k2e + 2 * k3e + k4e)
        times.append(float(t1))
        gs.append(psi_g.copy())
        es.append(psi_e.copy())
    return SimulationResult(np.array(times), np.array(gs), np.array(es))


@dataclass(frozen=True)
class FidelityReport:
    """Outcome of checking a pulse against a process definition."""

    passed: bool
    fidelities: tuple[float, ...]
    phase_errors: dict
    realized: dict
    details: str = ""


def _wrap(a: float) -> float:
    return -((-a + math.pi) % (2.0 * math.pi) - math.pi)


def verify_process(pulse: PulseProfile, target, enhancements=None,
                   step: float = 5e-4, fidelity_threshold: float = 1.0 - 1e-4,
                   phase_threshold: float = 1e-3) -> FidelityReport:
    """Simulate all TLSs from ground and compare with a process target.

    The target supplies a variant (coordinate layout), target coordinates
    and per-coordinate free flags; free and pole-undefined coordinates
    are skipped.  Latitude agreement is reported as the per-TLS overlap
    fidelity cos^2((theta - theta_t)/2); longitudes and phase
    combinations as wrapped angular errors.
    """
    v = target.variant
    if enhancements is None:
        enhancements = v.enhancements
    res = simulate(None, pulse, enhancements, step=step, record=False)
    final = res.final
    bloch = [to_bloch(a) for a in final]
    thetas = np.array([b.theta for b in bloch])
    x_t = np.asarray(target.x_t, float)
    free = np.asarray(target.free, bool)

    fids = tuple(
        float(math.cos((thetas[k] - x_t[k]) / 2.0) ** 2) for k in range(v.n_tls)
    )
    phase_errors: dict[str, float] = {}
    realized: dict[str, float | None] = {"theta": [float(t) for t in thetas]}

    # relative longitudes phi_k - phi_1
    if v.n_tls >= 2:
        longs = []
        for k in range(1, v.n_tls):
            if bloch[0].phi is None or bloch[k].phi is None:
                longs.append(None)
            else:
                longs.append(_wrap(bloch[k].phi - bloch[0].phi))
        realized["longitudes"] = longs
        for i, name in enumerate(v.coord_names[v.longitude_slice]):
            j = v.n_tls + i
            if free[j] or longs[i] is None:
                continue
            phase_errors[name] = abs(_wrap(longs[i] - x_t[j]))

    # gate-phase combinations
    if v.n_phases:
        weights = v.gate_weights
        phases = []
        for i in range(v.n_phases):
            k = i + 1
            if bloch[0].phi_g is None or bloch[k].phi_g is None:
                phases.append(None)
            else:
                phases.append(_wrap(bloch[k].phi_g - weights[i] * bloch[0].phi_g))
        realized["phases"] = phases
        base = v.n_tls + v.n_longitudes
        for i, name in enumerate(v.coord_names[v.phase_slice]):
            j = base + i
            if free[j] or phases[i] is None:
                continue
            phase_errors[name] = abs(_wrap(phases[i] - x_t[j]))

    ok = all(f >= fidelity_threshold for f in fids) and all(
        e <= phase_threshold for e in phase_errors.values()
    )
    detail = "" if ok else (
        f"fidelities={fids}, phase_errors={phase_errors}"
    )
    return FidelityReport(ok, fids, phase_errors, realized, detail)

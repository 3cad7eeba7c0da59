"""Characteristic integration from the regularized all-ground start.

Characteristics are integrated in an extended latitude chart where the
theta_k may leave [0, pi]; the equations are invariant under the
reflection (theta -> -theta, longitude -> longitude + pi, p_theta ->
-p_theta), so passing straight through a Bloch-sphere pole in the chart
is equivalent to the folded physical motion.  Mapping chart coordinates
back to physical reduced coordinates only requires the signs of
sin(theta/2) and cos(theta/2) (ground/excited amplitude signs), not a
crossing count; see :func:`physical_coords`.

The eliminated first-TLS longitude phi_1 is carried as an extra ODE
state so the physical optimal phase xi* = phi_1 + arg(A) - pi can be
reconstructed along the trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar

from .errors import InconsistentStartError, UnsupportedVariantError
from .fields import (
    AMPLITUDE,
    GATE_PHASE,
    SELECTIVE_PHASE,
    CoefficientField,
    Variant,
    eval_F,
)

try:  # compiled right-hand side; pure-python fallback below is identical
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(f):
            return f

        return deco if not (args and callable(args[0])) else args[0]


F_TOL = 1e-6
DEFAULT_EPSILON = 1e-4
PHI1_START = math.pi / 2.0


@dataclass(frozen=True)
class StartParams:
    """Free parameters of a regularized start at s = epsilon.

    The free theta-momenta are those of the first N-1 TLSs
    (``p_theta1_0`` and, for three TLSs, ``p_theta_extra``); the last one
    is solved from the exact constraint sum_k sqrt(n_k) p_theta_k = sigma/Omega.
    ``f_phi_0`` are the short-time slopes of the relative-longitude
    momenta (p ~ f*epsilon) and ``p_Phi_0`` the constant gate-phase momenta.
    """

    p_theta1_0: float = 0.0
    p_theta_extra: tuple[float, ...] = ()
    f_phi_0: tuple[float, ...] = ()
    p_Phi_0: tuple[float, ...] = ()
    sigma: int = -1
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.sigma not in (-1, 1):
            raise UnsupportedVariantError("sigma must be +1 or -1")
        for name in ("p_theta_extra", "f_phi_0", "p_Phi_0"):
            v = getattr(self, name)
            if not isinstance(v, tuple):
                object.__setattr__(self, name, tuple(np.atleast_1d(v)))

    def conjugate(self) -> "StartParams":
        """Complex-conjugation partner: angle coordinates flip sign, so
        their momenta do too; latitude momenta and sigma are kept."""
        return StartParams(
            self.p_theta1_0,
            self.p_theta_extra,
            tuple(-v for v in self.f_phi_0),
            tuple(-v for v in self.p_Phi_0),
            self.sigma,
            self.epsilon,
        )

    def as_vector(self) -> np.ndarray:
        return np.array(
            (self.p_theta1_0,) + self.p_theta_extra + self.f_phi_0 + self.p_Phi_0
        )


@dataclass(frozen=True)
class CharacteristicPoint:
    s: float
    x: np.ndarray
    p: np.ndarray
    phi1: float
    xi_star: float


@dataclass(frozen=True)
class Trajectory:
    """Sampled characteristic with dense interpolant.

    ``x`` holds chart coordinates (latitudes possibly outside [0, pi]);
    ``xi_star`` is the physical optimal phase, unwrapped continuously.
    """

    variant: Variant
    s: np.ndarray
    x: np.ndarray  # (n_samples, dim)
    p: np.ndarray
    phi1: np.ndarray
    xi_star: np.ndarray
    f_max: float
    reason: str  # "s_max" | "momentum-blowup" | "f-drift" | "integrator-failure"
    _sol: object = dc_field(default=None, repr=False)

    @property
    def s_end(self) -> float:
        return float(self.s[-1])

    def state_at(self, s):
        """Dense-output (x, p, phi1) at parameter s."""
        dim = self.variant.dim
        y = self._sol(np.clip(s, self.s[0], self.s[-1]))
        return y[:dim], y[dim : 2 * dim], y[2 * dim]

    def point_at(self, s, field: CoefficientField) -> CharacteristicPoint:
        x, p, phi1 = self.state_at(s)
        a = field.direction_sum(x, p)
        return CharacteristicPoint(float(s), x, p, float(phi1),
                                   float(phi1 + np.angle(a) - math.pi))


# ---------------------------------------------------------------------------
# compiled right-hand side (identical in content to fields.characteristic_rhs
# plus fields.first_longitude_rate; the generic numpy version is the audited
# reference and the test suite asserts agreement)

@njit(cache=True)
def _rhs_core(y, n_tls, n_long, n_phase, sqn, w, omega):  # pragma: no cover
    dim = n_tls + n_long + n_phase
    c = np.zeros(dim, np.complex128)
    th = y[:n_tls].copy()
    for k in range(n_tls):
        if abs(math.sin(th[k])) < 1e-14:
            th[k] += 1e-12
    if n_tls == 1:
        c[0] = 1j * sqn[0]
        c[1] = -sqn[0] / math.tan(th[0])
    else:
        cot0 = 1.0 / math.tan(th[0])
        coth0 = 1.0 / math.tan(th[0] / 2.0)
        c[0] = 1j * sqn[0]
        for i in range(n_long):
            k = i + 1
            e = np.exp(1j * y[n_tls + i])
            c[k] = 1j * sqn[k] * e
            c[n_tls + i] = sqn[0] * cot0 - sqn[k] * e / math.tan(th[k])
        for i in range(n_phase):
            k = i + 1
            e = np.exp(1j * y[n_tls + i])
            c[n_tls + n_long + i] = (
                sqn[0] * w[i] * coth0 / 2.0
                - sqn[k] * e / math.tan(th[k] / 2.0) / 2.0
            )
    p = y[dim : 2 * dim]
    a = 0.0 + 0.0j
    for j in range(dim):
        a += c[j] * p[j]
    absa = abs(a)
    if absa < 1e-12:
        return np.full(2 * dim + 1, np.nan)
    ac = np.conj(a)

    b = np.zeros(dim, np.complex128)
    if n_tls == 1:
        b[0] = p[1] * sqn[0] / math.sin(th[0]) ** 2
    else:
        inv20 = 1.0 / math.sin(th[0]) ** 2
        inv2h0 = 1.0 / math.sin(th[0] / 2.0) ** 2
        for i in range(n_long):
            k = i + 1
            e = np.exp(1j * y[n_tls + i])
            inv2k = 1.0 / math.sin(th[k]) ** 2
            cotk = 1.0 / math.tan(th[k])
            b[0] += -sqn[0] * inv20 * p[n_tls + i]
            b[k] += sqn[k] * e * inv2k * p[n_tls + i]
            b[n_tls + i] += (
                -sqn[k] * e * p[k]
                - 1j * sqn[k] * e * cotk * p[n_tls + i]
            )
        for i in range(n_phase):
            k = i + 1
            e = np.exp(1j * y[n_tls + i])
            inv2hk = 1.0 / math.sin(th[k] / 2.0) ** 2
            cothk = 1.0 / math.tan(th[k] / 2.0)
            jp = n_tls + n_long + i
            b[0] += -sqn[0] * w[i] * inv2h0 / 4.0 * p[jp]
            b[k] += sqn[k] * e * inv2hk / 4.0 * p[jp]
            b[n_tls + i] += -1j * sqn[k] * e * cothk / 2.0 * p[jp]

    out = np.empty(2 * dim + 1)
    for j in range(dim):
        out[j] = omega * (ac * c[j]).real / absa
        out[dim + j] = -omega * (ac * b[j]).real / absa
    out[2 * dim] = -omega * sqn[0] * a.real / (math.tan(th[0]) * absa)
    return out


def make_rhs(field: CoefficientField, omega: float = 1.0):
    """ODE function f(s, y) with y = [x, p, phi_1]."""
    v = field.variant
    sqn = np.sqrt(np.asarray(v.enhancements, float))
    w = np.asarray(v.gate_weights, float) if v.n_phases else np.zeros(0)
    n_tls, n_long, n_phase = v.n_tls, v.n_longitudes, v.n_phases

    def rhs(s, y):
        return _rhs_core(y, n_tls, n_long, n_phase, sqn, w, omega)

    return rhs


# ---------------------------------------------------------------------------

def init_at_epsilon(field: CoefficientField, params: StartParams,
                    omega: float = 1.0) -> CharacteristicPoint:
    """Regularized start point at s = epsilon from the all-ground state.

    Leading-order short-time state: theta_k = pi - sqrt(n_k)*Omega*eps,
    longitudes and gate phases 0; momenta: theta-momenta from params with
    the exact constraint, longitude momenta f*eps, gate-phase momenta
    p_Phi_0 constant.
    """
    v = field.variant
    eps = params.epsilon
    if not 1e-5 <= eps <= 1e-3:
        raise InconsistentStartError(f"epsilon {eps} outside [1e-5, 1e-3]")
    sqn = np.sqrt(np.asarray(v.enhancements, float))
    x = np.zeros(v.dim)
    # sigma=-1 departs toward decreasing theta; the sigma=+1 branch starts on
    # the far side of the all-ground pole in the extended chart (the exact
    # reflection), which avoids integrating through the joint singularity.
    x[v.theta_slice] = math.pi + params.sigma * sqn * omega * eps

    p = np.zeros(v.dim)
    free = (params.p_theta1_0,) + params.p_theta_extra
    if len(free) != v.n_tls - 1:
        raise InconsistentStartError(
            f"need {v.n_tls - 1} free theta-momenta, got {len(free)}"
        )
    p[: v.n_tls - 1] = free
    p[v.n_tls - 1] = (params.sigma / omega - float(sqn[:-1] @ p[: v.n_tls - 1])) / sqn[-1]

    f_phi = params.f_phi_0 or (0.0,) * v.n_longitudes
    if v.n_tls == 1:
        p[1] = f_phi[0] * eps
    else:
        if len(f_phi) != v.n_longitudes:
            raise InconsistentStartError("wrong number of longitude slopes")
        p[v.longitude_slice] = np.asarray(f_phi) * eps
        if v.n_phases:
            p_Phi = params.p_Phi_0 or (0.0,) * v.n_phases
            if len(p_Phi) != v.n_phases:
                raise InconsistentStartError("wrong number of gate-phase momenta")
            # Reported gate-phase momenta follow the published sign
            # convention, which is opposite to this chart's; fixed
            # operationally by forward-simulation verification.
            p[v.phase_slice] = -np.asarray(p_Phi)

    f = eval_F(field, x, p, omega)
    if abs(f) > 1e-5:
        raise InconsistentStartError(f"start off shell: F = {f:.3e}")
    a = field.direction_sum(x, p)
    xi = PHI1_START + float(np.angle(a)) - math.pi
    return CharacteristicPoint(eps, x, p, PHI1_START, xi)


def integrate(field: CoefficientField, start: CharacteristicPoint, s_max: float,
              rtol: float = 1e-10, atol: float = 1e-12, sample_ds: float = 0.01,
              momentum_bound: float = 1e4, omega: float = 1.0,
              f_tol: float = F_TOL) -> Trajectory:
    """Integrate a characteristic up to s_max with on-shell monitoring.

    Terminates early when the momentum norm exceeds ``momentum_bound``
    (diverging pole approach) or when |F| drifts beyond ``f_tol`` at a
    sample (trajectory truncated at the last on-shell sample; pass a
    looser f_tol together with a looser rtol for cheap screening runs).
    """
    v = field.variant
    dim = v.dim
    rhs = make_rhs(field, omega)
    y0 = np.concatenate([start.x, start.p, [start.phi1]])

    def blowup(s, y):
        return momentum_bound**2 - float(y[dim : 2 * dim] @ y[dim : 2 * dim])

    blowup.terminal = True
    blowup.direction = -1

    sol = solve_ivp(rhs, (start.s, s_max), y0, method="DOP853", rtol=rtol,
                    atol=atol, dense_output=True, events=[blowup])
    if sol.status == -1 and sol.t[-1] <= start.s:
        raise InconsistentStartError(f"integration failed immediately: {sol.message}")

    s_end = float(sol.t[-1])
    n = max(2, int(math.ceil((s_end - start.s) / sample_ds)) + 1)
    ss = np.linspace(start.s, s_end, n)
    ys = sol.sol(ss)
    xs = ys[:dim].T
    ps = ys[dim : 2 * dim].T
    phi1 = ys[2 * dim]

    avals = field.direction_sum_batch(xs, ps)
    fvals = omega * np.abs(avals) - 1.0
    bad = np.flatnonzero(np.abs(fvals) > f_tol)
    if bad.size:
        cut = max(2, int(bad[0]))
        reason = "f-drift"
        ss, xs, ps, phi1 = ss[:cut], xs[:cut], ps[:cut], phi1[:cut]
        avals, fvals = avals[:cut], fvals[:cut]
    elif sol.status == 1:
        reason = "momentum-blowup"
    elif sol.status == -1:
        reason = "integrator-failure"
    else:
        reason = "s_max"

    xi = phi1 + np.unwrap(np.angle(avals)) - math.pi

    return Trajectory(v, ss, xs, ps, phi1, xi, float(np.max(np.abs(fvals))),
                      reason, sol.sol)


# ---------------------------------------------------------------------------
# chart -> physical mapping and target matching

def physical_coords(variant: Variant, x_chart) -> np.ndarray:
    """Fold chart coordinates to physical reduced coordinates.

    Latitudes fold as arccos(cos(theta)); longitudes and gate phases pick
    up pi offsets from the sign flips of the ground/excited amplitudes
    sin(theta/2), cos(theta/2) in the extended chart.
    """
    v = variant
    x = np.asarray(x_chart, float)
    out = x.copy()
    th = x[v.theta_slice]
    out[v.theta_slice] = np.arccos(np.clip(np.cos(th), -1.0, 1.0))
    # amplitude-sign parities per TLS
    a = (np.sin(th / 2.0) < 0.0).astype(float)  # ground-amplitude sign flip
    b = (np.cos(th / 2.0) < 0.0).astype(float)  # excited-amplitude sign flip
    for i in range(v.n_longitudes if v.n_tls > 1 else 0):
        k = i + 1
        out[v.n_tls + i] += math.pi * ((a[k] - b[k]) - (a[0] - b[0]))
    if v.n_phases:
        w = v.gate_weights
        base = v.n_tls + v.n_longitudes
        for i in range(v.n_phases):
            out[base + i] += math.pi * (a[i + 1] - w[i] * a[0])
    return out


def target_residuals(variant: Variant, x_chart, x_t, free) -> np.ndarray:
    """Signed per-coordinate mismatches vs a target (free coords skipped).

    Latitudes compare folded values directly; longitudes and phases are
    wrapped to (-pi, pi].
    """
    xp = physical_coords(variant, x_chart)
    x_t = np.asarray(x_t, float)
    res = []
    for j in range(variant.dim):
        if free[j]:
            continue
        d = xp[j] - x_t[j]
        if j >= variant.n_tls:
            d = -((-d + math.pi) % (2.0 * math.pi) - math.pi)
        res.append(d)
    return np.array(res)


def distance_to_target(variant: Variant, x_chart, x_t, free) -> float:
    r = target_residuals(variant, x_chart, x_t, free)
    return float(np.sqrt(r @ r)) if r.size else 0.0


def approach_distances(variant: Variant, x_chart: np.ndarray, x_t, free) -> np.ndarray:
    """Vectorized distance-to-target over an (n_samples, dim) chart array."""
    v = variant
    x = np.atleast_2d(np.asarray(x_chart, float))
    x_t = np.asarray(x_t, float)
    free = np.asarray(free, bool)
    th = x[:, v.theta_slice]
    a = np.sin(th / 2.0) < 0.0
    b = np.cos(th / 2.0) < 0.0
    d2 = np.zeros(x.shape[0])
    for k in range(v.n_tls):
        if not free[k]:
            d2 += (np.arccos(np.clip(np.cos(th[:, k]), -1.0, 1.0)) - x_t[k]) ** 2
    for i in range(v.n_longitudes if v.n_tls > 1 else 0):
        j = v.n_tls + i
        if free[j]:
            continue
        k = i + 1
        val = x[:, j] + math.pi * ((a[:, k] - b[:, k]) - (a[:, 0] - b[:, 0]))
        d2 += _wrap_arr(val - x_t[j]) ** 2
    if v.n_phases:
        w = v.gate_weights
        base = v.n_tls + v.n_longitudes
        for i in range(v.n_phases):
            j = base + i
            if free[j]:
                continue
            val = x[:, j] + math.pi * (a[:, i + 1] - w[i] * a[:, 0])
            d2 += _wrap_arr(val - x_t[j]) ** 2
    return np.sqrt(d2)


def _wrap_arr(a):
    return -((-a + math.pi) % (2.0 * math.pi) - math.pi)


def closest_approach(traj: Trajectory, target,
                     refine: bool = True) -> tuple[float, float]:
    """Smallest distance to a target along the trajectory.

    Scans the stored samples for local minima and (optionally) refines
    each with the dense interpolant; returns (s_hit, distance) of the
    best minimum.
    """
    v = traj.variant
    x_t, free = np.asarray(target.x_t, float), np.asarray(target.free, bool)
    if not np.any(~free):
        return float(traj.s[0]), 0.0
    d = approach_distances(v, traj.x, x_t, free)
    if not refine:
        i = int(np.argmin(d))
        return float(traj.s[i]), float(d[i])
    interior = np.flatnonzero((d[1:-1] <= d[:-2]) & (d[1:-1] <= d[2:])) + 1
    cands = set(interior.tolist()) | {0, len(d) - 1}
    best = (float(traj.s[int(np.argmin(d))]), float(np.min(d)))
    dim = v.dim
    for i in cands:
        lo = traj.s[max(0, i - 1)]
        hi = traj.s[min(len(d) - 1, i + 1)]
        if hi <= lo:
            continue
        fun = lambda s: distance_to_target(v, traj._sol(s)[:dim], x_t, free)
        r = minimize_scalar(fun, bounds=(lo, hi), method="bounded",
                            options={"xatol": 1e-12})
        if r.fun < best[1]:
            best = (float(r.x), float(r.fun))
    return best

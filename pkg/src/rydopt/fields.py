"""Coefficient fields of the reduced minimum-time equations.

Every equation variant is represented by complex coefficient functions
``c_j(x)`` such that the stationary optimality condition reads

    F(x, p) = Omega * |sum_j c_j(x) p_j| - 1 = 0,

where ``x`` collects the reduced state variables (latitudes, relative
longitudes, gate-phase combinations) and ``p`` the conjugate momenta.
The characteristic system, the optimal drive phase, and its slope along
a characteristic are all derived from the ``c_j`` and their analytic
derivatives.

Coordinate layouts
------------------
N=1            : (theta, phi)
N=2 amplitude  : (theta1, theta2, phi)
N=2 gate-phase : (theta1, theta2, phi, Phi)
N=2 selective  : (theta1, theta2, phi, Phi)   [first-TLS ground-phase term absent]
N=3 amplitude  : (theta1, theta2, theta3, phi21, phi31)
N=3 gate-phase : (theta1, theta2, theta3, phi21, phi31, Phi2, Phi3)

Latitudes are allowed outside [0, pi]: the coefficient functions are
invariant under the reflection (theta_k -> -theta_k, phi_k1 -> phi_k1 + pi,
p_theta_k -> -p_theta_k), so integrating straight through a Bloch-sphere
pole in this extended chart is equivalent to the folded physical motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateDirectionError,
    SingularEvaluationError,
    UnsupportedVariantError,
)

AMPLITUDE = "amplitude"
GATE_PHASE = "gate-phase"
SELECTIVE_PHASE = "selective-phase"

_KINDS = (AMPLITUDE, GATE_PHASE, SELECTIVE_PHASE)


@dataclass(frozen=True)
class Variant:
    """Identifies one reduced equation variant.

    Parameters
    ----------
    n_tls : number of effective two-level systems (1, 2 or 3).
    kind : "amplitude" (latitudes and relative longitudes only),
        "gate-phase" (adds rotation-invariant ground-phase combinations),
        or "selective-phase" (gate phase of the second TLS alone).
    enhancements : Rabi-frequency enhancement integers n_k, one per TLS.
    """

    n_tls: int
    kind: str
    enhancements: tuple[int, ...] = (1, 2)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise UnsupportedVariantError(f"unknown kind {self.kind!r}")
        if self.n_tls not in (1, 2, 3):
            raise UnsupportedVariantError(f"n_tls must be 1, 2 or 3, got {self.n_tls}")
        if len(self.enhancements) != self.n_tls:
            raise UnsupportedVariantError(
                f"need {self.n_tls} enhancements, got {self.enhancements}"
            )
        if any(int(n) != n or n < 1 for n in self.enhancements):
            raise UnsupportedVariantError("enhancements must be integers >= 1")
        if self.kind == GATE_PHASE:
            # Gate-phase combinations Phi_k = phi_g,k - w_k*phi_g,1 are only
            # defined for the canonical Hamming-weight ladders.
            if self.enhancements not in ((1, 2), (1, 2, 3)):
                raise UnsupportedVariantError(
                    f"gate-phase variant requires enhancements (1,2) or (1,2,3), "
                    f"got {self.enhancements}"
                )
        if self.kind == SELECTIVE_PHASE and self.n_tls != 2:
            raise UnsupportedVariantError("selective-phase variant requires n_tls=2")
        if self.n_tls == 1 and self.kind != AMPLITUDE:
            raise UnsupportedVariantError("single-TLS variant is amplitude-only")

    @property
    def coord_names(self) -> tuple[str, ...]:
        if self.n_tls == 1:
            return ("theta", "phi")
        names = [f"theta{k}" for k in range(1, self.n_tls + 1)]
        if self.n_tls == 2:
            names.append("phi")
        else:
            names += ["phi21", "phi31"]
        if self.kind == GATE_PHASE:
            names += ["Phi"] if self.n_tls == 2 else ["Phi2", "Phi3"]
        elif self.kind == SELECTIVE_PHASE:
            names.append("Phi")
        return tuple(names)

    @property
    def dim(self) -> int:
        return len(self.coord_names)

    @property
    def n_longitudes(self) -> int:
        return 1 if self.n_tls == 1 else self.n_tls - 1

    @property
    def n_phases(self) -> int:
        if self.kind == AMPLITUDE:
            return 0
        return 1 if self.n_tls == 2 else self.n_tls - 1

    # index helpers into the coordinate vector
    @property
    def theta_slice(self) -> slice:
        return slice(0, self.n_tls)

    @property
    def longitude_slice(self) -> slice:
        return slice(self.n_tls, self.n_tls + self.n_longitudes)

    @property
    def phase_slice(self) -> slice:
        n0 = self.n_tls + self.n_longitudes
        return slice(n0, n0 + self.n_phases)

    @property
    def gate_weights(self) -> tuple[int, ...]:
        """Weights w_k of phi_g,1 inside each gate-phase combination."""
        if self.kind == GATE_PHASE:
            return tuple(self.enhancements[1:])
        if self.kind == SELECTIVE_PHASE:
            return (0,)
        return ()


@dataclass(frozen=True)
class CoefficientField:
    """Evaluates the c_j(x) of one variant and their analytic derivatives."""

    variant: Variant
    _sqn: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_sqn", np.sqrt(np.asarray(self.variant.enhancements, float)))

    @property
    def dim(self) -> int:
        return self.variant.dim

    def coefficients(self, x) -> np.ndarray:
        """Complex vector c(x), one entry per coordinate."""
        v = self.variant
        x = np.asarray(x, float)
        c = np.empty(v.dim, complex)
        sqn = self._sqn
        if v.n_tls == 1:
            theta = x[0]
            c[0] = 1j * sqn[0]
            c[1] = -sqn[0] / math.tan(theta)
        else:
            thetas = x[v.theta_slice]
            longs = x[v.longitude_slice]
            phases = np.concatenate(([0.0], longs))  # relative to TLS 1
            eip = np.exp(1j * phases)
            cot = 1.0 / np.tan(thetas)
            c[v.theta_slice] = 1j * sqn * eip
            for i in range(v.n_longitudes):
                k = i + 1
                c[v.n_tls + i] = sqn[0] * cot[0] - sqn[k] * eip[k] * cot[k]
            if v.n_phases:
                coth = 1.0 / np.tan(thetas / 2.0)
                w = v.gate_weights
                base = v.n_tls + v.n_longitudes
                for i in range(v.n_phases):
                    k = i + 1
                    c[base + i] = (
                        sqn[0] * w[i] * coth[0] / 2.0 - sqn[k] * eip[k] * coth[k] / 2.0
                    )
        if not np.all(np.isfinite(c.view(float))):
            raise SingularEvaluationError(f"coefficients singular at x={x!r}")
        return c

    def derivatives(self, x) -> np.ndarray:
        """Matrix dc[i, j] = d c_j / d x_i (complex)."""
        v = self.variant
        x = np.asarray(x, float)
        dc = np.zeros((v.dim, v.dim), complex)
        sqn = self._sqn
        if v.n_tls == 1:
            theta = x[0]
            dc[0, 1] = sqn[0] / math.sin(theta) ** 2
        else:
            thetas = x[v.theta_slice]
            longs = x[v.longitude_slice]
            phases = np.concatenate(([0.0], longs))
            eip = np.exp(1j * phases)
            inv_sin2 = 1.0 / np.sin(thetas) ** 2
            cot = 1.0 / np.tan(thetas)
            for i in range(v.n_longitudes):
                k = i + 1
                jl = v.n_tls + i
                # d c_theta_k / d phi_k1
                dc[jl, k] = -sqn[k] * eip[k]
                # longitude coefficient derivatives
                dc[0, jl] = -sqn[0] * inv_sin2[0]
                dc[k, jl] = sqn[k] * eip[k] * inv_sin2[k]
                dc[jl, jl] = -1j * sqn[k] * eip[k] * cot[k]
            if v.n_phases:
                inv_sin2h = 1.0 / np.sin(thetas / 2.0) ** 2
                coth = 1.0 / np.tan(thetas / 2.0)
                w = v.gate_weights
                base = v.n_tls + v.n_longitudes
                for i in range(v.n_phases):
                    k = i + 1
                    jp = base + i
                    jl = v.n_tls + i
                    dc[0, jp] = -sqn[0] * w[i] * inv_sin2h[0] / 4.0
                    dc[k, jp] = sqn[k] * eip[k] * inv_sin2h[k] / 4.0
                    dc[jl, jp] = -1j * sqn[k] * eip[k] * coth[k] / 2.0
        if not np.all(np.isfinite(dc.view(float))):
            raise SingularEvaluationError(f"coefficient derivatives singular at x={x!r}")
        return dc

    def direction_sum(self, x, p) -> complex:
        """A(x, p) = sum_j c_j(x) p_j."""
        return complex(self.coefficients(x) @ np.asarray(p, float))

    def coefficients_batch(self, xs) -> np.ndarray:
        """Vectorized c(x) over an (n_samples, dim) coordinate array."""
        v = self.variant
        xs = np.atleast_2d(np.asarray(xs, float))
        n = xs.shape[0]
        c = np.empty((n, v.dim), complex)
        sqn = self._sqn
        if v.n_tls == 1:
            c[:, 0] = 1j * sqn[0]
            c[:, 1] = -sqn[0] / np.tan(xs[:, 0])
            return c
        thetas = xs[:, v.theta_slice]
        cot = 1.0 / np.tan(thetas)
        eip = np.exp(1j * xs[:, v.longitude_slice])
        c[:, 0] = 1j * sqn[0]
        for i in range(v.n_longitudes):
            k = i + 1
            c[:, k] = 1j * sqn[k] * eip[:, i]
            c[:, v.n_tls + i] = sqn[0] * cot[:, 0] - sqn[k] * eip[:, i] * cot[:, k]
        if v.n_phases:
            coth = 1.0 / np.tan(thetas / 2.0)
            w = v.gate_weights
            base = v.n_tls + v.n_longitudes
            for i in range(v.n_phases):
                k = i + 1
                c[:, base + i] = (sqn[0] * w[i] * coth[:, 0] / 2.0
                                  - sqn[k] * eip[:, i] * coth[:, k] / 2.0)
        return c

    def direction_sum_batch(self, xs, ps) -> np.ndarray:
        """Vectorized A(x, p) over (n_samples, dim) coordinate/momentum arrays."""
        return np.einsum("ij,ij->i", self.coefficients_batch(xs),
                         np.atleast_2d(np.asarray(ps, float)))


def build_field(variant: Variant) -> CoefficientField:
    """Construct the coefficient field of a supported variant."""
    return CoefficientField(variant)


def eval_F(field: CoefficientField, x, p, omega: float = 1.0) -> float:
    """Constraint function F(x, p) = Omega*|A| - 1."""
    return omega * abs(field.direction_sum(x, p)) - 1.0


def characteristic_rhs(field: CoefficientField, x, p, omega: float = 1.0):
    """Generic characteristic right-hand side (dx/ds, dp/ds).

    dx_j/ds =  Omega * Re(conj(A) c_j) / |A|
    dp_i/ds = -Omega * Re(conj(A) sum_j dc_j/dx_i p_j) / |A|
    """
    p = np.asarray(p, float)
    c = field.coefficients(x)
    a = complex(c @ p)
    absa = abs(a)
    if absa < 1e-12:
        raise DegenerateDirectionError(f"|A| = {absa:.3e} at x={x!r}")
    dc = field.derivatives(x)
    ac = np.conj(a)
    dx = omega * (ac * c).real / absa
    dp = -omega * ((dc @ p) * ac).real / absa
    return dx, dp


def optimal_phase(field: CoefficientField, x, p) -> float:
    """Reduced-frame optimal drive phase arg(A) - pi, wrapped to (-pi, pi].

    The physical phase additionally carries the first TLS's longitude,
    which is eliminated from the reduced state; see
    :func:`first_longitude_rate`.
    """
    a = field.direction_sum(x, p)
    if abs(a) < 1e-12:
        raise DegenerateDirectionError("optimal phase undefined: |A| ~ 0")
    return wrap_angle(math.atan2(a.imag, a.real) - math.pi)


def first_longitude_rate(field: CoefficientField, x, p, omega: float = 1.0) -> float:
    """d(phi_1)/ds of the eliminated first-TLS longitude along a characteristic.

    Obtained from the unreduced characteristic system:
    dphi_1/ds = -Omega * sqrt(n_1) * cot(theta_1) * Re(A) / |A|.
    """
    a = field.direction_sum(x, p)
    absa = abs(a)
    if absa < 1e-12:
        raise DegenerateDirectionError("|A| ~ 0")
    theta1 = float(np.asarray(x, float)[0])
    sqn1 = math.sqrt(field.variant.enhancements[0])
    return -omega * sqn1 * a.real / (math.tan(theta1) * absa)


def phase_slope(field: CoefficientField, x, p, omega: float = 1.0) -> float:
    """Slope d(xi*)/ds of the physical optimal phase along a characteristic.

    Computed as the Poisson bracket of arg(A) with F over the reduced
    variables, plus the drift of the eliminated first-TLS longitude.
    """
    p = np.asarray(p, float)
    c = field.coefficients(x)
    dc = field.derivatives(x)
    a = complex(c @ p)
    absa = abs(a)
    if absa < 1e-12:
        raise DegenerateDirectionError("|A| ~ 0")
    ac = np.conj(a)
    b = dc @ p  # B_i = sum_j dc_j/dx_i p_j
    re_c = (ac * c).real
    im_c = (ac * c).imag
    re_b = (ac * b).real
    im_b = (ac * b).imag
    bracket = omega * float(im_b @ re_c - im_c @ re_b) / absa**3
    return bracket + first_longitude_rate(field, x, p, omega)


def wrap_angle(a):
    """Wrap angle(s) to (-pi, pi]."""
    w = np.mod(-np.asarray(a) + np.pi, 2.0 * np.pi)
    out = -(w - np.pi)
    return float(out) if np.isscalar(a) or np.ndim(a) == 0 else out


def explicit_rhs_n2(x, p, with_gate_phase: bool, omega: float = 1.0):
    """Hand-transcribed two-TLS characteristic equations (enhancements 1, 2).

    Serves purely as an oracle for :func:`characteristic_rhs`. For the
    amplitude-only variant (``with_gate_phase=False``) the gate-phase
    momentum is set to zero and the (phi-like) three-coordinate system is
    returned.
    """
    x = np.asarray(x, float)
    p = np.asarray(p, float)
    th1, th2, phi = x[0], x[1], x[2]
    pt1, pt2, pphi = p[0], p[1], p[2]
    pPhi = p[3] if with_gate_phase else 0.0

    s1, s2 = math.sin(th1), math.sin(th2)
    t1, t2 = math.tan(th1), math.tan(th2)
    th1h, th2h = math.tan(th1 / 2.0), math.tan(th2 / 2.0)
    s1h, s2h = math.sin(th1 / 2.0), math.sin(th2 / 2.0)
    cphi, sphi = math.cos(phi), math.sin(phi)
    r2 = math.sqrt(2.0)
    w2 = omega * omega

    dth1 = w2 * (pt1 + r2 * cphi * pt2 - r2 * sphi / t2 * pphi - sphi / (r2 * th2h) * pPhi)
    dth2 = w2 * (r2 * cphi * pt1 + 2.0 * pt2 - r2 * sphi / t1 * pphi - r2 * sphi / th1h * pPhi)
    mixed = (
        1.0 / (th1h * t1)
        - cphi / (r2 * t1 * th2h)
        - r2 * cphi / (th1h * t2)
        + 1.0 / (th2h * t2)
    )
    dphi = w2 * (
        (1.0 / t1**2 + 2.0 / t2**2 - 2.0 * r2 * cphi / (t1 * t2)) * pphi
        - r2 * sphi * (pt2 / t1 + pt1 / t2)
        + mixed * pPhi
    )
    dPhi = w2 * (
        (1.0 / th1h**2 + 1.0 / (2.0 * th2h**2) - r2 * cphi / (th1h * th2h)) * pPhi
        - sphi / (r2 * th2h) * pt1
        - r2 * sphi / th1h * pt2
        + mixed * pphi
    )
    dpt1 = w2 * (
        (1.0 / (t1 * s1**2) - r2 * cphi / (t2 * s1**2)) * pphi**2
        - r2 * sphi / s1**2 * pt2 * pphi
        + (1.0 / (2.0 * th1h * s1h**2) - cphi / (2.0 * r2 * th2h * s1h**2)) * pPhi**2
        - sphi / (r2 * s1h**2) * pt2 * pPhi
        + (
            1.0 / (2.0 * s1h**2 * t1)
            + 1.0 / (s1**2 * th1h)
            - cphi / (r2 * s1**2 * th2h)
            - cphi / (r2 * s1h**2 * t2)
        )
        * pphi
        * pPhi
    )
    dpt2 = w2 * (
        (2.0 / (t2 * s2**2) - r2 * cphi / (t1 * s2**2)) * pphi**2
        - r2 * sphi / s2**2 * pt1 * pphi
        + (1.0 / (4.0 * th2h * s2h**2) - cphi / (2.0 * r2 * th1h * s2h**2)) * pPhi**2
        - sphi / (2.0 * r2 * s2h**2) * pt1 * pPhi
        + (
            -cphi / (2.0 * r2 * s2h**2 * t1)
            - r2 * cphi / (s2**2 * th1h)
            + 1.0 / (2.0 * s2h**2 * t2)
            + 1.0 / (s2**2 * th2h)
        )
        * pphi
        * pPhi
    )
    dpphi = r2 * w2 * (
        sphi * pt1 * pt2
        + cphi * (pt1 / t2 + pt2 / t1) * pphi
        - sphi / (t1 * t2) * pphi**2
        - sphi / (2.0 * th1h * th2h) * pPhi**2
        + cphi / (2.0 * th2h) * pt1 * pPhi
        + cphi / th1h * pt2 * pPhi
        - (sphi / (2.0 * t1 * th2h) + sphi / (th1h * t2)) * pphi * pPhi
    )

    if with_gate_phase:
        dx = np.array([dth1, dth2, dphi, dPhi])
        dp = np.array([dpt1, dpt2, dpphi, 0.0])
    else:
        dx = np.array([dth1, dth2, dphi])
        dp = np.array([dpt1, dpt2, dpphi])
    return dx, dp


def random_on_shell_point(field: CoefficientField, rng, theta_range=(0.2, math.pi - 0.2),
                          omega: float = 1.0):
    """Sample a random interior point with F(x, p) = 0 (by momentum rescaling)."""
    v = field.variant
    x = np.empty(v.dim)
    x[v.theta_slice] = rng.uniform(*theta_range, size=v.n_tls)
    nrest = v.dim - v.n_tls
    x[v.n_tls:] = rng.uniform(-math.pi, math.pi, size=nrest)
    for _ in range(100):
        p = rng.standard_normal(v.dim)
        a = field.direction_sum(x, p)
        if abs(a) > 1e-6:
            return x, p / (omega * abs(a))
    raise DegenerateDirectionError("could not sample an on-shell point")

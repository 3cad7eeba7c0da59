"""Closed-form solution of the single-qubit time-optimal problem.

A single driven TLS with control xi(t) has characteristics that solve in
closed form.  With target (theta0, phi0), constant longitude momentum
p_phi and latitude branch sigma = +-1,

    theta(s) = arccos( cos(B(s)) / A ),       A = sqrt(1 + (Omega p_phi)^2),
    B(s)     = sigma Omega A s + arccos(A cos theta0),
    phi(s)   = -Omega^2 p_phi s + phi0 + sigma (G(B(s)) - G(B(0))),

where G is the continuous continuation of arctan((A/(Omega p_phi)) tan B)
across its branch points.  The optimal control is linear in s,

    xi*(s) = -Omega^2 p_phi s + phi0 - sigma arccos(Omega p_phi cot theta0).

The minimum time J*(theta, phi) to reach the target is the minimax value:
the smallest arrival parameter s over both branches and all admissible
p_phi.  For an equator target it has a shock line on the equator where
J* is continuous but not differentiable.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .errors import UnreachableTargetError

S_CAP = 3.0 * math.pi


def _continued_arctan(B: float, c: float) -> float:
    """Continuous continuation of arctan(c * tan(B)) in B."""
    k = round(B / math.pi)
    return math.atan(c * math.tan(B - k * math.pi)) + k * math.pi * math.copysign(1.0, c)


def closed_form(theta0: float, phi0: float, p_phi: float, branch: int, s,
                omega: float = 1.0):
    """Characteristic (theta(s), phi(s)) leaving the target (theta0, phi0).

    ``branch`` is the latitude direction sigma = +-1; scalar or array s.
    Latitudes are folded into [0, pi]; for p_phi = 0 the motion is along
    the meridian and phi stays at phi0.
    """
    if branch not in (-1, 1):
        raise UnreachableTargetError("branch must be +1 or -1")
    s = np.asarray(s, float)
    a = math.hypot(1.0, omega * p_phi)
    b0 = math.acos(max(-1.0, min(1.0, a * math.cos(theta0))))
    bs = branch * omega * a * s + b0
    theta = np.arccos(np.clip(np.cos(bs) / a, -1.0, 1.0))
    if p_phi == 0.0:
        phi = np.full_like(s, phi0)
    else:
        c = a / (omega * p_phi)
        g = np.vectorize(lambda b: _continued_arctan(b, c))
        phi = (-omega**2 * p_phi * s + phi0
               + branch * (g(bs) - _continued_arctan(b0, c)))
    if s.ndim == 0:
        return float(theta), float(phi)
    return theta, phi


def xi_star_analytic(theta0: float, phi0: float, p_phi: float, branch: int, s,
                     omega: float = 1.0):
    """Optimal control xi*(s) along a single-qubit characteristic.

    Linear in s with slope -Omega^2 p_phi; the constant follows from the
    direction sum at the target via atan2 (equivalent to
    phi0 - sigma*arccos(Omega p_phi cot theta0) modulo 2 pi).
    """
    if branch not in (-1, 1):
        raise UnreachableTargetError("branch must be +1 or -1")
    s = np.asarray(s, float)
    u = omega * p_phi / math.tan(theta0)
    if abs(u) > 1.0:
        raise UnreachableTargetError("p_phi outside the admissible shell")
    p_theta0 = branch * math.sqrt(max(0.0, 1.0 / omega**2 - p_phi**2 / math.tan(theta0) ** 2))
    const = phi0 + math.atan2(omega * p_theta0, -omega * p_phi / math.tan(theta0)) - math.pi
    out = -omega**2 * p_phi * s + const
    return float(out) if s.ndim == 0 else out


def ellipse_estimate(theta: float, phi: float, theta0: float, phi0: float,
                     omega: float = 1.0) -> float:
    """Near-target leading-order value: level sets are ellipses."""
    return math.sqrt((theta - theta0) ** 2
                     + math.tan(theta0) ** 2 * (phi - phi0) ** 2) / omega


def _meridian_limit(theta: float, theta0: float, omega: float) -> float:
    """Arrival time along meridians only (valid at poles, phi undefined)."""
    return min(abs(theta - theta0), theta + theta0,
               2.0 * math.pi - theta - theta0) / omega


def _wrap(a):
    return -((-a + math.pi) % (2.0 * math.pi) - math.pi)


def minimax_value(theta: float, phi: float, theta0: float = math.pi / 2.0,
                  phi0: float = 0.0, omega: float = 1.0,
                  n_scan: int = 400, return_arg: bool = False):
    """Minimum time J*(theta, phi) to reach the target (theta0, phi0).

    Constructs arrival parameters on the closed forms: for each branch
    sigma, latitude-equation parity and winding index, the arrival s is
    an explicit function of p_phi; the longitude residual is scanned over
    the admissible p_phi interval and bracketed roots are polished.  The
    value is the smallest consistent arrival (minimax rule).  With
    ``return_arg`` the winning ``(p_phi, sigma)`` is returned alongside.
    """
    if min(math.sin(theta), math.sin(theta0)) < 1e-9:
        # pole query (or pole target): longitudes degenerate, meridians optimal
        j = _meridian_limit(theta, theta0, omega)
        sig = 1 if theta <= theta0 else -1
        return (j, (0.0, sig)) if return_arg else j
    d = math.hypot(theta - theta0, _wrap(phi - phi0))
    if d < 1e-12:
        return (0.0, (0.0, 1)) if return_arg else 0.0

    pmax = min(abs(math.tan(theta)), abs(math.tan(theta0)), 50.0) / omega
    pp = np.linspace(-pmax, pmax, n_scan) * (1.0 - 1e-12)
    a = np.hypot(1.0, omega * pp)
    b0 = np.arccos(np.clip(a * math.cos(theta0), -1.0, 1.0))
    bt = np.arccos(np.clip(a * math.cos(theta), -1.0, 1.0))

    def residual_fn(sigma, parity, k):
        def fn(p):
            aa = math.hypot(1.0, omega * p)
            bb0 = math.acos(max(-1.0, min(1.0, aa * math.cos(theta0))))
            bbt = math.acos(max(-1.0, min(1.0, aa * math.cos(theta))))
            s = sigma * (parity * bbt + 2.0 * math.pi * k - bb0) / (omega * aa)
            if s < 0.0:
                return math.nan, math.nan
            _, ph = closed_form(theta0, phi0, p, sigma, s, omega)
            return _wrap(ph - phi), s
        return fn

    best = math.inf
    best_arg = (0.0, 1)
    for sigma in (1, -1):
        for parity in (1, -1):
            for k in range(-3, 7):
                ss = sigma * (parity * bt + 2.0 * math.pi * k - b0) / (omega * a)
                valid = (ss >= 0.0) & (ss <= S_CAP)
                if not np.any(valid):
                    continue
                fn = residual_fn(sigma, parity, k)
                rs = np.full(pp.size, np.nan)
                for i in np.flatnonzero(valid):
                    rs[i], _ = fn(pp[i])
                for i in range(pp.size - 1):
                    r1, r2 = rs[i], rs[i + 1]
                    if math.isnan(r1) or math.isnan(r2):
                        continue
                    if r1 == 0.0:
                        root = pp[i]
                    elif r1 * r2 < 0.0 and abs(r1 - r2) < math.pi:
                        root = brentq(lambda p: fn(p)[0], pp[i], pp[i + 1],
                                      xtol=1e-14)
                    else:
                        continue
                    r, s = fn(root)
                    if abs(r) < 1e-9 and s < best:
                        best = s
                        best_arg = (float(root), sigma)
    if not math.isfinite(best):
        raise UnreachableTargetError(
            f"no arrival found for query ({theta:.4f}, {phi:.4f})"
        )
    if return_arg:
        return float(best), best_arg
    return float(best)


def shock_detect(theta0: float = math.pi / 2.0, phi0: float = 0.0,
                 omega: float = 1.0, n_phi: int = 9,
                 delta: float = 1e-3) -> list[tuple[float, float]]:
    """Locate the equator shock of the minimax value for an equator target.

    Probes the normal derivative of J* on both sides of theta = pi/2 at a
    ring of longitudes; returns the (theta, phi) points where the
    one-sided derivatives disagree by more than 10x the differencing
    tolerance (the target's own meridian carries no shock).
    """
    locus = []
    for phi in np.linspace(-math.pi, math.pi, n_phi, endpoint=False):
        jm = minimax_value(math.pi / 2.0 - delta, phi, theta0, phi0, omega)
        j0 = minimax_value(math.pi / 2.0, phi, theta0, phi0, omega)
        jp = minimax_value(math.pi / 2.0 + delta, phi, theta0, phi0, omega)
        d_left = (j0 - jm) / delta
        d_right = (jp - j0) / delta
        if abs(d_left - d_right) > 10.0 * delta:
            locus.append((math.pi / 2.0, float(phi)))
    return locus

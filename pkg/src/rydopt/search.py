"""Optimal-characteristic search: process targets, multi-start solves,
parameter sweeps and cluster scans.

A process is a target point in reduced coordinates with per-coordinate
free flags.  The solver integrates characteristics from the regularized
all-ground start over a grid (or Sobol set) of start momenta, screens
them by closest approach to the target, refines promising candidates,
and applies the minimax rule: among all starts whose characteristic
reaches the target within ``tol_match``, the smallest arrival time wins.
The arrival-time minimum over the (generically one-dimensional) family
of hits is located by a boundary polish: the smallest s at which the
target residuals can still be zeroed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, least_squares, minimize, minimize_scalar
from scipy.stats import qmc

from .characteristics import (
    DEFAULT_EPSILON,
    StartParams,
    Trajectory,
    closest_approach,
    init_at_epsilon,
    integrate,
    make_rhs,
    target_residuals,
)
from .dynamics import FidelityReport, PulseProfile, verify_process
from .errors import NoSolutionError, UnsupportedVariantError
from .fields import AMPLITUDE, GATE_PHASE, SELECTIVE_PHASE, Variant, build_field
from .pulses import extract_pulse

POLE_TOL = 1e-9


@dataclass(frozen=True)
class ProcessTarget:
    """A target process: reduced coordinates plus per-coordinate free flags.

    Longitudes whose defining latitudes sit at a pole are undefined and
    are flagged free automatically; gate phases lose their meaning when a
    ground amplitude vanishes (latitude at the excited pole) and are
    freed likewise.
    """

    variant: Variant
    x_t: np.ndarray
    free: np.ndarray
    tol_match: float = 1e-6
    label: str = ""

    def __post_init__(self):
        v = self.variant
        x = np.asarray(self.x_t, float)
        fr = np.asarray(self.free, bool).copy()
        if x.shape != (v.dim,) or fr.shape != (v.dim,):
            raise UnsupportedVariantError(
                f"target needs {v.dim} coordinates and flags"
            )
        at_pole = np.abs(np.sin(x[v.theta_slice])) < POLE_TOL
        at_excited = np.abs(np.sin(x[v.theta_slice] / 2.0)) < POLE_TOL
        for i in range(v.n_longitudes if v.n_tls > 1 else 0):
            if at_pole[0] or at_pole[i + 1]:
                fr[v.n_tls + i] = True
        for i in range(v.n_phases):
            if at_excited[0] or at_excited[i + 1]:
                fr[v.n_tls + v.n_longitudes + i] = True
        object.__setattr__(self, "x_t", x)
        object.__setattr__(self, "free", fr)

    @property
    def self_conjugate(self) -> bool:
        """True when negating every pinned angle coordinate leaves the
        target invariant modulo 2*pi (complex-conjugation symmetry)."""
        v = self.variant
        for j in range(v.n_tls, v.dim):
            if self.free[j]:
                continue
            if min(abs(math.sin(self.x_t[j])), 1.0) > 1e-12:
                return False
        return True

    def is_identity(self) -> bool:
        ground = np.concatenate([
            np.full(self.variant.n_tls, math.pi),
            np.zeros(self.variant.dim - self.variant.n_tls),
        ])
        r = target_residuals(self.variant, ground, self.x_t, self.free)
        return bool(r.size == 0 or np.max(np.abs(r)) < 1e-12)


def target_library(name: str, **params) -> ProcessTarget:
    """Built-in process definitions.

    Names: ``cz``, ``cphi`` (phi=...), ``simexc`` (k=..., or
    enhancements=...), ``selective-rotation`` (theta2_targ=... or
    theta1_targ=...), ``selective-phase`` (phi=...), ``simexc3``, ``ccz``.
    """
    F, P = True, False
    if name == "cz":
        return target_library("cphi", phi=math.pi, _label="cz")
    if name == "cphi":
        phi = float(params["phi"])
        v = Variant(2, GATE_PHASE, (1, 2))
        return ProcessTarget(v, np.array([math.pi, math.pi, 0.0, phi]),
                             np.array([P, P, F, P]),
                             label=params.get("_label", f"cphi({phi:g})"))
    if name == "simexc":
        enh = tuple(params.get("enhancements") or (1, int(params.get("k", 2))))
        v = Variant(len(enh), AMPLITUDE, enh)
        x = np.zeros(v.dim)
        fr = np.array([P] * v.n_tls + [F] * v.n_longitudes)
        return ProcessTarget(v, x, fr, label=f"simexc{enh}")
    if name == "selective-rotation":
        v = Variant(2, AMPLITUDE, (1, 2))
        if "theta2_targ" in params:
            x = np.array([math.pi, float(params["theta2_targ"]), 0.0])
        else:
            x = np.array([float(params["theta1_targ"]), math.pi, 0.0])
        return ProcessTarget(v, x, np.array([P, P, F]),
                             label=f"selective-rotation({x[0]:g},{x[1]:g})")
    if name == "selective-phase":
        phi = float(params["phi"])
        v = Variant(2, SELECTIVE_PHASE, (1, 2))
        return ProcessTarget(v, np.array([math.pi, math.pi, 0.0, phi]),
                             np.array([P, P, F, P]),
                             label=f"selective-phase({phi:g})")
    if name == "simexc3":
        return target_library("simexc", enhancements=(1, 2, 3))
    if name == "ccz":
        v = Variant(3, GATE_PHASE, (1, 2, 3))
        x = np.array([math.pi, math.pi, math.pi, 0.0, 0.0, math.pi, 0.0])
        fr = np.array([P, P, P, F, F, P, P])
        return ProcessTarget(v, x, fr, label="ccz")
    raise UnsupportedVariantError(f"unknown process {name!r}")


@dataclass(frozen=True)
class SearchConfig:
    """Multi-start search configuration (defaults reproduce the built-in
    process results; all solves are deterministic given ``seed``)."""

    grid_points: int = 16
    theta_range: tuple[float, float] = (-3.0, 3.0)
    f_range: tuple[float, float] = (-3.0, 3.0)
    p_phi_range: tuple[float, float] = (-1.0, 1.0)
    # sigma = +1 traces exactly the same chart trajectories as sigma = -1
    # with all theta-momenta negated (pole reflection), so on sign-symmetric
    # momentum grids screening one branch covers both.
    sigmas: tuple[int, ...] = (-1,)
    s_max: float | None = None
    seed: int = 0
    sobol_power: int = 13  # used when the start space has >= 5 dimensions
    screen_rtol: float = 1e-6
    screen_f_tol: float = 1e-3
    screen_ds: float = 0.02
    refine_rtol: float = 1e-8
    final_rtol: float = 1e-10
    n_refine: int = 10
    nm_maxiter: int = 150
    epsilon: float = DEFAULT_EPSILON
    workers: int = 1


@dataclass(frozen=True)
class SolveResult:
    """Outcome of a process solve."""

    target: ProcessTarget
    T_opt: float
    params: StartParams
    trajectory: Trajectory | None
    pulse: PulseProfile | None
    verification: FidelityReport | None
    diagnostics: dict = dc_field(default_factory=dict)

    @property
    def conjugate_params(self) -> StartParams | None:
        """Equivalent start for self-conjugate targets (pulse xi -> -xi)."""
        return self.params.conjugate() if self.target.self_conjugate else None


# ---------------------------------------------------------------------------
# start-parameter layout per variant

def _param_layout(v: Variant):
    """(n_theta_free, n_f, n_phase) components of the start vector."""
    return v.n_tls - 1, (v.n_longitudes if v.n_tls > 1 else 1), v.n_phases


def _vector_to_params(v: Variant, vec, sigma: int, epsilon: float) -> StartParams:
    nt, nf, np_ = _param_layout(v)
    vec = np.asarray(vec, float)
    if v.n_tls == 1:
        return StartParams(0.0, (), (float(vec[0]),), (), sigma, epsilon)
    return StartParams(
        float(vec[0]), tuple(vec[1:nt]), tuple(vec[nt : nt + nf]),
        tuple(vec[nt + nf : nt + nf + np_]), sigma, epsilon,
    )


def _default_s_max(target: ProcessTarget) -> float:
    v = target.variant
    scale = 1.0
    for i in range(v.n_phases):
        j = v.n_tls + v.n_longitudes + i
        if not target.free[j]:
            scale = max(scale, abs(target.x_t[j]) / math.pi)
    return 4.0 * math.pi * scale


def _axis(lo: float, hi: float, n: int) -> np.ndarray:
    return np.unique(np.concatenate([np.linspace(lo, hi, n), [0.0]]))


def _start_vectors(target: ProcessTarget, cfg: SearchConfig) -> np.ndarray:
    v = target.variant
    nt, nf, np_ = _param_layout(v)
    dims = nt + nf + np_
    if dims >= 5:
        sob = qmc.Sobol(d=dims, scramble=True, seed=cfg.seed)
        u = sob.random_base2(cfg.sobol_power)
        lo = np.array([cfg.theta_range[0]] * nt + [cfg.f_range[0]] * nf
                      + [cfg.p_phi_range[0]] * np_)
        hi = np.array([cfg.theta_range[1]] * nt + [cfg.f_range[1]] * nf
                      + [cfg.p_phi_range[1]] * np_)
        if target.self_conjugate and nf:
            lo[nt] = 0.0  # conjugation symmetry: first slope >= 0 suffices
        return qmc.scale(u, lo, hi)
    axes = [_axis(*cfg.theta_range, cfg.grid_points) for _ in range(nt)]
    f_axis = _axis(*cfg.f_range, cfg.grid_points)
    if target.self_conjugate:
        first_f = f_axis[f_axis >= 0.0]
        axes.append(first_f)
        axes += [f_axis for _ in range(nf - 1)]
    else:
        axes += [f_axis for _ in range(nf)]
    axes += [_axis(*cfg.p_phi_range, cfg.grid_points) for _ in range(np_)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


# ---------------------------------------------------------------------------

def _screen_one(field, target, vec, sigma, cfg, s_max):
    try:
        start = init_at_epsilon(field, _vector_to_params(field.variant, vec, sigma, cfg.epsilon))
        traj = integrate(field, start, s_max, rtol=cfg.screen_rtol, atol=1e-9,
                         sample_ds=cfg.screen_ds, f_tol=cfg.screen_f_tol)
        s, d = closest_approach(traj, target, refine=False)
        return d, s
    except Exception:
        return math.inf, math.nan


def _distance_of(field, target, vec, sigma, cfg, s_limit, rtol=None):
    try:
        rtol = cfg.refine_rtol if rtol is None else rtol
        start = init_at_epsilon(field, _vector_to_params(field.variant, vec, sigma, cfg.epsilon))
        traj = integrate(field, start, s_limit, rtol=rtol, atol=rtol * 1e-3,
                         sample_ds=cfg.screen_ds, f_tol=1e-4)
        return closest_approach(traj, target, refine=True)
    except Exception:
        return math.nan, math.inf


def _endpoint_residuals(field, target, vec, sigma, s, cfg, rtol):
    """Target residuals of the characteristic endpoint at parameter s."""
    v = field.variant
    start = init_at_epsilon(field, _vector_to_params(v, vec, sigma, cfg.epsilon))
    y0 = np.concatenate([start.x, start.p, [start.phi1]])
    sol = solve_ivp(make_rhs(field), (start.s, s), y0, method="DOP853",
                    rtol=rtol, atol=rtol * 1e-2)
    if not sol.success:
        return np.full(int(np.sum(~target.free)), 1e3)
    return target_residuals(v, sol.y[: v.dim, -1], target.x_t, target.free)


def _polish_hit(field, target, vec, sigma, s, cfg):
    """Newton-polish (params, s) so the endpoint residuals vanish."""
    n = len(vec)

    def fun_at(rtol):
        def fun(q):
            return _endpoint_residuals(field, target, q[:n], sigma,
                                       max(q[n], 0.05), cfg, rtol)
        return fun

    sol = least_squares(fun_at(cfg.refine_rtol), np.concatenate([vec, [s]]),
                        xtol=1e-14, ftol=1e-14, gtol=1e-14, diff_step=1e-7)
    res = np.max(np.abs(sol.fun)) if sol.fun.size else 0.0
    if res > target.tol_match:
        # restart at tighter integration tolerance: long characteristics
        # with large momenta leave finite-difference Jacobians at the
        # integrator noise floor, which stalls the first pass just short
        sol = least_squares(fun_at(cfg.final_rtol), sol.x, xtol=1e-14,
                            ftol=1e-14, gtol=1e-14, diff_step=1e-7)
        res = np.max(np.abs(sol.fun)) if sol.fun.size else 0.0
    return sol.x[:n], float(sol.x[n]), float(res)


def _min_time_polish(field, target, vec, sigma, s_hit, cfg):
    """Smallest s at which the residuals can still be zeroed (boundary of
    the hit family); returns (T_opt, params_vec)."""
    tol = target.tol_match
    state = {"vec": np.asarray(vec, float), "rtol": cfg.refine_rtol}

    def g(s):
        def fun(q):
            return _endpoint_residuals(field, target, q, sigma, s, cfg,
                                       state["rtol"])
        sol = least_squares(fun, state["vec"], xtol=1e-13, ftol=1e-13,
                            gtol=1e-13, diff_step=1e-7)
        r = float(np.max(np.abs(sol.fun))) if sol.fun.size else 0.0
        if r <= 10.0 * tol:
            state["vec"] = sol.x
        return r

    if g(s_hit) > 0.5 * tol:
        # integration-noise floor too close to the match tolerance at this
        # trajectory length: use the tight final tolerance throughout
        state["rtol"] = cfg.final_rtol
    hi = s_hit
    lo = None
    for step in (0.01, 0.02, 0.05, 0.1, 0.2, 0.4, 0.8):
        s_try = s_hit - step
        if s_try <= 0.1:
            break
        if g(s_try) > 10.0 * tol:
            lo = s_try
            break
        hi = s_try
    if lo is None:
        return hi, state["vec"].copy()
    vec_hi = state["vec"].copy()
    t_opt = brentq(lambda s: g(s) - tol, lo, hi, xtol=1e-7)
    if g(t_opt) > tol:  # leave state at a converged point
        t_opt = brentq(lambda s: g(s) - tol, t_opt, hi, xtol=1e-7)
    if g(t_opt) > tol:
        return hi, vec_hi
    return float(t_opt), state["vec"].copy()


def _trivial_result(target: ProcessTarget) -> SolveResult:
    return SolveResult(target, 0.0, StartParams(), None, None, None,
                       {"starts": 0, "hits": 0, "note": "identity target"})


def solve(target: ProcessTarget, config: SearchConfig | None = None,
          warm_starts=(), screen: bool = True) -> SolveResult:
    """Globally search start-momentum space for the minimal-time
    characteristic reaching the target.

    ``warm_starts`` are extra (vector, sigma) candidates refined alongside
    the screened ones (used by sweeps); with ``screen=False`` only the
    warm starts are refined (continuation along a known solution branch).
    Raises NoSolutionError with the best distance found when no
    characteristic reaches the target.
    """
    cfg = config or SearchConfig()
    if target.is_identity():
        return _trivial_result(target)
    v = target.variant
    field = build_field(v)
    s_max = cfg.s_max if cfg.s_max is not None else _default_s_max(target)

    screened = []
    picked = []
    n_starts = 0
    if screen:
        vectors = _start_vectors(target, cfg)
        for sigma in cfg.sigmas:
            for vec in vectors:
                d, s = _screen_one(field, target, vec, sigma, cfg, s_max)
                if math.isfinite(d):
                    screened.append((d, s, tuple(vec), sigma))
        screened.sort(key=lambda t: t[0])
        n_starts = len(vectors) * len(cfg.sigmas)
        if not screened:
            raise NoSolutionError(f"{target.label}: no integrable start found")

        # candidate selection: distinct solution families approach the
        # target at well-separated arrival parameters, so first keep the
        # best start per (sigma, s-bucket), then fill remaining slots by
        # distance rank (deduped by parameter-space separation)
        step = np.ptp(vectors, axis=0) / max(cfg.grid_points, 2)
        step[step == 0.0] = 1.0

        def near_picked(vec, sigma, picked):
            va = np.asarray(vec)
            return any(sg == sigma and np.all(np.abs(va - np.asarray(p)) < step)
                       for _, _, p, sg in picked)

        buckets = set()
        for d, s, vec, sigma in screened:
            key = (sigma, int(s / 0.5)) if math.isfinite(s) else None
            if key is None or key in buckets:
                continue
            buckets.add(key)
            picked.append((d, s, vec, sigma))
            if len(picked) >= cfg.n_refine:
                break
        for d, s, vec, sigma in screened:
            if len(picked) >= cfg.n_refine:
                break
            if near_picked(vec, sigma, picked):
                continue
            picked.append((d, s, vec, sigma))
    picked.extend((math.nan, math.nan, tuple(w[0]), w[1]) for w in warm_starts)
    if not picked:
        raise NoSolutionError(f"{target.label}: no candidate starts")

    hits = []
    best_distance = math.inf
    for d0, s0, vec, sigma in picked:
        if math.isnan(d0):  # warm start: locate approach first
            s0, d0 = _distance_of(field, target, vec, sigma, cfg, s_max)
            if not math.isfinite(s0):
                continue
        vec = np.asarray(vec, float)
        s1, d1 = s0, d0
        if d0 > 1e-3:
            # derivative-free simplex refinement of the approach distance,
            # integrating only slightly past the candidate's approach; runs
            # at screening tolerance (the Newton polish supplies precision)
            s_lim = min(s_max, 1.25 * s0 + 0.5)
            r = minimize(
                lambda q: _distance_of(field, target, q, sigma, cfg, s_lim,
                                       rtol=cfg.screen_rtol)[1],
                vec, method="Nelder-Mead",
                options={"maxiter": cfg.nm_maxiter, "xatol": 1e-4,
                         "fatol": 1e-7},
            )
            s1, d1 = _distance_of(field, target, r.x, sigma, cfg, s_lim)
            vec = r.x
        if math.isfinite(d1):
            best_distance = min(best_distance, d1)
        if not math.isfinite(s1) or d1 > 1e-2:
            continue
        pvec, s2, res = _polish_hit(field, target, vec, sigma, s1, cfg)
        if res <= target.tol_match:
            hits.append((s2, tuple(pvec), sigma))

    if not hits:
        raise NoSolutionError(
            f"{target.label}: no characteristic within tol_match "
            f"{target.tol_match:g}; best distance {best_distance:.3e}"
        )
    hits.sort(key=lambda h: (round(h[0], 6), h[1]))
    s_best, vec_best, sigma_best = hits[0]

    t_opt, vec_opt = _min_time_polish(field, target, np.asarray(vec_best),
                                      sigma_best, s_best, cfg)
    params = _vector_to_params(v, vec_opt, sigma_best, cfg.epsilon)

    traj = integrate(field, init_at_epsilon(field, params),
                     t_opt + 0.05, rtol=cfg.final_rtol, atol=1e-12,
                     sample_ds=0.01)
    s_hit, dist = closest_approach(traj, target)
    pulse = extract_pulse(traj, field, s_end=s_hit)
    report = verify_process(pulse, target)
    return SolveResult(
        target, float(s_hit), params, traj, pulse, report,
        {"starts": n_starts, "screened": len(screened), "hits": len(hits),
         "distance": float(dist), "best_distance": float(best_distance)},
    )


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepResult:
    parameter: np.ndarray
    T_opt: np.ndarray
    params: list
    kinks: list
    results: list


def sweep(family: str, grid, config: SearchConfig | None = None) -> SweepResult:
    """Solve a one-parameter process family over a monotone grid.

    Families: ``cphi``, ``selective-rotation-2`` (theta2_targ),
    ``selective-rotation-1`` (theta1_targ), ``selective-phase``.
    Each solve warm-starts from the previous optimum; derivative kinks
    are flagged by three-point second differences of T(parameter).
    """
    grid = np.asarray(grid, float)
    if grid.ndim != 1 or grid.size < 2 or not np.all(np.diff(grid) > 0):
        raise UnsupportedVariantError("sweep grid must be increasing")
    kw = {
        "cphi": lambda g: target_library("cphi", phi=g),
        "selective-rotation-2": lambda g: target_library("selective-rotation", theta2_targ=g),
        "selective-rotation-1": lambda g: target_library("selective-rotation", theta1_targ=g),
        "selective-phase": lambda g: target_library("selective-phase", phi=g),
    }
    if family not in kw:
        raise UnsupportedVariantError(f"unknown sweep family {family!r}")
    # lighter default than a single solve: the warm start tracks the
    # current branch and the coarser grid still finds branch switches
    cfg = config or SearchConfig(grid_points=10, n_refine=6, nm_maxiter=100)

    def warm_of(res):
        if res.trajectory is None:
            return []
        vec = np.concatenate([
            [res.params.p_theta1_0], res.params.p_theta_extra,
            res.params.f_phi_0, res.params.p_Phi_0,
        ])
        if res.target.variant.n_tls == 1:
            vec = np.asarray(res.params.f_phi_0)
        return [(vec, res.params.sigma)]

    # forward pass: screened solves, continuing the current branch; points
    # where neither screening nor the warm start locks are left open for
    # the continuation passes below
    results: list = []
    warm = []
    for gval in grid:
        try:
            res = solve(kw[family](gval), cfg, warm_starts=warm)
        except NoSolutionError:
            results.append(None)
            continue
        results.append(res)
        warm = warm_of(res)
    # continuation passes: screening-free warm solves pick up solution
    # branches with basins too narrow for the screening grid (they end on
    # degenerate resonant rays of start-parameter space) and fill points
    # the forward pass left open
    for order in (range(grid.size - 1, -1, -1), range(grid.size)):
        warm = []
        for i in order:
            if warm:
                try:
                    res = solve(kw[family](grid[i]), cfg, warm_starts=warm,
                                screen=False)
                    if results[i] is None or res.T_opt < results[i].T_opt - 1e-9:
                        results[i] = res
                except NoSolutionError:
                    pass
            if results[i] is not None:
                warm = warm_of(results[i])
    open_pts = [float(g) for g, r in zip(grid, results) if r is None]
    if open_pts:
        raise NoSolutionError(f"sweep {family}: unresolved at {open_pts}")
    ts = np.array([r.T_opt for r in results])
    kinks = []
    if grid.size >= 3:
        d2 = np.abs(np.diff(ts, 2)) / np.diff(grid)[:-1] ** 2
        med = np.median(d2) if d2.size else 0.0
        for i in np.flatnonzero(d2 > 10.0 * (med + 0.1)):
            kinks.append(float(grid[i + 1]))
    return SweepResult(grid, ts, [r.params for r in results], kinks, results)


def k_scan(ks, config: SearchConfig | None = None):
    """Simultaneous excitation times for cluster pairs (1, k)."""
    out = []
    for k in ks:
        res = solve(target_library("simexc", k=int(k)), config)
        out.append((int(k), res.T_opt, res))
    return out


def solve_n3(target: ProcessTarget, config: SearchConfig | None = None) -> SolveResult:
    """Three-TLS solve with coarser default grids (local optimality only)."""
    cfg = config or SearchConfig(grid_points=8)
    if config is None:
        cfg = replace(cfg, n_refine=10)
    return solve(target, cfg)


# ---------------------------------------------------------------------------
# single-qubit point-to-point solve with the generic machinery

def solve_single_qubit(theta: float, phi: float, theta0: float = math.pi / 2.0,
                       phi0: float = 0.0, omega: float = 1.0,
                       n_scan: int = 81, s_cap: float = 3.0 * math.pi) -> float:
    """Minimum arrival time from (theta, phi) to the target (theta0, phi0)
    computed by integrating single-qubit characteristics from the target
    over a scanned momentum shell (independent of the closed forms)."""

    def rhs(s, y):
        th, _, pt, pf = y
        t = math.tan(th)
        return [omega**2 * pt, omega**2 * pf / t**2,
                omega**2 * pf**2 / (t * math.sin(th) ** 2), 0.0]

    def wrap(a):
        return -((-a + math.pi) % (2.0 * math.pi) - math.pi)

    pmax = abs(math.tan(theta0)) / omega * (1.0 - 1e-12)

    def arrival(p_phi, sigma):
        pt0 = sigma * math.sqrt(max(0.0, 1.0 / omega**2
                                    - p_phi**2 / math.tan(theta0) ** 2))
        sol = solve_ivp(rhs, (0.0, s_cap), [theta0, phi0, pt0, p_phi],
                        method="DOP853", rtol=1e-11, atol=1e-12,
                        dense_output=True, max_step=0.1)

        def dist(s):
            y = sol.sol(s)
            thf = math.acos(max(-1.0, min(1.0, math.cos(y[0]))))
            # chart reflection: longitude picks up pi when exactly one of
            # the two amplitude signs flips in the extended chart
            flip = (math.cos(y[0] / 2.0) < 0.0) != (math.sin(y[0] / 2.0) < 0.0)
            ph = y[1] + (math.pi if flip else 0.0)
            return math.hypot(thf - theta, wrap(ph - phi))

        ss = np.linspace(0.0, sol.t[-1], 600)
        ds = np.array([dist(s) for s in ss])
        best = (math.inf, math.nan)
        idx = np.flatnonzero((ds[1:-1] <= ds[:-2]) & (ds[1:-1] <= ds[2:])) + 1
        for i in list(idx) + [0, len(ss) - 1]:
            lo, hi_ = ss[max(0, i - 1)], ss[min(len(ss) - 1, i + 1)]
            if hi_ <= lo:
                continue
            r = minimize_scalar(dist, bounds=(lo, hi_), method="bounded",
                                options={"xatol": 1e-12})
            if r.fun < best[0]:
                best = (float(r.fun), float(r.x))
        return best

    if math.hypot(theta - theta0, wrap(phi - phi0)) < 1e-12:
        return 0.0
    best_s = math.inf
    for sigma in (1, -1):
        pp = np.linspace(-pmax, pmax, n_scan)
        scan = [arrival(p, sigma) for p in pp]
        order = np.argsort([d for d, _ in scan])
        for i in order[:6]:
            lo = pp[max(0, i - 1)]
            hi = pp[min(n_scan - 1, i + 1)]
            r = minimize_scalar(lambda p: arrival(p, sigma)[0], bounds=(lo, hi),
                                method="bounded", options={"xatol": 1e-12})
            d, s = arrival(float(r.x), sigma)
            if d < 1e-7 and s < best_s:
                best_s = s
    if not math.isfinite(best_s):
        raise NoSolutionError(
            f"single-qubit arrival not found for ({theta:.4f}, {phi:.4f})"
        )
    return float(best_s)

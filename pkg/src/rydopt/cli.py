"""Command-line front end.

Subcommands
-----------
solve
    Search for the minimal-time pulse of a named process and write the
    result JSON plus trajectory/pulse CSV files.
sweep
    Solve a one-parameter process family over a grid; write a CSV table.
verify
    Re-simulate a pulse CSV against a process and report fidelities.
analytic1q
    Tabulate the single-qubit minimum-time value J*(theta, phi) and the
    initial optimal phase xi*(theta, phi) on a uniform grid.
oracle-check
    Run the internal consistency suites (hand-transcribed two-TLS
    equations, single-qubit closed forms, finite-difference coefficient
    derivatives) and print maximal deviations.
export
    Re-derive trajectory and pulse CSV files from a stored result JSON.

The output directory defaults to ``$RYDOPT_OUTDIR`` (falling back to the
working directory).  All times are in units of 1/Omega; ``--omega``
rescales times and detunings in written pulse files.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import serialize
from .characteristics import StartParams, init_at_epsilon, integrate
from .dynamics import verify_process
from .errors import RydoptError
from .fields import (
    build_field,
    characteristic_rhs,
    eval_F,
    explicit_rhs_n2,
    optimal_phase,
    random_on_shell_point,
    wrap_angle,
)
from .pulses import extract_pulse
from .search import (
    SearchConfig,
    SolveResult,
    solve,
    sweep,
    target_library,
)
from .single_qubit import closed_form, minimax_value, xi_star_analytic


def _outdir(args) -> str:
    out = args.out or os.environ.get("RYDOPT_OUTDIR") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _slug(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in label)


def _target_from_args(args):
    name = args.process
    kw = {}
    if name == "identity":
        return target_library("cphi", phi=0.0, _label="identity")
    if name in ("cphi", "selective-phase"):
        if args.phi is None:
            raise SystemExit(f"--phi is required for process {name!r}")
        kw["phi"] = args.phi
    if name == "simexc":
        if args.n:
            kw["enhancements"] = tuple(args.n)
        elif args.k is not None:
            kw["k"] = args.k
    if name == "selective-rotation":
        if args.theta_targ is None:
            raise SystemExit("--theta-targ is required for selective-rotation")
        kw["theta1_targ" if args.tls == 1 else "theta2_targ"] = args.theta_targ
    t = target_library(name, **kw)
    if args.tol is not None:
        t = type(t)(t.variant, t.x_t, t.free, tol_match=args.tol, label=t.label)
    return t


def _search_config(args) -> SearchConfig:
    kw = {"seed": args.seed, "workers": args.workers}
    if args.smax is not None:
        kw["s_max"] = args.smax
    if args.grid_points is not None:
        kw["grid_points"] = args.grid_points
    return SearchConfig(**kw)


def _rescale_pulse_cols(cols, omega: float):
    """Times in 1/Omega units -> physical; delta scales with Omega."""
    if omega == 1.0:
        return cols
    return [cols[0] / omega, cols[1], cols[2] * omega]


def _write_solve_artifacts(res: SolveResult, outdir: str, omega: float) -> dict:
    stem = _slug(res.target.label)
    paths = {}
    doc = serialize.result_to_dict(res)
    if omega != 1.0:
        doc["omega"] = omega
        doc["T_opt_physical"] = doc["T_opt"] / omega
    paths["result"] = os.path.join(outdir, f"{stem}_result.json")
    serialize.write_json(doc, paths["result"])
    if res.trajectory is not None:
        header, cols = serialize.trajectory_table(res.trajectory)
        paths["trajectory"] = os.path.join(outdir, f"{stem}_trajectory.csv")
        serialize.write_table(paths["trajectory"], header, cols)
    if res.pulse is not None:
        header, cols = serialize.pulse_table(res.pulse)
        paths["pulse"] = os.path.join(outdir, f"{stem}_pulse.csv")
        serialize.write_table(paths["pulse"], header,
                              _rescale_pulse_cols(cols, omega))
    return paths


def cmd_solve(args) -> int:
    target = _target_from_args(args)
    res = solve(target, _search_config(args))
    paths = _write_solve_artifacts(res, _outdir(args), args.omega)
    print(f"{target.label}: T_opt = {res.T_opt:.6f} / Omega")
    for kind, path in paths.items():
        print(f"  {kind}: {path}")
    if res.verification is not None and not res.verification.passed:
        print(f"verification FAILED: {res.verification.details}",
              file=sys.stderr)
        return 2
    return 0


def cmd_sweep(args) -> int:
    if args.grid:
        grid = np.asarray(args.grid, float)
    elif args.range:
        lo, hi, n = args.range
        grid = np.linspace(lo, hi, int(n))
    else:
        raise SystemExit("sweep needs --grid or --range")
    cfg = None
    if any(v is not None for v in (args.smax, args.grid_points)) \
            or args.seed or args.workers != 1:
        cfg = _search_config(args)
    sr = sweep(args.family, grid, cfg)
    outdir = _outdir(args)
    path = os.path.join(outdir, f"sweep_{_slug(args.family)}.csv")
    header, cols = serialize.sweep_table(sr)
    serialize.write_table(path, header, cols)
    print(f"sweep {args.family}: {grid.size} points -> {path}")
    if sr.kinks:
        print("  derivative kinks near: "
              + ", ".join(f"{k:.4f}" for k in sr.kinks))
    return 0


def cmd_verify(args) -> int:
    header, cols = serialize.read_table(args.pulse)
    pulse = serialize.pulse_from_table(header, cols)
    target = _target_from_args(args)
    report = verify_process(pulse, target)
    print(serialize.dumps_json(serialize.report_to_dict(report)), end="")
    return 0 if report.passed else 2


def cmd_analytic1q(args) -> int:
    n = args.resolution
    theta0, phi0 = args.theta0, args.phi0
    thetas = np.linspace(0.0, math.pi, n + 2)[1:-1]
    phis = np.linspace(-math.pi, math.pi, n, endpoint=False)
    tt, pp, jj, xx = [], [], [], []
    for th in thetas:
        for ph in phis:
            j, (p_phi, sigma) = minimax_value(th, ph, theta0, phi0,
                                              return_arg=True)
            if j > 0.0 and abs(math.sin(th)) > 1e-9:
                # forward pulse = time-reversed characteristic, phase + pi
                xi = wrap_angle(
                    xi_star_analytic(theta0, phi0, p_phi, sigma, j) + math.pi)
            else:
                xi = 0.0
            tt.append(th), pp.append(ph), jj.append(j), xx.append(xi)
    outdir = _outdir(args)
    path = os.path.join(outdir, "analytic1q_grid.csv")
    serialize.write_table(path, ["theta", "phi", "J_star", "xi_star"],
                          [np.array(tt), np.array(pp), np.array(jj),
                           np.array(xx)])
    print(f"analytic1q: {len(tt)} grid points -> {path}")
    return 0


# ---------------------------------------------------------------------------
# oracle suites

def _oracle_explicit_n2(seed: int) -> float:
    """Generic coefficient RHS vs hand-transcribed two-TLS equations."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for kind, with_phase in (("amplitude", False), ("gate-phase", True)):
        from .fields import Variant
        field = build_field(Variant(2, kind, (1, 2)))
        for _ in range(200):
            x, p = random_on_shell_point(field, rng)
            dx1, dp1 = characteristic_rhs(field, x, p)
            dx2, dp2 = explicit_rhs_n2(x, p, with_gate_phase=with_phase)
            worst = max(worst,
                        float(np.max(np.abs(dx1 - dx2))),
                        float(np.max(np.abs(dp1 - dp2))))
    return worst


def _oracle_single_qubit(seed: int) -> float:
    """Closed-form single-qubit characteristics vs generic integration."""
    from .fields import Variant
    rng = np.random.default_rng(seed)
    field = build_field(Variant(1, "amplitude", (1,)))
    worst = 0.0
    for _ in range(20):
        theta0 = rng.uniform(0.4, math.pi - 0.4)
        p_phi = rng.uniform(-0.8, 0.8) * abs(math.tan(theta0))
        sigma = int(rng.choice([-1, 1]))
        p_theta = sigma * math.sqrt(1.0 - p_phi**2 / math.tan(theta0) ** 2)
        from .characteristics import CharacteristicPoint, make_rhs
        from scipy.integrate import solve_ivp
        y0 = [theta0, 0.0, p_theta, p_phi]
        sol = solve_ivp(make_rhs(field), (0.0, 2.0), y0 + [0.0],
                        method="DOP853", rtol=1e-11, atol=1e-12,
                        dense_output=True)
        for s in np.linspace(0.1, 2.0, 8):
            th_c, ph_c = closed_form(theta0, 0.0, p_phi, sigma, s)
            y = sol.sol(s)
            th_i = math.acos(max(-1.0, min(1.0, math.cos(y[0]))))
            dev = abs(th_c - th_i)
            if min(abs(math.sin(y[0])), abs(math.sin(th_c))) > 1e-3:
                flip = math.cos(y[0]) * math.cos(th_c) > 0 and \
                    (math.sin(y[0]) < 0)
                ph_i = y[1] + (math.pi if flip else 0.0)
                dev = max(dev, abs(wrap_angle(ph_c - ph_i)))
            worst = max(worst, dev)
    return worst


def _oracle_derivatives(seed: int) -> float:
    """Analytic coefficient derivatives vs central finite differences."""
    from .fields import Variant
    rng = np.random.default_rng(seed)
    worst = 0.0
    variants = [Variant(1, "amplitude", (1,)), Variant(2, "amplitude", (1, 2)),
                Variant(2, "gate-phase", (1, 2)),
                Variant(2, "selective-phase", (1, 2)),
                Variant(3, "amplitude", (1, 2, 3)),
                Variant(3, "gate-phase", (1, 2, 3))]
    h = 1e-6
    for v in variants:
        field = build_field(v)
        for _ in range(50):
            x, _ = random_on_shell_point(field, rng)
            dc = field.derivatives(x)
            for i in range(v.dim):
                xp, xm = x.copy(), x.copy()
                xp[i] += h
                xm[i] -= h
                num = (field.coefficients(xp) - field.coefficients(xm)) / (2 * h)
                worst = max(worst, float(np.max(np.abs(dc[i] - num))))
    return worst


def cmd_oracle_check(args) -> int:
    suites = [
        ("explicit-two-tls-rhs", _oracle_explicit_n2, 1e-9),
        ("single-qubit-closed-form", _oracle_single_qubit, 1e-7),
        ("coefficient-derivatives", _oracle_derivatives, 1e-5),
    ]
    failed = False
    for name, fn, tol in suites:
        dev = fn(args.seed)
        ok = dev < tol
        failed |= not ok
        print(f"{name}: max deviation {dev:.3e} (tol {tol:g}) "
              f"{'PASS' if ok else 'FAIL'}")
    return 1 if failed else 0


def cmd_export(args) -> int:
    doc = serialize.read_json(args.result)
    v = serialize.variant_from_dict(doc["variant"])
    p = doc["params"]
    params = StartParams(p["p_theta1_0"], tuple(p["p_theta_extra"]),
                         tuple(p["f_phi_0"]), tuple(p["p_Phi_0"]),
                         int(p["sigma"]), p["epsilon"])
    field = build_field(v)
    traj = integrate(field, init_at_epsilon(field, params),
                     doc["T_opt"], rtol=1e-10, atol=1e-12, sample_ds=0.01)
    pulse = extract_pulse(traj, field, s_end=doc["T_opt"])
    outdir = _outdir(args)
    stem = _slug(doc["process"])
    header, cols = serialize.trajectory_table(traj)
    tpath = os.path.join(outdir, f"{stem}_trajectory.csv")
    serialize.write_table(tpath, header, cols)
    header, cols = serialize.pulse_table(pulse)
    ppath = os.path.join(outdir, f"{stem}_pulse.csv")
    serialize.write_table(ppath, header,
                          _rescale_pulse_cols(cols, args.omega))
    print(f"export {doc['process']}: {tpath}, {ppath}")
    return 0


# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="")
    p.add_argument("--omega", type=float, default=1.0,
                   help="physical Rabi frequency for rescaled output")
    p.add_argument("--workers", type=int, default=1)


def _add_process(p: argparse.ArgumentParser) -> None:
    p.add_argument("--process", required=True,
                   choices=["cz", "cphi", "simexc", "selective-rotation",
                            "selective-phase", "simexc3", "ccz", "identity"])
    p.add_argument("--phi", type=float, default=None)
    p.add_argument("--theta-targ", type=float, default=None)
    p.add_argument("--tls", type=int, default=2, choices=[1, 2],
                   help="which TLS rotates in selective-rotation")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--n", type=int, nargs="+", default=None,
                   help="enhancement list, e.g. --n 1 2 3")
    p.add_argument("--tol", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rydopt",
        description="Time-optimal laser-phase pulses for Rydberg-blockade "
                    "processes.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one process")
    _add_process(p)
    p.add_argument("--smax", type=float, default=None)
    p.add_argument("--grid-points", type=int, default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("sweep", help="solve a process family over a grid")
    p.add_argument("--family", required=True,
                   choices=["cphi", "selective-rotation-2",
                            "selective-rotation-1", "selective-phase"])
    p.add_argument("--grid", type=float, nargs="+", default=None)
    p.add_argument("--range", type=float, nargs=3, default=None,
                   metavar=("LO", "HI", "N"))
    p.add_argument("--smax", type=float, default=None)
    p.add_argument("--grid-points", type=int, default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("verify", help="verify a pulse CSV against a process")
    p.add_argument("--pulse", required=True)
    _add_process(p)
    _add_common(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("analytic1q",
                       help="tabulate the single-qubit value function")
    p.add_argument("--resolution", type=int, default=24)
    p.add_argument("--theta0", type=float, default=math.pi / 2.0)
    p.add_argument("--phi0", type=float, default=0.0)
    _add_common(p)
    p.set_defaults(fn=cmd_analytic1q)

    p = sub.add_parser("oracle-check", help="run internal consistency suites")
    _add_common(p)
    p.set_defaults(fn=cmd_oracle_check)

    p = sub.add_parser("export",
                       help="re-derive CSV artifacts from a result JSON")
    p.add_argument("--result", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_export)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except RydoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())

"""Result and configuration persistence: JSON documents, CSV tables.

All writers emit deterministic byte streams: floats are rendered with
``repr`` (shortest exact round-trip), JSON keys are sorted, newlines are
``"\\n"``.  Readers recover the exact in-memory values, so
write -> read -> write reproduces the file byte for byte.

Formats
-------
result JSON
    ``{process, variant, T_opt, params, tolerance, verification, search}``.
trajectory CSV
    columns ``s``, the chart coordinates, their momenta ``p_<name>``,
    and the optimal drive phase ``xi_star``.
pulse CSV
    columns ``t, xi, delta`` with ``delta`` the phase slope on the
    interval starting at each sample (repeated on the final sample).
    Phase jumps appear as duplicated ``t`` rows, which also mark the
    segment boundaries on read.
sweep CSV
    columns ``parameter, T_opt``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

from .dynamics import FidelityReport, PulseProfile, PulseSegment
from .errors import InvalidPulseError
from .fields import Variant


# ---------------------------------------------------------------------------
# JSON

def _jsonable(obj):
    """Recursively convert numpy containers/scalars to plain Python."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps_json(doc: dict) -> str:
    """Deterministic JSON rendering (sorted keys, 2-space indent)."""
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


def write_json(doc: dict, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_json(doc))


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def variant_to_dict(v: Variant) -> dict:
    return {"n_tls": v.n_tls, "kind": v.kind,
            "enhancements": list(v.enhancements)}


def variant_from_dict(d: dict) -> Variant:
    return Variant(int(d["n_tls"]), d["kind"], tuple(d["enhancements"]))


def result_to_dict(res) -> dict:
    """Flatten a ``SolveResult`` into the result-JSON schema."""
    p = res.params
    doc = {
        "process": res.target.label,
        "variant": variant_to_dict(res.target.variant),
        "T_opt": float(res.T_opt),
        "params": {
            "p_theta1_0": float(p.p_theta1_0),
            "p_theta_extra": list(p.p_theta_extra),
            "f_phi_0": list(p.f_phi_0),
            "p_Phi_0": list(p.p_Phi_0),
            "sigma": int(p.sigma),
            "epsilon": float(p.epsilon),
        },
        "tolerance": float(res.target.tol_match),
        "search": dict(res.diagnostics),
    }
    if res.verification is not None:
        r = res.verification
        doc["verification"] = {
            "passed": bool(r.passed),
            "fidelities": list(r.fidelities),
            "phases": dict(r.phase_errors),
            "realized": dict(r.realized),
        }
    else:
        doc["verification"] = None
    return doc


def report_to_dict(r: FidelityReport) -> dict:
    return {
        "passed": bool(r.passed),
        "fidelities": list(r.fidelities),
        "phases": dict(r.phase_errors),
        "realized": dict(r.realized),
        "details": r.details,
    }


# ---------------------------------------------------------------------------
# run configuration

@dataclass(frozen=True)
class RunConfig:
    """Fully serializable description of one CLI run.

    A persisted RunConfig re-runs to identical results: every input that
    influences the computation (process, parameters, search settings,
    seed) is a field here, and the solver is deterministic given them.
    """

    command: str
    process: str = ""
    process_params: dict = dc_field(default_factory=dict)
    enhancements: tuple[int, ...] = ()
    variant: str = ""
    grid: tuple[float, ...] = ()
    seed: int = 0
    s_max: float | None = None
    tol: float | None = None
    grid_points: int | None = None
    workers: int = 1
    omega: float = 1.0
    out: str = ""

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    @staticmethod
    def from_dict(d: dict) -> "RunConfig":
        d = dict(d)
        for key in ("enhancements", "grid"):
            if key in d:
                d[key] = tuple(d[key])
        return RunConfig(**d)


# ---------------------------------------------------------------------------
# CSV tables

def format_table(header: list[str], columns: list[np.ndarray]) -> str:
    """Render columns to deterministic CSV text (repr floats)."""
    cols = [np.asarray(c) for c in columns]
    n = cols[0].size
    if any(c.size != n for c in cols) or len(cols) != len(header):
        raise ValueError("header/column shape mismatch")
    lines = [",".join(header)]
    for i in range(n):
        lines.append(",".join(repr(float(c[i])) for c in cols))
    return "\n".join(lines) + "\n"


def write_table(path, header: list[str], columns: list[np.ndarray]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_table(header, columns))


def read_table(path) -> tuple[list[str], list[np.ndarray]]:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    header = lines[0].split(",")
    data = np.array([[float(tok) for tok in ln.split(",")] for ln in lines[1:]])
    if data.size == 0:
        data = np.empty((0, len(header)))
    return header, [data[:, j] for j in range(len(header))]


def trajectory_table(traj) -> tuple[list[str], list[np.ndarray]]:
    names = list(traj.variant.coord_names)
    header = ["s"] + names + [f"p_{n}" for n in names[: traj.variant.dim]] \
        + ["xi_star"]
    cols = [traj.s]
    cols += [traj.x[:, j] for j in range(traj.variant.dim)]
    cols += [traj.p[:, j] for j in range(traj.variant.dim)]
    cols.append(traj.xi_star)
    return header, cols


def pulse_table(pulse: PulseProfile) -> tuple[list[str], list[np.ndarray]]:
    ts, xs, ds = [], [], []
    for seg in pulse.segments:
        slope = np.diff(seg.xi) / np.diff(seg.times)
        ts.append(seg.times)
        xs.append(seg.xi)
        ds.append(np.concatenate([slope, slope[-1:]]))
    return ["t", "xi", "delta"], [np.concatenate(ts), np.concatenate(xs),
                                  np.concatenate(ds)]


def pulse_from_table(header: list[str], columns) -> PulseProfile:
    """Rebuild a pulse from a ``t, xi, delta`` table.

    Segment boundaries are the duplicated-``t`` rows produced by
    ``pulse_table``; the ``delta`` column is derived and ignored.
    """
    if header[:2] != ["t", "xi"]:
        raise InvalidPulseError(f"expected t,xi columns, got {header}")
    t, xi = np.asarray(columns[0], float), np.asarray(columns[1], float)
    breaks = np.flatnonzero(np.diff(t) <= 0.0) + 1
    segs = []
    start = 0
    for b in list(breaks) + [t.size]:
        segs.append(PulseSegment(t[start:b], xi[start:b]))
        start = b
    return PulseProfile(tuple(segs))


def sweep_table(sr) -> tuple[list[str], list[np.ndarray]]:
    return ["parameter", "T_opt"], [np.asarray(sr.parameter),
                                    np.asarray(sr.T_opt)]

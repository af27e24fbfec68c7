"""File formats: certificate/controller JSON, trace and message CSV, metrics JSON.

Floats are written with ``repr`` so every stored number reads back exactly.
"""
from __future__ import annotations

import csv
import json
import re
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionMismatch
from .sim import RunMetrics, SimulationTrace
from .synthesis.problem import SynthesisCertificate, VertexControllerSet

CERTIFICATE_FORMAT = "etlpv-certificate/1"
CONTROLLER_FORMAT = "etlpv-controllers/1"
TRACE_FORMAT = "etlpv-trace/1"

# per-agent vector signals in column order; x, zeta and ztilde are the values at step k
TRACE_SIGNALS = ("theta", "x", "zeta", "ztilde", "y", "y_hat", "e", "eta", "eta_hat", "u", "z", "w", "r")


def _mat(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def _write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n")
    return path


def _read_json(path, fmt: str | None = None) -> dict:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from exc
    if fmt is not None and obj.get("format") != fmt:
        raise ConfigError(f"{path}: expected format {fmt!r}, found {obj.get('format')!r}")
    return obj


# -- synthesis artefacts -----------------------------------------------------

def certificate_to_dict(cert: SynthesisCertificate) -> dict:
    return {
        "format": CERTIFICATE_FORMAT,
        "gamma": cert.gamma,
        "sigma": cert.sigma,
        "t": cert.t,
        "sigma_x": cert.sigma_x,
        "lambdas": list(cert.lambdas),
        "alpha_z": cert.alpha_z,
        "beta_z": cert.beta_z,
        "epsilon": cert.epsilon,
        "dims": list(cert.dims),
        "status": cert.status,
        "S": _mat(cert.S),
        "G1": [_mat(g) for g in cert.G1],
        "G2": [_mat(g) for g in cert.G2],
        "K1": [_mat(k) for k in cert.K1],
        "min_eig_per_block": [{"vertex": l, "lambda": lam, "min_eig": v}
                              for (l, lam), v in sorted((cert.min_eig_per_block or {}).items())],
    }


def certificate_from_dict(d: dict) -> SynthesisCertificate:
    arr = lambda xs: tuple(np.array(x, dtype=float) for x in xs)  # noqa: E731
    cert = SynthesisCertificate(
        S=np.array(d["S"], dtype=float), G1=arr(d["G1"]), G2=arr(d["G2"]), K1=arr(d["K1"]),
        t=float(d["t"]), sigma_x=float(d["sigma_x"]), lambdas=tuple(float(v) for v in d["lambdas"]),
        alpha_z=float(d["alpha_z"]), beta_z=float(d["beta_z"]), epsilon=float(d["epsilon"]),
        dims=tuple(int(v) for v in d["dims"]), status=d.get("status", ""),
    )
    eigs = {(int(e["vertex"]), float(e["lambda"])): float(e["min_eig"]) for e in d.get("min_eig_per_block", [])}
    object.__setattr__(cert, "min_eig_per_block", eigs)
    return cert


def write_certificate(path, cert: SynthesisCertificate) -> Path:
    return _write_json(path, certificate_to_dict(cert))


def read_certificate(path) -> SynthesisCertificate:
    try:
        return certificate_from_dict(_read_json(path, CERTIFICATE_FORMAT))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed certificate ({exc})") from exc


def controllers_to_dict(ctrl: VertexControllerSet) -> dict:
    return {
        "format": CONTROLLER_FORMAT,
        "gamma": ctrl.gamma,
        "sigma": ctrl.sigma,
        "alpha_z": ctrl.alpha_z,
        "beta_z": ctrl.beta_z,
        "F_x": [_mat(f) for f in ctrl.F_x],
        "F_zeta": [_mat(f) for f in ctrl.F_zeta],
    }


def write_controllers(path, ctrl: VertexControllerSet) -> Path:
    return _write_json(path, controllers_to_dict(ctrl))


def read_controllers(path) -> VertexControllerSet:
    d = _read_json(path, CONTROLLER_FORMAT)
    try:
        return VertexControllerSet(
            tuple(np.array(f, dtype=float) for f in d["F_x"]),
            tuple(np.array(f, dtype=float) for f in d["F_zeta"]),
            float(d["gamma"]), float(d["sigma"]), float(d["alpha_z"]), float(d["beta_z"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: malformed controller file ({exc})") from exc


def check_controller_dims(ctrl: VertexControllerSet, model) -> None:
    nx, nw, nu, ny = model.dims
    if ctrl.vertex_count != model.vertex_count:
        raise DimensionMismatch(f"controller file has {ctrl.vertex_count} vertices, model has {model.vertex_count}")
    for l, (fx, fz) in enumerate(zip(ctrl.F_x, ctrl.F_zeta)):
        if fx.shape != (nu, nx) or fz.shape != (nu, ny):
            raise DimensionMismatch(
                f"vertex {l}: F_x {fx.shape} / F_zeta {fz.shape}, model needs ({nu}, {nx}) / ({nu}, {ny})")


# -- traces --------------------------------------------------------------------

def trace_columns(trace: SimulationTrace) -> list[str]:
    N = trace.node_count
    cols = ["step", "time"]
    for sig in TRACE_SIGNALS:
        width = getattr(trace, sig).shape[-1]
        cols += [f"{sig}_{i}_{c}" for i in range(N) for c in range(width)]
    cols += [f"trigger_{i}" for i in range(N)]
    cols.append("rounds")
    return cols


def write_trace_csv(path, trace: SimulationTrace, meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    H, N = trace.horizon, trace.node_count
    info = {"format": TRACE_FORMAT, "estimator": trace.estimator, "Ts": trace.Ts, "sigma": trace.sigma,
            "agents": N, "steps": H, "homogeneous": trace.homogeneous}
    info.update(meta or {})
    blocks = [np.arange(H)[:, None].astype(float), (np.arange(H) * trace.Ts)[:, None]]
    for sig in TRACE_SIGNALS:
        a = getattr(trace, sig)[:H]
        blocks.append(a.reshape(H, -1))
    blocks.append(trace.triggers.astype(float))
    blocks.append(trace.rounds[:, None].astype(float))
    data = np.hstack(blocks)
    cols = trace_columns(trace)
    n_int = {0, len(cols) - 1} | set(range(len(cols) - 1 - N, len(cols) - 1))
    with path.open("w", newline="") as fh:
        fh.write(f"# {json.dumps(info)}\n")
        fh.write("# one row per step k; vector signals are flattened as <signal>_<agent>_<component>;\n")
        fh.write("# x, zeta, ztilde are the states at step k; trigger_<agent> is 1 when that agent broadcast at k\n")
        w = csv.writer(fh)
        w.writerow(cols)
        for row in data:
            w.writerow([str(int(v)) if j in n_int else repr(float(v)) for j, v in enumerate(row)])
    return path


def read_trace_csv(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Returns ``(meta, columns)``; columns are 1-D float arrays keyed by name."""
    path = Path(path)
    meta = {}
    try:
        with path.open(newline="") as fh:
            first = fh.readline()
            if first.startswith("# "):
                meta = json.loads(first[2:])
            rows = [row for row in csv.reader(line for line in fh if not line.startswith("#"))]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed header ({exc.msg})") from exc
    if not rows:
        raise ConfigError(f"{path}: empty trace")
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return meta, {name: data[:, j] for j, name in enumerate(header)}


def signal_matrix(columns: dict[str, np.ndarray], signal: str, agents: int) -> np.ndarray:
    """Stack ``<signal>_<i>_<c>`` columns into shape (steps, agents, width)."""
    pattern = re.compile(rf"{re.escape(signal)}_\d+_\d+")
    names = [n for n in columns if pattern.fullmatch(n)]
    if not names:
        raise KeyError(signal)
    width = len(names) // agents
    return np.stack([np.column_stack([columns[f"{signal}_{i}_{c}"] for c in range(width)])
                     for i in range(agents)], axis=1)


# -- metrics and messages --------------------------------------------------------

def write_metrics(path, metrics: RunMetrics) -> Path:
    return _write_json(path, metrics.to_dict())


def read_metrics(path) -> dict:
    return _read_json(path)


def write_messages_csv(path, trace: SimulationTrace) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "agent", "kind", "scalar_count"])
        for m in trace.messages:
            w.writerow([m.step, m.sender, m.kind, m.scalar_count])
    return path

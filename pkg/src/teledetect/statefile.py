"""JSON state files, unitary files and report certificates.

State file::

    {"kind": "pure" | "density",
     "mode": "multiqubit", "qubits_per_side": n      # or
     "mode": "bipartite", "d": d,
     "data": [[re, im], ...]                         # pure: flat amplitudes
             [[[re, im], ...], ...]}                 # density: row-major rows

Unitary file: ``{"kind": "unitary", "d": d, "data": <rows as above>}``.
Floats are written with Python's shortest round-trip repr, so a write/parse
cycle reproduces every bit.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import StateParseError, StateValidationError, UsageError
from .fef import check_unitary, fef_objective
from .gamma import gamma_expectation
from .linalg import DERIVED_TOL, DensityMatrix, PureState, SubsystemLayout, as_bipartite, as_density
from .pauli import triple_from_su2
from .witness import witness_rotated, evaluate


def encode_complex(a) -> list:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [encode_complex(x) for x in a]


def decode_complex(data, ndim: int) -> np.ndarray:
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise StateParseError(f"data must be nested lists of [re, im] pairs ({exc})") from None
    if arr.ndim != ndim + 1 or arr.shape[-1] != 2:
        raise StateParseError(
            f"data must be a {'flat list' if ndim == 1 else 'list of rows'} of [re, im] pairs, got array shape {arr.shape}"
        )
    return arr[..., 0] + 1j * arr[..., 1]


def _layout_fields(layout: SubsystemLayout) -> dict:
    if layout.is_multiqubit:
        return {"mode": "multiqubit", "qubits_per_side": layout.qubits_per_side}
    if len(layout.dims) == 2 and layout.dims[0] == layout.dims[1]:
        return {"mode": "bipartite", "d": layout.dims[0]}
    raise UsageError(f"layout {layout.dims} has no state-file representation")


def state_to_dict(state: PureState | DensityMatrix) -> dict:
    if isinstance(state, PureState):
        return {"kind": "pure", **_layout_fields(state.layout), "data": encode_complex(state.amplitudes)}
    return {"kind": "density", **_layout_fields(state.layout), "data": encode_complex(state.matrix)}


def write_state(state: PureState | DensityMatrix, path) -> None:
    Path(path).write_text(json.dumps(state_to_dict(state)) + "\n")


def _load_json(path) -> tuple[dict, bytes]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise StateParseError(exc.msg, line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise StateParseError("top level must be an object")
    return doc, raw


def _positive_int(doc: dict, key: str) -> int:
    value = doc.get(key)
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise StateParseError(f"field {key!r} must be a positive integer")
    return value


def state_from_dict(doc: dict) -> PureState | DensityMatrix:
    kind = doc.get("kind")
    if kind not in ("pure", "density"):
        raise StateParseError(f"field 'kind' must be 'pure' or 'density', got {kind!r}")
    mode = doc.get("mode")
    if mode == "multiqubit":
        layout = SubsystemLayout.multiqubit(_positive_int(doc, "qubits_per_side"))
    elif mode == "bipartite":
        d = _positive_int(doc, "d")
        if d < 2:
            raise StateParseError("field 'd' must be >= 2")
        layout = SubsystemLayout.bipartite(d)
    else:
        raise StateParseError(f"field 'mode' must be 'multiqubit' or 'bipartite', got {mode!r}")
    if "data" not in doc:
        raise StateParseError("missing field 'data'")
    dim = layout.total_dim
    if kind == "pure":
        amps = decode_complex(doc["data"], 1)
        if amps.size != dim:
            raise StateValidationError(f"expected {dim} amplitudes, got {amps.size}")
        return PureState(amps, layout)
    m = decode_complex(doc["data"], 2)
    if m.shape != (dim, dim):
        raise StateValidationError(f"expected a {dim}x{dim} matrix, got {m.shape[0]}x{m.shape[1]}")
    return DensityMatrix(m, layout)


def parse_state(path) -> PureState | DensityMatrix:
    doc, _ = _load_json(path)
    return state_from_dict(doc)


def file_digest(path) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_unitary(u: np.ndarray, path) -> None:
    u = np.asarray(u, dtype=complex)
    Path(path).write_text(json.dumps({"kind": "unitary", "d": u.shape[0], "data": encode_complex(u)}) + "\n")


def parse_unitary(path) -> np.ndarray:
    doc, _ = _load_json(path)
    if doc.get("kind") != "unitary":
        raise StateParseError("field 'kind' must be 'unitary'")
    d = _positive_int(doc, "d")
    if "data" not in doc:
        raise StateParseError("missing field 'data'")
    u = decode_complex(doc["data"], 2)
    if u.shape != (d, d):
        raise StateValidationError(f"expected a {d}x{d} matrix, got {u.shape[0]}x{u.shape[1]}")
    try:
        return check_unitary(u, d)
    except ValueError as exc:
        raise StateValidationError(str(exc)) from None


# ------------------------------------------------------------ certificates

def triples_certificate(triples) -> list[dict]:
    return [{"frame": t.frame.tolist(), "su2": encode_complex(t.su2)} for t in triples]


def recompute_certificate(report: dict, state: PureState | DensityMatrix) -> float:
    """Value implied by a report's certificate, recomputed from scratch on ``state``."""
    cert = report.get("certificate")
    if not cert:
        raise UsageError("report carries no certificate")
    kind = cert["type"]
    if kind == "triples":
        triples = [triple_from_su2(decode_complex(t["su2"], 2)) for t in cert["triples"]]
        return gamma_expectation(state, triples)
    d = report["d"]
    rho = as_density(as_bipartite(state, d))
    u = check_unitary(decode_complex(cert["unitary"], 2), d)
    if kind == "fef_unitary":
        return fef_objective(rho, u)
    if kind == "witness_unitary":
        return evaluate(witness_rotated(u), rho)
    raise UsageError(f"unknown certificate type {kind!r}")


def certificate_holds(report: dict, state, tol: float = DERIVED_TOL) -> bool:
    return abs(recompute_certificate(report, state) - report["certificate"]["value"]) <= tol

"""JSON documents for states, operators, double states, mixtures, plans and windows.

Complex numbers are ``[re, im]`` pairs and matrices are row-major nested
lists. Every document has ``kind`` and ``dim``; a bare
``{"dim": d, "amplitudes": [...]}`` is read as a state.

Writing uses ``repr``-exact floats, so ``read(write(doc))`` reproduces a
canonical document exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .decompose import DecompositionPlan, check_plan_structure, ProcessMixture, ProcessTerm
from .errors import DocumentError, DoubleStateError
from .linalg import StateVector, as_operator, normalize
from .measure import DoubleState, Provenance
from .process import ProcessWindow

KINDS = ("state", "operator", "double_state", "mixture", "plan", "window")


@dataclass(frozen=True, eq=False)
class Document:
    """A parsed document; ``payload`` is the library object it describes.

    Payload types by kind: ``StateVector``, ``numpy.ndarray``,
    ``DoubleState``, ``ProcessMixture``, ``DecompositionPlan``,
    ``ProcessWindow``.
    """

    kind: str
    dim: int
    payload: Any


# encoding -------------------------------------------------------------------

def encode_complex(z: complex) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def encode_vector(v) -> list[list[float]]:
    return [encode_complex(z) for z in np.asarray(v).ravel()]


def encode_matrix(m) -> list[list[list[float]]]:
    return [encode_vector(row) for row in np.asarray(m)]


def to_dict(doc: Document) -> dict:
    p = doc.payload
    out: dict[str, Any] = {"kind": doc.kind, "dim": doc.dim}
    if doc.kind == "state":
        out["amplitudes"] = encode_vector(p.amplitudes)
    elif doc.kind == "operator":
        out["matrix"] = encode_matrix(p)
    elif doc.kind == "double_state":
        out["matrix"] = encode_matrix(p.W)
        if p.provenance is not None:
            out["provenance"] = {
                "psi": encode_vector(p.provenance.psi.amplitudes),
                "phi": encode_vector(p.provenance.phi.amplitudes),
                "alpha": encode_complex(p.provenance.alpha),
            }
    elif doc.kind == "mixture":
        out["terms"] = [
            {"p": t.p, "psi": encode_vector(t.psi.amplitudes), "phi": encode_vector(t.phi.amplitudes)}
            for t in p.terms
        ]
    elif doc.kind == "plan":
        out["basis"] = [encode_vector(p.basis[:, k]) for k in range(p.dim)]
        out["probabilities"] = [float(x) for x in p.probabilities]
    elif doc.kind == "window":
        out["t_i"] = p.t_i
        out["t_f"] = p.t_f
        out[p.kind] = encode_matrix(p.matrix)
    else:
        raise DocumentError(f"unknown kind {doc.kind!r}")
    return out


def document_of(obj) -> Document:
    """Wrap a library object in a :class:`Document` of the matching kind."""
    if isinstance(obj, StateVector):
        return Document("state", obj.dim, obj)
    if isinstance(obj, DoubleState):
        return Document("double_state", obj.dim, obj)
    if isinstance(obj, ProcessMixture):
        return Document("mixture", obj.dim, obj)
    if isinstance(obj, DecompositionPlan):
        return Document("plan", obj.dim, obj)
    if isinstance(obj, ProcessWindow):
        return Document("window", obj.dim, obj)
    if isinstance(obj, np.ndarray) and obj.ndim == 2:
        return Document("operator", obj.shape[0], obj)
    raise TypeError(f"no document kind for {type(obj).__name__}")


def dumps(obj) -> str:
    doc = obj if isinstance(obj, Document) else document_of(obj)
    return json.dumps(to_dict(doc), indent=1)


def dump(obj, path: str | Path) -> None:
    Path(path).write_text(dumps(obj) + "\n", encoding="utf-8")


# decoding -------------------------------------------------------------------

def _reject_constant(name: str):
    raise DocumentError(f"non-finite number {name} is not allowed")


def _number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise DocumentError(f"expected a number, got {type(x).__name__}", where)
    x = float(x)
    if not math.isfinite(x):
        raise DocumentError("number is not finite", where)
    return x


def _complex(x, where: str) -> complex:
    if isinstance(x, list):
        if len(x) != 2:
            raise DocumentError("complex number must be a [re, im] pair", where)
        return complex(_number(x[0], f"{where}[0]"), _number(x[1], f"{where}[1]"))
    return complex(_number(x, where))


def _vector(x, where: str, dim: int) -> np.ndarray:
    if not isinstance(x, list):
        raise DocumentError("expected a list of complex numbers", where)
    if len(x) != dim:
        raise DocumentError(f"expected {dim} entries, got {len(x)}", where)
    return np.array([_complex(z, f"{where}[{k}]") for k, z in enumerate(x)], dtype=np.complex128)


def _matrix(x, where: str, dim: int) -> np.ndarray:
    if not isinstance(x, list) or len(x) != dim:
        raise DocumentError(f"expected {dim} rows", where)
    return np.array([_vector(row, f"{where}[{r}]", dim) for r, row in enumerate(x)])


def _field(d: dict, key: str, where: str = ""):
    if key not in d:
        raise DocumentError(f"missing field {key!r}", where or None)
    return d[key]


def _state(x, where: str, dim: int) -> StateVector:
    v = _vector(x, where, dim)
    try:
        # Already-normalized input is kept bit-for-bit so documents round-trip.
        if abs(np.linalg.norm(v) - 1.0) <= 1e-12:
            return StateVector(v)
        return normalize(v)
    except DocumentError:
        raise
    except DoubleStateError as exc:
        raise DocumentError(str(exc), where) from exc


def from_dict(d: Any) -> Document:
    if not isinstance(d, dict):
        raise DocumentError("document must be a JSON object")
    kind = d.get("kind", "state" if "amplitudes" in d else None)
    if kind not in KINDS:
        raise DocumentError(f"unknown or missing kind {kind!r}; expected one of {KINDS}", "kind")
    dim = _field(d, "dim")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise DocumentError("dim must be a positive integer", "dim")

    try:
        if kind == "state":
            payload = _state(_field(d, "amplitudes"), "amplitudes", dim)
        elif kind == "operator":
            payload = as_operator(_matrix(_field(d, "matrix"), "matrix", dim))
        elif kind == "double_state":
            m = _matrix(_field(d, "matrix"), "matrix", dim)
            prov = None
            if d.get("provenance") is not None:
                pv = d["provenance"]
                prov = Provenance(
                    _state(_field(pv, "psi", "provenance"), "provenance.psi", dim),
                    _state(_field(pv, "phi", "provenance"), "provenance.phi", dim),
                    _complex(_field(pv, "alpha", "provenance"), "provenance.alpha"),
                )
            payload = DoubleState(m, prov)
        elif kind == "mixture":
            terms = _field(d, "terms")
            if not isinstance(terms, list):
                raise DocumentError("terms must be a list", "terms")
            built = []
            for k, t in enumerate(terms):
                w = f"terms[{k}]"
                if not isinstance(t, dict):
                    raise DocumentError("term must be an object", w)
                built.append(
                    ProcessTerm.make(
                        _number(_field(t, "p", w), f"{w}.p"),
                        _state(_field(t, "psi", w), f"{w}.psi", dim),
                        _state(_field(t, "phi", w), f"{w}.phi", dim),
                    )
                )
            payload = ProcessMixture(tuple(built), dim)
        elif kind == "plan":
            basis = _field(d, "basis")
            if not isinstance(basis, list) or len(basis) != dim:
                raise DocumentError(f"basis must list {dim} vectors", "basis")
            B = np.column_stack([_vector(b, f"basis[{k}]", dim) for k, b in enumerate(basis)])
            probs = _field(d, "probabilities")
            if not isinstance(probs, list):
                raise DocumentError("probabilities must be a list", "probabilities")
            p = np.array([_number(x, f"probabilities[{k}]") for k, x in enumerate(probs)])
            payload = DecompositionPlan(B, p)
            check_plan_structure(payload, dim)
        else:
            t_i = _number(_field(d, "t_i"), "t_i")
            t_f = _number(_field(d, "t_f"), "t_f")
            if ("hamiltonian" in d) == ("unitary" in d):
                raise DocumentError("window needs exactly one of 'hamiltonian' or 'unitary'")
            wk = "hamiltonian" if "hamiltonian" in d else "unitary"
            payload = ProcessWindow(t_i, t_f, _matrix(d[wk], wk, dim), wk)
    except DocumentError:
        raise
    except DoubleStateError as exc:
        raise DocumentError(f"{exc.name}: {exc}", kind) from exc
    return Document(kind, dim, payload)


def loads(text: str) -> Document:
    try:
        data = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from exc
    return from_dict(data)


def load(path: str | Path, kind: str | None = None) -> Document:
    """Read a document from ``path``; with ``kind``, insist on that kind."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read file: {exc.strerror}", str(path)) from exc
    try:
        doc = loads(text)
    except DocumentError as exc:
        raise DocumentError(str(exc), str(path)) from exc
    if kind is not None and doc.kind != kind:
        raise DocumentError(f"expected a {kind} document, got {doc.kind}", str(path))
    return doc

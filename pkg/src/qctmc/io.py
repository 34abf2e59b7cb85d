"""JSON readers and writers for model, initial-description and cylinder files.

Complex numbers are two-element ``[re, im]`` arrays and matrices are
row-major lists of rows.
"""
from __future__ import annotations

import json

import numpy as np

from .measure import CylinderSpec, CylinderStep
from .model import InstantaneousDescription, JumpOperator, QuantumCtmc

__all__ = [
    "ModelFileError",
    "matrix_from_json",
    "matrix_to_json",
    "model_from_dict",
    "model_to_dict",
    "load_model",
    "save_model",
    "blocks_from_dict",
    "load_initial",
    "cylinder_from_dict",
    "load_cylinder",
]


class ModelFileError(ValueError):
    """Malformed input document; the message names the offending field."""


def matrix_from_json(rows, field, dim=None):
    try:
        arr = np.array([[complex(float(z[0]), float(z[1])) for z in row] for row in rows],
                       dtype=np.complex128)
    except (TypeError, IndexError, ValueError) as exc:
        raise ModelFileError(f"{field}: expected a matrix of [re, im] pairs ({exc})") from None
    if arr.ndim != 2 or (dim is not None and arr.shape != (dim, dim)):
        shape = arr.shape if arr.ndim == 2 else "ragged"
        raise ModelFileError(f"{field}: expected a {dim}x{dim} matrix, got {shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelFileError(f"{field}: non-finite entry")
    return arr


def matrix_to_json(a):
    a = np.asarray(a, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def blocks_from_dict(doc, dim, field="initial"):
    if not isinstance(doc, dict):
        raise ModelFileError(f"{field}: expected an object mapping state id to matrix")
    return {str(s): matrix_from_json(m, f"{field}[{s!r}]", dim) for s, m in doc.items()}


def model_from_dict(doc):
    """Build ``(model, initial)`` from a parsed model document.

    ``initial`` is ``None`` when the document has no ``initial`` field.
    """
    if not isinstance(doc, dict):
        raise ModelFileError("model document must be a JSON object")
    for key in ("dim", "states"):
        if key not in doc:
            raise ModelFileError(f"{key}: missing required field")
    dim = doc["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ModelFileError("dim: expected a positive integer")
    states = doc["states"]
    if not isinstance(states, list) or not states:
        raise ModelFileError("states: expected a non-empty array of ids")
    states = [str(s) for s in states]
    if len(set(states)) != len(states):
        raise ModelFileError("states: duplicate ids")
    labels = doc.get("labels", {})
    if not isinstance(labels, dict):
        raise ModelFileError("labels: expected an object")
    hams = blocks_from_dict(doc.get("hamiltonians", {}), dim, "hamiltonians")
    jumps = []
    for k, j in enumerate(doc.get("jumps", [])):
        if not isinstance(j, dict) or not {"from", "to", "matrix"} <= set(j):
            raise ModelFileError(f"jumps[{k}]: expected an object with from, to and matrix")
        jumps.append(JumpOperator(str(j["from"]), str(j["to"]),
                                  matrix_from_json(j["matrix"], f"jumps[{k}].matrix", dim)))
    model = QuantumCtmc(
        states=tuple(states),
        dim=dim,
        hamiltonians=hams,
        jumps=tuple(jumps),
        labels={str(s): tuple(v) for s, v in labels.items()},
    )
    initial = None
    if "initial" in doc:
        initial = InstantaneousDescription(blocks_from_dict(doc["initial"], dim))
    return model, initial


def model_to_dict(model: QuantumCtmc, initial: InstantaneousDescription | None = None):
    doc = {
        "dim": model.dim,
        "states": list(model.states),
        "labels": {s: sorted(model.label(s)) for s in model.states},
        "hamiltonians": {s: matrix_to_json(h) for s, h in model.hamiltonians.items()},
        "jumps": [
            {"from": j.source, "to": j.target, "matrix": matrix_to_json(j.matrix)}
            for j in model.jumps
        ],
    }
    if initial is not None:
        doc["initial"] = {s: matrix_to_json(b) for s, b in initial.blocks.items()}
    return doc


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ModelFileError(f"{path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: invalid JSON ({exc})") from None


def load_model(path):
    return model_from_dict(_read_json(path))


def save_model(path, model, initial=None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model, initial), fh, indent=1)
        fh.write("\n")


def load_initial(path, dim):
    return InstantaneousDescription(blocks_from_dict(_read_json(path), dim))


def cylinder_from_dict(doc):
    if not isinstance(doc, dict) or "start" not in doc:
        raise ModelFileError("start: missing required field")
    steps = []
    for k, st in enumerate(doc.get("steps", [])):
        try:
            lo, hi = st["interval"]
            steps.append(CylinderStep((float(lo), float(hi)), str(st["to"])))
        except (KeyError, TypeError, ValueError):
            raise ModelFileError(
                f"steps[{k}]: expected {{\"interval\": [lo, hi], \"to\": id}}"
            ) from None
    return CylinderSpec(str(doc["start"]), tuple(steps))


def load_cylinder(path):
    return cylinder_from_dict(_read_json(path))

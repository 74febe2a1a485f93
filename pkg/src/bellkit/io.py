"""JSON encoding of matrices, strategies, witnesses and families.

Complex scalars are ``[re, im]``; matrices are
``{"rows": n, "cols": m, "entries": [[re, im], ...]}`` in row-major order.
Floats go through ``repr`` (shortest round-trip form), so emitting, parsing
and emitting again reproduces the same bytes.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .strategy import Strategy, StrategyError


class SchemaError(ValueError):
    pass


def _num(x) -> float:
    v = float(x)
    return 0.0 if v == 0.0 else v  # normalize -0.0


def complex_to_json(z) -> list[float]:
    z = complex(z)
    return [_num(z.real), _num(z.imag)]


def complex_from_json(v) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if not (isinstance(v, list) and len(v) == 2 and all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in v)):
        raise SchemaError(f"complex scalar must be [re, im], got {v!r}")
    return complex(v[0], v[1])


def vector_to_json(v: np.ndarray) -> list[list[float]]:
    return [complex_to_json(z) for z in np.ravel(v)]


def vector_from_json(v) -> np.ndarray:
    if not isinstance(v, list):
        raise SchemaError("vector must be a list of [re, im] pairs")
    return np.array([complex_from_json(z) for z in v], dtype=complex)


def matrix_to_json(m: np.ndarray) -> dict[str, Any]:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]), "entries": vector_to_json(m)}


def matrix_from_json(obj) -> np.ndarray:
    if not isinstance(obj, dict) or not {"rows", "cols", "entries"} <= set(obj):
        raise SchemaError("matrix must be an object with rows, cols and entries")
    rows, cols = obj["rows"], obj["cols"]
    if not (isinstance(rows, int) and isinstance(cols, int) and rows >= 0 and cols >= 0):
        raise SchemaError("rows and cols must be non-negative integers")
    entries = vector_from_json(obj["entries"])
    if entries.size != rows * cols:
        raise SchemaError(f"matrix has {entries.size} entries, expected {rows}x{cols}")
    if not np.all(np.isfinite(entries)):
        raise SchemaError("matrix entries must be finite")
    return entries.reshape(rows, cols)


def quaternion_matrix_to_json(q: np.ndarray) -> dict[str, Any]:
    n = q.shape[0]
    return {"n": n, "entries": [[_num(c) for c in q[i, j]] for i in range(n) for j in range(n)]}


def quaternion_matrix_from_json(obj) -> np.ndarray:
    try:
        n = obj["n"]
        ent = np.array(obj["entries"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad quaternion matrix: {exc}") from None
    if ent.shape != (n * n, 4):
        raise SchemaError("quaternion matrix needs n*n entries of four components")
    return ent.reshape(n, n, 4)


# ---------------------------------------------------------------- strategy


def strategy_to_json(s: Strategy) -> dict[str, Any]:
    def party(fam):
        return [{"input": k, "effects": [matrix_to_json(e) for e in es]} for k, es in fam.items()]

    return {
        "dims": [s.dim_a, s.dim_b],
        "state": vector_to_json(s.state),
        "alice": party(s.alice),
        "bob": party(s.bob),
    }


def strategy_from_json(obj) -> Strategy:
    if not isinstance(obj, dict):
        raise SchemaError("strategy must be a JSON object")
    missing = {"dims", "state", "alice", "bob"} - set(obj)
    if missing:
        raise SchemaError(f"strategy is missing {sorted(missing)}")
    dims = obj["dims"]
    if not (isinstance(dims, list) and len(dims) == 2 and all(isinstance(d, int) and d > 0 for d in dims)):
        raise SchemaError("dims must be two positive integers")

    def party(lst, name):
        if not isinstance(lst, list):
            raise SchemaError(f"{name} must be a list of inputs")
        fam = {}
        for item in lst:
            if not isinstance(item, dict) or "input" not in item or "effects" not in item:
                raise SchemaError(f"{name} entries need 'input' and 'effects'")
            label = str(item["input"])
            if label in fam:
                raise SchemaError(f"{name} input {label!r} is repeated")
            if not isinstance(item["effects"], list) or not item["effects"]:
                raise SchemaError(f"{name} input {label!r} needs a non-empty effect list")
            fam[label] = tuple(matrix_from_json(e) for e in item["effects"])
        return fam

    try:
        return Strategy(vector_from_json(obj["state"]), dims[0], dims[1], party(obj["alice"], "alice"), party(obj["bob"], "bob"))
    except StrategyError as exc:
        raise SchemaError(str(exc)) from None


def _json_default(o):
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return _num(o)
    raise TypeError(f"{type(o).__name__} is not JSON serializable")


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=False, default=_json_default) + "\n"


def load_json(path: str | Path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: malformed JSON ({exc})") from None
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read ({exc.strerror})") from None


def load_strategy(path: str | Path) -> Strategy:
    return strategy_from_json(load_json(path))


def save_strategy(s: Strategy, path: str | Path) -> None:
    Path(path).write_text(dumps(strategy_to_json(s)), encoding="utf-8")


# ----------------------------------------------------------------- witness


def witness_to_json(w) -> dict[str, Any]:
    return {
        "U_A": matrix_to_json(w.u_a),
        "U_B": matrix_to_json(w.u_b),
        "aux0": vector_to_json(w.aux0),
        "aux1": vector_to_json(w.aux1),
        "aux_dims": list(w.aux_dims),
    }


def witness_from_json(obj):
    from .dilation import DilationError, DilationWitness

    if not isinstance(obj, dict) or not {"U_A", "U_B", "aux0"} <= set(obj):
        raise SchemaError("witness needs U_A, U_B and aux0")
    aux0 = vector_from_json(obj["aux0"])
    aux1 = vector_from_json(obj["aux1"]) if "aux1" in obj else np.zeros_like(aux0)
    dims = obj.get("aux_dims", [aux0.size, 1])
    try:
        return DilationWitness(matrix_from_json(obj["U_A"]), matrix_from_json(obj["U_B"]), aux0, aux1, tuple(dims))
    except DilationError as exc:
        raise SchemaError(str(exc)) from None


def family_to_json(fam) -> dict[str, Any]:
    return {
        "n": fam.n,
        "expected_real_dim": fam.expected_real_dim,
        "projections": [matrix_to_json(p) for p in fam.projections],
        "quaternion_projections": [quaternion_matrix_to_json(q) for q in fam.quaternion_projections],
    }

"""JSON interchange for states, function tables, protocol instances and reports.

Complex arrays are stored as nested lists whose innermost entries are
``[re, im]`` pairs. Protocol files follow the final-state model: one list
of transcripts per input pair, keyed ``"x|y"``.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Any, Iterable

import numpy as np

from .attack import ProtocolInstance
from .functions import FunctionTable, parse_builtin
from .qstate import Branch, DensityOperator, Measurement, PureState, RegisterLayout


class SchemaError(ValueError):
    """Input file does not match the expected JSON layout."""


def encode_complex(arr) -> list:
    a = np.asarray(arr, dtype=np.complex128)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_complex(obj) -> np.ndarray:
    a = np.asarray(obj, dtype=float)
    if a.ndim == 0 or a.shape[-1] != 2:
        raise SchemaError("complex arrays are lists of [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def _require(obj: dict, *keys: str):
    if not isinstance(obj, dict):
        raise SchemaError(f"expected a JSON object, got {type(obj).__name__}")
    missing = [k for k in keys if k not in obj]
    if missing:
        raise SchemaError(f"missing field(s) {missing}")


def layout_to_json(layout: RegisterLayout) -> list:
    return [[lb, d] for lb, d in layout.registers]


def layout_from_json(obj) -> RegisterLayout:
    try:
        return RegisterLayout(tuple((str(lb), int(d)) for lb, d in obj))
    except (TypeError, ValueError) as e:
        raise SchemaError(f"bad layout: {e}") from None


def state_to_json(state) -> dict:
    out = {"layout": layout_to_json(state.layout)}
    if isinstance(state, PureState):
        out["amp"] = encode_complex(state.amplitudes)
    else:
        out["matrix"] = encode_complex(state.matrix)
    return out


def state_from_json(obj: dict):
    _require(obj, "layout")
    layout = layout_from_json(obj["layout"])
    if "amp" in obj:
        return PureState(layout, decode_complex(obj["amp"]))
    if "matrix" in obj:
        return DensityOperator(layout, decode_complex(obj["matrix"]))
    raise SchemaError("a state needs 'amp' or 'matrix'")


def function_to_json(f: FunctionTable) -> dict:
    return {"name": f.name, "x": list(f.x_alphabet), "y": list(f.y_alphabet),
            "z": list(f.z_alphabet), "t": f.table.tolist()}


def function_from_json(obj) -> FunctionTable:
    """A table object, or a builtin name such as ``"ot(2,1)"``."""
    if isinstance(obj, str):
        try:
            return parse_builtin(obj)
        except ValueError as e:
            raise SchemaError(str(e)) from None
    _require(obj, "x", "y", "z", "t")
    try:
        return FunctionTable(tuple(obj["x"]), tuple(obj["y"]), tuple(obj["z"]),
                             np.asarray(obj["t"]), obj.get("name", ""))
    except ValueError as e:
        raise SchemaError(str(e)) from None


def measurement_to_json(m: Measurement) -> dict:
    return {"registers": list(m.registers),
            "outcomes": [{"z": z, "kraus": encode_complex(op)} for z, op in m.outcomes]}


def measurement_from_json(obj, default_registers: Iterable[str]) -> Measurement:
    """Either ``{"registers", "outcomes"}`` or a bare list of ``{"z", "kraus"}``."""
    if isinstance(obj, list):
        regs, outs = tuple(default_registers), obj
    else:
        _require(obj, "outcomes")
        regs, outs = tuple(obj.get("registers", default_registers)), obj["outcomes"]
    try:
        pairs = []
        for o in outs:
            _require(o, "z", "kraus")
            pairs.append((str(o["z"]), decode_complex(o["kraus"])))
        return Measurement(regs, tuple(pairs))
    except ValueError as e:
        raise SchemaError(f"bad measurement: {e}") from None


def _split_key(key: str) -> tuple[str, str]:
    if key.count("|") != 1:
        raise SchemaError(f"branch key {key!r} must have the form 'x|y'")
    x, y = key.split("|")
    return x, y


def protocol_to_json(p: ProtocolInstance) -> dict:
    branches = {
        f"{x}|{y}": [{"t": b.label, "p": b.prob, "amp": encode_complex(b.state.amplitudes)} for b in brs]
        for (x, y), brs in p.branches.items()
    }
    measurements = {}
    for y, spec in p.measurements.items():
        if isinstance(spec, Measurement):
            measurements[y] = measurement_to_json(spec)
        else:
            measurements[y] = {"per_transcript": {t: measurement_to_json(m) for t, m in spec.items()}}
    return {"function": function_to_json(p.function), "layout": layout_to_json(p.layout),
            "alice": list(p.alice), "bob": list(p.bob), "branches": branches,
            "measurements": measurements}


def protocol_from_json(obj: dict) -> ProtocolInstance:
    _require(obj, "function", "layout", "branches", "measurements")
    f = function_from_json(obj["function"])
    layout = layout_from_json(obj["layout"])
    alice = tuple(obj.get("alice", ("A",)))
    bob = tuple(obj.get("bob", ("B",)))
    branches = {}
    for key, items in obj["branches"].items():
        brs = []
        for it in items:
            _require(it, "t", "p", "amp")
            try:
                brs.append(Branch(str(it["t"]), float(it["p"]), PureState(layout, decode_complex(it["amp"]))))
            except ValueError as e:
                raise SchemaError(f"branch {it['t']!r} of {key!r}: {e}") from None
        branches[_split_key(key)] = tuple(brs)
    measurements: dict[str, Any] = {}
    for y, spec in obj["measurements"].items():
        if isinstance(spec, dict) and "per_transcript" in spec:
            measurements[y] = {t: measurement_from_json(m, bob) for t, m in spec["per_transcript"].items()}
        else:
            measurements[y] = measurement_from_json(spec, bob)
    try:
        return ProtocolInstance(f, layout, branches, measurements, alice, bob)
    except ValueError as e:
        raise SchemaError(str(e)) from None


def dumps(obj: Any) -> str:
    """Deterministic JSON rendering (sorted keys, fixed indentation)."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def load_json(path: str) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON ({e})") from None


def rows_to_csv(rows: list[dict]) -> str:
    """Flatten a list of dicts (nested dicts become ``a.b`` columns) into CSV."""
    flat = [_flatten(r) for r in rows]
    cols: list[str] = []
    for r in flat:
        cols.extend(c for c in r if c not in cols)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in flat:
        w.writerow(r)
    return buf.getvalue()


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = json.dumps(v)
        else:
            out[key] = v
    return out

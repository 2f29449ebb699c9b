"""Canonical report serialization.

Floats are written with 12 significant digits, in lowercase scientific
notation when |x| < 1e-4 or |x| >= 1e6. Keys are sorted. Together these make
reports byte-identical across runs with the same scenario and seed.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .hilbert import DensityMatrix, StateVector
from .relational import MeasurementRecord, RelativeState


def format_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    if x == 0:
        return "0"
    if abs(x) < 1e-4 or abs(x) >= 1e6:
        return f"{x:.11e}"
    return f"{x:.12g}"


def canonical_json(obj, indent: int = 2) -> str:
    return _dump(obj, 0, indent) + "\n"


def _dump(obj, level: int, indent: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_dump(obj[k], level + 1, indent)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_dump(v, level + 1, indent) for v in obj) + "]"
        items = [pad + _dump(v, level + 1, indent) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# rounding noise below this is written as exact zero in state dumps
_NOISE = 1e-14


def complex_pairs(values) -> list:
    def clean(x):
        return 0.0 if abs(x) < _NOISE else float(x)

    return [[clean(np.real(v)), clean(np.imag(v))] for v in np.asarray(values).reshape(-1)]


def state_dump(state) -> dict:
    if isinstance(state, StateVector):
        return {"kind": "pure", "basis": list(state.basis_labels), "amplitudes": complex_pairs(state.amplitudes)}
    if isinstance(state, DensityMatrix):
        return {"kind": "mixed", "matrix": [complex_pairs(row) for row in state.entries]}
    raise TypeError(f"not a state: {type(state).__name__}")


def event_dump(event) -> dict:
    return {"t": event.t, "x": list(event.x)}


def ledger_dump(ledger) -> dict:
    out = {}
    for observer in ledger.observers:
        states, records = [], []
        for entry in ledger.timeline(observer):
            if isinstance(entry, RelativeState):
                states.append({"time": entry.time, "system": entry.system.name, **state_dump(entry.state)})
            elif isinstance(entry, MeasurementRecord):
                records.append({
                    "time": entry.time,
                    "system": entry.system.name,
                    "observable": entry.observable.label,
                    "outcome": entry.outcome,
                    "event": None if entry.event is None else event_dump(entry.event),
                })
        out[observer] = {"states": states, "records": records}
    return out

"""JSON schemas for operators, processes, instruments, D-POVMs, witnesses,
and certification results.  Matrices are stored as row-major re/im tables in
canonical factor order; round trips are exact to double precision."""

from __future__ import annotations

import json

import numpy as np

from . import hilbert as hb
from .certify import CertificationResult, WitnessFamily
from .cones import ConeSpec
from .dpovm import DPOVM
from .errors import InvalidParamError
from .hilbert import LabeledOperator, SpaceLabel
from .instruments import Instrument, POVM
from .processes import BIPARTITE, ProcessMatrix, ScenarioKind, TWO_PLUS_F, validate_process


def operator_to_dict(op: LabeledOperator) -> dict:
    return {
        "factors": [{"name": f.name, "dim": f.dim} for f in op.factors],
        "re": op.entries.real.tolist(),
        "im": op.entries.imag.tolist(),
    }


def operator_from_dict(data: dict) -> LabeledOperator:
    factors = [SpaceLabel(f["name"], int(f["dim"])) for f in data["factors"]]
    entries = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
    return hb.operator(factors, entries)


def kind_to_dict(kind: ScenarioKind) -> dict:
    dims = {"A_I": kind.d_ai, "A_O": kind.d_ao, "B_I": kind.d_bi, "B_O": kind.d_bo}
    if kind.variant == TWO_PLUS_F:
        dims["F"] = kind.d_f
    return {"variant": kind.variant, "dims": dims}


def kind_from_dict(data: dict) -> ScenarioKind:
    dims = data["dims"]
    if data["variant"] == BIPARTITE:
        return ScenarioKind(BIPARTITE, dims["A_I"], dims["A_O"], dims["B_I"], dims["B_O"])
    return ScenarioKind(TWO_PLUS_F, dims["A_I"], dims["A_O"], dims["B_I"], dims["B_O"], dims["F"])


def process_to_dict(process: ProcessMatrix) -> dict:
    return {"kind": kind_to_dict(process.kind), **operator_to_dict(process.W)}


def process_from_dict(data: dict, validate: bool = True) -> ProcessMatrix:
    kind = kind_from_dict(data["kind"])
    w = operator_from_dict(data)
    if validate:
        return validate_process(w, kind)
    return ProcessMatrix(kind, w)


def instrument_to_dict(instr: Instrument) -> dict:
    return {
        "role": instr.label,
        "factors_in": list(instr.in_names),
        "factors_out": list(instr.out_names),
        "elements": [operator_to_dict(e) for e in instr.elements],
    }


def instrument_from_dict(data: dict) -> Instrument:
    return Instrument(
        tuple(operator_from_dict(e) for e in data["elements"]),
        tuple(data["factors_in"]),
        tuple(data["factors_out"]),
        label=data.get("role", ""),
    )


def povm_to_dict(povm: POVM) -> dict:
    return {"role": povm.label, "elements": [operator_to_dict(e) for e in povm.elements]}


def povm_from_dict(data: dict) -> POVM:
    return POVM(tuple(operator_from_dict(e) for e in data["elements"]), label=data.get("role", ""))


_KEY_FIELDS = ("a", "b", "f", "y", "z")


def dpovm_to_dict(e: DPOVM) -> dict:
    elements = []
    for k in e.keys():
        entry = {name: None for name in _KEY_FIELDS}
        for name, value in zip(_KEY_FIELDS, k):
            entry[name] = int(value)
        entry["op"] = operator_to_dict(e.elements[k])
        elements.append(entry)
    return {"alice": list(e.alice), "bob": list(e.bob), "fiona": list(e.fiona),
            "elements": elements}


def dpovm_from_dict(data: dict) -> DPOVM:
    elements = {}
    for entry in data["elements"]:
        key = tuple(int(entry[name]) for name in _KEY_FIELDS if entry.get(name) is not None)
        elements[key] = operator_from_dict(entry["op"])
    return DPOVM(elements, tuple(data["alice"]), tuple(data["bob"]), tuple(data.get("fiona", ())))


def cone_to_dict(spec: ConeSpec) -> dict:
    return {
        "variant": spec.variant,
        "dims": list(spec.dims),
        "groups": {k: list(v) for k, v in spec.groups.items()},
        "counts": dict(spec.counts),
        "part_validity": spec.part_validity,
    }


def cone_from_dict(data: dict) -> ConeSpec:
    return ConeSpec(
        data["variant"],
        tuple(data["dims"]),
        {k: tuple(v) for k, v in data.get("groups", {}).items()},
        dict(data.get("counts", {})),
        bool(data.get("part_validity", True)),
    )


def witness_to_dict(witness: WitnessFamily) -> dict:
    elements = []
    for k in witness.keys():
        entry = {name: None for name in _KEY_FIELDS}
        for name, value in zip(_KEY_FIELDS, k):
            entry[name] = int(value)
        entry["op"] = operator_to_dict(witness.operators[k])
        elements.append(entry)
    return {"cone": cone_to_dict(witness.cone), "elements": elements}


def witness_from_dict(data: dict) -> WitnessFamily:
    spec = cone_from_dict(data["cone"])
    operators = {}
    for entry in data["elements"]:
        key = tuple(int(entry[name]) for name in _KEY_FIELDS if entry.get(name) is not None)
        operators[key] = operator_from_dict(entry["op"])
    return WitnessFamily(operators, spec)


def result_to_dict(result: CertificationResult) -> dict:
    return {
        "cone": result.cone,
        "robustness": result.robustness,
        "signed_robustness": result.signed_robustness,
        "verdict": result.verdict,
        "status": result.status,
        "duality_gap": result.duality_gap,
        "witness": None if result.witness is None else witness_to_dict(result.witness),
        "solve_time_ms": result.solve_time_s * 1e3,
    }


def dump(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh)


def load(path) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise InvalidParamError(f"{path}: expected a JSON object")
    return data

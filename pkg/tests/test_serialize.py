"""JSON round trips for operators, processes, instruments, D-POVMs,
witnesses, and certification results."""

import json

import numpy as np
import pytest

from causalcert import hilbert as hb
from causalcert import serialize as sz
from causalcert.certify import certify
from causalcert.dpovm import induce_dpovm
from causalcert.hilbert import SpaceLabel
from causalcert.instruments import qs_instruments
from causalcert.processes import feix_process, quantum_switch


def rand_op(rng, labels):
    d = int(np.prod([l.dim for l in labels]))
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return hb.operator(labels, (g + g.conj().T) / 2)


def test_operator_round_trip_exact():
    rng = np.random.default_rng(30)
    op = rand_op(rng, [SpaceLabel("A_I", 2), SpaceLabel("B_O", 3)])
    data = json.loads(json.dumps(sz.operator_to_dict(op)))
    back = sz.operator_from_dict(data)
    assert back.factors == op.factors
    assert np.abs(back.entries - op.entries).max() < 1e-15


def test_process_round_trip():
    for process in (quantum_switch(), feix_process(np.sqrt(3) - 1, 4 / np.sqrt(3) - 2)):
        data = json.loads(json.dumps(sz.process_to_dict(process)))
        back = sz.process_from_dict(data)
        assert back.kind == process.kind
        assert np.abs(back.W.entries - process.W.entries).max() < 1e-15


def test_instrument_and_povm_round_trip():
    alice, bob, fiona = qs_instruments()
    back = sz.instrument_from_dict(json.loads(json.dumps(sz.instrument_to_dict(alice))))
    assert back.in_names == alice.in_names and back.out_names == alice.out_names
    for e1, e2 in zip(back.elements, alice.elements):
        assert np.abs(e1.entries - e2.entries).max() < 1e-15
    fback = sz.povm_from_dict(json.loads(json.dumps(sz.povm_to_dict(fiona))))
    assert len(fback) == len(fiona)


def test_dpovm_round_trip_with_explicit_keys():
    alice, bob, fiona = qs_instruments()
    e = induce_dpovm(quantum_switch(), alice, bob, fiona)
    data = json.loads(json.dumps(sz.dpovm_to_dict(e)))
    entry = data["elements"][0]
    assert set(entry) == {"a", "b", "f", "y", "z", "op"}
    assert entry["y"] is None and entry["z"] is None
    back = sz.dpovm_from_dict(data)
    assert back.keys() == e.keys()
    for k in e.keys():
        assert np.abs(back.elements[k].entries - e.elements[k].entries).max() < 1e-15


def test_witness_and_result_round_trip():
    res = certify(feix_process(np.sqrt(3) - 1, 4 / np.sqrt(3) - 2))
    data = json.loads(json.dumps(sz.result_to_dict(res), default=float))
    assert data["cone"] == "process-bipartite"
    assert data["robustness"] == pytest.approx(res.robustness)
    assert data["solve_time_ms"] > 0
    back = sz.witness_from_dict(data["witness"])
    assert back.cone.variant == res.witness.cone.variant
    for k in res.witness.keys():
        assert np.abs(back.operators[k].entries - res.witness.operators[k].entries).max() < 1e-15

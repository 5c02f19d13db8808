"""Closed-form witness for the quantum-switch D-POVM.

The family pairs to -(sqrt(uv) - v) = -(2 - 2 sqrt(2/3)) against the switch
D-POVM and to exactly 1 against the uniform one, with u = (sqrt(6)+2)/3 and
v = sqrt(6)-2; it decomposes in both dual cones of the (2+F) D-POVM cone.
"""

from __future__ import annotations

import numpy as np

from . import hilbert as hb
from .certify import WitnessFamily
from .cones import ConeSpec

QS_U = (np.sqrt(6) + 2) / 3
QS_V = np.sqrt(6) - 2
QS_WITNESS_VALUE = -(2 - 2 * np.sqrt(2 / 3))


def quantum_switch_witness() -> WitnessFamily:
    """S_{a,b,f} on the qubit ancillas At (x) Bt, outcomes a, b in {0,1} and
    f in {+ -> 0, - -> 1}."""
    at, bt = hb.SpaceLabel("At", 2), hb.SpaceLabel("Bt", 2)
    factors = (at, bt)

    def basis(i, j):
        return hb.tensor_vec(hb.basis_ket(at, i), hb.basis_ket(bt, j))

    p01, p10, p00 = basis(0, 1).projector(), basis(1, 0).projector(), basis(0, 0).projector()
    cross = hb.operator(factors, np.outer(basis(0, 1).entries, basis(1, 0).entries.conj())
                        + np.outer(basis(1, 0).entries, basis(0, 1).entries.conj()))
    u, v = QS_U, QS_V
    suv = np.sqrt(u * v)
    ops = {}
    for f, sign in ((0, -1.0), (1, 1.0)):
        ops[(0, 0, f)] = u * (p01 + p10) + sign * suv * cross - (u - v) * p00
        ops[(0, 1, f)] = (u - v) * p01
        ops[(1, 0, f)] = (u - v) * p10
        ops[(1, 1, f)] = hb.operator(factors, np.zeros((4, 4)))
    spec = ConeSpec(
        "dpovm-2f",
        dims=(2, 2),
        groups={"alice": (0,), "bob": (1,), "fiona": ()},
        counts={"a": 2, "b": 2, "f": 2},
    )
    return WitnessFamily(ops, spec)

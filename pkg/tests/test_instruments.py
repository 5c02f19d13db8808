"""Instrument builders, MDCI structure checks, and tomographic input sets."""

import numpy as np
import pytest

from causalcert import hilbert as hb
from causalcert.errors import InvalidParamError, ValidationError
from causalcert.hilbert import SpaceLabel
from causalcert.instruments import (
    Instrument,
    classical_embedding,
    feix_instruments,
    instrument_report,
    mdci_check,
    povm_report,
    qs_bob_classical_instruments,
    qs_instruments,
    teleport_instruments,
    tomo_input_set,
    validate_instrument,
)
from causalcert.processes import bipartite_kind

AI = SpaceLabel("A_I", 2)
AO = SpaceLabel("A_O", 2)


class TestValidation:
    def test_identity_channel_instrument(self):
        _, choi = hb.max_entangled(AI, AO)
        instr = Instrument((choi,), ("A_I",), ("A_O",))
        assert instrument_report(instr).ok

    def test_qs_instruments_valid(self):
        alice, bob, fiona = qs_instruments()
        for instr in (alice, bob):
            rep = instrument_report(instr)
            assert rep.ok
            tp = [c for c in rep.checks if c.name == "trace-preserving"][0]
            assert tp.residual < 1e-12
        rep = povm_report(fiona)
        assert rep.ok
        total = fiona.elements[0] + fiona.elements[1]
        assert hb.allclose(total, hb.identity(fiona.factors), atol=1e-12)

    def test_scaled_elements_fail_tp(self):
        alice, _, _ = qs_instruments()
        halved = Instrument(tuple(0.5 * e for e in alice.elements), alice.in_names, alice.out_names)
        rep = instrument_report(halved)
        assert not rep.ok
        tp = [c for c in rep.checks if c.name == "trace-preserving"][0]
        assert tp.residual == pytest.approx(0.5, abs=1e-12)
        with pytest.raises(ValidationError):
            validate_instrument(halved)


class TestTeleport:
    def test_tp_and_mdci(self):
        alice, bob = teleport_instruments(bipartite_kind())
        for instr, split in ((alice, ("At_I", "At_O")), (bob, ("Bt_I", "Bt_O"))):
            rep = instrument_report(instr)
            assert rep.ok
            check = mdci_check(instr, split, product_form=True)
            assert check.marginal_residuals[0] < 1e-12
            assert check.product_distances[0] < 1e-12

    def test_element_zero_shape(self):
        alice, _ = teleport_instruments(bipartite_kind())
        el0 = alice.elements[0]
        # rank-1 projector (x) rank-1 projector, trace (d/d) * d = 2
        assert el0.trace().real == pytest.approx(2.0)
        assert np.linalg.matrix_rank(el0.entries, tol=1e-10) == 1


class TestQsAlice:
    def test_mdci_with_trivial_tilde_in(self):
        # Eq.-(9)-style Alice is measurement (x) identity channel: the whole
        # ancilla plays the tilde-out role, the tilde-in is trivial
        alice, _, _ = qs_instruments()
        check = mdci_check(alice, ("aux_trivial", "At"))
        assert max(check.marginal_residuals) < 1e-12


class TestMdciCounterexample:
    def test_entangled_projector_fails(self):
        # projection onto the maximally entangled state of the full ancilla
        # (At_I At_O merged) with A_I: violates the marginal factorization
        at = SpaceLabel("At", 4)
        a_i = SpaceLabel("A_I", 4)
        _, ent = hb.max_entangled(at, a_i)
        m0 = ent / 4
        rest = hb.identity([at, a_i]) - m0
        instr = Instrument((m0, rest), ("At", "A_I"), ())
        # reinterpret the 4-dim ancilla as At_I (x) At_O for the check
        els = tuple(
            hb.operator([SpaceLabel("At_I", 2), SpaceLabel("At_O", 2), SpaceLabel("A_I", 4)], e.entries)
            for e in instr.elements
        )
        instr2 = Instrument(els, ("At_I", "At_O", "A_I"), ())
        check = mdci_check(instr2, ("At_I", "At_O"))
        assert check.marginal_residuals[0] >= 0.25

    def test_report_only_no_raise(self):
        alice, _, _ = qs_instruments()
        check = mdci_check(alice, ("aux", "At"))
        assert check.ok


class TestFeixInstruments:
    def test_valid_at_default_xi(self):
        alice, bob = feix_instruments(0.01)
        assert instrument_report(alice).ok
        rep = instrument_report(bob)
        assert rep.ok
        tp = [c for c in rep.checks if c.name == "trace-preserving"][0]
        assert tp.residual < 1e-12

    def test_psi_normalized(self):
        xi = 0.37
        sq2 = 1 / np.sqrt(2)
        bt_i, b_i = SpaceLabel("Bt_I", 2), SpaceLabel("B_I", 2)
        psi = (hb.tensor_vec(hb.ket(bt_i, [sq2, sq2]), hb.ket(b_i, [sq2, sq2]))
               + xi * hb.tensor_vec(hb.ket(bt_i, [sq2, -sq2]), hb.basis_ket(b_i, 0))) \
            * (1 / np.sqrt(1 + xi ** 2))
        assert psi.inner(psi).real == pytest.approx(1.0, abs=1e-12)

    def test_xi_zero_still_valid(self):
        alice, bob = feix_instruments(0.0)
        assert instrument_report(bob).ok

    def test_qs_bob_classical_pairs(self):
        for instr in qs_bob_classical_instruments():
            assert instrument_report(instr).ok


class TestClassicalEmbedding:
    def _projective(self, basis):
        els = tuple(
            hb.tensor(v.projector(), hb.basis_ket(AO, i).projector())
            for i, v in enumerate(basis)
        )
        return Instrument(els, ("A_I",), ("A_O",))

    def test_single_family_block(self):
        fam = self._projective([hb.basis_ket(AI, 0), hb.basis_ket(AI, 1)])
        merged = classical_embedding([fam])
        assert instrument_report(merged).ok
        assert merged.elements[0].factor("At").dim == 1

    def test_two_families_tp(self):
        sq2 = 1 / np.sqrt(2)
        fam0 = self._projective([hb.basis_ket(AI, 0), hb.basis_ket(AI, 1)])
        fam1 = self._projective([hb.ket(AI, [sq2, sq2]), hb.ket(AI, [sq2, -sq2])])
        merged = classical_embedding([fam0, fam1])
        rep = instrument_report(merged)
        assert rep.ok
        tp = [c for c in rep.checks if c.name == "trace-preserving"][0]
        assert tp.residual < 1e-12
        assert merged.elements[0].factor("At").dim == 2

    def test_mismatched_outcomes_rejected(self):
        fam0 = self._projective([hb.basis_ket(AI, 0), hb.basis_ket(AI, 1)])
        solo = Instrument((fam0.total(),), ("A_I",), ("A_O",))
        with pytest.raises(InvalidParamError):
            classical_embedding([fam0, solo])


class TestTomoInputs:
    def test_qubit_quartet(self):
        qs = tomo_input_set(2)
        assert len(qs.states) == 4
        expected = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
        assert np.allclose(qs.states[0].entries, expected[0])
        assert np.allclose(qs.states[1].entries, expected[1])

    def test_frame_identity_on_pauli_basis(self):
        qs = tomo_input_set(2)
        paulis = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]),
                  np.diag([1, -1])]
        for p in paulis:
            sigma = hb.operator([qs.factor], p)
            coeffs = qs.coefficients(sigma)
            rebuilt = sum(c * s.entries for c, s in zip(coeffs, qs.states))
            assert np.abs(rebuilt - p).max() < 1e-12

    def test_dim_four_products(self):
        qs = tomo_input_set(4)
        assert len(qs.states) == 16
        rng = np.random.default_rng(8)
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        sigma = hb.operator([qs.factor], (g + g.conj().T) / 2)
        coeffs = qs.coefficients(sigma)
        rebuilt = sum(c * s.entries for c, s in zip(coeffs, qs.states))
        assert np.abs(rebuilt - sigma.entries).max() < 1e-10

    def test_dim_below_two_rejected(self):
        with pytest.raises(InvalidParamError):
            tomo_input_set(1)

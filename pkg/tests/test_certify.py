"""Certification engine: cone soundness, duality, witness checks, scans."""

import numpy as np
import pytest

from causalcert import hilbert as hb
from causalcert.certify import apply_witness, certify, verify_witness
from causalcert.cones import uniform_noise
from causalcert.dpovm import DPOVM, induce_dpovm, ttu_assemblage, tuu_assemblage
from causalcert.errors import InvalidBracketError, NotAWitnessError
from causalcert.hilbert import SpaceLabel
from causalcert.instruments import (
    qs_bob_classical_instruments,
    qs_instruments,
    teleport_instruments,
)
from causalcert.processes import (
    bipartite_kind,
    certify_process,
    depolarized_switch,
    feix_process,
    quantum_switch,
    white_noise_process,
)
from causalcert.sampling import (
    random_instrument,
    random_ordered_process,
    random_separable_process,
)
from causalcert.scan import threshold_scan
from causalcert.witnesses import QS_WITNESS_VALUE, quantum_switch_witness

AT, BT = SpaceLabel("At", 2), SpaceLabel("Bt", 2)
FEIX_Q, FEIX_EPS = np.sqrt(3) - 1, 4 / np.sqrt(3) - 2


def ordered_dpovm(rng, first="A"):
    w = random_ordered_process(rng, bipartite_kind(), first)
    alice = random_instrument(rng, [AT], [w.W.factor("A_I")], [w.W.factor("A_O")])
    bob = random_instrument(rng, [BT], [w.W.factor("B_I")], [w.W.factor("B_O")])
    return induce_dpovm(w, alice, bob)


class TestSoundness:
    def test_separable_dpovm_mixture_inside(self):
        rng = np.random.default_rng(20)
        for _ in range(3):
            e1, e2 = ordered_dpovm(rng, "A"), ordered_dpovm(rng, "B")
            q = float(rng.uniform())
            mixed = DPOVM({k: q * e1.elements[k] + (1 - q) * e2.elements[k] for k in e1.keys()},
                          ("At",), ("Bt",))
            res = certify(mixed)
            assert res.robustness <= 1e-6

    def test_qs_dpovm_robustness(self):
        alice, bob, fiona = qs_instruments()
        e = induce_dpovm(quantum_switch(), alice, bob, fiona)
        res = certify(e)
        assert res.robustness == pytest.approx(2 - 2 * np.sqrt(2 / 3), abs=1e-4)
        assert res.verdict == "noncausal"
        assert res.duality_gap < 1e-6
        assert verify_witness(res.witness, noise=uniform_noise(res.witness.cone)).ok

    def test_extracted_witness_matches_duality(self):
        alice, bob, fiona = qs_instruments()
        e = induce_dpovm(depolarized_switch(0.1), alice, bob, fiona)
        res = certify(e)
        assert abs(res.signed_robustness + apply_witness(res.witness, e)) < 1e-6


class TestMdciElement:
    def _teleported(self, process):
        alice, bob = teleport_instruments(process.kind)
        e = induce_dpovm(process, alice, bob)
        return e.elements[(0, 0)]

    def _noise_element(self):
        return self._teleported(white_noise_process(bipartite_kind()))

    def test_separable_inside(self):
        rng = np.random.default_rng(21)
        w, _ = random_separable_process(rng, bipartite_kind())
        res = certify(self._teleported(w), noise={(): self._noise_element()})
        assert res.robustness <= 1e-6

    def test_feix_outside_with_process_robustness(self):
        w = feix_process(FEIX_Q, FEIX_EPS)
        res = certify(self._teleported(w), noise={(): self._noise_element()})
        # the teleported-element robustness reproduces the process-level value
        assert res.robustness == pytest.approx(FEIX_EPS, abs=1e-4)

    def test_verify_direct_eig_sides(self):
        w = feix_process(FEIX_Q, FEIX_EPS)
        res = certify(self._teleported(w), noise={(): self._noise_element()})
        report = verify_witness(res.witness)
        assert report.ok

    def test_every_element_inherits_separability(self):
        # MDCI instruments on a separable process put all four elements in
        # the single-element cone, not just the teleporting one
        rng = np.random.default_rng(22)
        w, _ = random_separable_process(rng, bipartite_kind())
        alice, bob = teleport_instruments(w.kind)
        e = induce_dpovm(w, alice, bob)
        for k in e.keys():
            res = certify(e.elements[k], noise={(): self._noise_element()})
            assert res.robustness <= 1e-6, (k, res.robustness)


class TestAssemblageCones:
    def test_ttu_value(self):
        _, _, fiona = qs_instruments()
        res = certify(ttu_assemblage(quantum_switch(), [fiona]))
        assert res.robustness == pytest.approx(1.3186, abs=2e-3)
        assert verify_witness(res.witness).ok

    def test_tuu_value(self):
        _, _, fiona = qs_instruments()
        asm = tuu_assemblage(quantum_switch(), list(qs_bob_classical_instruments()), [fiona])
        res = certify(asm)
        assert res.robustness == pytest.approx(0.1935, abs=2e-3)
        assert verify_witness(res.witness).ok

    def test_ttu_separable_inside(self):
        _, _, fiona = qs_instruments()
        res = certify(ttu_assemblage(depolarized_switch(1.6), [fiona]))
        assert res.robustness <= 1e-6
        assert res.verdict == "separable"


class TestHandCodedWitness:
    def test_verifies_in_both_dual_cones(self):
        witness = quantum_switch_witness()
        report = verify_witness(witness, noise=uniform_noise(witness.cone))
        assert report.ok
        assert set(report.sides) == {"alice-first", "bob-first"}
        assert report.normalization == pytest.approx(1.0, abs=1e-10)

    def test_values_against_dpovm_and_noise(self):
        witness = quantum_switch_witness()
        alice, bob, fiona = qs_instruments()
        e = induce_dpovm(quantum_switch(), alice, bob, fiona)
        assert apply_witness(witness, e) == pytest.approx(QS_WITNESS_VALUE, abs=1e-10)
        assert apply_witness(witness, uniform_noise(witness.cone)) == pytest.approx(1.0, abs=1e-10)

    def test_broken_witness_detected(self):
        witness = quantum_switch_witness()
        bad_ops = dict(witness.operators)
        bad_ops[(1, 1, 0)] = -1.0 * hb.identity([AT, BT])
        from causalcert.certify import WitnessFamily

        bad = WitnessFamily(bad_ops, witness.cone)
        report = verify_witness(bad)
        assert not report.ok
        with pytest.raises(NotAWitnessError):
            verify_witness(bad, require=True)


class TestProcessWitness:
    def test_process_witness_verifies(self):
        res = certify_process(feix_process(FEIX_Q, FEIX_EPS))
        report = verify_witness(res.witness)
        assert report.ok

    def test_2f_process_witness_verifies(self):
        res = certify_process(quantum_switch())
        report = verify_witness(res.witness)
        assert report.ok
        assert abs(res.signed_robustness + apply_witness(res.witness, quantum_switch())) < 1e-6


class TestScan:
    def test_invalid_bracket(self):
        with pytest.raises(InvalidBracketError):
            threshold_scan(lambda r: depolarized_switch(r), 1.7, 1.9)
        with pytest.raises(InvalidBracketError):
            threshold_scan(lambda r: depolarized_switch(r), 1.3, 1.45)

    def test_scan_probe_log(self):
        # coarse width keeps this quick; the tight scans live in acceptance
        result = threshold_scan(lambda r: depolarized_switch(r), 1.4, 1.7, width=0.05)
        assert 1.5 < result.threshold < 1.65
        assert len(result.probes) >= 4
        rs = [p.r for p in result.probes]
        assert rs[0] == 1.4 and rs[1] == 1.7

"""Acceptance suite: every headline number and property, at its stated
tolerance, printed one line per criterion.

Run with `pytest -v tests/test_acceptance.py` (add -s to stream the lines).
"""

import time

import numpy as np
import pytest

from causalcert import hilbert as hb
from causalcert.certify import apply_witness, certify, verify_witness
from causalcert.cones import uniform_noise
from causalcert.dpovm import (
    DPOVM,
    correlations,
    induce_dpovm,
    realize_separable_dpovm,
    witness_value_from_correlations,
)
from causalcert.hilbert import SpaceLabel
from causalcert.instruments import (
    feix_instruments,
    qs_instruments,
    teleport_instruments,
    tomo_input_set,
)
from causalcert.processes import (
    bipartite_kind,
    certify_process,
    feix_process,
    two_plus_f_kind,
    quantum_switch,
    white_noise_process,
)
from causalcert.sampling import (
    random_instrument,
    random_nonseparable_process,
    random_ordered_process,
    random_povm,
    random_separable_process,
    random_valid_process,
)
from causalcert.scenarios import get_scenario
from causalcert.witnesses import QS_WITNESS_VALUE, quantum_switch_witness

AT, BT = SpaceLabel("At", 2), SpaceLabel("Bt", 2)
FEIX_Q, FEIX_EPS = np.sqrt(3) - 1, 4 / np.sqrt(3) - 2


def report(n, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def scans():
    """One bisection per named scenario, shared across criteria 1, 3, 4, 5."""
    out = {}
    for name in ("qs-sdiqi", "feix-sdiqi", "qs-dd", "qs-ttu", "qs-tuu"):
        t0 = time.perf_counter()
        out[name] = get_scenario(name).scan()
        out[name + "/seconds"] = time.perf_counter() - t0
    return out


def test_criterion_1_qs_sdiqi_threshold(scans):
    expected = 2 - 2 * np.sqrt(2 / 3)
    got = scans["qs-sdiqi"].threshold
    secs = scans["qs-sdiqi/seconds"]
    ok = abs(got - expected) <= 0.002 and secs < 120
    report(1, ok, f"QS SDI-QI threshold {got:.5f} vs {expected:.5f} (+-0.002), {secs:.0f}s")


def test_criterion_2_explicit_witness():
    witness = quantum_switch_witness()
    check = verify_witness(witness, noise=uniform_noise(witness.cone))
    alice, bob, fiona = qs_instruments()
    e_qs = induce_dpovm(quantum_switch(), alice, bob, fiona)
    v_qs = apply_witness(witness, e_qs)
    v_noise = apply_witness(witness, uniform_noise(witness.cone))
    ok = (
        check.ok
        and abs(v_qs - QS_WITNESS_VALUE) <= 1e-8
        and abs(v_noise - 1.0) <= 1e-8
    )
    report(2, ok, f"S_QS*E_QS = {v_qs:.9f} (target {QS_WITNESS_VALUE:.9f}), "
                  f"S_QS*E_noise = {v_noise:.9f}, dual-cone margins "
                  + ", ".join(f"{k}: {v:+.1e}" for k, v in check.sides.items()))


def test_criterion_3_feix(scans):
    t0 = time.perf_counter()
    dd = certify_process(feix_process(FEIX_Q, FEIX_EPS))
    got_thr = scans["feix-sdiqi"].threshold
    alice0, bob0 = feix_instruments(0.0)
    sep = certify(induce_dpovm(feix_process(FEIX_Q, FEIX_EPS), alice0, bob0),
                  feas_tol=1e-10, margin=1e-8)
    secs = time.perf_counter() - t0 + scans["feix-sdiqi/seconds"]
    ok = (
        abs(dd.robustness - FEIX_EPS) <= 1e-3
        and abs(got_thr - 0.113) <= 0.003
        and sep.robustness <= 1e-6
        and secs < 300
    )
    report(3, ok, f"Feix DD robustness {dd.robustness:.5f} vs {FEIX_EPS:.5f} (+-1e-3), "
                  f"SDI-QI threshold {got_thr:.4f} vs 0.113 (+-0.003), "
                  f"xi=0 robustness {sep.robustness:.1e} <= 1e-6, {secs:.0f}s")


def test_criterion_4_switch_device_dependent(scans):
    got = scans["qs-dd"].threshold
    secs = scans["qs-dd/seconds"]
    ok = abs(got - 1.576) <= 0.01 and secs < 300
    report(4, ok, f"device-dependent switch threshold {got:.4f} vs 1.576 (+-0.01), {secs:.0f}s")


def test_criterion_5_ttu_tuu(scans):
    ttu, tuu, dd = (scans[k].threshold for k in ("qs-ttu", "qs-tuu", "qs-dd"))
    ok = (
        abs(ttu - 1.319) <= 0.01
        and abs(tuu - 0.194) <= 0.01
        and tuu <= ttu <= dd
    )
    report(5, ok, f"TTU {ttu:.4f} vs 1.319, TUU {tuu:.4f} vs 0.194, "
                  f"ordering {tuu:.3f} <= {ttu:.3f} <= {dd:.3f}")


def test_criterion_6_mdci_teleport_soundness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    kind = bipartite_kind()
    alice, bob = teleport_instruments(kind)
    noise_el = induce_dpovm(white_noise_process(kind), alice, bob).elements[(0, 0)]

    def teleported_robustness(w):
        el = induce_dpovm(w, alice, bob).elements[(0, 0)]
        return certify(el, noise={(): noise_el}).robustness

    inside_max = 0.0
    for _ in range(50):
        w, _ = random_separable_process(rng, kind)
        inside_max = max(inside_max, teleported_robustness(w))
    outside_min = np.inf
    for _ in range(20):
        w, _ = random_nonseparable_process(rng)
        outside_min = min(outside_min, teleported_robustness(w))
    secs = time.perf_counter() - t0
    ok = inside_max <= 1e-6 and outside_min > 1e-6 and secs < 600
    report(6, ok, f"50 separable: max element robustness {inside_max:.2e} <= 1e-6; "
                  f"20 nonseparable: min {outside_min:.2e} > 1e-6; {secs:.0f}s")


def test_criterion_7_algebra_invariants():
    rng = np.random.default_rng(7)
    ai, ao, bi = SpaceLabel("A_I", 2), SpaceLabel("A_O", 2), SpaceLabel("B_I", 2)

    def herm(labels):
        d = int(np.prod([l.dim for l in labels]))
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        return hb.operator(labels, (g + g.conj().T) / 2)

    def psd(labels):
        d = int(np.prod([l.dim for l in labels]))
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        return hb.operator(labels, g @ g.conj().T / d)

    worst = {"commute": 0.0, "assoc": 0.0, "psd": 0.0, "ptrace": 0.0, "replace": 0.0}
    for _ in range(1000):
        m, n = herm([ai, ao]), herm([ao, bi])
        worst["commute"] = max(worst["commute"],
                               (hb.link_product(m, n) - hb.link_product(n, m)).max_abs())
        p, q, s = psd([ai, ao]), psd([ao, bi]), psd([bi])
        lhs = hb.link_product(hb.link_product(p, q), s)
        rhs = hb.link_product(p, hb.link_product(q, s))
        worst["assoc"] = max(worst["assoc"], (lhs - rhs).max_abs())
        lam = np.linalg.eigvalsh(hb.link_product(p, q).entries).min()
        worst["psd"] = max(worst["psd"], max(0.0, -float(lam)))
        a, b = herm([ai]), herm([bi])
        worst["ptrace"] = max(worst["ptrace"],
                              (hb.partial_trace(hb.tensor(a, b), ["B_I"]) - a * b.trace()).max_abs())
        m3 = herm([ai, ao, bi])
        r1 = hb.trace_replace(m3, ["A_O", "B_I"])
        worst["replace"] = max(worst["replace"], (hb.trace_replace(r1, ["A_O", "B_I"]) - r1).max_abs(),
                               abs(r1.trace() - m3.trace()))
    ok = max(worst.values()) < 1e-10
    report(7, ok, "1000 randomized cases each; worst residuals "
                  + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()))


def test_criterion_8_induced_dpovm_always_valid():
    rng = np.random.default_rng(8)
    worst = 0.0
    for i in range(200):
        if i % 2 == 0:
            kind = bipartite_kind()
            w = random_valid_process(rng, kind)
            fiona = None
        else:
            kind = two_plus_f_kind()
            w = random_valid_process(rng, kind)
            fiona = random_povm(rng, w.W.factor("F"), n_outcomes=2)
        alice = random_instrument(rng, [AT], [w.W.factor("A_I")], [w.W.factor("A_O")])
        bob = random_instrument(rng, [BT], [w.W.factor("B_I")], [w.W.factor("B_O")])
        e = induce_dpovm(w, alice, bob, fiona)
        worst = max(worst, (e.total() - hb.identity(e.factors)).max_abs())
    ok = worst < 1e-10
    report(8, ok, f"200 random (process, instruments) pairs; worst identity residual {worst:.2e}")


def test_criterion_9_realization_round_trip():
    rng = np.random.default_rng(9)
    kind = bipartite_kind()
    worst = 0.0
    for _ in range(50):
        parts = []
        for first in ("A", "B"):
            w = random_ordered_process(rng, kind, first)
            alice = random_instrument(rng, [AT], [w.W.factor("A_I")], [w.W.factor("A_O")])
            bob = random_instrument(rng, [BT], [w.W.factor("B_I")], [w.W.factor("B_O")])
            parts.append(induce_dpovm(w, alice, bob))
        part_ab, part_ba = parts
        q = float(rng.uniform())
        mixed = DPOVM({k: q * part_ab.elements[k] + (1 - q) * part_ba.elements[k]
                       for k in part_ab.keys()}, ("At",), ("Bt",))
        process, alice, bob = realize_separable_dpovm(mixed, q, part_ab, part_ba)
        back = induce_dpovm(process, alice, bob)
        worst = max(worst, max((back.elements[k] - mixed.elements[k]).max_abs()
                               for k in mixed.keys()))
    ok = worst < 1e-8
    report(9, ok, f"50 realizations re-induced; worst element deviation {worst:.2e}")


def test_criterion_10_witness_from_correlations():
    alice, bob, fiona = qs_instruments()
    e = induce_dpovm(quantum_switch(), alice, bob, fiona)
    witness = quantum_switch_witness()
    a_in, b_in = tomo_input_set(2, "At"), tomo_input_set(2, "Bt")
    table = correlations(e, a_in, b_in)
    reconstructed = witness_value_from_correlations(witness, a_in, b_in, table)
    direct = apply_witness(witness, e)
    ok = abs(reconstructed - direct) <= 1e-6 and abs(reconstructed + 0.36700) <= 1e-4
    report(10, ok, f"witness value via dual frames {reconstructed:.7f} vs direct {direct:.7f}")

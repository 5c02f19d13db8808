"""Named certification scenarios reproducing the reference thresholds.

Each scenario fixes a depolarization family, the cone to test against, the
bisection bracket, and the expected threshold with its tolerance, so the
command line can run them with zero input files.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .certify import apply_witness, certify
from .cones import uniform_noise
from .dpovm import induce_dpovm, ttu_assemblage, tuu_assemblage
from .errors import InvalidParamError
from .instruments import (
    feix_instruments,
    instrument_report,
    povm_report,
    qs_bob_classical_instruments,
    qs_instruments,
)
from .processes import (
    ScenarioParams,
    depolarized_switch,
    feix_process,
    process_report,
    quantum_switch,
)
from .scan import ScanResult, threshold_scan
from .witnesses import QS_WITNESS_VALUE, quantum_switch_witness


@dataclass(frozen=True)
class Scenario:
    name: str
    summary: str
    reference_threshold: float
    tolerance: float
    bracket: tuple[float, float]
    build: Callable
    margin: float = 1e-6
    feas_tol: float | None = None

    def object_at(self, r: float, params: ScenarioParams):
        return self.build(r, params)

    def scan(self, params: ScenarioParams | None = None, *, r_lo=None, r_hi=None,
             solver=None, feas_tol=None, width=1e-3) -> ScanResult:
        params = params or ScenarioParams()
        lo = self.bracket[0] if r_lo is None else r_lo
        hi = self.bracket[1] if r_hi is None else r_hi
        return threshold_scan(lambda r: self.build(r, params), lo, hi,
                              margin=self.margin, width=width, solver=solver,
                              feas_tol=self.feas_tol if feas_tol is None else feas_tol)

    def certify_at(self, r: float, params: ScenarioParams | None = None, *,
                   solver=None, feas_tol=None):
        params = params or ScenarioParams()
        return certify(self.build(r, params), margin=self.margin, solver=solver,
                       feas_tol=self.feas_tol if feas_tol is None else feas_tol)


def _qs_sdiqi(r, params):
    alice, bob, fiona = qs_instruments()
    return induce_dpovm(depolarized_switch(r), alice, bob, fiona)


def _qs_ttu(r, params):
    _, _, fiona = qs_instruments()
    return ttu_assemblage(depolarized_switch(r), [fiona])


def _qs_tuu(r, params):
    _, _, fiona = qs_instruments()
    return tuu_assemblage(depolarized_switch(r), list(qs_bob_classical_instruments()), [fiona])


def _qs_dd(r, params):
    return depolarized_switch(r)


def _feix_process(params):
    return feix_process(params.q, params.epsilon)


def _feix_sdiqi(r, params):
    alice, bob = feix_instruments(params.xi)
    return induce_dpovm(_feix_process(params).depolarize(r), alice, bob)


def _feix_dd(r, params):
    return _feix_process(params).depolarize(r)


SCENARIOS = {
    s.name: s
    for s in (
        Scenario(
            "qs-sdiqi",
            "quantum switch, trusted quantum inputs (D-POVM cone)",
            reference_threshold=2 - 2 * np.sqrt(2 / 3), tolerance=0.002,
            bracket=(0.0, 0.9), build=_qs_sdiqi,
        ),
        Scenario(
            "qs-ttu",
            "depolarized switch, untrusted Fiona (TTU assemblage cone)",
            reference_threshold=1.319, tolerance=0.01,
            bracket=(1.0, 1.7), build=_qs_ttu,
        ),
        Scenario(
            "qs-tuu",
            "depolarized switch, untrusted Bob and Fiona (TUU assemblage cone)",
            reference_threshold=0.194, tolerance=0.01,
            bracket=(0.0, 0.6), build=_qs_tuu,
        ),
        Scenario(
            "qs-dd",
            "depolarized switch, device-dependent process certification",
            reference_threshold=1.576, tolerance=0.01,
            bracket=(1.3, 1.9), build=_qs_dd,
        ),
        Scenario(
            "feix-sdiqi",
            "Feix process with trusted quantum inputs (D-POVM cone)",
            reference_threshold=0.113, tolerance=0.003,
            bracket=(0.0, 0.4), build=_feix_sdiqi,
            # the xi ~ 0.01 family violates causality at the 1e-5 scale, so
            # the probe margin and solver tolerance must sit well below that
            margin=1e-8, feas_tol=1e-10,
        ),
        Scenario(
            "feix-dd",
            "Feix process, device-dependent process certification",
            reference_threshold=4 / np.sqrt(3) - 2, tolerance=0.002,
            bracket=(0.0, 0.6), build=_feix_dd,
        ),
    )
}

SCENARIO_ORDER = ("qs-sdiqi", "feix-sdiqi", "qs-dd", "qs-ttu", "qs-tuu", "feix-dd")


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise InvalidParamError(
            f"unknown scenario {name!r}; known: {', '.join(sorted(SCENARIOS))}") from None


def scenario_reports(name: str, params: ScenarioParams) -> list:
    """Validation reports for every component a scenario touches."""
    reports = []
    if name.startswith("qs"):
        reports.append(process_report(quantum_switch().W, quantum_switch().kind))
        alice, bob, fiona = qs_instruments()
        reports += [instrument_report(alice), instrument_report(bob), povm_report(fiona)]
        if name == "qs-tuu":
            reports += [instrument_report(i) for i in qs_bob_classical_instruments()]
    else:
        proc = _feix_process(params)
        reports.append(process_report(proc.W, proc.kind))
        if name == "feix-sdiqi":
            alice, bob = feix_instruments(params.xi)
            reports += [instrument_report(alice), instrument_report(bob)]
    return reports


@dataclass(frozen=True)
class ReproduceRow:
    name: str
    computed: float
    expected: float
    tolerance: float
    seconds: float

    @property
    def passed(self) -> bool:
        return abs(self.computed - self.expected) <= self.tolerance


def reproduce_row(name: str, solver: str | None = None) -> ReproduceRow:
    """One row of the reproduction table: a threshold scan or witness value."""
    import time

    t0 = time.perf_counter()
    if name == "witness*dpovm":
        witness = quantum_switch_witness()
        alice, bob, fiona = qs_instruments()
        value = apply_witness(witness, induce_dpovm(quantum_switch(), alice, bob, fiona))
        return ReproduceRow(name, value, QS_WITNESS_VALUE, 1e-6, time.perf_counter() - t0)
    if name == "witness*noise":
        witness = quantum_switch_witness()
        noise = uniform_noise(witness.cone)
        value = apply_witness(witness, noise)
        return ReproduceRow(name, value, 1.0, 1e-6, time.perf_counter() - t0)
    scenario = get_scenario(name)
    result = scenario.scan(solver=solver)
    return ReproduceRow(name, result.threshold, scenario.reference_threshold,
                        scenario.tolerance, time.perf_counter() - t0)


REPRODUCE_ROWS = SCENARIO_ORDER + ("witness*dpovm", "witness*noise")


def run_reproduce(jobs: int = 1, solver: str | None = None) -> list[ReproduceRow]:
    if jobs <= 1:
        return [reproduce_row(name, solver) for name in REPRODUCE_ROWS]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(reproduce_row, name, solver) for name in REPRODUCE_ROWS]
        return [f.result() for f in futures]

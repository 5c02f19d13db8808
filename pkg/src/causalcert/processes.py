"""Process matrices: scenario kinds, validity checks, and named constructors.

Validity of a bipartite W on A_I A_O B_I B_O requires PSD, trace d_AO*d_BO,
and vanishing of three trace-replace combinations; the (2+F)-partite variant
appends Fiona's input space F (no output) and conditions every combination on
a prior trace-replace over F.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hilbert as hb
from .errors import InvalidParamError, ValidationError
from .hilbert import LabeledOperator, SpaceLabel

TRACE_TOL = 1e-9
CONSTRAINT_TOL = 1e-9

BIPARTITE = "bipartite"
TWO_PLUS_F = "two_plus_f"

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class ScenarioKind:
    """Bipartite (A, B) or (2+F)-partite (A, B plus Fiona's input F)."""

    variant: str
    d_ai: int = 2
    d_ao: int = 2
    d_bi: int = 2
    d_bo: int = 2
    d_f: int | None = None

    def __post_init__(self):
        if self.variant not in (BIPARTITE, TWO_PLUS_F):
            raise InvalidParamError(f"unknown scenario variant {self.variant!r}")
        if (self.variant == TWO_PLUS_F) != (self.d_f is not None):
            raise InvalidParamError("d_f must be given exactly for the two_plus_f variant")
        for d in (self.d_ai, self.d_ao, self.d_bi, self.d_bo) + ((self.d_f,) if self.d_f else ()):
            if d < 1:
                raise InvalidParamError("all dims must be >= 1")

    def factors(self) -> tuple[SpaceLabel, ...]:
        base = (
            SpaceLabel("A_I", self.d_ai),
            SpaceLabel("A_O", self.d_ao),
            SpaceLabel("B_I", self.d_bi),
            SpaceLabel("B_O", self.d_bo),
        )
        if self.variant == TWO_PLUS_F:
            base = base + (SpaceLabel("F", self.d_f),)
        return base

    @property
    def output_dim(self) -> int:
        return self.d_ao * self.d_bo


def bipartite_kind(d_ai=2, d_ao=2, d_bi=2, d_bo=2) -> ScenarioKind:
    return ScenarioKind(BIPARTITE, d_ai, d_ao, d_bi, d_bo)


def two_plus_f_kind(d_ai=2, d_ao=2, d_bi=2, d_bo=2, d_f=2) -> ScenarioKind:
    return ScenarioKind(TWO_PLUS_F, d_ai, d_ao, d_bi, d_bo, d_f)


@dataclass(frozen=True)
class ScenarioParams:
    """Noise/shape parameters for the named process families."""

    q: float = np.sqrt(3) - 1
    epsilon: float = 4 / np.sqrt(3) - 2
    r: float = 0.0
    xi: float = 0.01

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise InvalidParamError(f"q={self.q} outside [0, 1]")
        if self.r < 0.0:
            raise InvalidParamError(f"r={self.r} must be >= 0")
        bound = np.sqrt((1 - self.q) * (self.q + 3) / 3)
        if abs(1 - self.q + self.epsilon) > bound + 1e-12:
            raise InvalidParamError(
                f"|1-q+eps| = {abs(1 - self.q + self.epsilon):.6f} exceeds PSD bound {bound:.6f}"
            )


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.residual <= self.tol

    def __str__(self):
        flag = "ok " if self.ok else "FAIL"
        return f"[{flag}] {self.name}: residual {self.residual:.3e} (tol {self.tol:g})"


@dataclass(frozen=True)
class ValidationReport:
    subject: str
    checks: tuple[CheckResult, ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.ok]

    def __str__(self):
        lines = [f"{self.subject}: {'valid' if self.ok else 'INVALID'}"]
        lines += [f"  {c}" for c in self.checks]
        return "\n".join(lines)


@dataclass(frozen=True)
class ProcessMatrix:
    kind: ScenarioKind
    W: LabeledOperator

    @property
    def dim(self) -> int:
        return self.W.dim

    def depolarize(self, r: float) -> "ProcessMatrix":
        """(W + r * white noise) / (1 + r)."""
        if r < 0:
            raise InvalidParamError(f"r={r} must be >= 0")
        noise = white_noise_process(self.kind)
        return ProcessMatrix(self.kind, (self.W + r * noise.W) / (1 + r))


def _projective_checks(w: LabeledOperator, kind: ScenarioKind) -> list[CheckResult]:
    def lv(m, over):
        return hb.trace_replace(m, over)

    if kind.variant == BIPARTITE:
        combos = {
            "[1-A_O]B": lv(w, ["B_I", "B_O"]) - lv(w, ["A_O", "B_I", "B_O"]),
            "[1-B_O]A": lv(w, ["A_I", "A_O"]) - lv(w, ["A_O", "A_I", "B_O"]),
            "[1-A_O][1-B_O]": w - lv(w, ["A_O"]) - lv(w, ["B_O"]) + lv(w, ["A_O", "B_O"]),
        }
    else:
        combos = {
            "[1-A_O]BF": lv(w, ["B_I", "B_O", "F"]) - lv(w, ["A_O", "B_I", "B_O", "F"]),
            "[1-B_O]AF": lv(w, ["A_I", "A_O", "F"]) - lv(w, ["B_O", "A_I", "A_O", "F"]),
            "[1-A_O][1-B_O]F": lv(
                w - lv(w, ["A_O"]) - lv(w, ["B_O"]) + lv(w, ["A_O", "B_O"]), ["F"]
            ),
        }
    return [CheckResult(name, m.max_abs(), CONSTRAINT_TOL) for name, m in combos.items()]


def process_report(w: LabeledOperator, kind: ScenarioKind) -> ValidationReport:
    """Per-constraint residual report for process-matrix validity."""
    expect = tuple(f.name for f in kind.factors())
    if w.names != expect:
        raise InvalidParamError(f"operator factors {w.names} do not match scenario factors {expect}")
    for f, g in zip(w.factors, kind.factors()):
        if f.dim != g.dim:
            raise InvalidParamError(f"factor {f.name}: dim {f.dim} does not match scenario dim {g.dim}")
    checks = [CheckResult("hermitian", w.herm_residual(), hb.HERMITICITY_TOL)]
    lam_min = float(np.linalg.eigvalsh((w.entries + w.entries.conj().T) / 2).min())
    checks.append(CheckResult("psd (lambda_min)", max(0.0, -lam_min), hb.PSD_TOL))
    checks.append(CheckResult("trace = d_AO*d_BO", abs(w.trace() - kind.output_dim), TRACE_TOL))
    checks += _projective_checks(w, kind)
    return ValidationReport("process matrix", tuple(checks))


def validate_process(w: LabeledOperator, kind: ScenarioKind) -> ProcessMatrix:
    """Return a validated ProcessMatrix or raise ValidationError with the report."""
    report = process_report(w, kind)
    if not report.ok:
        raise ValidationError(report)
    return ProcessMatrix(kind, w)


# ---------------------------------------------------------------------------
# named processes
# ---------------------------------------------------------------------------

def white_noise_process(kind: ScenarioKind) -> ProcessMatrix:
    """The fully depolarized process 1 / (d_AI * d_BI * d_F)."""
    factors = kind.factors()
    d_in = kind.d_ai * kind.d_bi * (kind.d_f or 1)
    return ProcessMatrix(kind, hb.identity(factors) / d_in)


def quantum_switch() -> ProcessMatrix:
    """Quantum switch with target |0>, control |+>, target output traced out.

    A rank-2 (2+F)-partite process on five qubits.
    """
    kind = two_plus_f_kind()
    a_i, a_o, b_i, b_o, f = kind.factors()
    f_t = SpaceLabel("F_t", 2)

    def branch(first_in, first_out, second_in, second_out, control):
        ent1, _ = hb.max_entangled(first_out, second_in)
        ent2, _ = hb.max_entangled(second_out, f_t)
        v = hb.tensor_vec(hb.basis_ket(first_in, 0), ent1)
        v = hb.tensor_vec(v, ent2)
        return hb.tensor_vec(v, hb.basis_ket(f, control))

    w_vec = (branch(a_i, a_o, b_i, b_o, 0) + branch(b_i, b_o, a_i, a_o, 1)) * (1 / np.sqrt(2))
    w = hb.partial_trace(w_vec.projector(), ["F_t"])
    return validate_process(w, kind)


def depolarized_switch(r: float) -> ProcessMatrix:
    """(W_QS + r * 1/8) / (1 + r); valid for every r >= 0."""
    return quantum_switch().depolarize(r)


_FEIX_Q = np.sqrt(3) - 1
_FEIX_EPS = 4 / np.sqrt(3) - 2


def _pauli_word(word: str, factors) -> LabeledOperator:
    mats = [_PAULI[c] for c in word]
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return hb.operator(factors, out)


def feix_process(q: float, epsilon: float) -> ProcessMatrix:
    """Bipartite qubit Feix process family.

    1/4 (1 + (q/3)(1XX1 + 1YY1 + 1ZZ1) + (1-q+eps) Z1XZ), Pauli words in the
    order A_I A_O B_I B_O.  Causally nonseparable iff eps > 0.
    """
    ScenarioParams(q=q, epsilon=epsilon)  # enforces the PSD bound
    kind = bipartite_kind()
    factors = kind.factors()
    w = (
        _pauli_word("IIII", factors) / 4
        + (q / 12) * (_pauli_word("IXXI", factors) + _pauli_word("IYYI", factors) + _pauli_word("IZZI", factors))
        + ((1 - q + epsilon) / 4) * _pauli_word("ZIXZ", factors)
    )
    return validate_process(w, kind)


def feix_default_params() -> ScenarioParams:
    return ScenarioParams(q=_FEIX_Q, epsilon=_FEIX_EPS)


def depolarized_feix(r: float) -> ProcessMatrix:
    """Depolarized Feix process at the maximal-robustness parameters."""
    return feix_process(_FEIX_Q, _FEIX_EPS).depolarize(r)


# ---------------------------------------------------------------------------
# device-dependent certification
# ---------------------------------------------------------------------------

def certify_process(process: ProcessMatrix, noise: ProcessMatrix | None = None, *,
                    part_validity: bool = True, solver: str | None = None,
                    feas_tol: float | None = None):
    """Random robustness of a process against the causally separable cone.

    Returns a CertificationResult; robustness > margin certifies causal
    nonseparability, with the dual witness family attached.
    """
    from .certify import certify
    from .cones import ConeSpec

    if noise is None:
        noise = white_noise_process(process.kind)
    if noise.kind != process.kind:
        raise InvalidParamError("noise and process must share a ScenarioKind")
    spec = ConeSpec.for_process(process.kind, part_validity=part_validity)
    return certify(process, spec, noise, solver=solver, feas_tol=feas_tol)

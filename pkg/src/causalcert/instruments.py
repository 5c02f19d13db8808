"""Quantum instruments, POVMs, and quantum-input state sets.

Instruments are families of CP-map Choi matrices with declared input factors
(trusted ancilla plus untrusted input) and output factors, summing to a TP
map: Tr_out(sum of elements) = 1_in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hilbert as hb
from .errors import InvalidParamError, ValidationError
from .hilbert import LabeledOperator, SpaceLabel
from .processes import CheckResult, ScenarioKind, ValidationReport

ELEMENT_PSD_TOL = 1e-9
TP_TOL = 1e-9
FRAME_TOL = 1e-10


@dataclass(frozen=True)
class Instrument:
    """Finite family of CP-map Choi matrices summing to a TP map."""

    elements: tuple[LabeledOperator, ...]
    in_names: tuple[str, ...]
    out_names: tuple[str, ...]
    label: str = ""

    def __post_init__(self):
        if not self.elements:
            raise InvalidParamError("instrument needs at least one element")
        names = set(self.in_names) | set(self.out_names)
        for e in self.elements:
            if set(e.names) != names:
                raise InvalidParamError(
                    f"element factors {e.names} do not match declared {sorted(names)}"
                )

    def __len__(self):
        return len(self.elements)

    def total(self) -> LabeledOperator:
        total = self.elements[0]
        for e in self.elements[1:]:
            total = total + e
        return total


@dataclass(frozen=True)
class POVM:
    """PSD elements on one factor set summing to the identity."""

    elements: tuple[LabeledOperator, ...]
    label: str = ""

    def __post_init__(self):
        if not self.elements:
            raise InvalidParamError("POVM needs at least one element")
        first = self.elements[0].factors
        for e in self.elements[1:]:
            if e.factors != first:
                raise InvalidParamError("POVM elements live on different factor sets")

    def __len__(self):
        return len(self.elements)

    @property
    def factors(self):
        return self.elements[0].factors


def instrument_report(instr: Instrument) -> ValidationReport:
    checks = []
    for i, e in enumerate(instr.elements):
        lam = float(np.linalg.eigvalsh((e.entries + e.entries.conj().T) / 2).min())
        checks.append(CheckResult(f"element {i} psd", max(0.0, -lam), ELEMENT_PSD_TOL))
        checks.append(CheckResult(f"element {i} hermitian", e.herm_residual(), hb.HERMITICITY_TOL))
    reduced = hb.partial_trace(instr.total(), instr.out_names) if instr.out_names else instr.total()
    ident = hb.identity([instr.elements[0].factor(n) for n in instr.in_names])
    checks.append(CheckResult("trace-preserving", (reduced - ident).max_abs(), TP_TOL))
    return ValidationReport(f"instrument {instr.label or ''}".strip(), tuple(checks))


def validate_instrument(instr: Instrument) -> ValidationReport:
    """Residual report; raises ValidationError when any check fails."""
    report = instrument_report(instr)
    if not report.ok:
        raise ValidationError(report)
    return report


def povm_report(povm: POVM) -> ValidationReport:
    checks = []
    for i, e in enumerate(povm.elements):
        lam = float(np.linalg.eigvalsh((e.entries + e.entries.conj().T) / 2).min())
        checks.append(CheckResult(f"element {i} psd", max(0.0, -lam), ELEMENT_PSD_TOL))
    total = povm.elements[0]
    for e in povm.elements[1:]:
        total = total + e
    checks.append(CheckResult("sums to identity", (total - hb.identity(povm.factors)).max_abs(), TP_TOL))
    return ValidationReport(f"povm {povm.label or ''}".strip(), tuple(checks))


def validate_povm(povm: POVM) -> ValidationReport:
    report = povm_report(povm)
    if not report.ok:
        raise ValidationError(report)
    return report


# ---------------------------------------------------------------------------
# named instrument families
# ---------------------------------------------------------------------------

def teleport_instruments(kind: ScenarioKind) -> tuple[Instrument, Instrument]:
    """Maximally entangled projection + identity channel, TP-completed.

    Element 0 is (1/d_AI)|1>><<1|^{At_I A_I} (x) |1>><<1|^{At_O A_O}; element 1
    completes the A_I-side projector so the instrument is TP while staying in
    product (measurement (x) channel) form.  Same for Bob on Bt_I/Bt_O.
    """

    def party(t_in, t_out, u_in, u_out):
        _, p_in = hb.max_entangled(t_in, u_in)
        _, p_out = hb.max_entangled(t_out, u_out)
        proj = p_in / u_in.dim
        rest = hb.identity([t_in, u_in]) - proj
        el0 = hb.tensor(proj, p_out)
        el1 = hb.tensor(rest, p_out)
        return (el0, el1), (t_in.name, t_out.name, u_in.name), (u_out.name,)

    f = {lbl.name: lbl for lbl in kind.factors()}
    a_els, a_in, a_out = party(SpaceLabel("At_I", kind.d_ai), SpaceLabel("At_O", kind.d_ao),
                               f["A_I"], f["A_O"])
    b_els, b_in, b_out = party(SpaceLabel("Bt_I", kind.d_bi), SpaceLabel("Bt_O", kind.d_bo),
                               f["B_I"], f["B_O"])
    alice = Instrument(a_els, a_in, a_out, label="teleport-A")
    bob = Instrument(b_els, b_in, b_out, label="teleport-B")
    return alice, bob


def qs_instruments() -> tuple[Instrument, Instrument, POVM]:
    """Computational-basis measure + identity channel for Alice and Bob, and
    the |+/-> measurement for Fiona; qubit ancillas At and Bt."""
    a_i, a_o = SpaceLabel("A_I", 2), SpaceLabel("A_O", 2)
    b_i, b_o = SpaceLabel("B_I", 2), SpaceLabel("B_O", 2)
    f = SpaceLabel("F", 2)
    at, bt = SpaceLabel("At", 2), SpaceLabel("Bt", 2)

    def party(t, u_in, u_out):
        _, ent = hb.max_entangled(t, u_out)
        els = tuple(hb.tensor(hb.basis_ket(u_in, a).projector(), ent) for a in (0, 1))
        return Instrument(els, (t.name, u_in.name), (u_out.name,))

    plus = hb.ket(f, [1 / np.sqrt(2), 1 / np.sqrt(2)]).projector()
    minus = hb.ket(f, [1 / np.sqrt(2), -1 / np.sqrt(2)]).projector()
    fiona = POVM((plus, minus), label="pm-basis")
    return party(at, a_i, a_o), party(bt, b_i, b_o), fiona


def feix_instruments(xi: float = 0.01) -> tuple[Instrument, Instrument]:
    """Instrument pair generating a causally nonseparable D-POVM from the
    Feix process for xi != 0 (xi = 0 yields a causally separable one)."""
    a_i, a_o = SpaceLabel("A_I", 2), SpaceLabel("A_O", 2)
    b_i, b_o = SpaceLabel("B_I", 2), SpaceLabel("B_O", 2)
    at = SpaceLabel("At", 2)
    bt_i, bt_o = SpaceLabel("Bt_I", 2), SpaceLabel("Bt_O", 2)

    _, ent_a = hb.max_entangled(at, a_o)
    alice = Instrument(
        tuple(hb.tensor(hb.basis_ket(a_i, a).projector(), ent_a) for a in (0, 1)),
        (at.name, a_i.name), (a_o.name,), label="feix-A",
    )

    sq2 = 1 / np.sqrt(2)
    plus_bti, minus_bti = hb.ket(bt_i, [sq2, sq2]), hb.ket(bt_i, [sq2, -sq2])
    plus_bi, minus_bi = hb.ket(b_i, [sq2, sq2]), hb.ket(b_i, [sq2, -sq2])
    psi = (hb.tensor_vec(plus_bti, plus_bi) + xi * hb.tensor_vec(minus_bti, hb.basis_ket(b_i, 0))) \
        * (1 / np.sqrt(1 + xi ** 2))
    diag = (
        hb.tensor_vec(hb.basis_ket(bt_o, 0), hb.basis_ket(b_o, 0)).projector()
        + hb.tensor_vec(hb.basis_ket(bt_o, 1), hb.basis_ket(b_o, 1)).projector()
    )
    z_bt = hb.operator([bt_o], np.diag([1.0, -1.0]))
    z_b = hb.operator([b_o], np.diag([1.0, -1.0]))
    m0 = hb.tensor(psi.projector(), diag)
    m1 = (
        hb.tensor(hb.identity([bt_i, b_i]), diag)
        - hb.tensor(hb.tensor(plus_bti.projector(), minus_bi.projector()), hb.tensor(z_bt, z_b))
        - m0
    )
    lam = float(np.linalg.eigvalsh((m1.entries + m1.entries.conj().T) / 2).min())
    if lam < -ELEMENT_PSD_TOL:
        raise InvalidParamError(f"xi={xi}: completion element has min eigenvalue {lam:.3e}")
    bob = Instrument((m0, m1), (bt_i.name, bt_o.name, b_i.name), (b_o.name,), label="feix-B")
    return alice, bob


def qs_bob_classical_instruments() -> tuple[Instrument, Instrument]:
    """Bob's two measure-and-reprepare instruments used for the TUU scenario:
    computational basis (y=0) and |+/-> basis (y=1), on B_I and B_O."""
    b_i, b_o = SpaceLabel("B_I", 2), SpaceLabel("B_O", 2)
    sq2 = 1 / np.sqrt(2)
    bases = {
        0: (hb.basis_ket(b_i, 0), hb.basis_ket(b_i, 1), hb.basis_ket(b_o, 0), hb.basis_ket(b_o, 1)),
        1: (hb.ket(b_i, [sq2, sq2]), hb.ket(b_i, [sq2, -sq2]),
            hb.ket(b_o, [sq2, sq2]), hb.ket(b_o, [sq2, -sq2])),
    }
    out = []
    for y, (in0, in1, out0, out1) in bases.items():
        els = (
            hb.tensor(in0.projector(), out0.projector()),
            hb.tensor(in1.projector(), out1.projector()),
        )
        out.append(Instrument(els, (b_i.name,), (b_o.name,), label=f"qs-bob-y{y}"))
    return tuple(out)


def classical_embedding(families: list[Instrument], ancilla_name: str = "At") -> Instrument:
    """Merge classically labelled instruments into one with a pointer ancilla.

    M_a = sum_x |x><x|^ancilla (x) M_{a|x}; the result is block diagonal in
    the ancilla basis and inherits CP/TP exactly.
    """
    if not families:
        raise InvalidParamError("need at least one instrument family")
    n_out = len(families[0])
    in_names, out_names = families[0].in_names, families[0].out_names
    for fam in families[1:]:
        if len(fam) != n_out:
            raise InvalidParamError("families must share the outcome count")
        if fam.in_names != in_names or fam.out_names != out_names:
            raise InvalidParamError("families must share factor declarations")
    anc = SpaceLabel(ancilla_name, len(families))
    elements = []
    for a in range(n_out):
        el = None
        for x, fam in enumerate(families):
            term = hb.tensor(hb.basis_ket(anc, x).projector(), fam.elements[a])
            el = term if el is None else el + term
        elements.append(el)
    return Instrument(tuple(elements), (anc.name,) + in_names, out_names, label="classical-embedding")


# ---------------------------------------------------------------------------
# MDCI structure check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MdciReport:
    """Per-element residuals of the marginal factorization condition
    Tr_{A_O} M_a = M_a^{At_I A_I} (x) 1^{At_O}, plus (optionally) the distance
    of each element from the nearest product across the (in | out) split."""

    marginal_residuals: tuple[float, ...]
    product_distances: tuple[float, ...] | None
    tol: float = 1e-9

    @property
    def ok(self) -> bool:
        return all(r <= self.tol for r in self.marginal_residuals)


def mdci_check(instr: Instrument, split: tuple[str, str], *, product_form: bool = False) -> MdciReport:
    """Check the measurement (x) channel structure of an instrument.

    `split` names the trusted ancilla factors (tilde-in, tilde-out).  The
    normative test is the marginal condition; `product_form` additionally
    reports each element's distance to the closest product operator across
    the (tilde-in, untrusted-in | tilde-out, untrusted-out) split.
    """
    t_in, t_out = split
    marg, prods = [], []
    for e in instr.elements:
        reduced = hb.partial_trace(e, instr.out_names) if instr.out_names else e
        marg.append(hb.one_minus_replace(reduced, [t_out]).max_abs())
        if product_form:
            prods.append(_closest_product_distance(e, [t_out] + list(instr.out_names)))
    return MdciReport(tuple(marg), tuple(prods) if product_form else None)


def _closest_product_distance(e: LabeledOperator, side_names: list[str]) -> float:
    """Frobenius distance to the nearest product operator across a bipartition,
    from the leading operator-Schmidt coefficient."""
    side = [n for n in e.names if n in side_names]
    other = [n for n in e.names if n not in side_names]
    d_side = int(np.prod([e.factor(n).dim for n in side]))
    d_other = int(np.prod([e.factor(n).dim for n in other]))
    perm = [e.axis(n) for n in other] + [e.axis(n) for n in side]
    n = len(e.factors)
    t = e.entries.reshape(list(e.dims) * 2)
    t = np.transpose(t, perm + [p + n for p in perm])
    # rearrange to (row_other, col_other, row_side, col_side) and flatten
    t = t.reshape(d_other, d_side, d_other, d_side).transpose(0, 2, 1, 3)
    mat = t.reshape(d_other * d_other, d_side * d_side)
    svals = np.linalg.svd(mat, compute_uv=False)
    total = float(np.sum(svals ** 2))
    return float(np.sqrt(max(0.0, total - svals[0] ** 2)))


# ---------------------------------------------------------------------------
# quantum inputs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuantumInputSet:
    """Tomographically complete trusted input states with their dual frame.

    The frame satisfies sum_x Tr[D_x^T sigma] rho_x = sigma for every
    Hermitian sigma on the factor.
    """

    states: tuple[LabeledOperator, ...]
    dual_frame: tuple[LabeledOperator, ...]

    @property
    def factor(self) -> SpaceLabel:
        return self.states[0].factors[0]

    def coefficients(self, sigma: LabeledOperator) -> np.ndarray:
        """Expansion coefficients of sigma over the states."""
        return np.array([
            float(np.trace(d.entries.T @ sigma.entries).real) for d in self.dual_frame
        ])


def tomo_input_set(dim: int, factor_name: str = "At") -> QuantumInputSet:
    """d^2 pure states spanning Hermitian d x d space, dual frame from the
    Gram pseudoinverse.  Qubits get {|0>, |1>, |+>, |+i>}; higher powers of
    two use tensor products of the qubit quartet; other dims fall back to a
    deterministic generic construction.
    """
    from .errors import FrameError

    if dim < 2:
        raise InvalidParamError("dim must be >= 2")
    label = SpaceLabel(factor_name, dim)
    kets = _tomo_kets(dim)
    states = tuple(hb.operator([label], np.outer(v, v.conj())) for v in kets)
    gram = np.array([
        [float(np.trace(a.entries.T @ b.entries).real) for b in states] for a in states
    ])
    if np.linalg.matrix_rank(gram, tol=1e-10) < dim * dim:
        raise FrameError(f"input set of {len(states)} states does not span Hermitian {dim}x{dim} space")
    ginv = np.linalg.pinv(gram)
    duals = []
    for row in ginv:
        d = sum(c * s.entries for c, s in zip(row, states))
        duals.append(hb.operator([label], d))
    return QuantumInputSet(states, tuple(duals))


def _tomo_kets(dim: int) -> list[np.ndarray]:
    if dim == 2:
        s = 1 / np.sqrt(2)
        return [np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex),
                np.array([s, s], dtype=complex), np.array([s, 1j * s], dtype=complex)]
    if dim % 2 == 0 and (dim & (dim - 1)) == 0:
        half = _tomo_kets(dim // 2)
        quartet = _tomo_kets(2)
        return [np.kron(a, b) for a in quartet for b in half]
    # generic: deterministic pseudo-random pure states, d^2 of them
    rng = np.random.default_rng(dim)
    kets = []
    for _ in range(dim * dim):
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        kets.append(v / np.linalg.norm(v))
    return kets

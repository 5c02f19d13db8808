"""Distributed POVMs induced by instruments acting through a process matrix,
TTU/TUU assemblages, and the realization of causally separable D-POVMs by
ordered processes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hilbert as hb
from .errors import DimMismatchError, FrameError, InvalidParamError, ValidationError
from .hilbert import LabeledOperator, LabeledVector, SpaceLabel
from .instruments import Instrument, POVM, QuantumInputSet
from .processes import (
    CheckResult,
    ProcessMatrix,
    TWO_PLUS_F,
    ValidationReport,
    bipartite_kind,
    validate_process,
)

ELEMENT_PSD_TOL = 1e-9
SUM_TOL = 1e-9
RANK_CUTOFF = 1e-10


@dataclass(frozen=True)
class DPOVM:
    """Family of PSD operators on the trusted factors, indexed by outcome
    tuples (a, b) or (a, b, f), summing to the identity."""

    elements: dict
    alice: tuple[str, ...]
    bob: tuple[str, ...]
    fiona: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.elements:
            raise InvalidParamError("D-POVM needs at least one element")
        first = next(iter(self.elements.values())).factors
        for e in self.elements.values():
            if e.factors != first:
                raise InvalidParamError("D-POVM elements live on different factor sets")

    @property
    def factors(self):
        return next(iter(self.elements.values())).factors

    @property
    def outcome_shape(self) -> tuple[int, ...]:
        keys = list(self.elements)
        return tuple(1 + max(k[i] for k in keys) for i in range(len(keys[0])))

    def keys(self):
        return sorted(self.elements)

    def total(self) -> LabeledOperator:
        vals = list(self.elements.values())
        total = vals[0]
        for e in vals[1:]:
            total = total + e
        return total


def dpovm_report(e: DPOVM) -> ValidationReport:
    checks = []
    for k in e.keys():
        m = e.elements[k]
        lam = float(np.linalg.eigvalsh((m.entries + m.entries.conj().T) / 2).min())
        checks.append(CheckResult(f"element {k} psd", max(0.0, -lam), ELEMENT_PSD_TOL))
    checks.append(CheckResult("sums to identity",
                              (e.total() - hb.identity(e.factors)).max_abs(), SUM_TOL))
    return ValidationReport("d-povm", tuple(checks))


def validate_dpovm(e: DPOVM) -> ValidationReport:
    report = dpovm_report(e)
    if not report.ok:
        raise ValidationError(report)
    return report


def induce_dpovm(process: ProcessMatrix, alice: Instrument, bob: Instrument,
                 fiona: POVM | None = None) -> DPOVM:
    """E_{a,b(,f)} = (M_a (x) M_b (x) M_f) * W on the trusted factors."""
    w = process.W
    w_names = set(w.names)
    for instr in (alice, bob):
        shared = [n for n in instr.in_names + instr.out_names if n in w_names]
        if not shared:
            raise InvalidParamError(f"instrument {instr.label!r} shares no factor with the process")
        for name in instr.out_names:
            if name not in w_names:
                raise InvalidParamError(f"instrument output {name!r} is not a process factor")
        for name in shared:
            if w.factor(name).dim != instr.elements[0].factor(name).dim:
                raise InvalidParamError(f"factor {name!r}: instrument and process dims differ")
    if (process.kind.variant == TWO_PLUS_F) != (fiona is not None):
        raise InvalidParamError("fiona POVM must be supplied exactly for (2+F) processes")

    elements = {}
    for a, ma in enumerate(alice.elements):
        wa = hb.link_product(ma, w)
        for b, mb in enumerate(bob.elements):
            wab = hb.link_product(mb, wa)
            if fiona is None:
                elements[(a, b)] = wab
            else:
                for f, mf in enumerate(fiona.elements):
                    elements[(a, b, f)] = hb.link_product(mf, wab)

    trusted_a = tuple(n for n in alice.in_names if n not in w_names)
    trusted_b = tuple(n for n in bob.in_names if n not in w_names)
    trusted_f = ()
    if fiona is not None:
        trusted_f = tuple(n for n in (f.name for f in fiona.factors) if n not in w_names)
    out = DPOVM(elements, trusted_a, trusted_b, trusted_f)
    validate_dpovm(out)
    return out


def probability(element: LabeledOperator, inputs) -> float:
    """Born rule on trusted inputs: Tr[E^T (rho_1 (x) rho_2 ...)]."""
    rho = inputs[0]
    for extra in inputs[1:]:
        rho = hb.tensor(rho, extra)
    if set(rho.names) != set(element.names):
        raise DimMismatchError(f"inputs cover {rho.names}, element needs {element.names}")
    val = hb.link_product(element, rho).scalar()
    if abs(val.imag) > 1e-9:
        raise DimMismatchError(f"probability has imaginary part {val.imag:.3e}")
    return float(val.real)


@dataclass(frozen=True)
class NosigReport:
    """Residuals of sum_b E_{a,b} = E_a (x) 1^{Bt} (per a) and the mirrored
    condition (per b), in max-entry norm."""

    alice_first: tuple[float, ...]
    bob_first: tuple[float, ...]

    def compatible(self, tol: float = 1e-10) -> tuple[bool, bool]:
        return (max(self.alice_first) <= tol, max(self.bob_first) <= tol)


def nosig_marginals(e: DPOVM) -> NosigReport:
    if len(next(iter(e.elements))) != 2:
        raise InvalidParamError("no-signalling marginals are defined for bipartite outcomes")
    n_a, n_b = e.outcome_shape
    res_a = []
    for a in range(n_a):
        total = None
        for b in range(n_b):
            total = e.elements[(a, b)] if total is None else total + e.elements[(a, b)]
        res_a.append(hb.one_minus_replace(total, e.bob).max_abs())
    res_b = []
    for b in range(n_b):
        total = None
        for a in range(n_a):
            total = e.elements[(a, b)] if total is None else total + e.elements[(a, b)]
        res_b.append(hb.one_minus_replace(total, e.alice).max_abs())
    return NosigReport(tuple(res_a), tuple(res_b))


# ---------------------------------------------------------------------------
# correlations and witness reconstruction
# ---------------------------------------------------------------------------

def _on_group(single_factor_op: LabeledOperator, target: LabeledOperator, group: tuple[str, ...]) -> LabeledOperator:
    """Rewrite an operator on one dim-d factor onto a named factor group of
    the same total dimension (canonical group order fixes the encoding)."""
    factors = [target.factor(n) for n in hb.canonical_order(group)]
    d = int(np.prod([f.dim for f in factors]))
    if d != single_factor_op.dim:
        raise DimMismatchError(f"operator of side {single_factor_op.dim} cannot sit on {group} (dim {d})")
    return hb.operator(factors, single_factor_op.entries)


def correlations(e: DPOVM, alice_inputs: QuantumInputSet, bob_inputs: QuantumInputSet) -> dict:
    """P(outcomes | x, y) table from the Born rule, keyed by outcome tuple."""
    table = {}
    any_el = next(iter(e.elements.values()))
    rho_a = [_on_group(s, any_el, e.alice) for s in alice_inputs.states]
    rho_b = [_on_group(s, any_el, e.bob) for s in bob_inputs.states]
    for k in e.keys():
        el = e.elements[k]
        p = np.empty((len(rho_a), len(rho_b)))
        for x, rx in enumerate(rho_a):
            for y, ry in enumerate(rho_b):
                p[x, y] = probability(el, [rx, ry])
        table[k] = p
    return table


def witness_value_from_correlations(witness, alice_inputs: QuantumInputSet,
                                    bob_inputs: QuantumInputSet, p_table: dict,
                                    alice_group: tuple[str, ...] | None = None,
                                    bob_group: tuple[str, ...] | None = None) -> float:
    """Reconstruct sum_k S_k * E_k from correlations via the dual frames.

    Decomposes each S_k over the product input frame, S_k = sum_{x,y}
    s_k^{(x,y)} rho_x (x) rho_y, and returns sum s_k^{(x,y)} P(k|x,y).
    """
    operators = witness.operators if hasattr(witness, "operators") else witness
    n_x, n_y = len(alice_inputs.states), len(bob_inputs.states)
    d_a, d_b = alice_inputs.factor.dim, bob_inputs.factor.dim
    if n_x < d_a * d_a or n_y < d_b * d_b:
        raise FrameError("input sets too small to be tomographically complete")
    any_s = next(iter(operators.values()))
    if alice_group is None or bob_group is None:
        at = tuple(n for n in any_s.names if n.startswith("At"))
        bt = tuple(n for n in any_s.names if n.startswith("Bt"))
        if set(at) | set(bt) != set(any_s.names):
            raise InvalidParamError(
                f"cannot infer party groups from factors {any_s.names}; pass alice_group/bob_group")
        alice_group, bob_group = at, bt
    duals_a = [_on_group(dx, any_s, alice_group) for dx in alice_inputs.dual_frame]
    duals_b = [_on_group(dy, any_s, bob_group) for dy in bob_inputs.dual_frame]
    value = 0.0
    for k, s in operators.items():
        p = np.asarray(p_table[k])
        if p.shape != (n_x, n_y):
            raise InvalidParamError(f"P table for outcome {k} has shape {p.shape}, wanted {(n_x, n_y)}")
        coeffs = np.empty((n_x, n_y))
        for x in range(n_x):
            for y in range(n_y):
                dual = hb.tensor(duals_a[x], duals_b[y])
                coeffs[x, y] = float(np.trace(dual.entries.T @ s.entries).real)
        value += float(np.sum(coeffs * p))
    return value


# ---------------------------------------------------------------------------
# assemblages
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Assemblage:
    """TTU: w_{f|z} on A_I A_O B_I B_O.  TUU: w_{b,f|y,z} on A_I A_O."""

    variant: str  # "ttu" | "tuu"
    elements: dict

    def __post_init__(self):
        if self.variant not in ("ttu", "tuu"):
            raise InvalidParamError(f"unknown assemblage variant {self.variant!r}")
        if not self.elements:
            raise InvalidParamError("assemblage needs at least one element")

    @property
    def factors(self):
        return next(iter(self.elements.values())).factors

    def keys(self):
        return sorted(self.elements)

    def index_shape(self) -> tuple[int, ...]:
        keys = list(self.elements)
        return tuple(1 + max(k[i] for k in keys) for i in range(len(keys[0])))


def ttu_assemblage(process: ProcessMatrix, fiona: list[POVM]) -> Assemblage:
    """w_{f|z} = M_{f|z}^F * W for each of Fiona's measurement settings z."""
    if process.kind.variant != TWO_PLUS_F:
        raise InvalidParamError("TTU assemblages need a (2+F)-partite process")
    elements = {}
    for z, povm in enumerate(fiona):
        for f, m in enumerate(povm.elements):
            if set(n.name for n in m.factors) != {"F"}:
                raise InvalidParamError("Fiona's POVMs must act on F alone")
            elements[(f, z)] = hb.link_product(m, process.W)
    asm = Assemblage("ttu", elements)
    report = ttu_report(asm)
    if not report.ok:
        raise ValidationError(report)
    return asm


def ttu_report(asm: Assemblage) -> ValidationReport:
    checks = []
    n_f, n_z = asm.index_shape()
    totals = []
    for z in range(n_z):
        total = None
        for f in range(n_f):
            m = asm.elements[(f, z)]
            lam = float(np.linalg.eigvalsh((m.entries + m.entries.conj().T) / 2).min())
            checks.append(CheckResult(f"w[f={f}|z={z}] psd", max(0.0, -lam), ELEMENT_PSD_TOL))
            total = m if total is None else total + m
        totals.append(total)
    for z in range(1, n_z):
        checks.append(CheckResult(f"sum_f w[.|z={z}] independent of z",
                                  (totals[z] - totals[0]).max_abs(), SUM_TOL))
    from .processes import process_report
    kind = bipartite_kind(*(f.dim for f in totals[0].factors))
    sub = process_report(totals[0], kind)
    checks.append(CheckResult("sum_f w[.|z=0] is a valid process",
                              max((c.residual for c in sub.checks if not c.ok), default=0.0), SUM_TOL))
    return ValidationReport("ttu assemblage", tuple(checks))


def tuu_assemblage(process: ProcessMatrix, bob: list[Instrument], fiona: list[POVM]) -> Assemblage:
    """w_{b,f|y,z} = (M_{b|y}^B (x) M_{f|z}^F) * W on Alice's spaces."""
    if process.kind.variant != TWO_PLUS_F:
        raise InvalidParamError("TUU assemblages need a (2+F)-partite process")
    elements = {}
    for y, instr in enumerate(bob):
        for b, mb in enumerate(instr.elements):
            wb = hb.link_product(mb, process.W)
            for z, povm in enumerate(fiona):
                for f, mf in enumerate(povm.elements):
                    elements[(b, f, y, z)] = hb.link_product(mf, wb)
    asm = Assemblage("tuu", elements)
    report = tuu_report(asm)
    if not report.ok:
        raise ValidationError(report)
    return asm


def tuu_report(asm: Assemblage) -> ValidationReport:
    checks = []
    n_b, n_f, n_y, n_z = asm.index_shape()
    for k in asm.keys():
        m = asm.elements[k]
        lam = float(np.linalg.eigvalsh((m.entries + m.entries.conj().T) / 2).min())
        checks.append(CheckResult(f"w[{k}] psd", max(0.0, -lam), ELEMENT_PSD_TOL))
    # sum_f w_{b,f|y,z} must not depend on z; sum_b of that is rho_y (x) 1^{A_O}
    for y in range(n_y):
        base = {}
        for b in range(n_b):
            for z in range(n_z):
                total = None
                for f in range(n_f):
                    m = asm.elements[(b, f, y, z)]
                    total = m if total is None else total + m
                if z == 0:
                    base[b] = total
                else:
                    checks.append(CheckResult(f"sum_f w[b={b},.|y={y},z={z}] independent of z",
                                              (total - base[b]).max_abs(), SUM_TOL))
        marg = None
        for b in range(n_b):
            marg = base[b] if marg is None else marg + base[b]
        checks.append(CheckResult(f"sum_b w[b|y={y}] = rho_y (x) 1^A_O",
                                  hb.one_minus_replace(marg, ["A_O"]).max_abs(), SUM_TOL))
        checks.append(CheckResult(f"normalization at y={y}", abs(marg.trace() - marg.factor("A_O").dim), SUM_TOL))
    return ValidationReport("tuu assemblage", tuple(checks))


# ---------------------------------------------------------------------------
# realization of causally separable D-POVMs (bipartite)
# ---------------------------------------------------------------------------

def _eig_vectors(op: LabeledOperator, cutoff: float) -> list[LabeledVector]:
    """Nonzero spectral vectors |e_i> with E = sum |e_i><e_i|."""
    h = (op.entries + op.entries.conj().T) / 2
    vals, vecs = np.linalg.eigh(h)
    out = []
    for lam, v in zip(vals, vecs.T):
        if lam > cutoff:
            out.append(hb.vector(op.factors, np.sqrt(lam) * v))
    return out


def _ordered_realization(part: DPOVM, first: tuple[str, ...], second: tuple[str, ...],
                         out_name: str, in_name: str, cutoff: float = RANK_CUTOFF):
    """Single-order construction: instruments and an identity-channel process
    reproducing a D-POVM compatible with `first` before `second`.

    Returns (first-party elements on (first..., OUT), second-party elements on
    (second..., IN), D) with OUT/IN the direct-sum spaces of dimension D.
    """
    n_first, n_second = part.outcome_shape if first == part.alice else part.outcome_shape[::-1]
    first_factors = [part.factors[i] for i in range(len(part.factors)) if part.factors[i].name in first]
    d_second = int(np.prod([f.dim for f in part.factors if f.name in second]))

    # marginal POVM E_x on the first party's factors
    marg = {}
    for x in range(n_first):
        total = None
        for y in range(n_second):
            key = (x, y) if first == part.alice else (y, x)
            total = part.elements[key] if total is None else total + part.elements[key]
        marg[x] = hb.partial_trace(total, second) / d_second

    spect = {x: _eig_vectors(marg[x], cutoff) for x in range(n_first)}
    ranks = {x: len(spect[x]) for x in range(n_first)}
    d_sum = sum(ranks.values())
    offsets = {}
    run = 0
    for x in range(n_first):
        offsets[x] = run
        run += ranks[x]
    out_label = SpaceLabel(out_name, d_sum)
    in_label = SpaceLabel(in_name, d_sum)

    m_first = []
    for x in range(n_first):
        v = None
        for i, e in enumerate(spect[x]):
            term = hb.tensor_vec(e, hb.basis_ket(out_label, offsets[x] + i))
            v = term if v is None else v + term
        if v is None:  # zero marginal outcome: null element
            d = int(np.prod([f.dim for f in first_factors])) * d_sum
            m_first.append(hb.operator(first_factors + [out_label], np.zeros((d, d))))
        else:
            m_first.append(v.projector())

    m_second = []
    for y in range(n_second):
        total = None
        for x in range(n_first):
            key = (x, y) if first == part.alice else (y, x)
            for ej in _eig_vectors(part.elements[key], cutoff):
                v = None
                for i, ei in enumerate(spect[x]):
                    bra = ei * (1.0 / ei.inner(ei).real)
                    term = hb.tensor_vec(hb.partial_inner(bra, ej), hb.basis_ket(in_label, offsets[x] + i))
                    v = term if v is None else v + term
                if v is not None:
                    total = v.projector() if total is None else total + v.projector()
        if total is None:
            second_factors = [f for f in part.factors if f.name in second]
            d = int(np.prod([f.dim for f in second_factors])) * d_sum
            total = hb.operator(second_factors + [in_label], np.zeros((d, d)))
        m_second.append(total)
    return m_first, m_second, d_sum


def realize_separable_dpovm(e: DPOVM, q: float, part_ab: DPOVM, part_ba: DPOVM,
                            nosig_tol: float = 1e-9):
    """Process matrix and instruments reproducing a causally separable D-POVM.

    The caller supplies the explicit convex split e = q*part_ab + (1-q)*part_ba
    with ordered parts; each part is realized by the spectral construction and
    the two are combined with classical control qubits flagging the order.
    Returns (ProcessMatrix, alice Instrument, bob Instrument).
    """
    if not 0.0 <= q <= 1.0:
        raise InvalidParamError(f"q={q} outside [0, 1]")
    mix_residual = max(
        (e.elements[k] - (q * part_ab.elements[k] + (1 - q) * part_ba.elements[k])).max_abs()
        for k in e.keys()
    )
    if mix_residual > 1e-8:
        raise InvalidParamError(f"supplied split deviates from E by {mix_residual:.3e}")
    ns_ab = nosig_marginals(part_ab)
    ns_ba = nosig_marginals(part_ba)
    if max(ns_ab.alice_first) > nosig_tol:
        raise InvalidParamError(
            f"part_ab is not compatible with the alice-first order (residual {max(ns_ab.alice_first):.3e})")
    if max(ns_ba.bob_first) > nosig_tol:
        raise InvalidParamError(
            f"part_ba is not compatible with the bob-first order (residual {max(ns_ba.bob_first):.3e})")

    ma1, mb1, d1 = _ordered_realization(part_ab, e.alice, e.bob, "aux_AO", "aux_BI0")
    mb2, ma2, d2 = _ordered_realization(part_ba, e.bob, e.alice, "aux_BO", "aux_AI0")

    alpha, beta = SpaceLabel("aux_alpha", 2), SpaceLabel("aux_beta", 2)
    a_i0 = SpaceLabel("aux_AI0", d2)
    b_i0 = SpaceLabel("aux_BI0", d1)
    lbl_ai = SpaceLabel("A_I", 2 * d2)
    lbl_ao = SpaceLabel("A_O", d1)
    lbl_bi = SpaceLabel("B_I", 2 * d1)
    lbl_bo = SpaceLabel("B_O", d2)

    def relabel(op: LabeledOperator, mapping: dict) -> LabeledOperator:
        return hb.operator([mapping.get(f.name, f) for f in op.factors], op.entries)

    def proj(lbl, i):
        return hb.basis_ket(lbl, i).projector()

    alice_els = []
    for a in range(len(ma1)):
        t0 = hb.tensor(hb.tensor(proj(alpha, 0), hb.identity([a_i0])),
                       relabel(ma1[a], {"aux_AO": lbl_ao}))
        t1 = hb.tensor(hb.tensor(proj(alpha, 1), ma2[a]),
                       hb.identity([lbl_ao]) / d1)
        alice_els.append(hb.merge_factors(t0 + t1, ["aux_alpha", "aux_AI0"], lbl_ai))
    bob_els = []
    for b in range(len(mb1)):
        t0 = hb.tensor(hb.tensor(proj(beta, 0), mb1[b]), hb.identity([lbl_bo]) / d2)
        t1 = hb.tensor(hb.tensor(proj(beta, 1), hb.identity([b_i0])),
                       relabel(mb2[b], {"aux_BO": lbl_bo}))
        bob_els.append(hb.merge_factors(t0 + t1, ["aux_beta", "aux_BI0"], lbl_bi))

    _, chan1 = hb.max_entangled(lbl_ao, b_i0)
    _, chan2 = hb.max_entangled(lbl_bo, a_i0)
    w0 = hb.tensor(hb.tensor(hb.tensor(proj(alpha, 0), proj(beta, 0)), hb.identity([a_i0]) / d2),
                   chan1)
    w0 = hb.tensor(w0, hb.identity([lbl_bo]))
    w1 = hb.tensor(hb.tensor(hb.tensor(proj(alpha, 1), proj(beta, 1)), hb.identity([b_i0]) / d1),
                   chan2)
    w1 = hb.tensor(w1, hb.identity([lbl_ao]))
    w = q * w0 + (1 - q) * w1
    w = hb.merge_factors(w, ["aux_alpha", "aux_AI0"], lbl_ai)
    w = hb.merge_factors(w, ["aux_beta", "aux_BI0"], lbl_bi)

    kind = bipartite_kind(d_ai=2 * d2, d_ao=d1, d_bi=2 * d1, d_bo=d2)
    process = validate_process(w, kind)
    alice = Instrument(tuple(alice_els), tuple(e.alice) + ("A_I",), ("A_O",), label="realized-A")
    bob = Instrument(tuple(bob_els), tuple(e.bob) + ("B_I",), ("B_O",), label="realized-B")
    return process, alice, bob

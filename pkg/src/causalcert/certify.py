"""Robustness certification and witness handling.

`certify` solves the membership primal for any supported object against a
cone from `cones`, returning the signed robustness, a verdict, and the dual
witness family recovered from the equality multipliers.  `verify_witness`
independently exhibits the additive decomposition demanded by the dual-cone
characterization (never trusting solver multipliers), and `apply_witness`
evaluates the scalar pairing sum_k Tr[S_k^T E_k].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hilbert as hb
from .conic import ConicProblem, PTrace, ScalarTerm, Term, TraceReplace
from .cones import (
    ConeSpec,
    DPOVM_2F,
    DPOVM_BIPARTITE,
    MDCI_ELEMENT,
    MDCI_ELEMENT_FAMILY,
    MDCI_TTU,
    MDCI_TUU,
    PROCESS_2F,
    PROCESS_BIPARTITE,
    build_membership,
    uniform_noise,
)
from .errors import InvalidParamError, NotAWitnessError
from .hilbert import LabeledOperator

DECISION_MARGIN = 1e-6
WITNESS_TOL = 1e-8

NONCAUSAL = "noncausal"
SEPARABLE = "separable"
BOUNDARY = "boundary"


@dataclass(frozen=True)
class WitnessFamily:
    """Dual-cone operator family indexed like the certified object."""

    operators: dict
    cone: ConeSpec

    def keys(self):
        return sorted(self.operators)


@dataclass(frozen=True)
class CertificationResult:
    cone: str
    robustness: float
    signed_robustness: float
    verdict: str
    status: str
    duality_gap: float | None
    witness: WitnessFamily | None
    solve_time_s: float

    def __str__(self):
        gap = "n/a" if self.duality_gap is None else f"{self.duality_gap:.2e}"
        return (f"[{self.cone}] robustness={self.robustness:.6f} "
                f"(signed {self.signed_robustness:+.6f}) verdict={self.verdict} "
                f"status={self.status} duality_gap={gap}")


def _extract(obj, spec: ConeSpec | None):
    """Object -> (spec, matrices by key, factor template for witnesses)."""
    from .dpovm import Assemblage, DPOVM
    from .processes import ProcessMatrix

    if isinstance(obj, ProcessMatrix):
        spec = spec or ConeSpec.for_process(obj.kind)
        return spec, {(): obj.W.entries}, obj.W.factors
    if isinstance(obj, DPOVM):
        spec = spec or ConeSpec.for_dpovm(obj)
        return spec, {k: v.entries for k, v in obj.elements.items()}, obj.factors
    if isinstance(obj, Assemblage):
        spec = spec or ConeSpec.for_assemblage(obj)
        return spec, {k: v.entries for k, v in obj.elements.items()}, obj.factors
    if isinstance(obj, LabeledOperator):
        spec = spec or ConeSpec.for_element(obj)
        return spec, {(): obj.entries}, obj.factors
    if isinstance(obj, (list, tuple)) and all(isinstance(o, LabeledOperator) for o in obj):
        spec = spec or ConeSpec.for_element_family(list(obj))
        return spec, {(f,): o.entries for f, o in enumerate(obj)}, obj[0].factors
    if isinstance(obj, dict):
        if spec is None:
            raise InvalidParamError("raw element dictionaries need an explicit ConeSpec")
        mats = {k: (v.entries if isinstance(v, LabeledOperator) else np.asarray(v, dtype=complex))
                for k, v in obj.items()}
        template = next(iter(obj.values()))
        factors = template.factors if isinstance(template, LabeledOperator) else None
        return spec, mats, factors
    raise InvalidParamError(f"cannot certify objects of type {type(obj).__name__}")


def certify(obj, cone: ConeSpec | None = None, noise=None, *, solver: str | None = None,
            feas_tol: float | None = None, margin: float = DECISION_MARGIN) -> CertificationResult:
    """Random robustness of `obj` with respect to the cone.

    The primal allows signed r, so strictly interior objects report how much
    noise could be removed; `robustness` itself is clamped at zero.  Signed
    values within +-margin give the verdict "boundary".
    """
    spec, mats, template = _extract(obj, cone)
    if noise is None:
        noise_mats = uniform_noise(spec)
    else:
        _, noise_mats, _ = _extract(noise, spec)
    problem, mix_names, _ = build_membership(spec, mats, noise_mats)
    sol = problem.solve(solver=solver, feas_tol=feas_tol)
    signed = float(sol.objective)

    witness = None
    gap = None
    duals = {}
    for k, name in mix_names.items():
        z = sol.eq_duals.get(name)
        if z is None:
            duals = {}
            break
        duals[k] = np.conj(z)  # complex pairing Tr[S^T E] needs the conjugate
    if duals:
        norm = sum(float(np.trace(duals[k].T @ noise_mats[k]).real) for k in duals)
        if abs(norm) > 1e-12:
            duals = {k: v / norm for k, v in duals.items()}
            value = sum(float(np.trace(duals[k].T @ mats[k]).real) for k in duals)
            gap = abs(signed + value)
            ops = {k: _as_operator(v, template, spec) for k, v in duals.items()}
            witness = WitnessFamily(ops, spec)

    verdict = BOUNDARY
    if signed > margin:
        verdict = NONCAUSAL
    elif signed < -margin:
        verdict = SEPARABLE
    return CertificationResult(
        cone=spec.variant,
        robustness=max(0.0, signed),
        signed_robustness=signed,
        verdict=verdict,
        status=sol.status,
        duality_gap=gap,
        witness=witness,
        solve_time_s=sol.solve_time_s,
    )


def _as_operator(mat, template, spec):
    if template is not None:
        return hb.operator(template, mat)
    labels = [hb.SpaceLabel(f"q{i:02d}", d) for i, d in enumerate(spec.dims)]
    return hb.operator(labels, mat)


def apply_witness(witness, obj) -> float:
    """Scalar pairing sum_k Tr[S_k^T E_k] between a witness family and an
    object with the same index structure; negative values certify."""
    operators = witness.operators if isinstance(witness, WitnessFamily) else witness
    spec = witness.cone if isinstance(witness, WitnessFamily) else None
    _, mats, _ = _extract(obj, spec)
    if sorted(mats) != sorted(operators):
        raise InvalidParamError("witness and object have different index sets")
    val = sum(complex(np.trace(np.asarray(operators[k].entries).T @ mats[k])) for k in mats)
    if abs(val.imag) > 1e-8:
        raise InvalidParamError(f"witness pairing has imaginary part {val.imag:.3e}")
    return float(val.real)


# ---------------------------------------------------------------------------
# independent witness verification (dual-cone membership)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WitnessReport:
    """Margins of the dual-cone decompositions, one per causal order.

    A side margin is the best t with  S_k - (structure parts) >= t*1  over the
    side's feasibility problem; the witness is valid when every margin clears
    -tol.  `normalization` is S * noise when a noise object was supplied.
    """

    sides: dict
    tol: float
    normalization: float | None = None

    @property
    def ok(self) -> bool:
        fine = all(m >= -self.tol for m in self.sides.values())
        if self.normalization is not None:
            fine = fine and self.normalization <= 1 + self.tol
        return fine

    def __str__(self):
        parts = ", ".join(f"{k}: {v:+.2e}" for k, v in self.sides.items())
        tail = "" if self.normalization is None else f", S*noise={self.normalization:.6f}"
        return f"witness {'valid' if self.ok else 'INVALID'} ({parts}{tail})"


def verify_witness(witness, cone: ConeSpec | None = None, noise=None, *,
                   tol: float = WITNESS_TOL, solver: str | None = None,
                   require: bool = False) -> WitnessReport:
    """Exhibit the additive decomposition of each dual-cone characterization
    via small feasibility SDPs (eigenvalue checks where no SDP is needed)."""
    operators = witness.operators if isinstance(witness, WitnessFamily) else dict(witness)
    if cone is None:
        if not isinstance(witness, WitnessFamily):
            raise InvalidParamError("raw witness dictionaries need an explicit ConeSpec")
        cone = witness.cone
    mats = {k: (v.entries if isinstance(v, LabeledOperator) else np.asarray(v, dtype=complex))
            for k, v in operators.items()}
    if sorted(mats) != sorted(cone.keys()):
        raise InvalidParamError("witness keys do not match the cone's index grid")

    sides = _dual_margins(cone, mats, solver=solver)
    normalization = None
    if noise is not None:
        _, noise_mats, _ = _extract(noise, cone)
        normalization = sum(float(np.trace(mats[k].T @ noise_mats[k]).real) for k in mats)
    report = WitnessReport(sides, tol, normalization)
    if require and not report.ok:
        raise NotAWitnessError(str(report))
    return report


def _dual_margins(spec: ConeSpec, s: dict, solver=None) -> dict:
    if spec.variant == MDCI_ELEMENT:
        (b_out,), (a_out,) = spec.groups["bob_out"], spec.groups["alice_out"]
        m1 = _min_eig(_np_ptrace(s[()], spec.dims, (b_out,)))
        m2 = _min_eig(_np_ptrace(s[()], spec.dims, (a_out,)))
        return {"alice-first": m1, "bob-first": m2}
    builders = {
        DPOVM_BIPARTITE: _dual_dpovm_bipartite,
        DPOVM_2F: _dual_dpovm_2f,
        MDCI_ELEMENT_FAMILY: _dual_element_family,
        MDCI_TTU: _dual_ttu,
        MDCI_TUU: _dual_tuu,
        PROCESS_BIPARTITE: _dual_process_bipartite,
        PROCESS_2F: _dual_process_2f,
    }
    out = {}
    for side, build in builders[spec.variant](spec).items():
        problem, t = build(s)
        sol = problem.solve(solver=solver)
        out[side] = float(sol.objective)
    return out


def _min_eig(m) -> float:
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2).min())


def _np_ptrace(m, dims, axes):
    from .conic import apply_chain_numpy

    return apply_chain_numpy(m, dims, (PTrace(tuple(axes)),))


def _eye(spec):
    return np.eye(spec.side)


def _zero_reduced(spec, axes):
    dims = [d for i, d in enumerate(spec.dims) if i not in axes]
    side = int(np.prod(dims)) if dims else 1
    return np.zeros((side, side))


def _psd_slack(p, spec, name, s_mat, t, subtract):
    terms = [Term(v, (), -1.0) for v in subtract] + [ScalarTerm(t, -_eye(spec))]
    p.add_psd(name, terms, -np.asarray(s_mat))


def _dual_dpovm_bipartite(spec):
    n_a, n_b = spec.counts["a"], spec.counts["b"]
    ga, gb = spec.groups["alice"], spec.groups["bob"]

    def side(first_count, other_count, trace_axes, keyer, tag):
        def build(s):
            p = ConicProblem()
            t = p.scalar_var("t")
            s_first = [p.herm_var(f"S_{i}", spec.dims) for i in range(first_count)]
            s_const = p.herm_var("S_const", spec.dims)
            for i, v in enumerate(s_first):
                p.add_eq(f"traceless-{i}", [Term(v, (PTrace(tuple(trace_axes)),))],
                         _zero_reduced(spec, trace_axes))
            p.add_eq("traceless-total", [Term(s_const, (PTrace(tuple(range(len(spec.dims)))),))],
                     np.zeros((1, 1)))
            for i in range(first_count):
                for j in range(other_count):
                    k = keyer(i, j)
                    _psd_slack(p, spec, f"psd{k}", s[k], t, [s_first[i], s_const])
            p.maximize(t)
            return p, t
        return build

    return {
        "alice-first": side(n_a, n_b, gb, lambda a, b: (a, b), "AB"),
        "bob-first": side(n_b, n_a, ga, lambda b, a: (a, b), "BA"),
    }


def _dual_dpovm_2f(spec):
    n_a, n_b, n_f = spec.counts["a"], spec.counts["b"], spec.counts["f"]
    ga, gb, gf = spec.groups["alice"], spec.groups["bob"], spec.groups["fiona"]

    def side(first_count, other_count, late_axes, keyer):
        def build(s):
            p = ConicProblem()
            t = p.scalar_var("t")
            s_pair = {}
            if gf:
                for i in range(first_count):
                    for j in range(other_count):
                        v = p.herm_var(f"S_pair_{i}_{j}", spec.dims)
                        p.add_eq(f"pair-traceless-{i}-{j}", [Term(v, (PTrace(tuple(gf)),))],
                                 _zero_reduced(spec, gf))
                        s_pair[(i, j)] = v
            s_first = [p.herm_var(f"S_{i}", spec.dims) for i in range(first_count)]
            axes = tuple(late_axes) + tuple(gf)
            for i, v in enumerate(s_first):
                p.add_eq(f"traceless-{i}", [Term(v, (PTrace(axes),))], _zero_reduced(spec, axes))
            s_const = p.herm_var("S_const", spec.dims)
            p.add_eq("traceless-total", [Term(s_const, (PTrace(tuple(range(len(spec.dims)))),))],
                     np.zeros((1, 1)))
            for i in range(first_count):
                for j in range(other_count):
                    for f in range(n_f):
                        k = keyer(i, j, f)
                        subtract = [s_first[i], s_const] + ([s_pair[(i, j)]] if gf else [])
                        _psd_slack(p, spec, f"psd{k}", s[k], t, subtract)
            p.maximize(t)
            return p, t
        return build

    return {
        "alice-first": side(n_a, n_b, gb, lambda a, b, f: (a, b, f)),
        "bob-first": side(n_b, n_a, ga, lambda b, a, f: (a, b, f)),
    }


def _dual_element_family(spec):
    gf = tuple(spec.groups["fiona"])

    def side(out_axes):
        axes = tuple(out_axes) + gf

        def build(s):
            p = ConicProblem()
            t = p.scalar_var("t")
            v = p.herm_var("S_const", spec.dims)
            p.add_eq("traceless", [Term(v, (PTrace(axes),))], _zero_reduced(spec, axes))
            for k in spec.keys():
                _psd_slack(p, spec, f"psd{k}", s[k], t, [v])
            p.maximize(t)
            return p, t
        return build

    return {"alice-first": side(spec.groups["bob_out"]),
            "bob-first": side(spec.groups["alice_out"])}


def _dual_ttu(spec):
    n_f, n_z = spec.counts["f"], spec.counts["z"]

    def side(out_axes):
        axes = tuple(out_axes)

        def build(s):
            p = ConicProblem()
            t = p.scalar_var("t")
            s_z = [p.herm_var(f"S_z{z}", spec.dims) for z in range(n_z)]
            p.add_eq("sum-traceless", [Term(v, (PTrace(axes),)) for v in s_z],
                     _zero_reduced(spec, axes))
            for f in range(n_f):
                for z in range(n_z):
                    _psd_slack(p, spec, f"psd_{f}_{z}", s[(f, z)], t, [s_z[z]])
            p.maximize(t)
            return p, t
        return build

    return {"alice-first": side(spec.groups["bob_out"]),
            "bob-first": side(spec.groups["alice_out"])}


def _dual_tuu(spec):
    n_b, n_f = spec.counts["b"], spec.counts["f"]
    n_y, n_z = spec.counts["y"], spec.counts["z"]
    a_out = tuple(spec.groups["alice_out"])

    def build_ab(s):
        p = ConicProblem()
        t = p.scalar_var("t")
        s_byz = {(b, y, z): p.herm_var(f"S_{b}_{y}_{z}", spec.dims)
                 for b in range(n_b) for y in range(n_y) for z in range(n_z)}
        s_y = [p.herm_var(f"S_y{y}", spec.dims) for y in range(n_y)]
        for b in range(n_b):
            for y in range(n_y):
                terms = [Term(s_byz[(b, y, z)]) for z in range(n_z)] + [Term(s_y[y], (), -1.0)]
                p.add_eq(f"sumz-{b}-{y}", terms, np.zeros((spec.side, spec.side)))
        p.add_eq("sum-traceless", [Term(v, (PTrace(a_out),)) for v in s_y],
                 _zero_reduced(spec, a_out))
        for k in spec.keys():
            b, f, y, z = k
            _psd_slack(p, spec, f"psd{k}", s[k], t, [s_byz[(b, y, z)]])
        p.maximize(t)
        return p, t

    def build_ba(s):
        p = ConicProblem()
        t = p.scalar_var("t")
        s_byz = {(b, y, z): p.herm_var(f"S_{b}_{y}_{z}", spec.dims)
                 for b in range(n_b) for y in range(n_y) for z in range(n_z)}
        for b in range(n_b):
            for y in range(n_y):
                terms = [Term(s_byz[(b, y, z)], (PTrace(a_out),)) for z in range(n_z)]
                p.add_eq(f"sumz-traceless-{b}-{y}", terms, _zero_reduced(spec, a_out))
        for k in spec.keys():
            b, f, y, z = k
            _psd_slack(p, spec, f"psd{k}", s[k], t, [s_byz[(b, y, z)]])
        p.maximize(t)
        return p, t

    return {"alice-first": build_ab, "bob-first": build_ba}


def _dual_process_bipartite(spec):
    d = spec.dims

    def side(trace_axis, reduced_dims, replace_axes_a, replace_axes_b):
        def build(s):
            p = ConicProblem()
            t = p.scalar_var("t")
            reduced = _np_ptrace(s[()], spec.dims, (trace_axis,))
            terms = [ScalarTerm(t, -np.eye(int(np.prod(reduced_dims))))]
            if spec.part_validity:
                g = p.herm_var("G", reduced_dims)
                terms += [Term(g, (TraceReplace(replace_axes_a),), -1.0),
                          Term(g, (TraceReplace(replace_axes_b),), 1.0)]
            p.add_psd("psd", terms, -reduced)
            p.maximize(t)
            return p, t
        return build

    # alice-first: Tr_{B_O} S  in  PSD + image of [1-A_O]B_I on A_I A_O B_I
    # bob-first:   Tr_{A_O} S  in  PSD + image of [1-B_O]A_I on A_I B_I B_O
    return {
        "alice-first": side(3, (d[0], d[1], d[2]), (2,), (1, 2)),
        "bob-first": side(1, (d[0], d[2], d[3]), (0,), (0, 2)),
    }


def _dual_process_2f(spec):
    f_ax = len(spec.dims) - 1

    def side(l1_a, l1_b, l2_a, l2_b):
        def build(s):
            p = ConicProblem()
            t = p.scalar_var("t")
            g1 = p.herm_var("G1", spec.dims)
            g2 = p.herm_var("G2", spec.dims)
            terms = [
                Term(g1, (TraceReplace(l1_a),), -1.0), Term(g1, (TraceReplace(l1_b),), 1.0),
                Term(g2, (TraceReplace(l2_a),), -1.0), Term(g2, (TraceReplace(l2_b),), 1.0),
                ScalarTerm(t, -_eye(spec)),
            ]
            p.add_psd("psd", terms, -np.asarray(s[()]))
            p.maximize(t)
            return p, t
        return build

    return {
        "alice-first": side((f_ax,), (3, f_ax), (2, 3, f_ax), (1, 2, 3, f_ax)),
        "bob-first": side((f_ax,), (1, f_ax), (0, 1, f_ax), (0, 1, 3, f_ax)),
    }

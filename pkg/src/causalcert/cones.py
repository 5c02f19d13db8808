"""Causal-separability cones and their membership problems.

Each variant encodes one closed convex cone of operator families: process
matrices decomposable over the two party orders, causally separable D-POVMs
(bipartite and 2+F), single MDCI D-POVM elements, MDCI element families over
Fiona's outcome, and TTU / TUU assemblage structures.  Builders emit the
robustness primal  min r  s.t.  object + r*noise in cone  over the conic
layer; the matching dual-cone feasibility problems power witness checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conic import ConicProblem, PTrace, ScalarTerm, TensorEmbed, Term, TraceReplace
from .errors import InvalidParamError

PROCESS_BIPARTITE = "process-bipartite"
PROCESS_2F = "process-2f"
DPOVM_BIPARTITE = "dpovm-bipartite"
DPOVM_2F = "dpovm-2f"
MDCI_ELEMENT = "mdci-element"
MDCI_ELEMENT_FAMILY = "mdci-element-family"
MDCI_TTU = "mdci-ttu"
MDCI_TUU = "mdci-tuu"

_VARIANTS = (
    PROCESS_BIPARTITE, PROCESS_2F, DPOVM_BIPARTITE, DPOVM_2F,
    MDCI_ELEMENT, MDCI_ELEMENT_FAMILY, MDCI_TTU, MDCI_TUU,
)


@dataclass(frozen=True)
class ConeSpec:
    """Which cone, on which factor grid, with which index cardinalities.

    `dims` are the factor dimensions of each certified matrix; `groups` maps
    role names (e.g. "alice", "bob_out") to factor-axis tuples; `counts` maps
    index letters (a, b, f, y, z) to their cardinalities.
    """

    variant: str
    dims: tuple[int, ...]
    groups: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    part_validity: bool = True

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise InvalidParamError(f"unknown cone variant {self.variant!r}")

    @property
    def side(self) -> int:
        return int(np.prod(self.dims))

    def keys(self) -> list[tuple]:
        order = {"a": "a", "b": "b", "f": "f", "y": "y", "z": "z"}
        letters = {
            DPOVM_BIPARTITE: "ab",
            DPOVM_2F: "abf",
            MDCI_ELEMENT_FAMILY: "f",
            MDCI_TTU: "fz",
            MDCI_TUU: "bfyz",
        }.get(self.variant, "")
        if not letters:
            return [()]
        ranges = [range(self.counts[order[c]]) for c in letters]
        out = [()]
        for r in ranges:
            out = [k + (i,) for k in out for i in r]
        return out

    # -- constructors ---------------------------------------------------

    @staticmethod
    def for_process(kind, part_validity: bool = True) -> "ConeSpec":
        from .processes import TWO_PLUS_F

        dims = tuple(f.dim for f in kind.factors())
        if kind.variant == TWO_PLUS_F:
            return ConeSpec(PROCESS_2F, dims, part_validity=part_validity)
        return ConeSpec(PROCESS_BIPARTITE, dims, part_validity=part_validity)

    @staticmethod
    def for_dpovm(e) -> "ConeSpec":
        names = [f.name for f in e.factors]
        groups = {
            "alice": tuple(names.index(n) for n in e.alice),
            "bob": tuple(names.index(n) for n in e.bob),
            "fiona": tuple(names.index(n) for n in e.fiona),
        }
        shape = e.outcome_shape
        dims = tuple(f.dim for f in e.factors)
        if len(shape) == 2:
            return ConeSpec(DPOVM_BIPARTITE, dims, groups, {"a": shape[0], "b": shape[1]})
        return ConeSpec(DPOVM_2F, dims, groups, {"a": shape[0], "b": shape[1], "f": shape[2]})

    @staticmethod
    def for_element(op, alice_out: str = "At_O", bob_out: str = "Bt_O") -> "ConeSpec":
        names = [f.name for f in op.factors]
        groups = {"alice_out": (names.index(alice_out),), "bob_out": (names.index(bob_out),)}
        return ConeSpec(MDCI_ELEMENT, tuple(f.dim for f in op.factors), groups)

    @staticmethod
    def for_element_family(ops, alice_out: str = "At_O", bob_out: str = "Bt_O",
                           fiona: tuple[str, ...] = ()) -> "ConeSpec":
        first = ops[0]
        names = [f.name for f in first.factors]
        groups = {
            "alice_out": (names.index(alice_out),),
            "bob_out": (names.index(bob_out),),
            "fiona": tuple(names.index(n) for n in fiona),
        }
        return ConeSpec(MDCI_ELEMENT_FAMILY, tuple(f.dim for f in first.factors),
                        groups, {"f": len(ops)})

    @staticmethod
    def for_assemblage(asm) -> "ConeSpec":
        names = [f.name for f in asm.factors]
        dims = tuple(f.dim for f in asm.factors)
        if asm.variant == "ttu":
            n_f, n_z = asm.index_shape()
            groups = {"alice_out": (names.index("A_O"),), "bob_out": (names.index("B_O"),)}
            return ConeSpec(MDCI_TTU, dims, groups, {"f": n_f, "z": n_z})
        n_b, n_f, n_y, n_z = asm.index_shape()
        groups = {"alice_out": (names.index("A_O"),)}
        return ConeSpec(MDCI_TUU, dims, groups, {"b": n_b, "f": n_f, "y": n_y, "z": n_z})


def uniform_noise(spec: ConeSpec) -> dict:
    """Interior point of the cone: white noise with the matching index grid."""
    eye = np.eye(spec.side)
    keys = spec.keys()
    if spec.variant in (PROCESS_BIPARTITE, PROCESS_2F):
        d_in = spec.dims[0] * spec.dims[2] if spec.variant == PROCESS_BIPARTITE else \
            spec.dims[0] * spec.dims[2] * spec.dims[4]
        return {(): eye / d_in}
    if spec.variant in (DPOVM_BIPARTITE, DPOVM_2F):
        return {k: eye / len(keys) for k in keys}
    if spec.variant == MDCI_ELEMENT:
        return {(): eye / spec.side}
    if spec.variant == MDCI_ELEMENT_FAMILY:
        return {k: eye / spec.counts["f"] for k in keys}
    if spec.variant == MDCI_TTU:
        d_in = spec.dims[0] * spec.dims[2]
        return {k: eye / (d_in * spec.counts["f"]) for k in keys}
    d_in = spec.dims[0]
    return {k: eye / (d_in * spec.counts["b"] * spec.counts["f"]) for k in keys}


# ---------------------------------------------------------------------------
# membership primal builders
# ---------------------------------------------------------------------------

def build_membership(spec: ConeSpec, elements: dict, noise: dict):
    """Robustness primal for `elements + r * noise in cone`.

    Returns (problem, mixture-constraint names by key, the scalar r).  r is a
    free scalar, so its optimum is the signed robustness: negative values
    measure interior depth, positive values certify non-membership.
    """
    keys = spec.keys()
    if sorted(elements) != sorted(keys):
        raise InvalidParamError(f"object keys {sorted(elements)} do not match cone keys {sorted(keys)}")
    builder = {
        PROCESS_BIPARTITE: _build_process_bipartite,
        PROCESS_2F: _build_process_2f,
        DPOVM_BIPARTITE: _build_dpovm_bipartite,
        DPOVM_2F: _build_dpovm_2f,
        MDCI_ELEMENT: _build_mdci_element,
        MDCI_ELEMENT_FAMILY: _build_mdci_element_family,
        MDCI_TTU: _build_mdci_ttu,
        MDCI_TUU: _build_mdci_tuu,
    }[spec.variant]
    return builder(spec, elements, noise)


def _mixture(problem, spec, elements, noise, parts_by_key):
    """Add `sum(parts) - r*noise == element` per key; returns names and r."""
    r = problem.scalar_var("r")
    names = {}
    for k in spec.keys():
        terms = list(parts_by_key[k]) + [ScalarTerm(r, -np.asarray(noise[k]))]
        name = "mix" + "".join(f"_{i}" for i in k)
        problem.add_eq(name or "mix", terms, elements[k])
        names[k] = name or "mix"
    problem.minimize(r)
    return names, r


def _zeros(spec, axes_removed=()):
    dims = [d for i, d in enumerate(spec.dims) if i not in axes_removed]
    side = int(np.prod(dims)) if dims else 1
    return np.zeros((side, side))


def _build_process_bipartite(spec, elements, noise):
    """W = W1 (x) 1^{B_O} + W2 (x) 1^{A_O}, parts PSD, optionally satisfying
    the reduced-process validity constraints."""
    p = ConicProblem()
    d = spec.dims
    w1 = p.psd_var("W1", (d[0], d[1], d[2]))           # A_I A_O B_I
    w2 = p.psd_var("W2", (d[0], d[2], d[3]))           # A_I B_I B_O
    embed1 = TensorEmbed((0, 1, 2), spec.dims)
    embed2 = TensorEmbed((0, 2, 3), spec.dims)
    names, r = _mixture(p, spec, elements, noise,
                        {(): [Term(w1, (embed1,)), Term(w2, (embed2,))]})
    if spec.part_validity:
        p.add_eq("validity-W1",
                 [Term(w1, (TraceReplace((2,)),)), Term(w1, (TraceReplace((1, 2)),), -1.0)],
                 np.zeros((w1.side, w1.side)))
        p.add_eq("validity-W2",
                 [Term(w2, (TraceReplace((0,)),)), Term(w2, (TraceReplace((0, 2)),), -1.0)],
                 np.zeros((w2.side, w2.side)))
    return p, names, r


def _build_process_2f(spec, elements, noise):
    """W = W_A + W_B with W_A in the A-before-B-before-F comb cone and W_B
    mirrored; constraints are stated on traced reductions to stay minimal."""
    p = ConicProblem()
    wa = p.psd_var("WA", spec.dims)
    wb = p.psd_var("WB", spec.dims)
    names, r = _mixture(p, spec, elements, noise, {(): [Term(wa), Term(wb)]})
    f_ax = len(spec.dims) - 1
    # Tr_F W_A = (.) (x) 1^{B_O} and its inner A<B marginal; mirrored for W_B.
    p.add_eq("order-WA-last",
             [Term(wa, (PTrace((f_ax,)),)), Term(wa, (PTrace((f_ax,)), TraceReplace((3,))), -1.0)],
             _zeros(spec, (f_ax,)))
    p.add_eq("order-WA-inner",
             [Term(wa, (PTrace((2, 3, f_ax)),)), Term(wa, (PTrace((2, 3, f_ax)), TraceReplace((1,))), -1.0)],
             _zeros(spec, (2, 3, f_ax)))
    p.add_eq("order-WB-last",
             [Term(wb, (PTrace((f_ax,)),)), Term(wb, (PTrace((f_ax,)), TraceReplace((1,))), -1.0)],
             _zeros(spec, (f_ax,)))
    p.add_eq("order-WB-inner",
             [Term(wb, (PTrace((0, 1, f_ax)),)), Term(wb, (PTrace((0, 1, f_ax)), TraceReplace((1,))), -1.0)],
             _zeros(spec, (0, 1, f_ax)))
    return p, names, r


def _family_vars(p, spec, tag):
    return {k: p.psd_var(f"{tag}" + "".join(f"_{i}" for i in k), spec.dims) for k in spec.keys()}


def _sum_terms(vars_by_key, keys, chain=(), coeff=1.0):
    return [Term(vars_by_key[k], chain, coeff) for k in keys]


def _replace_condition(p, name, vars_by_key, keys, axes, zero):
    """sum over keys must equal its own trace-replace over `axes`."""
    terms = _sum_terms(vars_by_key, keys) + _sum_terms(vars_by_key, keys, (TraceReplace(tuple(axes)),), -1.0)
    p.add_eq(name, terms, zero)


def _build_dpovm_bipartite(spec, elements, noise):
    p = ConicProblem()
    x1, x2 = _family_vars(p, spec, "X1"), _family_vars(p, spec, "X2")
    names, r = _mixture(p, spec, elements, noise,
                        {k: [Term(x1[k]), Term(x2[k])] for k in spec.keys()})
    n_a, n_b = spec.counts["a"], spec.counts["b"]
    ga, gb = spec.groups["alice"], spec.groups["bob"]
    zero = _zeros(spec)
    all_axes = tuple(range(len(spec.dims)))
    for a in range(n_a):
        _replace_condition(p, f"AB-marg-a{a}", x1, [(a, b) for b in range(n_b)], gb, zero)
    _replace_condition(p, "AB-total", x1, spec.keys(), all_axes, zero)
    for b in range(n_b):
        _replace_condition(p, f"BA-marg-b{b}", x2, [(a, b) for a in range(n_a)], ga, zero)
    _replace_condition(p, "BA-total", x2, spec.keys(), all_axes, zero)
    return p, names, r


def _build_dpovm_2f(spec, elements, noise):
    p = ConicProblem()
    x1, x2 = _family_vars(p, spec, "X1"), _family_vars(p, spec, "X2")
    names, r = _mixture(p, spec, elements, noise,
                        {k: [Term(x1[k]), Term(x2[k])] for k in spec.keys()})
    n_a, n_b, n_f = spec.counts["a"], spec.counts["b"], spec.counts["f"]
    ga, gb, gf = spec.groups["alice"], spec.groups["bob"], spec.groups["fiona"]
    zero = _zeros(spec)
    all_axes = tuple(range(len(spec.dims)))
    for x, first_group, late_group, tag in ((x1, ga, gb, "ABF"), (x2, gb, ga, "BAF")):
        if gf:
            for a in range(n_a):
                for b in range(n_b):
                    _replace_condition(p, f"{tag}-f-a{a}b{b}", x,
                                       [(a, b, f) for f in range(n_f)], gf, zero)
        outer = n_a if tag == "ABF" else n_b
        for i in range(outer):
            keys = [(i, j, f) for j in range(n_b) for f in range(n_f)] if tag == "ABF" else \
                   [(j, i, f) for j in range(n_a) for f in range(n_f)]
            _replace_condition(p, f"{tag}-marg-{i}", x, keys, tuple(late_group) + tuple(gf), zero)
        _replace_condition(p, f"{tag}-total", x, spec.keys(), all_axes, zero)
    return p, names, r


def _build_mdci_element(spec, elements, noise):
    """E = E1 (x) 1^{Bt_O} + E2 (x) 1^{At_O}, both parts PSD and otherwise free."""
    p = ConicProblem()
    (b_out,), (a_out,) = spec.groups["bob_out"], spec.groups["alice_out"]
    pos1 = tuple(i for i in range(len(spec.dims)) if i != b_out)
    pos2 = tuple(i for i in range(len(spec.dims)) if i != a_out)
    x1 = p.psd_var("E1", tuple(spec.dims[i] for i in pos1))
    x2 = p.psd_var("E2", tuple(spec.dims[i] for i in pos2))
    names, r = _mixture(p, spec, elements, noise,
                        {(): [Term(x1, (TensorEmbed(pos1, spec.dims),)),
                              Term(x2, (TensorEmbed(pos2, spec.dims),))]})
    return p, names, r


def _build_mdci_element_family(spec, elements, noise):
    p = ConicProblem()
    x1, x2 = _family_vars(p, spec, "X1"), _family_vars(p, spec, "X2")
    names, r = _mixture(p, spec, elements, noise,
                        {k: [Term(x1[k]), Term(x2[k])] for k in spec.keys()})
    gf = spec.groups["fiona"]
    zero = _zeros(spec)
    _replace_condition(p, "ABF-sum", x1, spec.keys(), tuple(spec.groups["bob_out"]) + tuple(gf), zero)
    _replace_condition(p, "BAF-sum", x2, spec.keys(), tuple(spec.groups["alice_out"]) + tuple(gf), zero)
    return p, names, r


def _build_mdci_ttu(spec, elements, noise):
    p = ConicProblem()
    x1, x2 = _family_vars(p, spec, "X1"), _family_vars(p, spec, "X2")
    names, r = _mixture(p, spec, elements, noise,
                        {k: [Term(x1[k]), Term(x2[k])] for k in spec.keys()})
    n_f, n_z = spec.counts["f"], spec.counts["z"]
    zero = _zeros(spec)
    for x, out_group, tag in ((x1, spec.groups["bob_out"], "AB"), (x2, spec.groups["alice_out"], "BA")):
        _replace_condition(p, f"ttu-{tag}-shape", x, [(f, 0) for f in range(n_f)], out_group, zero)
        for z in range(1, n_z):
            terms = _sum_terms(x, [(f, z) for f in range(n_f)]) + \
                _sum_terms(x, [(f, 0) for f in range(n_f)], coeff=-1.0)
            p.add_eq(f"ttu-{tag}-z{z}", terms, zero)
    return p, names, r


def _build_mdci_tuu(spec, elements, noise):
    p = ConicProblem()
    x1, x2 = _family_vars(p, spec, "X1"), _family_vars(p, spec, "X2")
    names, r = _mixture(p, spec, elements, noise,
                        {k: [Term(x1[k]), Term(x2[k])] for k in spec.keys()})
    n_b, n_f = spec.counts["b"], spec.counts["f"]
    n_y, n_z = spec.counts["y"], spec.counts["z"]
    a_out = spec.groups["alice_out"]
    zero = _zeros(spec)
    # order A before B: sum_f X1[b,f|y,z] independent of z, its sum over b
    # independent of y and of the form rho (x) 1^{A_O}
    for b in range(n_b):
        for y in range(n_y):
            for z in range(1, n_z):
                terms = _sum_terms(x1, [(b, f, y, z) for f in range(n_f)]) + \
                    _sum_terms(x1, [(b, f, y, 0) for f in range(n_f)], coeff=-1.0)
                p.add_eq(f"tuu-AB-b{b}y{y}z{z}", terms, zero)
    base = [(b, f, 0, 0) for b in range(n_b) for f in range(n_f)]
    for y in range(1, n_y):
        terms = _sum_terms(x1, [(b, f, y, 0) for b in range(n_b) for f in range(n_f)]) + \
            _sum_terms(x1, base, coeff=-1.0)
        p.add_eq(f"tuu-AB-y{y}", terms, zero)
    _replace_condition(p, "tuu-AB-shape", x1, base, a_out, zero)
    # order B before A: sum_f X2[b,f|y,z] = (.) (x) 1^{A_O}, independent of z
    for b in range(n_b):
        for y in range(n_y):
            _replace_condition(p, f"tuu-BA-shape-b{b}y{y}", x2,
                               [(b, f, y, 0) for f in range(n_f)], a_out, zero)
            for z in range(1, n_z):
                terms = _sum_terms(x2, [(b, f, y, z) for f in range(n_f)]) + \
                    _sum_terms(x2, [(b, f, y, 0) for f in range(n_f)], coeff=-1.0)
                p.add_eq(f"tuu-BA-b{b}y{y}z{z}", terms, zero)
    return p, names, r

"""Random states, channels, instruments, and process matrices for testing
and for the property-based acceptance checks."""

from __future__ import annotations

import numpy as np

from . import hilbert as hb
from .hilbert import SpaceLabel
from .instruments import Instrument
from .processes import (
    ProcessMatrix,
    ScenarioKind,
    bipartite_kind,
    feix_process,
    validate_process,
    white_noise_process,
)


def random_pure_state(rng, label: SpaceLabel) -> hb.LabeledVector:
    v = rng.normal(size=label.dim) + 1j * rng.normal(size=label.dim)
    return hb.ket(label, v / np.linalg.norm(v))


def random_density(rng, label: SpaceLabel, rank: int | None = None) -> hb.LabeledOperator:
    rank = rank or label.dim
    g = rng.normal(size=(label.dim, rank)) + 1j * rng.normal(size=(label.dim, rank))
    m = g @ g.conj().T
    return hb.operator([label], m / np.trace(m))


def random_isometry(rng, d_in: int, d_out: int) -> np.ndarray:
    """Haar-ish isometry from a QR decomposition; requires d_out >= d_in."""
    g = rng.normal(size=(d_out, d_in)) + 1j * rng.normal(size=(d_out, d_in))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))


def random_channel_choi(rng, ins: list[SpaceLabel], outs: list[SpaceLabel],
                        env_dim: int = 2) -> hb.LabeledOperator:
    """Choi matrix of a random CPTP map between the named factor groups."""
    d_in = int(np.prod([l.dim for l in ins]))
    d_out = int(np.prod([l.dim for l in outs]))
    v = random_isometry(rng, d_in, d_out * env_dim)
    # N[(i,o),(i',o')] = sum_e V[(o,e),i] conj(V[(o',e),i'])
    vt = v.reshape(d_out, env_dim, d_in)
    n = np.einsum("oei,pej->iojp", vt, vt.conj()).reshape(d_in * d_out, d_in * d_out)
    return hb.operator(ins + outs, n)


def random_instrument(rng, trusted: list[SpaceLabel], ins: list[SpaceLabel],
                      outs: list[SpaceLabel], n_outcomes: int = 2,
                      label: str = "") -> Instrument:
    """Random instrument: a channel into out (x) flag, sliced on the flag."""
    flag = SpaceLabel("aux_flag", n_outcomes)
    choi = random_channel_choi(rng, trusted + ins, outs + [flag])
    elements = []
    for a in range(n_outcomes):
        bra = hb.basis_ket(flag, a).projector()
        elements.append(hb.link_product(bra, choi))
    return Instrument(tuple(elements), tuple(l.name for l in trusted + ins),
                      tuple(l.name for l in outs), label=label or f"random-{n_outcomes}")


def random_povm(rng, label: SpaceLabel, n_outcomes: int = 2) -> "POVM":
    """Random POVM on one factor: a channel to a flag register, sliced."""
    from .instruments import POVM

    flag = SpaceLabel("aux_flag", n_outcomes)
    choi = random_channel_choi(rng, [label], [flag])
    elements = tuple(
        hb.link_product(hb.basis_ket(flag, k).projector(), choi) for k in range(n_outcomes)
    )
    return POVM(elements, label=f"random-{n_outcomes}")


def random_ordered_process(rng, kind: ScenarioKind, first: str = "A") -> ProcessMatrix:
    """Random process compatible with a fixed order (A before B, or B before
    A, with Fiona last when present).

    Built as a shared environment state fed through a channel chain, so the
    comb marginal and validity constraints hold by construction.
    """
    f = {l.name: l for l in kind.factors()}
    env1 = SpaceLabel("aux_env1", 2)
    if first == "A":
        in1, out1, in2, out2 = f["A_I"], f["A_O"], f["B_I"], f["B_O"]
    else:
        in1, out1, in2, out2 = f["B_I"], f["B_O"], f["A_I"], f["A_O"]
    sigma = random_density(rng, SpaceLabel("aux_joint", in1.dim * env1.dim))
    sigma = hb.operator([in1, env1], sigma.entries)
    if kind.variant == "two_plus_f":
        env2 = SpaceLabel("aux_env2", 2)
        chan1 = random_channel_choi(rng, [out1, env1], [in2, env2])
        chan2 = random_channel_choi(rng, [out2, env2], [f["F"]])
        w = hb.link_product(hb.link_product(sigma, chan1), chan2)
    else:
        chan = random_channel_choi(rng, [out1, env1], [in2])
        w = hb.tensor(hb.link_product(sigma, chan), hb.identity([out2]))
    return validate_process(w, kind)


def random_separable_process(rng, kind: ScenarioKind) -> tuple[ProcessMatrix, float]:
    """Convex mixture of random A-first and B-first processes; returns (W, q)."""
    q = float(rng.uniform())
    wa = random_ordered_process(rng, kind, "A")
    wb = random_ordered_process(rng, kind, "B")
    w = q * wa.W + (1 - q) * wb.W
    return validate_process(w, kind), q


def random_valid_process(rng, kind: ScenarioKind, strength: float | None = None) -> ProcessMatrix:
    """Generic valid process: white noise plus a random traceless direction
    projected onto the validity subspace, scaled to keep W PSD."""
    factors = kind.factors()
    d = int(np.prod([f.dim for f in factors]))
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    g = (g + g.conj().T) / 2
    g = hb.operator(factors, g - np.trace(g) / d * np.eye(d))
    v = _project_validity(g, kind)
    lam = float(np.linalg.eigvalsh(v.entries).min())
    if lam > -1e-12:
        return white_noise_process(kind)
    s = strength if strength is not None else float(rng.uniform(0.3, 0.98))
    w = (hb.identity(factors) + (s / abs(lam)) * v) / (kind.d_ai * kind.d_bi * (kind.d_f or 1))
    return validate_process(w, kind)


def _project_validity(g, kind):
    """Orthogonal projection onto the process-matrix validity subspace."""
    tr = hb.trace_replace
    if kind.variant == "bipartite":
        p1 = tr(g, ["B_I", "B_O"]) - tr(g, ["A_O", "B_I", "B_O"])
        p2 = tr(g, ["A_I", "A_O"]) - tr(g, ["B_O", "A_I", "A_O"])
        p3 = g - tr(g, ["A_O"]) - tr(g, ["B_O"]) + tr(g, ["A_O", "B_O"])
        return g - p1 - p2 - p3
    p1 = tr(g, ["B_I", "B_O", "F"]) - tr(g, ["A_O", "B_I", "B_O", "F"])
    p2 = tr(g, ["A_I", "A_O", "F"]) - tr(g, ["B_O", "A_I", "A_O", "F"])
    inner = g - tr(g, ["A_O"]) - tr(g, ["B_O"]) + tr(g, ["A_O", "B_O"])
    p3 = tr(inner, ["F"])
    return g - p1 - p2 - p3


def random_nonseparable_process(rng, max_tries: int = 12, min_robustness: float = 1e-4):
    """Rejection-sample a causally nonseparable bipartite qubit process.

    Generic valid samples are tried first; if none clears the robustness
    floor, a locally rotated Feix process (mixed with a little noise) is
    used, which is guaranteed nonseparable.
    """
    from .processes import certify_process

    kind = bipartite_kind()
    for _ in range(max_tries):
        w = random_valid_process(rng, kind)
        res = certify_process(w)
        if res.signed_robustness > min_robustness:
            return w, res
    w = rotated_feix(rng, noise=float(rng.uniform(0.0, 0.15)))
    res = certify_process(w)
    if res.signed_robustness <= min_robustness:
        raise RuntimeError("fallback nonseparable sample failed certification")
    return w, res


def rotated_feix(rng, noise: float = 0.0) -> ProcessMatrix:
    """Feix process conjugated by independent local unitaries, then lightly
    depolarized; local rotations preserve (non)separability."""
    base = feix_process(np.sqrt(3) - 1, 4 / np.sqrt(3) - 2).depolarize(noise)
    w = base.W
    us = []
    for f in w.factors:
        us.append(random_isometry(rng, f.dim, f.dim))
    u = us[0]
    for m in us[1:]:
        u = np.kron(u, m)
    return validate_process(hb.operator(w.factors, u @ w.entries @ u.conj().T), base.kind)

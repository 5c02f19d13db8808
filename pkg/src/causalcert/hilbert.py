"""Labeled multi-factor operator algebra.

Operators live on an ordered tensor product of named Hilbert-space factors.
Row/column indices use the mixed-radix encoding with the first factor most
significant (numpy kron order).  Every public operation returns its result
with factors sorted into a fixed global canonical order, so equality of
operators reduces to plain matrix comparison.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimMismatchError,
    DuplicateFactorError,
    NotHermitianError,
    UnknownFactorError,
)

HERMITICITY_TOL = 1e-9
PSD_TOL = 1e-9

# Factors with these names sort first, in this order; anything else sorts
# lexicographically after them.
CANONICAL_NAMES = (
    "A_I", "A_O", "B_I", "B_O", "F",
    "At_I", "At_O", "Bt_I", "Bt_O", "Ft",
)
_CANONICAL_RANK = {name: i for i, name in enumerate(CANONICAL_NAMES)}


def _order_key(name: str):
    rank = _CANONICAL_RANK.get(name)
    return (0, rank, "") if rank is not None else (1, 0, name)


def canonical_order(names: Iterable[str]) -> list[str]:
    """Factor names sorted into the global canonical order."""
    return sorted(names, key=_order_key)


@dataclass(frozen=True)
class SpaceLabel:
    """A named Hilbert-space factor H^X of dimension d_X."""

    name: str
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise DimMismatchError(f"factor {self.name!r} has dim {self.dim} < 1")


def _check_unique(factors: Sequence[SpaceLabel]):
    names = [f.name for f in factors]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise DuplicateFactorError(f"duplicate factor names {dupes}")


def _dims(factors: Sequence[SpaceLabel]) -> list[int]:
    return [f.dim for f in factors]


def _total_dim(factors: Sequence[SpaceLabel]) -> int:
    return int(np.prod(_dims(factors), dtype=np.int64)) if factors else 1


def _sorted_perm(factors: Sequence[SpaceLabel]) -> list[int]:
    return sorted(range(len(factors)), key=lambda i: _order_key(factors[i].name))


@dataclass(frozen=True)
class LabeledOperator:
    """Dense complex matrix over an ordered list of named factors.

    Instances are immutable; construct through :func:`operator` (or the
    helpers below), which sorts factors canonically and freezes the entries.
    A 0-factor operator is a 1x1 matrix, i.e. a scalar.
    """

    factors: tuple[SpaceLabel, ...]
    entries: np.ndarray

    def __post_init__(self):
        _check_unique(self.factors)
        d = _total_dim(self.factors)
        if self.entries.shape != (d, d):
            raise DimMismatchError(
                f"matrix side {self.entries.shape} does not match factor dims {_dims(self.factors)}"
            )

    # -- introspection -------------------------------------------------

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def factor(self, name: str) -> SpaceLabel:
        for f in self.factors:
            if f.name == name:
                return f
        raise UnknownFactorError(f"no factor named {name!r} in {self.names}")

    def axis(self, name: str) -> int:
        for i, f in enumerate(self.factors):
            if f.name == name:
                return i
        raise UnknownFactorError(f"no factor named {name!r} in {self.names}")

    # -- scalar-valued helpers ------------------------------------------

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def scalar(self) -> complex:
        """Value of a 0-factor operator."""
        if self.factors:
            raise DimMismatchError(f"operator still carries factors {self.names}")
        return complex(self.entries[0, 0])

    def herm_residual(self) -> float:
        return float(np.abs(self.entries - self.entries.conj().T).max())

    def max_abs(self) -> float:
        return float(np.abs(self.entries).max()) if self.entries.size else 0.0

    # -- arithmetic (factor sets must agree; canonical order makes that a
    #    plain matrix operation) ----------------------------------------

    def _require_same_factors(self, other: "LabeledOperator"):
        if self.factors != other.factors:
            raise DimMismatchError(
                f"factor mismatch: {self.names}{self.dims} vs {other.names}{other.dims}"
            )

    def __add__(self, other: "LabeledOperator") -> "LabeledOperator":
        self._require_same_factors(other)
        return LabeledOperator(self.factors, _frozen(self.entries + other.entries))

    def __sub__(self, other: "LabeledOperator") -> "LabeledOperator":
        self._require_same_factors(other)
        return LabeledOperator(self.factors, _frozen(self.entries - other.entries))

    def __mul__(self, c) -> "LabeledOperator":
        return LabeledOperator(self.factors, _frozen(self.entries * complex(c)))

    __rmul__ = __mul__

    def __truediv__(self, c) -> "LabeledOperator":
        return self * (1.0 / complex(c))

    def __neg__(self) -> "LabeledOperator":
        return self * (-1.0)

    def conj_transpose(self) -> "LabeledOperator":
        return LabeledOperator(self.factors, _frozen(self.entries.conj().T))


@dataclass(frozen=True)
class LabeledVector:
    """Dense complex vector over an ordered list of named factors."""

    factors: tuple[SpaceLabel, ...]
    entries: np.ndarray

    def __post_init__(self):
        _check_unique(self.factors)
        d = _total_dim(self.factors)
        if self.entries.shape != (d,):
            raise DimMismatchError(
                f"vector length {self.entries.shape} does not match factor dims {_dims(self.factors)}"
            )

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def projector(self) -> LabeledOperator:
        """|v><v| (not normalized)."""
        return LabeledOperator(self.factors, _frozen(np.outer(self.entries, self.entries.conj())))

    def inner(self, other: "LabeledVector") -> complex:
        if self.factors != other.factors:
            raise DimMismatchError(f"factor mismatch: {self.names} vs {other.names}")
        return complex(np.vdot(self.entries, other.entries))

    def __add__(self, other: "LabeledVector") -> "LabeledVector":
        if self.factors != other.factors:
            raise DimMismatchError(f"factor mismatch: {self.names} vs {other.names}")
        return LabeledVector(self.factors, _frozen(self.entries + other.entries))

    def __mul__(self, c) -> "LabeledVector":
        return LabeledVector(self.factors, _frozen(self.entries * complex(c)))

    __rmul__ = __mul__


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=complex)
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def operator(factors: Sequence[SpaceLabel], entries: np.ndarray) -> LabeledOperator:
    """Build a LabeledOperator, sorting factors into canonical order."""
    factors = tuple(factors)
    _check_unique(factors)
    entries = np.asarray(entries, dtype=complex)
    perm = _sorted_perm(factors)
    if perm != list(range(len(factors))):
        entries = _permute_matrix(entries, _dims(factors), perm)
        factors = tuple(factors[i] for i in perm)
    return LabeledOperator(factors, _frozen(entries))


def vector(factors: Sequence[SpaceLabel], entries: np.ndarray) -> LabeledVector:
    """Build a LabeledVector, sorting factors into canonical order."""
    factors = tuple(factors)
    _check_unique(factors)
    entries = np.asarray(entries, dtype=complex).reshape(-1)
    perm = _sorted_perm(factors)
    if perm != list(range(len(factors))):
        entries = entries.reshape(_dims(factors)).transpose(perm).reshape(-1)
        factors = tuple(factors[i] for i in perm)
    return LabeledVector(factors, _frozen(entries))


def identity(factors: Sequence[SpaceLabel]) -> LabeledOperator:
    return operator(factors, np.eye(_total_dim(factors)))


def scalar_op(value: complex = 1.0) -> LabeledOperator:
    return LabeledOperator((), _frozen(np.array([[value]], dtype=complex)))


def basis_ket(label: SpaceLabel, i: int) -> LabeledVector:
    v = np.zeros(label.dim, dtype=complex)
    v[i] = 1.0
    return LabeledVector((label,), _frozen(v))


def ket(label: SpaceLabel, amplitudes: Sequence[complex]) -> LabeledVector:
    return vector((label,), np.asarray(amplitudes, dtype=complex))


def _permute_matrix(entries: np.ndarray, dims: list[int], perm: list[int]) -> np.ndarray:
    n = len(dims)
    t = entries.reshape(dims + dims)
    t = np.transpose(t, list(perm) + [p + n for p in perm])
    d = int(np.prod(dims)) if dims else 1
    return t.reshape(d, d)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def tensor(m: LabeledOperator, n: LabeledOperator) -> LabeledOperator:
    """M (x) N over disjoint factor sets, re-sorted canonically."""
    overlap = set(m.names) & set(n.names)
    if overlap:
        raise DuplicateFactorError(f"factors {sorted(overlap)} appear in both operands")
    return operator(m.factors + n.factors, np.kron(m.entries, n.entries))


def tensor_vec(u: LabeledVector, v: LabeledVector) -> LabeledVector:
    overlap = set(u.names) & set(v.names)
    if overlap:
        raise DuplicateFactorError(f"factors {sorted(overlap)} appear in both operands")
    return vector(u.factors + v.factors, np.kron(u.entries, v.entries))


def _resolve_axes(m: LabeledOperator, over: Iterable[str]) -> list[int]:
    over = list(over)
    axes = []
    for name in over:
        axes.append(m.axis(name))  # raises UnknownFactorError
    if len(set(axes)) != len(axes):
        raise DuplicateFactorError(f"factor set {over} contains repeats")
    return sorted(axes)


def partial_trace(m: LabeledOperator, over: Iterable[str]) -> LabeledOperator:
    """Tr_over M; tracing every factor yields a 0-factor (scalar) operator."""
    axes = _resolve_axes(m, over)
    nfac = len(m.factors)
    t = m.entries.reshape(list(m.dims) * 2)
    letters = list(string.ascii_lowercase[: 2 * nfac])
    for ax in axes:
        letters[nfac + ax] = letters[ax]
    keep = [i for i in range(nfac) if i not in axes]
    out = [letters[i] for i in keep] + [letters[nfac + i] for i in keep]
    red = np.einsum("".join(letters) + "->" + "".join(out), t)
    kept = tuple(m.factors[i] for i in keep)
    d = _total_dim(kept)
    return LabeledOperator(kept, _frozen(red.reshape(d, d)))


def partial_transpose(m: LabeledOperator, over: Iterable[str]) -> LabeledOperator:
    """Transpose in the computational basis of the named factors."""
    axes = _resolve_axes(m, over)
    nfac = len(m.factors)
    t = m.entries.reshape(list(m.dims) * 2)
    perm = list(range(2 * nfac))
    for ax in axes:
        perm[ax], perm[nfac + ax] = perm[nfac + ax], perm[ax]
    out = np.transpose(t, perm).reshape(m.dim, m.dim)
    return LabeledOperator(m.factors, _frozen(out))


def trace_replace(m: LabeledOperator, over: Iterable[str]) -> LabeledOperator:
    """The trace-out-and-replace map: (Tr_X M) (x) 1^X / d_X, same factors."""
    axes = _resolve_axes(m, over)
    if not axes:
        return m
    names = [m.factors[a].name for a in axes]
    d_x = int(np.prod([m.factors[a].dim for a in axes]))
    red = partial_trace(m, names)
    big = tensor(red, identity([m.factors[a] for a in axes])) / d_x
    return big


def one_minus_replace(m: LabeledOperator, over: Iterable[str]) -> LabeledOperator:
    """M - (Tr_X M) (x) 1^X / d_X, i.e. the [1-X] combination for a factor set."""
    return m - trace_replace(m, over)


def link_product(m: LabeledOperator, n: LabeledOperator) -> LabeledOperator:
    """Link product M * N, contracting over the factors common to both.

    Degenerates to Tr[M^T N] (as a 0-factor operator) when every factor is
    shared and to the tensor product when none are.
    """
    shared = set(m.names) & set(n.names)
    for name in shared:
        if m.factor(name).dim != n.factor(name).dim:
            raise DimMismatchError(
                f"shared factor {name!r}: dim {m.factor(name).dim} vs {n.factor(name).dim}"
            )
    nm, nn = len(m.factors), len(n.factors)
    mt = m.entries.reshape(list(m.dims) * 2)
    nt = n.entries.reshape(list(n.dims) * 2)
    letters = iter(string.ascii_letters)
    lab = {}
    for f in m.factors + n.factors:
        if f.name not in lab:
            lab[f.name] = (next(letters), next(letters))
    # Shared factors pair row-with-row and column-with-column; the partial
    # transpose in the definition is absorbed by this index pairing.
    m_row = [lab[f.name][0] for f in m.factors]
    m_col = [lab[f.name][1] for f in m.factors]
    n_row = [lab[f.name][0] for f in n.factors]
    n_col = [lab[f.name][1] for f in n.factors]
    keep_m = [f for f in m.factors if f.name not in shared]
    keep_n = [f for f in n.factors if f.name not in shared]
    out_row = [lab[f.name][0] for f in keep_m + keep_n]
    out_col = [lab[f.name][1] for f in keep_m + keep_n]
    spec = "".join(m_row + m_col) + "," + "".join(n_row + n_col) + "->" + "".join(out_row + out_col)
    res = np.einsum(spec, mt, nt)
    kept = tuple(keep_m + keep_n)
    d = _total_dim(kept)
    return operator(kept, res.reshape(d, d))


def link_vec(u: LabeledVector, v: LabeledVector) -> LabeledVector:
    """Link product for vectors: (1 (x) <<1|)(|u> (x) |v>) over shared factors."""
    shared = set(u.names) & set(v.names)
    for name in shared:
        du = next(f.dim for f in u.factors if f.name == name)
        dv = next(f.dim for f in v.factors if f.name == name)
        if du != dv:
            raise DimMismatchError(f"shared factor {name!r}: dim {du} vs {dv}")
    letters = iter(string.ascii_letters)
    lab = {}
    for f in u.factors + v.factors:
        if f.name not in lab:
            lab[f.name] = next(letters)
    ut = u.entries.reshape(u.dims or (1,))
    vt = v.entries.reshape(v.dims or (1,))
    keep = [f for f in u.factors if f.name not in shared] + [f for f in v.factors if f.name not in shared]
    spec = (
        "".join(lab[f.name] for f in u.factors)
        + ","
        + "".join(lab[f.name] for f in v.factors)
        + "->"
        + "".join(lab[f.name] for f in keep)
    )
    res = np.einsum(spec, ut, vt)
    return vector(tuple(keep), res.reshape(-1))


def partial_inner(bra: LabeledVector, ket: LabeledVector) -> LabeledVector:
    """<bra| applied to |ket> over bra's factors (a subset of ket's)."""
    missing = set(bra.names) - set(ket.names)
    if missing:
        raise UnknownFactorError(f"bra factors {sorted(missing)} absent from ket {ket.names}")
    for f in bra.factors:
        if next(g.dim for g in ket.factors if g.name == f.name) != f.dim:
            raise DimMismatchError(f"factor {f.name!r} dims differ between bra and ket")
    letters = {f.name: string.ascii_letters[i] for i, f in enumerate(ket.factors)}
    kt = ket.entries.reshape(ket.dims or (1,))
    bt = bra.entries.conj().reshape(bra.dims or (1,))
    keep = [f for f in ket.factors if f.name not in bra.names]
    spec = (
        "".join(letters[f.name] for f in bra.factors)
        + ","
        + "".join(letters[f.name] for f in ket.factors)
        + "->"
        + "".join(letters[f.name] for f in keep)
    )
    res = np.einsum(spec, bt, kt)
    return vector(tuple(keep), res.reshape(-1))


def merge_factors(m: LabeledOperator, names: Sequence[str], merged: SpaceLabel) -> LabeledOperator:
    """Fuse the named factors (major-to-minor as listed) into a single one."""
    axes = [m.axis(n) for n in names]
    rest = [i for i in range(len(m.factors)) if i not in axes]
    d_merge = int(np.prod([m.factors[a].dim for a in axes]))
    if d_merge != merged.dim:
        raise DimMismatchError(f"merged dim {d_merge} != label dim {merged.dim}")
    perm = axes + rest
    ent = _permute_matrix(np.asarray(m.entries), list(m.dims), perm)
    new_factors = (merged,) + tuple(m.factors[i] for i in rest)
    return operator(new_factors, ent)


def max_entangled(a: SpaceLabel, b: SpaceLabel) -> tuple[LabeledVector, LabeledOperator]:
    """Non-normalized |1>> = sum_i |i>^a |i>^b and its rank-1 projector.

    <<1|1>> = d and the projector has trace d.
    """
    if a.dim != b.dim:
        raise DimMismatchError(f"max_entangled needs equal dims, got {a.dim} vs {b.dim}")
    v = np.eye(a.dim, dtype=complex).reshape(-1)
    vec_ = vector((a, b), v)
    return vec_, vec_.projector()


@dataclass(frozen=True)
class PsdReport:
    ok: bool
    min_eigenvalue: float
    herm_residual: float
    tol: float

    def __str__(self):
        verdict = "PSD" if self.ok else "not PSD"
        return f"{verdict} (min eig {self.min_eigenvalue:.3e}, herm residual {self.herm_residual:.1e}, tol {self.tol:g})"


def psd_check(m: LabeledOperator, tol: float = PSD_TOL) -> PsdReport:
    """Hermiticity then eigenvalue check; true iff lambda_min >= -tol."""
    herm = m.herm_residual()
    if herm > HERMITICITY_TOL:
        raise NotHermitianError(f"max |M - M^dag| = {herm:.3e} exceeds {HERMITICITY_TOL:g}")
    lam_min = float(np.linalg.eigvalsh((m.entries + m.entries.conj().T) / 2).min())
    return PsdReport(ok=lam_min >= -tol, min_eigenvalue=lam_min, herm_residual=herm, tol=tol)


def allclose(m: LabeledOperator, n: LabeledOperator, atol: float = 1e-12) -> bool:
    return m.factors == n.factors and bool(np.allclose(m.entries, n.entries, atol=atol, rtol=0.0))

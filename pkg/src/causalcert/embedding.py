"""Complex Hermitian <-> real symmetric embedding.

A Hermitian M = A + iB maps to the real symmetric [[A, -B], [B, A]] of twice
the side.  The spectrum doubles in multiplicity, so PSD is preserved both
ways, and real inner products double: Tr[embed(M) embed(N)] = 2 Re Tr[M N].
Solvers consume the real form; results are mapped back by block averaging.
"""

from __future__ import annotations

import numpy as np

from .errors import NotHermitianError

HERM_DATA_TOL = 1e-9


def embed_complex(m: np.ndarray, tol: float = HERM_DATA_TOL) -> np.ndarray:
    """Real symmetric embedding of a Hermitian matrix."""
    m = np.asarray(m, dtype=complex)
    herm = np.abs(m - m.conj().T).max() if m.size else 0.0
    if herm > tol:
        raise NotHermitianError(f"max |M - M^dag| = {herm:.3e} exceeds {tol:g}")
    a, b = m.real, m.imag
    return np.block([[a, -b], [b, a]])


def unembed_complex(x: np.ndarray) -> np.ndarray:
    """Hermitian matrix recovered from a (possibly noisy) real embedding.

    Projects onto the embedding subspace first (block averaging), so it is the
    adjoint inverse for solver output that drifted off the exact image.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0] // 2
    a = (x[:n, :n] + x[n:, n:]) / 2
    b = (x[n:, :n] - x[:n, n:]) / 2
    m = a + 1j * b
    return (m + m.conj().T) / 2


def is_effectively_real(matrices, tol: float = 1e-14) -> bool:
    """True when every matrix has negligible imaginary part.

    Real-symmetric conic problems are solved at native side without the
    doubling; the optimum is unchanged because conjugation symmetry lets any
    feasible point be averaged back to a real one.
    """
    return all(np.abs(np.asarray(m).imag).max() <= tol for m in matrices if np.asarray(m).size)

"""Dense Hermitian linear algebra used by every other module.

Matrices are plain complex ``numpy`` arrays.  Hermitian inputs are accepted up
to a small max-norm slack and symmetrized on entry, so downstream code can rely
on exact Hermiticity.  The real vectorization maps a d x d Hermitian matrix to
d^2 real coordinates (diagonal first, then sqrt(2)-scaled real and imaginary
parts of the strict upper triangle); it is an isometry for the Hilbert-Schmidt
inner product, which is what the feasibility solver builds on.
"""
from __future__ import annotations

from functools import reduce
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .config import DEFAULT_TOLS, Tolerances

__all__ = [
    "EigenDecomposition",
    "as_matrix",
    "dagger",
    "hermitian_part",
    "require_hermitian",
    "eig_hermitian",
    "psd_project",
    "min_eig",
    "partial_trace",
    "kron",
    "op_norm",
    "frob_norm",
    "hermitian_to_real_vec",
    "real_vec_to_hermitian",
    "real_vec_basis_indices",
]


def as_matrix(a, *, square: bool = True) -> np.ndarray:
    """Coerce to a finite complex 2-d array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian_part(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + dagger(a))


def require_hermitian(a, atol: float | None = None) -> np.ndarray:
    """Validate Hermiticity to ``atol`` (max-norm) and return the symmetrized copy."""
    if atol is None:
        atol = DEFAULT_TOLS.herm_atol
    m = as_matrix(a)
    dev = np.abs(m - dagger(m)).max() if m.size else 0.0
    if dev > atol:
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3e} > {atol:.1e})")
    return hermitian_part(m)


class EigenDecomposition(NamedTuple):
    """Eigenvalues ascending; ``vectors[:, k]`` is the k-th eigenvector."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ dagger(self.vectors)


def eig_hermitian(a, atol: float | None = None) -> EigenDecomposition:
    """Full eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    m = require_hermitian(a, atol)
    vals, vecs = np.linalg.eigh(m)
    return EigenDecomposition(vals, vecs)


def psd_project(a, atol: float | None = None) -> np.ndarray:
    """Nearest (Frobenius) positive semidefinite matrix: clip negative eigenvalues."""
    vals, vecs = eig_hermitian(a, atol)
    clipped = np.clip(vals, 0.0, None)
    return (vecs * clipped) @ dagger(vecs)


def min_eig(a, atol: float | None = None) -> float:
    return float(eig_hermitian(a, atol).values[0])


def partial_trace(a, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out all tensor factors not listed in ``keep``.

    Parameters
    ----------
    a : array, shape (D, D) with D = prod(dims)
    dims : dimensions of the tensor factors, in order
    keep : indices (into ``dims``) of the factors to retain, in their original order
    """
    dims = [int(d) for d in dims]
    keep = sorted(set(int(k) for k in keep))
    n = len(dims)
    if any(k < 0 or k >= n for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {n} factors")
    total = int(np.prod(dims))
    m = np.asarray(a, dtype=complex)
    if m.shape != (total, total):
        raise ValueError(f"shape {m.shape} does not match dims {dims}")
    t = m.reshape(dims + dims)
    # row subscript i, column subscript i+n; traced factors share a subscript
    row = list(range(n))
    col = [i + n if i in keep else i for i in range(n)]
    out = [i for i in keep] + [i + n for i in keep]
    kept = int(np.prod([dims[k] for k in keep])) if keep else 1
    return np.einsum(t, row + col, out).reshape(kept, kept)


def kron(*ops) -> np.ndarray:
    """Kronecker product of one or more matrices."""
    if not ops:
        raise ValueError("kron needs at least one matrix")
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def op_norm(a) -> float:
    """Operator (spectral) norm."""
    return float(np.linalg.norm(np.asarray(a, dtype=complex), 2))


def frob_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=complex)))


# === real vectorization ======================================================

_SQRT2 = np.sqrt(2.0)


def real_vec_basis_indices(dim: int):
    """Index arrays defining the vectorization layout for dimension ``dim``."""
    iu, ju = np.triu_indices(dim, k=1)
    return np.arange(dim), iu, ju


def hermitian_to_real_vec(a) -> np.ndarray:
    """Isometric real coordinates of a Hermitian matrix.

    Layout: the d diagonal entries, then sqrt(2)*Re of the strict upper
    triangle (row-major), then sqrt(2)*Im of the same entries.  The Euclidean
    inner product of two vectorizations equals the Hilbert-Schmidt inner
    product tr(A B) of the matrices.
    """
    m = np.asarray(a, dtype=complex)
    d = m.shape[-1]
    diag_idx, iu, ju = real_vec_basis_indices(d)
    upper = m[..., iu, ju]
    parts = [np.real(m[..., diag_idx, diag_idx]), _SQRT2 * np.real(upper), _SQRT2 * np.imag(upper)]
    return np.concatenate(parts, axis=-1)


def real_vec_to_hermitian(v, dim: int) -> np.ndarray:
    """Inverse of :func:`hermitian_to_real_vec`."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != dim * dim:
        raise ValueError(f"vector length {v.shape[-1]} does not match dim {dim}")
    diag_idx, iu, ju = real_vec_basis_indices(dim)
    k = iu.size
    out = np.zeros(v.shape[:-1] + (dim, dim), dtype=complex)
    out[..., diag_idx, diag_idx] = v[..., :dim]
    upper = (v[..., dim : dim + k] + 1j * v[..., dim + k :]) / _SQRT2
    out[..., iu, ju] = upper
    out[..., ju, iu] = np.conj(upper)
    return out

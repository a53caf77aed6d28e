"""Dense complex linear algebra primitives shared by the whole package.

Operators are plain numpy arrays of shape ``(d_out, d_in)`` with complex
entries.  Every rank decision in the package flows through the single
relative tolerance :data:`RANK_TOL`.
"""

from __future__ import annotations

import numpy as np

#: Relative rank tolerance (relative to the largest singular value).
RANK_TOL = 1e-8


class InputError(ValueError):
    """Raised for malformed operator inputs (bad shape, non-finite entries)."""


def as_operator(M) -> np.ndarray:
    """Coerce to a 2-d complex array and reject non-finite entries."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2:
        raise InputError(f"expected a matrix, got array of ndim {A.ndim}")
    if A.size and not np.all(np.isfinite(A.real)) or not np.all(np.isfinite(A.imag)):
        raise InputError("matrix has non-finite entries")
    return A


def svd(M):
    """Full SVD ``(U, s, Vh)`` with descending singular values.

    Thin wrapper over numpy that validates the input; the reconstruction
    error is below ``1e-10 * max(1, ||M||_HS)`` for well-scaled inputs.
    """
    A = as_operator(M)
    if A.size == 0:
        raise InputError("svd of an empty matrix")
    return np.linalg.svd(A, full_matrices=True)


def singular_values(M) -> np.ndarray:
    A = as_operator(M)
    if A.size == 0:
        return np.zeros(0)
    return np.linalg.svd(A, compute_uv=False)


def operator_norm(M) -> float:
    """Largest singular value."""
    s = singular_values(M)
    return float(s[0]) if s.size else 0.0


def trace_norm(M) -> float:
    """Sum of singular values."""
    return float(np.sum(singular_values(M)))


def hs_norm(M) -> float:
    return float(np.linalg.norm(np.asarray(M)))


def hs_inner(A, B) -> complex:
    """Hilbert-Schmidt inner product tr(B† A), linear in the first slot."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.shape != B.shape:
        raise InputError(f"shape mismatch {A.shape} vs {B.shape}")
    return complex(np.vdot(B, A))


def orthonormal_columns(V: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the column span of V, as columns of the result.

    Rank is decided at ``rank_tol`` relative to the top singular value.
    """
    V = np.asarray(V, dtype=complex)
    if V.ndim != 2 or V.shape[1] == 0:
        return np.zeros((V.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(V, full_matrices=False)
    if s.size == 0 or s[0] <= 0:
        return np.zeros((V.shape[0], 0), dtype=complex)
    r = int(np.sum(s > rank_tol * s[0]))
    return U[:, :r]


def projection_onto_span(vectors, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthogonal projection onto the span of the given column vectors.

    An empty list yields the zero projection on a zero-dimensional space
    unless the vectors carry a length; callers should pass at least the
    ambient dimension via a (d, 0) array in that case.
    """
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        V = vectors.astype(complex)
    else:
        vecs = [np.asarray(v, dtype=complex).reshape(-1) for v in vectors]
        if not vecs:
            raise InputError("projection_onto_span needs vectors or a (d, 0) array")
        d = vecs[0].shape[0]
        for v in vecs:
            if v.shape[0] != d:
                raise InputError("vectors have mismatched lengths")
        V = np.column_stack(vecs)
    Q = orthonormal_columns(V, rank_tol)
    return Q @ Q.conj().T


def is_projection(P, tol: float = 1e-9) -> bool:
    P = as_operator(P)
    if P.shape[0] != P.shape[1]:
        return False
    return (np.linalg.norm(P @ P - P) <= tol * max(1.0, np.linalg.norm(P))
            and np.linalg.norm(P - P.conj().T) <= tol * max(1.0, np.linalg.norm(P)))


def range_frame(P, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the range of a Hermitian projection."""
    P = as_operator(P)
    w, V = np.linalg.eigh((P + P.conj().T) / 2)
    keep = w > 0.5
    return V[:, keep]


def proj_join(P, Q, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Projection onto ran P + ran Q."""
    F = np.column_stack([range_frame(P, rank_tol), range_frame(Q, rank_tol)])
    if F.shape[1] == 0:
        return np.zeros_like(np.asarray(P, dtype=complex))
    return projection_onto_span(F, rank_tol)


def proj_meet(P, Q, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Projection onto ran P ∩ ran Q (complement of the join of complements)."""
    P = as_operator(P)
    Q = as_operator(Q)
    n = P.shape[0]
    eye = np.eye(n)
    return eye - proj_join(eye - P, eye - Q, rank_tol)


def kron(A, B) -> np.ndarray:
    """Kronecker product."""
    return np.kron(as_operator(A), as_operator(B))


def direct_sum(A, B) -> np.ndarray:
    """Block diagonal sum diag(A, B)."""
    A = as_operator(A)
    B = as_operator(B)
    out = np.zeros((A.shape[0] + B.shape[0], A.shape[1] + B.shape[1]), dtype=complex)
    out[:A.shape[0], :A.shape[1]] = A
    out[A.shape[0]:, A.shape[1]:] = B
    return out


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary."""
    Z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_matrix(d_out: int, d_in: int, rng: np.random.Generator,
                  real: bool = False) -> np.ndarray:
    Z = rng.standard_normal((d_out, d_in)).astype(complex)
    if not real:
        Z = Z + 1j * rng.standard_normal((d_out, d_in))
    return Z


def top_singular_pair(M):
    """(u, s1, v) with M v = s1 u for the leading singular triple."""
    U, s, Vh = np.linalg.svd(as_operator(M))
    return U[:, 0], float(s[0]), Vh[0].conj()


def eig_cluster_sizes(s: np.ndarray, rel: float = 1e-7) -> int:
    """Multiplicity of the top value of a descending nonnegative sequence."""
    if s.size == 0:
        return 0
    return int(np.sum(s >= s[0] - rel * max(1.0, s[0])))

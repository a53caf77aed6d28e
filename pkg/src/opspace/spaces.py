"""Matrix subspaces with orthonormal Hilbert-Schmidt bases, and trace-class
functionals acting by T ↦ tr(φ† T).

A :class:`MatrixSubspace` is stored as a stack of basis matrices that are
orthonormal in the HS inner product; every constructor re-orthonormalizes,
so annihilators and projections are single matrix factorizations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import (RANK_TOL, InputError, as_operator, hs_inner,
                     orthonormal_columns, projection_onto_span, range_frame,
                     trace_norm)

__all__ = [
    "MatrixSubspace", "Functional", "from_spanning_set", "zero_subspace",
    "full_subspace", "contains", "project_hs", "annihilator", "action",
    "range_projection", "compression", "adjoint_space", "tensor_with_full",
    "tensor_with_scalar", "subspace_sum", "subspace_intersection",
    "subspace_equal", "conjugate", "to_document", "from_document",
    "save_subspace", "load_subspace",
]


@dataclass(frozen=True, eq=False)
class MatrixSubspace:
    """A linear subspace of d_out × d_in complex matrices.

    ``basis`` has shape (dim, d_out, d_in) and is orthonormal in the HS
    inner product.  ``meta`` carries optional structural hints attached by
    catalog constructors (masks, strata, exact beta evaluators); it never
    affects equality of the underlying space.
    """

    d_out: int
    d_in: int
    basis: np.ndarray
    meta: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.d_out * self.d_in

    def basis_list(self):
        return [self.basis[i] for i in range(self.dim)]

    def element(self, coeffs) -> np.ndarray:
        """Linear combination Σ c_i B_i."""
        c = np.asarray(coeffs, dtype=complex)
        if c.shape != (self.dim,):
            raise InputError(f"expected {self.dim} coefficients")
        if self.dim == 0:
            return np.zeros((self.d_out, self.d_in), dtype=complex)
        return np.tensordot(c, self.basis, axes=(0, 0))

    def coeffs(self, T) -> np.ndarray:
        """HS coefficients ⟨T, B_i⟩ of the projection of T onto the space."""
        T = as_operator(T)
        self._check_shape(T)
        return np.array([hs_inner(T, B) for B in self.basis])

    def _check_shape(self, T: np.ndarray):
        if T.shape != (self.d_out, self.d_in):
            raise InputError(
                f"operator shape {T.shape} does not match ambient "
                f"({self.d_out}, {self.d_in})")

    def with_meta(self, **entries) -> "MatrixSubspace":
        m = dict(self.meta)
        m.update(entries)
        return MatrixSubspace(self.d_out, self.d_in, self.basis, m)

    def __repr__(self):
        return (f"MatrixSubspace(d_out={self.d_out}, d_in={self.d_in}, "
                f"dim={self.dim})")


@dataclass(frozen=True)
class Functional:
    """Trace-class dual element acting by T ↦ tr(φ† T).

    For φ = y x* the action is T ↦ ⟨Tx, y⟩, so annihilating a subspace is
    the same as HS-orthogonality to it.
    """

    matrix: np.ndarray
    trace_norm: float

    @classmethod
    def from_matrix(cls, M) -> "Functional":
        M = as_operator(M)
        return cls(matrix=M, trace_norm=trace_norm(M))

    @classmethod
    def dyad(cls, y, x) -> "Functional":
        y = np.asarray(y, dtype=complex).reshape(-1)
        x = np.asarray(x, dtype=complex).reshape(-1)
        M = np.outer(y, x.conj())
        return cls(matrix=M, trace_norm=float(np.linalg.norm(y) * np.linalg.norm(x)))

    def __call__(self, T) -> complex:
        return hs_inner(as_operator(T), self.matrix)

    def normalized(self) -> "Functional":
        if self.trace_norm <= 0:
            return self
        return Functional(self.matrix / self.trace_norm, 1.0)


def _stack(mats) -> np.ndarray:
    mats = [as_operator(M) for M in mats]
    if not mats:
        raise InputError("need at least one matrix (use zero_subspace instead)")
    shape = mats[0].shape
    for M in mats:
        if M.shape != shape:
            raise InputError("matrices have mismatched shapes")
    return np.stack(mats)


def zero_subspace(d_out: int, d_in: int) -> MatrixSubspace:
    return MatrixSubspace(d_out, d_in, np.zeros((0, d_out, d_in), dtype=complex))


def full_subspace(d_out: int, d_in: int) -> MatrixSubspace:
    basis = np.zeros((d_out * d_in, d_out, d_in), dtype=complex)
    k = 0
    for a in range(d_out):
        for b in range(d_in):
            basis[k, a, b] = 1.0
            k += 1
    return MatrixSubspace(d_out, d_in, basis)


def from_spanning_set(mats, tol: float = RANK_TOL) -> MatrixSubspace:
    """Subspace spanned by the given matrices, with an orthonormal HS basis."""
    stack = _stack(mats)
    n, d_out, d_in = stack.shape
    V = stack.reshape(n, d_out * d_in).T        # columns are vectorized mats
    Q = orthonormal_columns(V, tol)
    basis = Q.T.reshape(-1, d_out, d_in)
    return MatrixSubspace(d_out, d_in, basis)


def project_hs(S: MatrixSubspace, T) -> np.ndarray:
    """HS-orthogonal projection of T onto S."""
    T = as_operator(T)
    S._check_shape(T)
    return S.element(S.coeffs(T))


def contains(S: MatrixSubspace, T, tol: float = RANK_TOL) -> bool:
    T = as_operator(T)
    S._check_shape(T)
    resid = np.linalg.norm(T - project_hs(S, T))
    return resid <= tol * max(1.0, np.linalg.norm(T))


def annihilator(S: MatrixSubspace) -> MatrixSubspace:
    """HS-orthogonal complement; the annihilator under the tr(φ†T) pairing."""
    d = S.ambient_dim
    if S.dim == 0:
        return full_subspace(S.d_out, S.d_in)
    V = S.basis.reshape(S.dim, d)
    _, _, Vh = np.linalg.svd(V, full_matrices=True)
    comp = Vh[S.dim:].conj()
    return MatrixSubspace(S.d_out, S.d_in, comp.reshape(-1, S.d_out, S.d_in))


def action(S: MatrixSubspace, x, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal columns spanning S·x."""
    x = np.asarray(x, dtype=complex).reshape(-1)
    if x.shape[0] != S.d_in:
        raise InputError("vector length does not match domain dimension")
    if S.dim == 0 or np.linalg.norm(x) == 0:
        return np.zeros((S.d_out, 0), dtype=complex)
    cols = np.tensordot(S.basis, x, axes=(2, 0)).T   # d_out × dim
    return orthonormal_columns(cols, rank_tol)


def range_projection(S: MatrixSubspace, x, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Projection onto the closure of S·x."""
    V = action(S, x, rank_tol)
    if V.shape[1] == 0:
        return np.zeros((S.d_out, S.d_out), dtype=complex)
    return V @ V.conj().T


def compression(S: MatrixSubspace, P, Q, rank_tol: float = RANK_TOL) -> MatrixSubspace:
    """Compression Q S P viewed on the ranges of the projections.

    P acts on the domain, Q on the codomain; both must be Hermitian
    idempotents.  The result lives on (rank Q) × (rank P).
    """
    from .linalg import is_projection
    P = as_operator(P)
    Q = as_operator(Q)
    if not (is_projection(P) and is_projection(Q)):
        raise InputError("P and Q must be Hermitian idempotent")
    FP = range_frame(P, rank_tol)
    FQ = range_frame(Q, rank_tol)
    return compression_frames(S, FP, FQ, rank_tol)


def compression_frames(S: MatrixSubspace, FP: np.ndarray, FQ: np.ndarray,
                       rank_tol: float = RANK_TOL) -> MatrixSubspace:
    """Compression onto explicit orthonormal frames (columns)."""
    if S.dim == 0:
        return zero_subspace(FQ.shape[1], FP.shape[1])
    mats = [FQ.conj().T @ B @ FP for B in S.basis]
    return from_spanning_set(mats, rank_tol)


def adjoint_space(S: MatrixSubspace) -> MatrixSubspace:
    """Entrywise conjugate-transpose of the basis (an involution)."""
    if S.dim == 0:
        return zero_subspace(S.d_in, S.d_out)
    basis = np.conj(np.transpose(S.basis, (0, 2, 1)))
    return MatrixSubspace(S.d_in, S.d_out, basis)


def tensor_with_full(S: MatrixSubspace, k: int) -> MatrixSubspace:
    """S ⊗ M_k, spanned by kron(B_i, E_pq)."""
    if k < 1:
        raise InputError("tensor factor k must be >= 1")
    out = np.zeros((S.dim * k * k, S.d_out * k, S.d_in * k), dtype=complex)
    idx = 0
    for i in range(S.dim):
        for p in range(k):
            for q in range(k):
                E = np.zeros((k, k))
                E[p, q] = 1.0
                out[idx] = np.kron(S.basis[i], E)
                idx += 1
    return MatrixSubspace(S.d_out * k, S.d_in * k, out)


def tensor_with_scalar(S: MatrixSubspace, n: int) -> MatrixSubspace:
    """S ⊗ C·I_n, spanned by kron(B_i, I_n/√n)."""
    if n < 1:
        raise InputError("tensor factor n must be >= 1")
    eye = np.eye(n) / np.sqrt(n)
    mats = [np.kron(B, eye) for B in S.basis]
    if not mats:
        return zero_subspace(S.d_out * n, S.d_in * n)
    basis = np.stack(mats)
    return MatrixSubspace(S.d_out * n, S.d_in * n, basis)


def subspace_sum(S1: MatrixSubspace, S2: MatrixSubspace,
                 tol: float = RANK_TOL) -> MatrixSubspace:
    _check_same_ambient(S1, S2)
    if S1.dim == 0:
        return S2
    if S2.dim == 0:
        return S1
    return from_spanning_set(list(S1.basis) + list(S2.basis), tol)


def subspace_intersection(S1: MatrixSubspace, S2: MatrixSubspace,
                          tol: float = RANK_TOL) -> MatrixSubspace:
    _check_same_ambient(S1, S2)
    return annihilator(subspace_sum(annihilator(S1), annihilator(S2), tol))


def subspace_equal(S1: MatrixSubspace, S2: MatrixSubspace,
                   tol: float = 1e-8) -> bool:
    """Mutual containment of the two bases at the given tolerance."""
    _check_same_ambient(S1, S2)
    if S1.dim != S2.dim:
        return False
    return (all(contains(S2, B, tol) for B in S1.basis)
            and all(contains(S1, B, tol) for B in S2.basis))


def conjugate(S: MatrixSubspace, U, V) -> MatrixSubspace:
    """The space U S V for fixed matrices U (left) and V (right)."""
    U = as_operator(U)
    V = as_operator(V)
    mats = [U @ B @ V for B in S.basis]
    if not mats:
        return zero_subspace(U.shape[0], V.shape[1])
    return from_spanning_set(mats)


def _check_same_ambient(S1: MatrixSubspace, S2: MatrixSubspace):
    if (S1.d_out, S1.d_in) != (S2.d_out, S2.d_in):
        raise InputError("subspaces live on different ambient shapes")


# ---------------------------------------------------------------------------
# Serialization: {d_out, d_in, basis: [{re, im}], labels}, decimal entries.
# Round-trips preserve the subspace at 1e-9; bit-exactness is not promised.
# ---------------------------------------------------------------------------

def _matrix_to_doc(M: np.ndarray) -> dict:
    return {"re": M.real.tolist(), "im": M.imag.tolist()}


def _matrix_from_doc(doc: dict) -> np.ndarray:
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc["im"], dtype=float)
    if re.shape != im.shape or re.ndim != 2:
        raise InputError("malformed matrix document")
    return re + 1j * im


def to_document(S: MatrixSubspace, labels=None) -> dict:
    return {
        "d_out": S.d_out,
        "d_in": S.d_in,
        "basis": [_matrix_to_doc(B) for B in S.basis],
        "labels": list(labels) if labels else [],
    }


def from_document(doc: dict) -> MatrixSubspace:
    try:
        d_out = int(doc["d_out"])
        d_in = int(doc["d_in"])
        mats = [_matrix_from_doc(m) for m in doc["basis"]]
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed subspace document: {exc}") from exc
    if not mats:
        return zero_subspace(d_out, d_in)
    for M in mats:
        if M.shape != (d_out, d_in):
            raise InputError("basis matrix shape disagrees with header")
    return from_spanning_set(mats)


def save_subspace(S: MatrixSubspace, path: str, labels=None):
    with open(path, "w") as fh:
        json.dump(to_document(S, labels), fh)


def load_subspace(path: str) -> MatrixSubspace:
    with open(path) as fh:
        return from_document(json.load(fh))

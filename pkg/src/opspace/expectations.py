"""Conditional expectations by sign/group averaging and their norm bounds.

The block-diagonal expectation has the closed form Σ_i F_i T E_i; the
exhaustive average over all 2^|I| sign patterns exists only as a test
oracle.  The scalar-tensor expectation averages over the tensor powers of
the eight-element signed-permutation group of M_2, whose closed form is
the block-mean.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .linalg import InputError, as_operator, operator_norm
from .metrics import DEFAULT_OPTS, OptimizerOptions, beta, distance
from .spaces import MatrixSubspace, contains, from_spanning_set

__all__ = [
    "PartitionPair", "sign_expectation", "sign_expectation_bruteforce",
    "group_expectation", "group_expectation_bruteforce", "partition_beta",
    "averaging_bound_check", "scalartensor_bound_check",
    "expectation_beta_contraction_check", "block_diag_space",
    "scalar_tensor_space", "sign_group_projections",
]


@dataclass(frozen=True)
class PartitionPair:
    """Matched families of disjoint coordinate blocks on domain and codomain.

    Blocks are index tuples; they need not cover the space (the leftover
    coordinates behave like an extra dead block on each side).
    """

    d_in: int
    d_out: int
    domain_blocks: tuple
    codomain_blocks: tuple

    def __post_init__(self):
        if len(self.domain_blocks) != len(self.codomain_blocks):
            raise InputError("domain and codomain need equal block counts")
        for blocks, d in ((self.domain_blocks, self.d_in),
                          (self.codomain_blocks, self.d_out)):
            flat = [i for b in blocks for i in b]
            if len(set(flat)) != len(flat) or any(not 0 <= i < d for i in flat):
                raise InputError("blocks must be disjoint index sets in range")

    @property
    def nblocks(self) -> int:
        return len(self.domain_blocks)

    def domain_rest(self):
        used = {i for b in self.domain_blocks for i in b}
        return tuple(i for i in range(self.d_in) if i not in used)

    def codomain_rest(self):
        used = {i for b in self.codomain_blocks for i in b}
        return tuple(i for i in range(self.d_out) if i not in used)


def _emb(idx, d):
    P = np.zeros((d, d), dtype=complex)
    for i in idx:
        P[i, i] = 1.0
    return P


def sign_expectation(T, pp: PartitionPair) -> np.ndarray:
    """Closed form Σ_i F_i T E_i of the sign-averaging expectation."""
    T = as_operator(T)
    if T.shape != (pp.d_out, pp.d_in):
        raise InputError("operator shape does not match the partition pair")
    out = np.zeros_like(T)
    for dom, cod in zip(pp.domain_blocks, pp.codomain_blocks):
        out[np.ix_(cod, dom)] = T[np.ix_(cod, dom)]
    return out


def sign_expectation_bruteforce(T, pp: PartitionPair) -> np.ndarray:
    """Exhaustive average over all sign patterns; oracle for small |I|."""
    T = as_operator(T)
    m = pp.nblocks
    if m > 12:
        raise InputError("exhaustive average limited to 12 blocks")
    acc = np.zeros_like(T)
    for signs in itertools.product((1.0, -1.0), repeat=m):
        E = np.zeros((pp.d_in, pp.d_in), dtype=complex)
        F = np.zeros((pp.d_out, pp.d_out), dtype=complex)
        for srt, dom, cod in zip(signs, pp.domain_blocks, pp.codomain_blocks):
            for i in dom:
                E[i, i] = srt
            for i in cod:
                F[i, i] = srt
        acc += F @ T @ E
    return acc / 2 ** m


def block_diag_space(pp: PartitionPair) -> MatrixSubspace:
    """The matched block-diagonal space {T : T = Σ F_i T E_i} of a pair."""
    mats = []
    for dom, cod in zip(pp.domain_blocks, pp.codomain_blocks):
        for a in cod:
            for b in dom:
                E = np.zeros((pp.d_out, pp.d_in), dtype=complex)
                E[a, b] = 1.0
                mats.append(E)
    S = from_spanning_set(mats)
    mask = np.zeros((pp.d_out, pp.d_in), dtype=bool)
    for dom, cod in zip(pp.domain_blocks, pp.codomain_blocks):
        mask[np.ix_(cod, dom)] = True
    from .strata import mask_beta
    return S.with_meta(kind="block_diag", partition_pair=pp, mask=mask,
                       beta_exact=(lambda T, _m=mask: mask_beta(_m, T)),
                       partition=(pp.domain_blocks, pp.codomain_blocks))


def partition_beta(T, pp: PartitionPair):
    """Exact beta of T against the block-diagonal space of the pair.

    The image of a vector under the space is the sum of the codomain
    blocks met by its support, so the supremum is a finite maximum over
    support patterns.
    """
    T = as_operator(T)
    m = pp.nblocks
    if m > 14:
        raise InputError("partition beta limited to 14 blocks")
    rest_dom = list(pp.domain_rest())
    best, bw = 0.0, None
    for rbits in range(2 ** m):
        sigma = [i for i in range(m) if rbits >> i & 1]
        cols = sorted([c for i in sigma for c in pp.domain_blocks[i]]
                      + rest_dom)
        if not cols:
            continue
        rows_cov = {r for i in sigma for r in pp.codomain_blocks[i]}
        rows = [r for r in range(pp.d_out) if r not in rows_cov]
        M = T[np.ix_(rows, cols)] if rows else np.zeros((0, len(cols)))
        if M.size == 0:
            continue
        U, s, Vh = np.linalg.svd(M)
        if s.size and s[0] > best:
            best = float(s[0])
            x = np.zeros(pp.d_in, dtype=complex)
            x[cols] = Vh[0].conj()
            bw = x
    return best, bw


def averaging_bound_check(T, pp: PartitionPair, tol: float = 1e-9) -> dict:
    """Check ||T - Φ(T)|| against the averaging factor times beta.

    The factor is 2·(1 - 2^{1-|I|}) from the ±-identification economy in
    the sign group average (so 1 for two blocks, 3/2 for three, → 2).
    """
    T = as_operator(T)
    Phi = sign_expectation(T, pp)
    lhs = operator_norm(T - Phi)
    b, _ = partition_beta(T, pp)
    m = pp.nblocks
    factor = 2.0 * (1.0 - 2.0 ** (1 - m)) if m >= 2 else 0.0
    factor = max(factor, 1.0) if m >= 2 else factor
    rhs_tight = factor * b
    rhs = 2.0 * b
    return {"lhs": lhs, "beta": b, "rhs": rhs, "rhs_tight": rhs_tight,
            "factor": factor,
            "pass": bool(lhs <= rhs + tol),
            "pass_tight": bool(lhs <= rhs_tight + tol)}


# ---------------------------------------------------------------------------
# Scalar-tensor expectation
# ---------------------------------------------------------------------------

_G8 = None


def _gen_group8():
    global _G8
    if _G8 is None:
        mats = []
        for a in (1, -1):
            for b in (1, -1):
                mats.append(np.diag([a, b]).astype(complex))
                mats.append(np.array([[0, a], [b, 0]], dtype=complex))
        _G8 = mats
    return _G8


def scalar_tensor_space(n: int, k: int) -> MatrixSubspace:
    """C·I_{2^n} ⊗ M_k with projection metadata for the norm bound."""
    d = 2 ** n
    mats = []
    for p in range(k):
        for q in range(k):
            E = np.zeros((k, k), dtype=complex)
            E[p, q] = 1.0
            mats.append(np.kron(np.eye(d), E))
    S = from_spanning_set(mats)
    return S.with_meta(kind="scalar_tensor", n=n, k=k)


def group_expectation(T, n: int, k: int) -> np.ndarray:
    """Expectation onto C·I_{2^n} ⊗ M_k: the mean of the diagonal k-blocks."""
    T = as_operator(T)
    d = 2 ** n
    if T.shape != (d * k, d * k):
        raise InputError(f"expected a {d*k}×{d*k} operator")
    mean = np.zeros((k, k), dtype=complex)
    for j in range(d):
        mean += T[j * k:(j + 1) * k, j * k:(j + 1) * k]
    mean /= d
    return np.kron(np.eye(d), mean)


def group_expectation_bruteforce(T, n: int, k: int) -> np.ndarray:
    """Group average over the n-fold tensor power of the eight-element group."""
    T = as_operator(T)
    if n > 2:
        raise InputError("bruteforce average limited to n <= 2")
    gens = _gen_group8()
    acc = np.zeros_like(T)
    cnt = 0
    for combo in itertools.product(gens, repeat=n):
        G = np.eye(1, dtype=complex)
        for M in combo:
            G = np.kron(G, M)
        G = np.kron(G, np.eye(k))
        acc += G @ T @ G.conj().T
        cnt += 1
    return acc / cnt


def sign_group_projections(n: int, k: int):
    """Invariant projections read off the two-point-spectrum group elements.

    Every non-scalar element is 2P-I or i(2Q-I) for a projection P or Q
    commuting with C·I_{2^n} ⊗ M_k; the returned list is closed under
    complements.
    """
    gens = _gen_group8()
    projs = []
    seen = []
    d = 2 ** n
    for combo in itertools.product(gens, repeat=n):
        G = np.eye(1, dtype=complex)
        for M in combo:
            G = np.kron(G, M)
        for W in (G, 1j * G):
            H = (W + W.conj().T) / 2
            if np.linalg.norm(H - W) > 1e-12:
                continue
            P = (H + np.eye(d)) / 2
            if np.linalg.norm(P @ P - P) > 1e-10:
                continue
            r = int(round(np.real(np.trace(P))))
            if r in (0, d):
                continue
            if not any(np.allclose(P, Z) for Z in seen):
                seen.append(P)
    out = []
    for P in seen:
        out.append(np.kron(P, np.eye(k)))
    return out


def scalartensor_bound_check(T, n: int, k: int,
                             opts: OptimizerOptions = DEFAULT_OPTS,
                             tol: float = 1e-8) -> dict:
    """dist(T, C·I_{2^n}⊗M_k) against the enumerated-projection bound."""
    T = as_operator(T)
    S = scalar_tensor_space(n, k)
    lhs = distance(T, S, opts).estimate
    projs = sign_group_projections(n, k)
    worst = 0.0
    D = T.shape[0]
    for P in projs:
        worst = max(worst, operator_norm((np.eye(D) - P) @ T @ P))
    factor = 1.5 if n == 1 else 2.0
    rhs = factor * worst
    return {"lhs": lhs, "max_corner": worst, "factor": factor, "rhs": rhs,
            "pass": bool(lhs <= rhs + tol)}


def expectation_beta_contraction_check(T, S: MatrixSubspace,
                                       pp: PartitionPair,
                                       opts: OptimizerOptions = DEFAULT_OPTS,
                                       tol: float = 1e-7) -> dict:
    """Check beta(Φ(T), S) <= beta(T, S) for S inside the block space.

    The witness of the left side transfers to the right side through the
    sign flips used in the averaging proof, so those flipped vectors are
    fed to the right-hand search.
    """
    D = block_diag_space(pp)
    for B in S.basis:
        if not contains(D, B, 1e-7):
            raise InputError("S is not contained in the block-diagonal space")
    Phi = sign_expectation(T, pp)
    bl = beta(Phi, S, opts)
    starts = []
    w = bl.certificate.get("witness")
    if w is not None:
        starts.append(w)
        m = pp.nblocks
        for rbits in range(2 ** min(m, 10)):
            x = w.copy()
            for i in range(min(m, 10)):
                if rbits >> i & 1:
                    x[list(pp.domain_blocks[i])] *= -1.0
            starts.append(x)
    br = beta(T, S, opts, extra_starts=starts)
    return {"beta_phi": bl.estimate, "beta": br.estimate,
            "pass": bool(bl.estimate <= br.estimate + tol)}

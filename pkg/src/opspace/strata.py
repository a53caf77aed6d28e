"""Stratified evaluation of the vector functional g(x) = ||(I - P_{Sx}) T x||.

g jumps upward where dim(S x) drops, so plain ascent on the sphere misses
the suprema that matter.  Catalog constructors attach *families* (curves or
grids of unit vectors, or projection families covering the invariant
subspace lattice) along which the supremum provably lives; this module
evaluates them, refines maxima, and certifies one-parameter trigonometric
families exactly.

Closed-form evaluators for coordinate mask patterns and for tied-diagonal
tensor spaces {diag(t_1 A, ..., t_d A) : A} live here as well.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .linalg import RANK_TOL

__all__ = [
    "VectorFamily", "ProjectionFamily", "eval_g", "eval_g_many",
    "trig_extrema", "family_max", "mask_beta", "tied_tensor_beta",
    "BetaBound",
]


# ---------------------------------------------------------------------------
# Pointwise evaluation of g
# ---------------------------------------------------------------------------

def eval_g(T: np.ndarray, basis: np.ndarray, x: np.ndarray,
           rank_tol: float = RANK_TOL) -> float:
    """g(x) = distance from Tx to the span of {B_i x}."""
    nx = np.linalg.norm(x)
    if nx == 0:
        return 0.0
    x = x / nx
    Tx = T @ x
    if basis.shape[0] == 0:
        return float(np.linalg.norm(Tx))
    cols = np.tensordot(basis, x, axes=(2, 0)).T
    U, s, _ = np.linalg.svd(cols, full_matrices=False)
    r = int(np.sum(s > rank_tol * s[0])) if s.size and s[0] > 0 else 0
    V = U[:, :r]
    return float(np.linalg.norm(Tx - V @ (V.conj().T @ Tx)))


def eval_g_many(T: np.ndarray, basis: np.ndarray, X: np.ndarray,
                rank_tol: float = RANK_TOL) -> np.ndarray:
    """Vectorized g over rows of X (each row a domain vector)."""
    norms = np.linalg.norm(X, axis=1)
    ok = norms > 0
    Xn = np.where(ok[:, None], X / np.where(ok, norms, 1.0)[:, None], X)
    TX = Xn @ T.T                                   # (n, d_out)
    if basis.shape[0] == 0:
        return np.where(ok, np.linalg.norm(TX, axis=1), 0.0)
    cols = np.einsum("kij,nj->nik", basis, Xn)      # (n, d_out, dim)
    U, s, _ = np.linalg.svd(cols, full_matrices=False)
    top = np.maximum(s[:, :1], 1e-300)
    keep = s > rank_tol * top                       # (n, r)
    proj = np.einsum("nik,nk,njk,nj->ni", U, keep.astype(float), U.conj(), TX)
    resid = TX - proj
    return np.where(ok, np.linalg.norm(resid, axis=1), 0.0)


# ---------------------------------------------------------------------------
# Exact extrema of sampled trigonometric polynomials
# ---------------------------------------------------------------------------

def trig_extrema(fn: Callable[[np.ndarray], np.ndarray], degree: int):
    """Global (max, argmax, min, argmin) of a real trig polynomial on [0, 2π).

    ``fn`` must be a trigonometric polynomial of degree <= ``degree``; it is
    sampled at 4·degree + 8 points, interpolated exactly by FFT, and the
    critical points are recovered as roots of the derivative polynomial.
    """
    N = 4 * degree + 8
    ts = np.arange(N) * (2 * np.pi / N)
    vals = np.asarray(fn(ts), dtype=float)
    c = np.fft.fft(vals) / N                        # f(t) = Σ c_m e^{imt}
    # assemble z-polynomial of f'(e^{it}): Σ i m c_m z^{m+degree}
    coeffs = np.zeros(2 * degree + 1, dtype=complex)
    for m in range(-degree, degree + 1):
        cm = c[m % N]
        coeffs[m + degree] = 1j * m * cm
    # numpy.roots wants highest degree first
    poly = coeffs[::-1]
    nz = np.nonzero(np.abs(poly) > 1e-14 * max(1.0, np.abs(poly).max()))[0]
    cand = list(ts[:: max(1, N // 8)])
    if nz.size and nz[0] < len(poly) - 1:
        roots = np.roots(poly[nz[0]:])
        circ = roots[np.abs(np.abs(roots) - 1.0) < 1e-6]
        cand.extend(np.angle(circ) % (2 * np.pi))
    cval = np.asarray(fn(np.asarray(cand, dtype=float)), dtype=float)
    imax, imin = int(np.argmax(cval)), int(np.argmin(cval))
    return (float(cval[imax]), float(cand[imax]),
            float(cval[imin]), float(cand[imin]))


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------

@dataclass
class VectorFamily:
    """A parametrized family of (not necessarily unit) domain vectors.

    ``fn`` maps a parameter array of shape (n, p) to vectors (n, d_in).
    With ``trig_exact`` set (p == 1, 2π-periodic, g² a trig polynomial of
    degree <= trig_degree along the family) the family maximum is computed
    exactly; otherwise a grid plus local refinement is used and the result
    is certified only when a Lipschitz bound is supplied.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    ranges: tuple = ((0.0, 2 * np.pi),)
    trig_exact: bool = False
    trig_degree: int = 8
    lipschitz: Optional[float] = None
    label: str = ""
    grid: int = 96

    @property
    def nparams(self) -> int:
        return len(self.ranges)

    def points(self, params: np.ndarray) -> np.ndarray:
        params = np.atleast_2d(np.asarray(params, dtype=float))
        return self.fn(params)


@dataclass
class ProjectionFamily:
    """Family of projections P(t); value is ||(I-P(t)) T P(t)||.

    Used for invariant-subspace lattices of algebra scenes, where
    β(T) = sup over the lattice of this quantity.  The witness vector is
    the top right singular vector of (I-P) T P.
    """

    fn: Callable[[np.ndarray], np.ndarray]      # (n, p) -> (n, d, d)
    ranges: tuple = ((0.0, 2 * np.pi),)
    trig_exact: bool = False
    trig_degree: int = 8
    lipschitz: Optional[float] = None
    label: str = ""
    grid: int = 96

    @property
    def nparams(self) -> int:
        return len(self.ranges)


@dataclass
class BetaBound:
    """Result of a stratified/certified beta evaluation."""

    value: float
    witness: Optional[np.ndarray]
    certified: bool
    slack: float = 0.0
    detail: dict = field(default_factory=dict)


def _proj_value_many(T: np.ndarray, Ps: np.ndarray) -> np.ndarray:
    n, d, _ = Ps.shape
    eye = np.eye(d)
    M = (eye[None] - Ps) @ T[None] @ Ps
    return np.linalg.svd(M, compute_uv=False)[:, 0]


def _grid_params(ranges, grid):
    axes = [np.linspace(a, b, grid if i == 0 else max(8, grid // 2),
                        endpoint=abs((b - a) - 2 * np.pi) > 1e-12)
            for i, (a, b) in enumerate(ranges)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def family_max(T: np.ndarray, basis: np.ndarray, fam) -> BetaBound:
    """Maximum of g (or of the projection value) over one family."""
    if isinstance(fam, ProjectionFamily):
        def values(params):
            return _proj_value_many(T, fam.fn(np.atleast_2d(params)))
        def witness_at(p):
            P = fam.fn(np.atleast_2d(p))[0]
            M = (np.eye(P.shape[0]) - P) @ T @ P
            _, _, Vh = np.linalg.svd(M)
            return Vh[0].conj()
    else:
        def values(params):
            return eval_g_many(T, basis, fam.fn(np.atleast_2d(params)))
        def witness_at(p):
            x = fam.fn(np.atleast_2d(p))[0]
            n = np.linalg.norm(x)
            return x / n if n > 0 else x

    if fam.trig_exact and fam.nparams == 1:
        vmax, tmax, _, _ = trig_extrema(
            lambda ts: values(ts[:, None]) ** 2, fam.trig_degree)
        vmax = float(np.sqrt(max(vmax, 0.0)))
        p = np.array([tmax])
        return BetaBound(vmax, witness_at(p), True, 0.0,
                         {"family": fam.label, "param": tmax})

    params = _grid_params(fam.ranges, fam.grid)
    vals = values(params)
    i = int(np.argmax(vals))
    best_p, best_v = params[i], float(vals[i])
    res = minimize(lambda p: -float(values(p[None])[0]), best_p,
                   method="Nelder-Mead",
                   options=dict(fatol=1e-14, xatol=1e-12, maxiter=2000))
    if -res.fun > best_v:
        best_v, best_p = float(-res.fun), res.x
    certified = fam.lipschitz is not None
    slack = 0.0
    if certified:
        # covering radius of the grid in max-norm over the box
        h = max((b - a) / fam.grid for (a, b) in fam.ranges)
        slack = fam.lipschitz * h * np.sqrt(len(fam.ranges)) / 2.0
    return BetaBound(best_v, witness_at(np.atleast_1d(best_p)), certified,
                     slack, {"family": fam.label, "param": best_p})


# ---------------------------------------------------------------------------
# Closed-form beta for coordinate mask patterns
# ---------------------------------------------------------------------------

def mask_beta(mask: np.ndarray, T: np.ndarray) -> BetaBound:
    """Exact beta for the space of all matrices supported on ``mask``.

    For such masa-type patterns S·x is a coordinate span determined by the
    support of x, so the supremum is a maximum of ||P_rows(σ)^⊥ T E_σ||
    over column subsets σ.  Exponential in d_in; fine at desk scale.
    """
    mask = np.asarray(mask, dtype=bool)
    d_out, d_in = mask.shape
    if d_in > 14:
        raise ValueError("mask_beta limited to d_in <= 14")
    best, bw = 0.0, None
    for r in range(1, d_in + 1):
        for sigma in itertools.combinations(range(d_in), r):
            rows = np.any(mask[:, list(sigma)], axis=1)
            M = T[np.ix_(~rows, list(sigma))]
            if M.size == 0:
                continue
            U, s, Vh = np.linalg.svd(M)
            if s.size and s[0] > best:
                best = float(s[0])
                x = np.zeros(d_in, dtype=complex)
                x[list(sigma)] = Vh[0].conj()
                bw = x
    return BetaBound(best, bw, True, 0.0, {"kind": "mask"})


# ---------------------------------------------------------------------------
# Tied-diagonal tensor spaces {Σ_i t_i E_ii ⊗ A : A ∈ M_k}
# ---------------------------------------------------------------------------

def tied_tensor_beta(weights: Sequence[float], k: int, T: np.ndarray,
                     grid: int = 72) -> BetaBound:
    """Stratified beta for S = {diag(t_1 A, ..., t_d A) : A in M_k}.

    Requires at most two nonzero weights.  The strata are: x with the
    nonzero-weight blocks proportional to a common vector (a two-parameter
    projective family yielding σ_max of a compressed matrix), x supported
    on dead blocks, and the generic stratum (closed form).
    """
    t = np.asarray(weights, dtype=float)
    d = t.shape[0]
    live = np.nonzero(np.abs(t) > 0)[0]
    dead = np.nonzero(np.abs(t) == 0)[0]
    if live.size > 2:
        raise ValueError("tied_tensor_beta supports at most two nonzero weights")
    D = d * k
    if T.shape != (D, D):
        raise ValueError("operator shape does not match the model")

    cand: list[tuple[float, np.ndarray]] = []

    dead_cols = np.concatenate([np.arange(i * k, (i + 1) * k) for i in dead]) \
        if dead.size else np.zeros(0, dtype=int)
    live_rows = np.concatenate([np.arange(i * k, (i + 1) * k) for i in live]) \
        if live.size else np.zeros(0, dtype=int)
    dead_rows = np.array([r for r in range(D) if r not in set(live_rows)])

    # x supported on dead blocks: S x = 0, g = ||T x||
    if dead_cols.size:
        U, s, Vh = np.linalg.svd(T[:, dead_cols])
        x = np.zeros(D, dtype=complex)
        x[dead_cols] = Vh[0].conj()
        cand.append((float(s[0]), x))

    if live.size == 1:
        # single live block: S x = C^k embedded in that block (if x there != 0)
        i = live[0]
        cols = np.arange(i * k, (i + 1) * k)
        rows = np.array([r for r in range(D) if r not in set(cols.tolist())])
        M = T[np.ix_(rows, cols)]
        if M.size:
            U, s, Vh = np.linalg.svd(M)
            x = np.zeros(D, dtype=complex)
            x[cols] = Vh[0].conj()
            cand.append((float(s[0]), x))
        # generic stratum (mixing live and dead support): rows outside live
        if dead_rows.size:
            U, s, Vh = np.linalg.svd(T[dead_rows, :])
            x = Vh[0].conj()
            cand.append((float(s[0]), x))
        v, w = max(cand, key=lambda p: p[0]) if cand else (0.0, None)
        return BetaBound(v, w, True, 0.0, {"kind": "tied-tensor"})

    i1, i2 = live
    t1, t2 = t[i1], t[i2]
    b1 = np.arange(i1 * k, (i1 + 1) * k)
    b2 = np.arange(i2 * k, (i2 + 1) * k)

    # generic stratum: live blocks independent => S x spans both live blocks
    if dead_rows.size:
        U, s, Vh = np.linalg.svd(T[dead_rows, :])
        cand.append((float(s[0]), Vh[0].conj()))

    def stratum_matrix(th, ph):
        """sigma_max over x = (c1 u on b1, c2 u on b2, x_rest on dead)."""
        c1, c2 = np.cos(th), np.sin(th) * np.exp(1j * ph)
        w = np.array([t1 * c1, t2 * c2])
        w = w / np.linalg.norm(w)
        # isometry from (u, x_dead) to C^D
        E = np.zeros((D, k + dead_cols.size), dtype=complex)
        E[b1, :k] = c1 * np.eye(k)
        E[b2, :k] = c2 * np.eye(k)
        for j, col in enumerate(dead_cols):
            E[col, k + j] = 1.0
        # projection onto {(t1 c1 v, t2 c2 v)} inside the live blocks
        Q = np.eye(D, dtype=complex)
        ww = np.outer(w, w.conj())
        Q[np.ix_(b1, b1)] -= ww[0, 0] * np.eye(k)
        Q[np.ix_(b1, b2)] -= ww[0, 1] * np.eye(k)
        Q[np.ix_(b2, b1)] -= ww[1, 0] * np.eye(k)
        Q[np.ix_(b2, b2)] -= ww[1, 1] * np.eye(k)
        return Q @ T @ E

    def val(p):
        M = stratum_matrix(p[0], p[1])
        return float(np.linalg.svd(M, compute_uv=False)[0])

    ths = np.linspace(0, np.pi / 2, grid)
    phs = np.linspace(0, 2 * np.pi, grid, endpoint=False)
    best, bp = 0.0, (0.0, 0.0)
    for th in ths:
        Ms = np.stack([stratum_matrix(th, ph) for ph in phs])
        vals = np.linalg.svd(Ms, compute_uv=False)[:, 0]
        j = int(np.argmax(vals))
        if vals[j] > best:
            best, bp = float(vals[j]), (th, phs[j])
    res = minimize(lambda p: -val(p), list(bp), method="Nelder-Mead",
                   options=dict(fatol=1e-14, xatol=1e-12, maxiter=3000))
    if -res.fun > best:
        best, bp = float(-res.fun), tuple(res.x)
    M = stratum_matrix(bp[0], bp[1])
    U, s, Vh = np.linalg.svd(M)
    uu = Vh[0].conj()
    c1, c2 = np.cos(bp[0]), np.sin(bp[0]) * np.exp(1j * bp[1])
    x = np.zeros(D, dtype=complex)
    x[b1] = c1 * uu[:k]
    x[b2] = c2 * uu[:k]
    for j, col in enumerate(dead_cols):
        x[col] = uu[k + j]
    cand.append((best, x))

    v, w = max(cand, key=lambda p: p[0])
    nw = np.linalg.norm(w)
    if nw > 0:
        w = w / nw
    return BetaBound(v, w, True, 1e-9 * max(1.0, v), {"kind": "tied-tensor",
                                                      "param": bp})

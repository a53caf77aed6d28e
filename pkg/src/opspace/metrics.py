"""Distance, beta, and distance-constant estimation with certificates.

``distance`` minimizes the operator norm over the subspace (a convex
nonsmooth problem) by subgradient descent with Polyak steps and a direct
local polish, then certifies a lower bound with a trace-class functional
annihilating the subspace.  ``beta`` maximizes the vector functional
g(x) = ||(I - P_{Sx}) T x|| with strata-aware starts; certified upper
bounds come from the structural machinery in :mod:`opspace.strata`.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .linalg import InputError, RANK_TOL, as_operator, hs_inner, operator_norm
from .spaces import (Functional, MatrixSubspace, annihilator, contains,
                     project_hs, subspace_equal, tensor_with_full)
from .strata import (BetaBound, eval_g, eval_g_many, family_max)

__all__ = [
    "OptimizerOptions", "CertifiedValue", "distance", "beta",
    "beta_via_rank_one", "kappa_lower", "kappa_complete_probe",
    "extremal_witness", "scaled_kappa_relation",
]


@dataclass(frozen=True)
class OptimizerOptions:
    """Knobs shared by all searches; every run is a pure function of these."""

    restarts: int = 32
    max_iters: int = 400
    tol: float = 1e-6
    seed: int = 0
    certified_upper_mode: str = "off"          # off | grid | parametric
    budget_secs: Optional[float] = None
    kappa_unbounded_threshold: float = 1e6

    def __post_init__(self):
        if self.tol <= 0:
            raise InputError("tol must be positive")
        if self.certified_upper_mode not in ("off", "grid", "parametric"):
            raise InputError("certified_upper_mode must be off|grid|parametric")


@dataclass
class CertifiedValue:
    """Estimate with certified lower/upper bounds and their certificates."""

    estimate: float
    lower: float
    upper: float
    certificate: dict = field(default_factory=dict)
    converged: bool = True

    def __post_init__(self):
        slack = 1e-12 * max(1.0, abs(self.estimate))
        if not (self.lower <= self.estimate + slack
                and self.estimate <= self.upper + slack):
            raise ValueError(
                f"bounds out of order: {self.lower} / {self.estimate} / "
                f"{self.upper}")

    @property
    def gap(self) -> float:
        return self.upper - self.lower


DEFAULT_OPTS = OptimizerOptions()


# ---------------------------------------------------------------------------
# Primal: minimize ||T - Σ c_i B_i||_op
# ---------------------------------------------------------------------------

def _residual(T, basis, c):
    if basis.shape[0] == 0:
        return T
    return T - np.tensordot(c, basis, axes=(0, 0))


def _primal_and_subgrad(T, basis, c, cluster_rel=1e-7):
    """Objective value and an averaged subgradient over the top cluster."""
    R = _residual(T, basis, c)
    U, s, Vh = np.linalg.svd(R)
    r = int(np.sum(s >= s[0] - cluster_rel * max(1.0, s[0]))) if s.size else 0
    r = max(r, 1)
    # descent direction uses d f = -Re <δc, h>, h_j = conj(u† B_j v)
    h = np.zeros(basis.shape[0], dtype=complex)
    for i in range(r):
        u = U[:, i]
        v = Vh[i].conj()
        h += np.conj(np.einsum("i,kij,j->k", u.conj(), basis, v)) / r
    return float(s[0]), h, (U, s, Vh)


def _subgradient_descent(T, basis, c0, lower_hint, iters, rng,
                         step0=None):
    c = c0.copy()
    fbest, cbest = np.inf, c0.copy()
    nrmT = max(operator_norm(T), 1e-12)
    step0 = step0 or 0.5 * nrmT
    for it in range(iters):
        f, h, _ = _primal_and_subgrad(T, basis, c)
        if f < fbest:
            fbest, cbest = f, c.copy()
        hn = np.linalg.norm(h)
        if hn < 1e-14:
            break
        if lower_hint is not None and fbest >= lower_hint > 0:
            step = (f - lower_hint + 1e-12) / (hn * hn)
            step = min(step, 10 * nrmT / hn)
        else:
            step = step0 / (hn * math.sqrt(it + 1.0))
        c = c + step * h
    f = _primal_and_subgrad(T, basis, c)[0]
    if f < fbest:
        fbest, cbest = f, c
    return fbest, cbest


def _polish_nm(T, basis, c0, maxiter):
    k = basis.shape[0]

    def f(v):
        return float(np.linalg.svd(
            _residual(T, basis, v[:k] + 1j * v[k:]), compute_uv=False)[0])

    v0 = np.concatenate([c0.real, c0.imag])
    res = minimize(f, v0, method="Nelder-Mead",
                   options=dict(maxiter=maxiter, fatol=1e-15, xatol=1e-13))
    return float(res.fun), res.x[:k] + 1j * res.x[k:]


# ---------------------------------------------------------------------------
# Dual: feasible annihilating functionals in the trace-norm ball
# ---------------------------------------------------------------------------

def _hermitian_basis(r):
    out = []
    for i in range(r):
        H = np.zeros((r, r), dtype=complex)
        H[i, i] = 1.0
        out.append(H)
    for i in range(r):
        for j in range(i + 1, r):
            H = np.zeros((r, r), dtype=complex)
            H[i, j] = H[j, i] = 1 / np.sqrt(2)
            out.append(H)
            H = np.zeros((r, r), dtype=complex)
            H[i, j] = 1j / np.sqrt(2)
            H[j, i] = -1j / np.sqrt(2)
            out.append(H)
    return out


def _cluster_dual(T, S, Usvd, r, ann):
    """Find W ⪰ 0, tr W = 1 with U_r W V_r† ⊥ S; return the certified value."""
    U, s, Vh = Usvd
    if r > min(U.shape[0], Vh.shape[0]):
        return None
    Ur = U[:, :r]
    Vr = Vh[:r].conj().T
    herm = _hermitian_basis(r)
    rows = []
    rhs = []
    for B in S.basis:
        M = Ur.conj().T @ B @ Vr          # constraint tr(W M†)… keep both parts
        row_re = [np.real(np.vdot(M, H)) for H in herm]
        row_im = [np.imag(np.vdot(M, H)) for H in herm]
        rows.append(row_re)
        rhs.append(0.0)
        rows.append(row_im)
        rhs.append(0.0)
    rows.append([np.real(np.trace(H)) for H in herm])
    rhs.append(1.0)
    A = np.asarray(rows)
    b = np.asarray(rhs)
    Ap = np.linalg.pinv(A, rcond=1e-12)

    def to_mat(w):
        return sum(wi * H for wi, H in zip(w, herm))

    def to_vec(W):
        return np.array([np.real(np.vdot(H, W)) for H in herm])

    w = to_vec(np.diag([1.0] + [0.0] * (r - 1)))
    p = np.zeros_like(w)
    for _ in range(250):
        # affine projection
        w_aff = w - Ap @ (A @ w - b)
        # PSD projection with Dykstra correction
        y = w_aff + p
        Wm = to_mat(y)
        ev, Vm = np.linalg.eigh((Wm + Wm.conj().T) / 2)
        Wp = (Vm * np.clip(ev, 0, None)) @ Vm.conj().T
        w_new = to_vec(Wp)
        p = y - w_new
        if np.linalg.norm(w_new - w) < 1e-13:
            w = w_new
            break
        w = w_new
    W = to_mat(w)
    phi = Ur @ W @ Vr.conj().T
    return _ann_certificate(T, S, ann, phi)


def _ann_certificate(T, S, ann, phi):
    """Exact-project onto the annihilator, trace-normalize, evaluate."""
    phi = as_operator(phi)
    phi = phi - project_hs(S, phi)
    tn = float(np.sum(np.linalg.svd(phi, compute_uv=False))) if phi.size else 0.0
    if tn < 1e-14:
        return None
    phi = phi / tn
    val = float(np.real(hs_inner(T, phi)))
    return val, Functional(phi, 1.0)


def _dual_polish(T, S, ann, phi0, iters=120):
    """Subgradient ascent of Re<T,φ>/||φ||₁ over annihilator coefficients."""
    if ann.dim == 0:
        return None
    a = ann.coeffs(phi0.matrix)
    t_lin = np.array([hs_inner(T, F) for F in ann.basis])
    best = None
    step = 0.5
    for _ in range(iters):
        phi = ann.element(a)
        U, s, Vh = np.linalg.svd(phi)
        tn = float(np.sum(s))
        if tn < 1e-14:
            break
        num = float(np.real(np.vdot(a, t_lin)))
        val = num / tn
        if best is None or val > best[0]:
            best = (val, a.copy())
        # gradient of num and subgradient of tn in the coefficients
        g_num = t_lin
        sign = U[:, :len(s)] @ Vh[:len(s)]
        g_tn = np.array([hs_inner(sign, F) for F in ann.basis])
        grad = (g_num * tn - num * g_tn) / (tn * tn)
        gn = np.linalg.norm(grad)
        if gn < 1e-13:
            break
        a = a + step * np.conj(grad) / gn * 0.1
        step *= 0.995
    if best is None:
        return None
    phi = ann.element(best[1])
    return _ann_certificate(T, S, ann, phi)


def distance(T, S: MatrixSubspace, opts: OptimizerOptions = DEFAULT_OPTS,
             dual_candidates: Sequence[Functional] = (),
             warm_coeffs=None, want_dual: bool = True) -> CertifiedValue:
    """Certified operator-norm distance from T to the subspace.

    The estimate (= upper bound) is the best primal value found; the lower
    bound is the best value Re tr(φ†T) over trace-norm-one functionals φ
    annihilating S, built from the top singular cluster of the optimal
    residual (plus any supplied candidates).
    """
    T = as_operator(T)
    S._check_shape(T)
    rng = np.random.default_rng(opts.seed)
    basis = S.basis
    k = S.dim
    ann = annihilator(S)

    if k == 0:
        val = operator_norm(T)
        cert = None
        if val > 0:
            U, s, Vh = np.linalg.svd(T)
            cert = Functional(np.outer(U[:, 0], Vh[0]), 1.0)
        return CertifiedValue(val, val, val,
                              {"kind": "dual", "functional": cert,
                               "coeffs": np.zeros(0, dtype=complex), "gap": 0.0})

    hs0 = S.coeffs(T)
    starts = [hs0, np.zeros(k, dtype=complex)]
    if warm_coeffs is not None:
        starts.insert(0, np.asarray(warm_coeffs, dtype=complex))
    scale = max(1.0, float(np.linalg.norm(hs0)))
    for _ in range(max(0, opts.restarts - len(starts))):
        starts.append(hs0 + scale * 0.5
                      * (rng.standard_normal(k) + 1j * rng.standard_normal(k)))

    deadline = time.monotonic() + opts.budget_secs if opts.budget_secs else None
    fbest, cbest = np.inf, starts[0]
    lower_hint = None
    for c0 in starts:
        f, c = _subgradient_descent(T, basis, c0, lower_hint,
                                    opts.max_iters, rng)
        if f < fbest:
            fbest, cbest = f, c
        if deadline and time.monotonic() > deadline:
            break

    if not want_dual:
        if 2 * k <= 40:
            f, c = _polish_nm(T, basis, cbest, maxiter=60 * (2 * k))
            if f < fbest:
                fbest, cbest = f, c
        return CertifiedValue(fbest, 0.0, fbest,
                              {"kind": "primal-only", "coeffs": cbest,
                               "gap": fbest}, converged=True)

    best_dual = None   # (value, Functional)

    def consider(res):
        nonlocal best_dual, lower_hint
        if res is None:
            return
        val, func = res
        if best_dual is None or val > best_dual[0]:
            best_dual = (val, func)
            lower_hint = max(lower_hint or 0.0, val)

    for cand in dual_candidates:
        consider(_ann_certificate(T, S, ann, cand.matrix))

    # a couple of alternation rounds: dual informs Polyak steps, then repolish
    for round_ in range(3):
        _, _, usvd = _primal_and_subgrad(T, basis, cbest)
        rmax = min(T.shape[0], T.shape[1])
        smax = usvd[1][0] if usvd[1].size else 0.0
        cl = int(np.sum(usvd[1] >= smax - max(1e-4 * max(1.0, smax), 1e-9)))
        for r in range(1, min(rmax, max(cl, 1) + 2) + 1):
            consider(_cluster_dual(T, S, usvd, r, ann))
        gap = fbest - (best_dual[0] if best_dual else 0.0)
        if best_dual and gap <= opts.tol:
            break
        if 2 * k <= 40:
            f, c = _polish_nm(T, basis, cbest,
                              maxiter=(200 if round_ else 400) * (2 * k))
            if f < fbest:
                fbest, cbest = f, c
        f, c = _subgradient_descent(T, basis, cbest, lower_hint,
                                    2 * opts.max_iters, rng)
        if f < fbest:
            fbest, cbest = f, c
        if deadline and time.monotonic() > deadline:
            break

    if best_dual is not None:
        gap = fbest - best_dual[0]
        if gap > opts.tol:
            consider(_dual_polish(T, S, ann, best_dual[1]))

    lower = max(best_dual[0], 0.0) if best_dual else 0.0
    lower = min(lower, fbest)       # numerical guard, bounds stay ordered
    gap = fbest - lower
    cert = {"kind": "dual",
            "functional": best_dual[1] if best_dual else None,
            "coeffs": cbest, "gap": gap}
    return CertifiedValue(fbest, lower, fbest, cert,
                          converged=bool(gap <= opts.tol))


# ---------------------------------------------------------------------------
# beta: sup_x ||(I - P_{Sx}) T x||
# ---------------------------------------------------------------------------

def _ascend_g(T, basis, x0, iters=80, rank_tol=RANK_TOL, support=None):
    """Monotone envelope-gradient ascent of g on the unit sphere."""
    x = np.asarray(x0, dtype=complex).copy()
    if support is not None:
        x = x * support
    nx = np.linalg.norm(x)
    if nx == 0:
        return 0.0, x
    x /= nx
    g = eval_g(T, basis, x, rank_tol)
    step = 0.3
    for _ in range(iters):
        cols = np.tensordot(basis, x, axes=(2, 0)).T if basis.shape[0] else \
            np.zeros((T.shape[0], 0))
        Tx = T @ x
        if cols.shape[1]:
            z, *_ = np.linalg.lstsq(cols, Tx, rcond=rank_tol)
            R = T - np.tensordot(z, basis, axes=(0, 0))
        else:
            R = T
        grad = 2 * (R.conj().T @ (R @ x))
        grad = grad - np.real(np.vdot(x, grad)) * x
        if support is not None:
            grad = grad * support
        gn = np.linalg.norm(grad)
        if gn < 1e-13:
            break
        improved = False
        for _ in range(20):
            xn = x + step * grad / gn
            if support is not None:
                xn = xn * support
            nn = np.linalg.norm(xn)
            if nn < 1e-14:
                break
            xn = xn / nn
            gnew = eval_g(T, basis, xn, rank_tol)
            if gnew > g + 1e-15:
                x, g = xn, gnew
                step = min(step * 1.6, 1.0)
                improved = True
                break
            step *= 0.5
        if not improved and step < 1e-12:
            break
    return g, x


def _rank_drop_candidates(S: MatrixSubspace, rng, n_starts=3, rank_tol=RANK_TOL):
    """Vectors where dim(S x) drops below the generic value (memoized)."""
    if S.dim == 0 or S.d_in == 0:
        return []
    cached = S.meta.get("_rank_drop_cache")
    if cached is not None:
        return cached
    d = S.d_in
    probes = [rng.standard_normal(d) + 1j * rng.standard_normal(d)
              for _ in range(4)]
    generic = max(int(np.linalg.matrix_rank(
        np.tensordot(S.basis, x, axes=(2, 0)).T, tol=None)) for x in probes)
    out = []
    for r_target in range(generic - 1, 0, -1):
        for _ in range(n_starts):
            v0 = rng.standard_normal(2 * d)

            def sig(v):
                x = v[:d] + 1j * v[d:]
                n = np.linalg.norm(x)
                if n < 1e-12:
                    return 1.0
                cols = np.tensordot(S.basis, x / n, axes=(2, 0)).T
                s = np.linalg.svd(cols, compute_uv=False)
                return float(s[r_target]) if r_target < s.size else 0.0

            res = minimize(sig, v0, method="Nelder-Mead",
                           options=dict(maxiter=150 * d, fatol=1e-13,
                                        xatol=1e-11))
            if res.fun < 1e-7:
                x = res.x[:d] + 1j * res.x[d:]
                n = np.linalg.norm(x)
                if n > 1e-10:
                    out.append(x / n)
    # coordinate vectors and coordinate pairs are frequent drop loci
    for i in range(d):
        e = np.zeros(d, dtype=complex)
        e[i] = 1.0
        out.append(e)
    S.meta["_rank_drop_cache"] = out
    return out


def _beta_certified_upper(T, S, opts, found_value):
    """(upper, detail) from exact evaluators / complete family lists."""
    meta = S.meta
    be = meta.get("beta_exact")
    if be is not None:
        bound: BetaBound = be(T)
        return bound.value + bound.slack, {"mode": "exact", "bound": bound}
    ex = meta.get("beta_families_exact_for")
    if ex is not None and np.allclose(ex["matrix"], T, atol=1e-12):
        vals = [family_max(T, S.basis, fam) for fam in ex["families"]]
        if all(v.certified for v in vals):
            up = max(v.value + v.slack for v in vals)
            return up, {"mode": "families-exact", "bounds": vals}
    fams = meta.get("beta_families")
    if fams and meta.get("beta_families_complete"):
        vals = []
        for fam in fams:
            f2 = fam
            if callable(getattr(fam, "lipschitz", None)):
                f2 = replace(fam, lipschitz=float(fam.lipschitz(T)))
            vals.append(family_max(T, S.basis, f2))
        if all(v.certified for v in vals):
            up = max(v.value + v.slack for v in vals)
            return up, {"mode": "families", "bounds": vals}
    return math.inf, {"mode": "heuristic"}


def beta(T, S: MatrixSubspace, opts: OptimizerOptions = DEFAULT_OPTS,
         extra_starts: Sequence[np.ndarray] = (),
         light: bool = False) -> CertifiedValue:
    """sup over unit x of the distance from Tx to S·x, with witness.

    The lower bound is attained at the returned witness.  A finite upper
    bound is produced in ``parametric``/``grid`` mode when the subspace
    carries exact or provably complete family metadata; otherwise the upper
    bound is the +inf heuristic sentinel.  ``light`` skips the rank-drop
    search (used inside witness searches where the metadata families
    already cover the strata).
    """
    T = as_operator(T)
    S._check_shape(T)
    rng = np.random.default_rng(opts.seed + 1)
    basis = S.basis
    best, bx, bprio = 0.0, None, -1

    def consider(val, x, prio=0):
        nonlocal best, bx, bprio
        val = float(val)
        if val > best + 1e-12 * max(1.0, best) or \
                (val > best - 1e-11 * max(1.0, best) and prio > bprio):
            best, bx, bprio = max(val, best), x, prio

    meta = S.meta
    be = meta.get("beta_exact")
    exact_detail = None
    if be is not None:
        bound: BetaBound = be(T)
        exact_detail = bound
        if bound.witness is not None:
            consider(eval_g(T, basis, bound.witness), bound.witness, 2)

    fam_lists = []
    ex = meta.get("beta_families_exact_for")
    if ex is not None and ex["matrix"].shape == T.shape \
            and np.allclose(ex["matrix"], T, atol=1e-12):
        fam_lists.append(ex["families"])
    if meta.get("beta_families"):
        fam_lists.append(meta["beta_families"])
    for fams in fam_lists:
        for fam in fams:
            f2 = fam
            if callable(getattr(fam, "lipschitz", None)):
                f2 = replace(fam, lipschitz=float(fam.lipschitz(T)))
            if light:
                f2 = replace(f2, grid=max(16, f2.grid // 4))
            b = family_max(T, basis, f2)
            if b.witness is not None:
                consider(eval_g(T, basis, b.witness), b.witness, 1)

    starts = list(extra_starts)
    d = S.d_in
    part = meta.get("partition")
    if part:
        for block in part[0]:
            m = np.zeros(d)
            m[list(block)] = 1.0
            for _ in range(2 if light else 3):
                x0 = (rng.standard_normal(d) + 1j * rng.standard_normal(d)) * m
                g, x = _ascend_g(T, basis, x0, support=m)
                consider(g, x)
    for x0 in _rank_drop_candidates(S, rng):
        consider(eval_g(T, basis, x0), x0)
        g, x = _ascend_g(T, basis, x0, iters=30 if light else 80)
        consider(g, x)
    nrand = max(2, opts.restarts // 4) if light else opts.restarts
    for _ in range(nrand):
        x0 = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        g, x = _ascend_g(T, basis, x0, iters=30 if light else 80)
        consider(g, x)
    for x0 in starts:
        x0 = np.asarray(x0, dtype=complex)
        consider(eval_g(T, basis, x0), x0, 1)
        g, x = _ascend_g(T, basis, x0)
        consider(g, x)

    estimate = best
    if exact_detail is not None:
        estimate = max(estimate, exact_detail.value)

    upper = math.inf
    detail = {"mode": "heuristic"}
    if opts.certified_upper_mode in ("parametric", "grid"):
        upper, detail = _beta_certified_upper(T, S, opts, best)
        upper = max(upper, estimate)
    cert = {"kind": "witness", "witness": bx, "upper_detail": detail}
    if exact_detail is not None:
        cert["exact"] = exact_detail
    return CertifiedValue(estimate, best, max(upper, estimate), cert,
                          converged=math.isfinite(upper)
                          or opts.certified_upper_mode == "off")


def beta_via_rank_one(T, S: MatrixSubspace,
                      opts: OptimizerOptions = DEFAULT_OPTS,
                      extra_starts: Sequence[np.ndarray] = ()) -> CertifiedValue:
    """beta through its predual form: sup |⟨Tx, y⟩| over annihilating dyads.

    y x* annihilates S exactly when y ⊥ S·x, so the value agrees with
    :func:`beta`; the certificate is the rank-one functional itself.
    """
    T = as_operator(T)
    S._check_shape(T)
    rng = np.random.default_rng(opts.seed + 2)
    basis = S.basis
    d = S.d_in

    def polish(x):
        x = np.asarray(x, dtype=complex)
        nx = np.linalg.norm(x)
        if nx == 0:
            return 0.0, None, None
        x = x / nx
        val = 0.0
        y = None
        for _ in range(40):
            # best y for this x: unit vector ⊥ Sx along Tx's residual
            cols = np.tensordot(basis, x, axes=(2, 0)).T if S.dim else \
                np.zeros((S.d_out, 0))
            Tx = T @ x
            if cols.shape[1]:
                U, s, _ = np.linalg.svd(cols, full_matrices=False)
                r = int(np.sum(s > RANK_TOL * s[0])) if s.size and s[0] > 0 else 0
                resid = Tx - U[:, :r] @ (U[:, :r].conj().T @ Tx)
            else:
                resid = Tx
            nr = np.linalg.norm(resid)
            if nr < 1e-15:
                break
            y = resid / nr
            # best x for this y: maximize |y† T x| over x ⊥ {B_i† y}
            if S.dim:
                rows = np.stack([(B.conj().T @ y) for B in basis])
                _, s2, Vh2 = np.linalg.svd(rows, full_matrices=True)
                r2 = int(np.sum(s2 > RANK_TOL * s2[0])) if s2.size and s2[0] > 0 \
                    else 0
                K = Vh2[r2:].conj().T      # columns span the admissible x's
            else:
                K = np.eye(d, dtype=complex)
            if K.shape[1] == 0:
                break
            w = K.conj().T @ (T.conj().T @ y)
            nw = np.linalg.norm(w)
            if nw < 1e-15:
                break
            xn = K @ (w / nw)
            vn = abs(np.vdot(y, T @ xn))
            if vn <= val + 1e-14:
                x = xn
                val = max(val, vn)
                break
            x, val = xn, vn
        return val, x, y

    best = (0.0, None, None)
    cands = list(extra_starts)
    cands += _rank_drop_candidates(S, rng)
    cands += [rng.standard_normal(d) + 1j * rng.standard_normal(d)
              for _ in range(opts.restarts)]
    for x0 in cands:
        val, x, y = polish(x0)
        if val > best[0] and x is not None and y is not None:
            best = (val, x, y)
    val, x, y = best
    cert = {"kind": "rank-one"}
    if x is not None and y is not None:
        cert["functional"] = Functional.dyad(y, x)
        cert["witness"] = x
    return CertifiedValue(val, val, math.inf, cert, converged=True)


# ---------------------------------------------------------------------------
# kappa searches
# ---------------------------------------------------------------------------

def _quick_ratio(T, S, opts, warm=None):
    """Cheap dist/beta ratio used inside the witness search."""
    nT = operator_norm(T)
    if nT < 1e-12:
        return 0.0, None
    T = T / nT
    fast = OptimizerOptions(restarts=2, max_iters=150, tol=1e-4,
                            seed=opts.seed, certified_upper_mode="off")
    dval = distance(T, S, fast, warm_coeffs=warm, want_dual=False)
    b = beta(T, S, replace(fast, restarts=6), light=True)
    if b.estimate < 1e-11:
        return 0.0, dval.certificate.get("coeffs")
    return dval.estimate / b.estimate, dval.certificate.get("coeffs")


def kappa_lower(S: MatrixSubspace, opts: OptimizerOptions = DEFAULT_OPTS,
                extra_tests: Sequence[np.ndarray] = (),
                target: Optional[float] = None) -> CertifiedValue:
    """Search for test operators certifying a lower bound on the constant.

    The certified lower bound uses pairs (distance lower bound, certified
    beta upper bound); the estimate additionally reports the best heuristic
    ratio found.  The elementary inequality beta <= dist makes any proper
    subspace's constant at least 1.  When ``target`` is given the search
    stops as soon as the certified bound exceeds it.
    """
    if S.dim == S.ambient_dim:
        return CertifiedValue(1.0, 1.0, 1.0,
                              {"kind": "degenerate-full-space"})
    rng = np.random.default_rng(opts.seed + 3)
    cands = [np.asarray(t, dtype=complex) for t in extra_tests]
    cands += [np.asarray(t, dtype=complex)
              for t in S.meta.get("kappa_witnesses", [])]
    for _ in range(max(4, opts.restarts // 2)):
        cands.append(rng.standard_normal((S.d_out, S.d_in))
                     + 1j * rng.standard_normal((S.d_out, S.d_in)))

    scored = []
    for T in cands:
        ratio, warm = _quick_ratio(T, S, opts)
        scored.append((ratio, T, warm))
    scored.sort(key=lambda z: -z[0])

    best_est, best_T = 1.0, None
    best_lower = 1.0
    lower_cert = {"kind": "elementary"}
    full_opts = replace(opts, certified_upper_mode="parametric")

    def evaluate(T):
        nonlocal best_est, best_T, best_lower, lower_cert
        dv = distance(T, S, opts)
        bv = beta(T, S, full_opts)
        if bv.estimate <= 1e-11:
            return
        est = dv.estimate / bv.estimate
        if est > best_est:
            best_est, best_T = est, T
        if math.isfinite(bv.upper) and bv.upper > 1e-11:
            cert_ratio = dv.lower / bv.upper
            if cert_ratio > best_lower:
                best_lower = cert_ratio
                lower_cert = {"kind": "certified-pair", "witness": T,
                              "dist": dv, "beta": bv}

    for ratio, T, _ in scored[:3]:
        evaluate(T)
        if target is not None and best_lower > target:
            break

    if target is None or best_lower <= target:
        # local hill climb around the best candidate
        for ratio, T0, warm in scored[:2]:
            nT = operator_norm(T0)
            if nT <= 0:
                continue
            Tn = T0 / nT
            shape = Tn.shape
            state = {"warm": warm}

            def negr(v):
                Tv = (v[: shape[0] * shape[1]]
                      + 1j * v[shape[0] * shape[1]:]).reshape(shape)
                r, w = _quick_ratio(Tv, S, opts, state["warm"])
                state["warm"] = w
                return -r

            v0 = np.concatenate([Tn.real.ravel(), Tn.imag.ravel()])
            res = minimize(negr, v0, method="Nelder-Mead",
                           options=dict(maxfev=opts.max_iters, fatol=1e-9,
                                        adaptive=True))
            Tb = (res.x[: shape[0] * shape[1]]
                  + 1j * res.x[shape[0] * shape[1]:]).reshape(shape)
            if -res.fun > max(ratio, 1.0) + 1e-6:
                evaluate(Tb)
            if target is not None and best_lower > target:
                break

    best_est = max(best_est, best_lower)
    unbounded = best_est > opts.kappa_unbounded_threshold
    return CertifiedValue(best_est, best_lower, math.inf,
                          {"kind": "kappa", "witness": best_T,
                           "lower_certificate": lower_cert,
                           "unbounded_suspected": unbounded})


def _pad_to_level(T, d_out, d_in, n_old, n_new):
    """Embed an operator on C^{d}⊗C^{n_old} into C^{d}⊗C^{n_new}."""
    out = np.zeros((d_out * n_new, d_in * n_new), dtype=complex)
    for i in range(d_out):
        for j in range(d_in):
            out[i * n_new:i * n_new + n_old, j * n_new:j * n_new + n_old] = \
                T[i * n_old:(i + 1) * n_old, j * n_old:(j + 1) * n_old]
    return out


def kappa_complete_probe(S: MatrixSubspace, n_max: int,
                         opts: OptimizerOptions = DEFAULT_OPTS,
                         dim_cap: int = 144):
    """Lower-bound estimates for the constants of S ⊗ M_n, n = 1..n_max.

    The exact constants are non-decreasing in n, so the estimates are
    required to be monotone within 2·tol; each level is warm-started from
    the zero-padded witness of the previous one, whose distance and beta
    are unchanged by the padding.
    """
    if n_max < 1:
        raise InputError("n_max must be >= 1")
    if S.ambient_dim * n_max ** 2 > dim_cap * dim_cap:
        raise InputError("dimension cap exceeded")
    from .strata import tied_tensor_beta as _ttb
    results = []
    prev_wit = None
    for n in range(1, n_max + 1):
        Sn = tensor_with_full(S, n) if n > 1 else S
        meta = dict(S.meta) if n == 1 else {}
        if n > 1 and S.dim == 1 and S.d_out == S.d_in:
            B0 = S.basis[0]
            U0, s0, Vh0 = np.linalg.svd(B0)
            perm_meta = {"weights": s0, "U": U0, "Vh": Vh0}

            def exact(T, _n=n, _pm=perm_meta, _d=S.d_out):
                UU = np.kron(_pm["U"].conj().T, np.eye(_n))
                VV = np.kron(_pm["Vh"].conj().T, np.eye(_n))
                bound = _ttb(_pm["weights"], _n, UU @ T @ VV)
                if bound.witness is not None:
                    w = np.kron(_pm["Vh"].conj().T, np.eye(_n)) @ bound.witness
                    bound.detail["lifted"] = True
                    bound = BetaBound(bound.value, w, bound.certified,
                                      bound.slack, bound.detail)
                return bound
            if np.count_nonzero(s0 > 1e-12) <= 2:
                meta["beta_exact"] = exact
        Sn = Sn.with_meta(**meta) if meta else Sn
        extra = []
        if prev_wit is not None:
            extra.append(_pad_to_level(prev_wit, S.d_out, S.d_in, n - 1, n))
        res = kappa_lower(Sn, replace(opts, seed=opts.seed + n),
                          extra_tests=extra)
        results.append(res)
        wit = res.certificate.get("witness")
        prev_wit = wit if wit is not None else (
            extra[0] if extra else None)
    ests = [r.estimate for r in results]
    for a, b in zip(ests, ests[1:]):
        if b < a - 2 * opts.tol:
            raise AssertionError(
                f"kappa probe estimates not monotone within tolerance: {ests}")
    return results


def extremal_witness(T, S: MatrixSubspace,
                     opts: OptimizerOptions = DEFAULT_OPTS):
    """Unit vectors x with ||Tx|| ≈ ||T|| and small P_{Sx} T x.

    Requires dist(T, S) ≈ ||T|| (checked); succeeds exactly when the beta
    search reaches ||T||, which the distance-formula spaces guarantee.
    """
    T = as_operator(T)
    nT = operator_norm(T)
    dv = distance(T, S, opts)
    if abs(dv.estimate - nT) > max(10 * opts.tol, 1e-8) * max(1.0, nT):
        raise InputError(
            f"extremal witness requires dist(T,S) ≈ ||T|| "
            f"(got {dv.estimate} vs {nT})")
    bv = beta(T, S, opts)
    xs = []
    x = bv.certificate.get("witness")
    diag = []
    found = False
    if x is not None:
        xs.append(x)
        Px = np.tensordot(S.basis, x, axes=(2, 0)).T if S.dim else None
        Tx = T @ x
        if Px is not None and Px.shape[1]:
            U, s, _ = np.linalg.svd(Px, full_matrices=False)
            r = int(np.sum(s > RANK_TOL * s[0])) if s.size and s[0] > 0 else 0
            proj = U[:, :r] @ (U[:, :r].conj().T @ Tx)
        else:
            proj = np.zeros_like(Tx)
        diag.append({"norm_Tx": float(np.linalg.norm(Tx)),
                     "norm_proj": float(np.linalg.norm(proj))})
        found = (np.linalg.norm(Tx) >= nT - 50 * opts.tol
                 and np.linalg.norm(proj) <= 50 * opts.tol)
    return {"witnesses": xs, "diagnostics": diag, "found": found,
            "beta": bv, "dist": dv}


def scaled_kappa_relation(S: MatrixSubspace, X,
                          opts: OptimizerOptions = DEFAULT_OPTS) -> dict:
    """Compare constants of S and S·X against the cond(X) two-sided bound."""
    from .spaces import conjugate
    X = as_operator(X)
    if X.shape[0] != X.shape[1] or X.shape[0] != S.d_in:
        raise InputError("X must be square on the domain side")
    sv = np.linalg.svd(X, compute_uv=False)
    if sv[-1] < 1e-12 * sv[0]:
        raise InputError("X is numerically singular")
    cond = float(sv[0] / sv[-1])
    SX = conjugate(S, np.eye(S.d_out), X)
    kS = kappa_lower(S, opts)
    wit = kS.certificate.get("witness")
    extra = [wit] if wit is not None else []
    kT = kappa_lower(SX, opts, extra_tests=extra)
    witT = kT.certificate.get("witness")
    if witT is not None:
        kS2 = kappa_lower(S, opts, extra_tests=[witT])
        if kS2.estimate > kS.estimate:
            kS = kS2
    tol = 100 * opts.tol
    ok = (kT.estimate <= kS.estimate * cond * (1 + tol) + tol
          and kS.estimate <= kT.estimate * cond * (1 + tol) + tol)
    return {"kappa_S": kS, "kappa_SX": kT, "cond": cond, "pass": bool(ok)}

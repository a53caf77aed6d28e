"""Constructors for the example spaces and test scenes used throughout.

Nest bimodules are built on coordinate nests (standard basis flags); the
``conjugate`` helper in :mod:`opspace.spaces` applies unitaries when a test
needs a non-coordinate nest.  Each scene bundles a subspace with its test
operators, certified beta machinery and known extremal data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import InputError, as_operator, hs_inner, operator_norm
from .spaces import (Functional, MatrixSubspace, from_spanning_set,
                     full_subspace, tensor_with_scalar, zero_subspace)
from .strata import (BetaBound, ProjectionFamily, VectorFamily, mask_beta,
                     tied_tensor_beta)

__all__ = [
    "NestBimoduleSpec", "TriConstSpec", "DiagConstSpec", "AtomOp",
    "build_nest_bimodule", "build_tri_const", "build_diag_const",
    "mask_subspace", "family_22", "upper_triangular", "masa_diag",
    "masa_pattern_32", "masa_pattern_23", "scalar_identity",
    "block_scalar_algebra", "Scene", "prop_two_scene", "kappa103_scene",
    "small_s_scene", "cor_dim2_scene", "get_scene", "scene_names",
]


# ---------------------------------------------------------------------------
# Nest bimodules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NestBimoduleSpec:
    """Coordinate nest bimodule data.

    ``domain_nest``/``codomain_nest`` are strictly increasing integer chains
    starting at 0 and ending at the respective dimension.  ``theta`` maps
    domain nest indices to codomain nest indices, monotone non-decreasing;
    columns inside domain interval j (columns [n_{j-1}, n_j)) may hit rows
    below codomain_nest[theta[j]].
    """

    domain_nest: tuple
    codomain_nest: tuple
    theta: tuple

    def __post_init__(self):
        dn, cn, th = self.domain_nest, self.codomain_nest, self.theta
        if len(dn) < 2 or dn[0] != 0 or any(b <= a for a, b in zip(dn, dn[1:])):
            raise InputError("domain nest must strictly increase from 0")
        if len(cn) < 2 or cn[0] != 0 or any(b <= a for a, b in zip(cn, cn[1:])):
            raise InputError("codomain nest must strictly increase from 0")
        if len(th) != len(dn):
            raise InputError("theta must assign one codomain index per nest element")
        if any(t2 < t1 for t1, t2 in zip(th, th[1:])) or th[0] < 0 \
                or th[-1] > len(cn) - 1:
            raise InputError("theta must be monotone into the codomain nest")

    @property
    def d_in(self) -> int:
        return self.domain_nest[-1]

    @property
    def d_out(self) -> int:
        return self.codomain_nest[-1]

    def mask(self) -> np.ndarray:
        """Boolean d_out × d_in staircase mask of allowed entries."""
        m = np.zeros((self.d_out, self.d_in), dtype=bool)
        for j in range(1, len(self.domain_nest)):
            c0, c1 = self.domain_nest[j - 1], self.domain_nest[j]
            rows = self.codomain_nest[self.theta[j]]
            m[:rows, c0:c1] = True
        return m

    def atom_rectangles(self):
        """(j, rows, cols) for each potential atom position.

        j indexes the domain interval; the atom rows are the top stripe of
        its allowed rows (between consecutive theta images).
        """
        out = []
        for j in range(1, len(self.domain_nest)):
            l = self.theta[j]
            if l == 0:
                continue
            rows = (self.codomain_nest[l - 1], self.codomain_nest[l])
            cols = (self.domain_nest[j - 1], self.domain_nest[j])
            out.append((j, rows, cols))
        return out


def full_nest_spec(d: int) -> NestBimoduleSpec:
    """The full chain 0 < 1 < ... < d with theta = identity (T(N) mask)."""
    chain = tuple(range(d + 1))
    return NestBimoduleSpec(chain, chain, chain)


def mask_subspace(mask: np.ndarray, meta_extra: Optional[dict] = None
                  ) -> MatrixSubspace:
    """Span of the matrix units allowed by a boolean mask."""
    mask = np.asarray(mask, dtype=bool)
    d_out, d_in = mask.shape
    mats = []
    for a in range(d_out):
        for b in range(d_in):
            if mask[a, b]:
                E = np.zeros((d_out, d_in), dtype=complex)
                E[a, b] = 1.0
                mats.append(E)
    S = from_spanning_set(mats) if mats else zero_subspace(d_out, d_in)
    meta = {"mask": mask, "beta_exact": (lambda T, _m=mask: mask_beta(_m, T))}
    if meta_extra:
        meta.update(meta_extra)
    return S.with_meta(**meta)


def build_nest_bimodule(spec: NestBimoduleSpec) -> MatrixSubspace:
    return mask_subspace(spec.mask(), {"kind": "nest", "nest_spec": spec,
                                       "expected_reflexive": True})


@dataclass(frozen=True)
class AtomOp:
    """Selected atom of a bimodule pair: domain interval j, block operator X."""

    j: int
    X: np.ndarray


@dataclass(frozen=True)
class TriConstSpec:
    """Outer nest bimodule with selected atoms pinned to one-dimensional blocks."""

    outer: NestBimoduleSpec
    atoms: tuple

    def __post_init__(self):
        rects = {j: (rows, cols) for j, rows, cols in self.outer.atom_rectangles()}
        seen_rows = set()
        for atom in self.atoms:
            if atom.j not in rects:
                raise InputError(f"domain interval {atom.j} has no atom stripe")
            rows, cols = rects[atom.j]
            if rows in seen_rows:
                raise InputError("atom row stripes must be distinct")
            seen_rows.add(rows)
            X = as_operator(atom.X)
            if X.shape != (rows[1] - rows[0], cols[1] - cols[0]):
                raise InputError(f"atom operator shape {X.shape} does not fit "
                                 f"stripe {rows}x{cols}")


def build_tri_const(spec: TriConstSpec) -> MatrixSubspace:
    """Space {X in outer : (atom stripe of X) in C·X_j for selected atoms}."""
    mask = spec.outer.mask()
    rects = {j: (rows, cols) for j, rows, cols in spec.outer.atom_rectangles()}
    d_out, d_in = mask.shape
    free = mask.copy()
    mats = []
    for atom in spec.atoms:
        rows, cols = rects[atom.j]
        free[rows[0]:rows[1], cols[0]:cols[1]] = False
        X = as_operator(atom.X)
        if np.linalg.norm(X) > 0:
            M = np.zeros((d_out, d_in), dtype=complex)
            M[rows[0]:rows[1], cols[0]:cols[1]] = X
            mats.append(M)
    for a in range(d_out):
        for b in range(d_in):
            if free[a, b]:
                E = np.zeros((d_out, d_in), dtype=complex)
                E[a, b] = 1.0
                mats.append(E)
    S = from_spanning_set(mats) if mats else zero_subspace(d_out, d_in)
    return S.with_meta(kind="tri_const", tri_spec=spec,
                       expected_reflexive=True)


@dataclass(frozen=True)
class DiagConstSpec:
    """Partitioned space: diagonal blocks constrained, off-blocks free.

    ``domain_partition`` / ``codomain_partition`` are disjoint exhaustive
    index tuples with a common block count; ``blocks`` gives one spec per
    index: "full", "zero", a NestBimoduleSpec, a TriConstSpec, or a matrix
    (meaning the one-dimensional space it spans).
    """

    domain_partition: tuple
    codomain_partition: tuple
    blocks: tuple

    def __post_init__(self):
        if not (len(self.domain_partition) == len(self.codomain_partition)
                == len(self.blocks)):
            raise InputError("partitions and blocks must have equal length")
        for part in (self.domain_partition, self.codomain_partition):
            flat = [i for blk in part for i in blk]
            if sorted(flat) != list(range(len(flat))):
                raise InputError("partition must be disjoint and exhaustive")

    @property
    def d_in(self) -> int:
        return sum(len(b) for b in self.domain_partition)

    @property
    def d_out(self) -> int:
        return sum(len(b) for b in self.codomain_partition)


def _block_space(spec, rows: int, cols: int) -> MatrixSubspace:
    if spec == "full":
        return full_subspace(rows, cols)
    if spec == "zero":
        return zero_subspace(rows, cols)
    if isinstance(spec, NestBimoduleSpec):
        S = build_nest_bimodule(spec)
    elif isinstance(spec, TriConstSpec):
        S = build_tri_const(spec)
    else:
        X = as_operator(spec)
        S = from_spanning_set([X]) if np.linalg.norm(X) > 0 \
            else zero_subspace(X.shape[0], X.shape[1])
    if (S.d_out, S.d_in) != (rows, cols):
        raise InputError("block spec shape does not match partition block")
    return S


def build_diag_const(spec: DiagConstSpec) -> MatrixSubspace:
    d_in, d_out = spec.d_in, spec.d_out
    mats = []
    in_diag = np.zeros((d_out, d_in), dtype=bool)
    for dom, cod, blk in zip(spec.domain_partition, spec.codomain_partition,
                             spec.blocks):
        dom = list(dom)
        cod = list(cod)
        in_diag[np.ix_(cod, dom)] = True
        B = _block_space(blk, len(cod), len(dom))
        for M in B.basis:
            big = np.zeros((d_out, d_in), dtype=complex)
            big[np.ix_(cod, dom)] = M
            mats.append(big)
    for a in range(d_out):
        for b in range(d_in):
            if not in_diag[a, b]:
                E = np.zeros((d_out, d_in), dtype=complex)
                E[a, b] = 1.0
                mats.append(E)
    S = from_spanning_set(mats) if mats else zero_subspace(d_out, d_in)
    return S.with_meta(kind="diag_const", diag_spec=spec,
                       partition=(spec.domain_partition,
                                  spec.codomain_partition),
                       expected_reflexive=True)


# ---------------------------------------------------------------------------
# Canonical 2x2 family and small fixed spaces
# ---------------------------------------------------------------------------

def _family22_points(r: float, s: float):
    x1 = np.array([1.0, 0.0], dtype=complex)
    y1p = np.array([0.0, 1.0], dtype=complex)
    x2 = np.array([-r, 1.0], dtype=complex)
    x2 = x2 / np.linalg.norm(x2)
    y2p = np.array([1.0, -s], dtype=complex)
    y2p = y2p / np.linalg.norm(y2p)
    return x1, y1p, x2, y2p


def family_22(r: float, s: float) -> MatrixSubspace:
    """Two-dimensional spaces spanned by [[1, r], [0, 0]] and [[0, s], [0, 1]].

    Only the two domain rays x1 = e1 and x2 ∝ (-r, 1) have one-dimensional
    image, so beta has the exact two-point form recorded in the metadata.
    """
    if r < 0 or s < 0:
        raise InputError("parameters must be nonnegative")
    M1 = np.array([[1.0, r], [0.0, 0.0]], dtype=complex)
    M2 = np.array([[0.0, s], [0.0, 1.0]], dtype=complex)
    S = from_spanning_set([M1, M2])
    x1, y1p, x2, y2p = _family22_points(r, s)

    def beta_exact(T, _pts=(x1, y1p, x2, y2p)):
        a1, b1, a2, b2 = _pts
        v1 = abs(np.vdot(b1, T @ a1))
        v2 = abs(np.vdot(b2, T @ a2))
        if v1 >= v2:
            return BetaBound(float(v1), a1, True, 0.0, {"kind": "family22"})
        return BetaBound(float(v2), a2, True, 0.0, {"kind": "family22"})

    return S.with_meta(kind="family22", r=r, s=s, beta_exact=beta_exact,
                       expected_reflexive=True,
                       expected_one_hyperreflexive=(r == 0 and s == 0))


def upper_triangular(d: int) -> MatrixSubspace:
    return build_nest_bimodule(full_nest_spec(d))


def masa_diag(d: int) -> MatrixSubspace:
    """The diagonal masa in M_d as a mask pattern."""
    return mask_subspace(np.eye(d, dtype=bool),
                         {"kind": "masa_diag", "expected_reflexive": True})


def masa_pattern_32() -> MatrixSubspace:
    """Independent entries [[a,0],[0,b],[0,0]] in M_{3,2}."""
    mask = np.zeros((3, 2), dtype=bool)
    mask[0, 0] = mask[1, 1] = True
    return mask_subspace(mask, {"kind": "masa32", "expected_reflexive": True})


def masa_pattern_23() -> MatrixSubspace:
    """Independent entries [[a,0,0],[0,b,0]] in M_{2,3}."""
    mask = np.zeros((2, 3), dtype=bool)
    mask[0, 0] = mask[1, 1] = True
    return mask_subspace(mask, {"kind": "masa23", "expected_reflexive": True})


def scalar_identity(d: int) -> MatrixSubspace:
    S = from_spanning_set([np.eye(d, dtype=complex)])
    return S.with_meta(kind="scalars", expected_reflexive=True)


def block_scalar_algebra() -> MatrixSubspace:
    """span{diag(1,0,0), diag(0,1,1)} — scalars on a 1+2 block split."""
    S = from_spanning_set([np.diag([1.0, 0, 0]).astype(complex),
                           np.diag([0, 1.0, 1.0]).astype(complex)])
    return S


# ---------------------------------------------------------------------------
# Scenes
# ---------------------------------------------------------------------------

@dataclass
class Scene:
    """A subspace with test operators, expectations, and extremal data."""

    name: str
    space: MatrixSubspace
    ops: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)
    kappa_witnesses: list = field(default_factory=list)
    duals: dict = field(default_factory=dict)
    notes: str = ""


def _prop_two_families(T: np.ndarray):
    """Invariant-subspace families for the 1+2 block-scalar algebra.

    The lattice consists of span{e1}, its complement, the lines inside the
    2+3 coordinate plane, and e1 + such a line; for the scene's real test
    matrix the phase along the line is immaterial, which keeps every family
    one-parameter and exactly maximizable.
    """
    def line(ts):
        ts = ts[:, 0]
        out = np.zeros((ts.shape[0], 3), dtype=complex)
        out[:, 1] = np.cos(ts)
        out[:, 2] = np.sin(ts)
        return out

    def e1(ts):
        out = np.zeros((max(ts.shape[0], 1), 3), dtype=complex)
        out[:, 0] = 1.0
        return out

    def e1_plus_line_proj(ts):
        ts = ts[:, 0]
        n = ts.shape[0]
        P = np.zeros((n, 3, 3), dtype=complex)
        P[:, 0, 0] = 1.0
        c, s = np.cos(ts), np.sin(ts)
        P[:, 1, 1] = c * c
        P[:, 1, 2] = c * s
        P[:, 2, 1] = s * c
        P[:, 2, 2] = s * s
        return P

    def plane_proj(ts):
        n = max(ts.shape[0], 1)
        P = np.zeros((n, 3, 3), dtype=complex)
        P[:, 1, 1] = 1.0
        P[:, 2, 2] = 1.0
        return P

    return [
        VectorFamily(line, trig_exact=True, trig_degree=6, label="line"),
        VectorFamily(e1, ranges=((0.0, 1.0),), label="e1", grid=2,
                     lipschitz=0.0),
        ProjectionFamily(e1_plus_line_proj, trig_exact=True, trig_degree=8,
                         label="e1+line"),
        ProjectionFamily(plane_proj, ranges=((0.0, 1.0),), label="e1-perp",
                         grid=2, lipschitz=0.0),
    ]


def _prop_two_general_families(d=3):
    """Phase-complete lattice families, valid for any test operator."""
    def line(ps):
        t, ph = ps[:, 0], ps[:, 1]
        out = np.zeros((ps.shape[0], 3), dtype=complex)
        out[:, 1] = np.cos(t)
        out[:, 2] = np.sin(t) * np.exp(1j * ph)
        return out

    def e1_plus_line_proj(ps):
        v = line(ps)
        n = ps.shape[0]
        P = np.zeros((n, 3, 3), dtype=complex)
        P[:, 0, 0] = 1.0
        P += np.einsum("ni,nj->nij", v, v.conj())
        return P

    def e1(ts):
        out = np.zeros((max(ts.shape[0], 1), 3), dtype=complex)
        out[:, 0] = 1.0
        return out

    def plane_proj(ts):
        n = max(ts.shape[0], 1)
        P = np.zeros((n, 3, 3), dtype=complex)
        P[:, 1, 1] = 1.0
        P[:, 2, 2] = 1.0
        return P

    two = ((0.0, np.pi), (0.0, 2 * np.pi))
    return [
        VectorFamily(line, ranges=two, lipschitz=lambda T: 4 * operator_norm(T),
                     label="line", grid=128),
        ProjectionFamily(e1_plus_line_proj, ranges=two,
                         lipschitz=lambda T: 6 * operator_norm(T),
                         label="e1+line", grid=128),
        VectorFamily(e1, ranges=((0.0, 1.0),), label="e1", grid=2,
                     lipschitz=lambda T: 0.0),
        ProjectionFamily(plane_proj, ranges=((0.0, 1.0),), label="e1-perp",
                         grid=2, lipschitz=lambda T: 0.0),
    ]


def prop_two_scene() -> Scene:
    """Block-scalar algebra in M_3 with its extremal test matrix."""
    r2 = np.sqrt(2.0)
    T = np.array([[0, 0, r2], [-r2, -1, 0], [0, 0, 1]], dtype=complex)
    D = block_scalar_algebra()
    D = D.with_meta(
        kind="prop_two",
        is_unital_algebra=True,
        beta_families=_prop_two_general_families(),
        beta_families_complete=True,
        beta_families_exact_for={"matrix": T, "families": _prop_two_families(T)},
        kappa_witnesses=[T],
        expected_reflexive=True,
        partition=(((0,), (1, 2)), ((0,), (1, 2))),
    )
    return Scene(
        name="prop-two",
        space=D,
        ops={"T": T},
        expected={"dist": np.sqrt(3.0), "beta": 1.5,
                  "beta_witness_s": np.sqrt(3.0) / 2.0,
                  "kappa_lower": 2.0 / np.sqrt(3.0)},
        kappa_witnesses=[T],
    )


def kappa103_scene() -> Scene:
    """Two-block column isometry against {(aI; bI)} with the 1-D circle family."""
    al, be = np.sin(np.pi / 8), np.cos(np.pi / 8)
    r2 = np.sqrt(2.0)
    T1 = np.array([[al, -be], [al, -be]], dtype=complex) / r2
    T2 = np.array([[0, 0], [be, al]], dtype=complex)
    T = np.vstack([T1, T2])
    B1 = np.vstack([np.eye(2), np.zeros((2, 2))]).astype(complex) / r2
    B2 = np.vstack([np.zeros((2, 2)), np.eye(2)]).astype(complex) / r2
    S = from_spanning_set([B1, B2])

    f1 = np.array([1, 1, 0, 0], dtype=complex) / r2
    f2 = np.array([0, 0, 0, 1], dtype=complex)
    Q = np.outer(f1, f1.conj()) + np.outer(f2, f2.conj())
    P = np.eye(2, dtype=complex)

    def circle(ts):
        ts = ts[:, 0]
        out = np.zeros((ts.shape[0], 2), dtype=complex)
        out[:, 0] = np.cos(ts)
        out[:, 1] = np.sin(ts)
        return out

    def sphere(ps):
        t, ph = ps[:, 0], ps[:, 1]
        out = np.zeros((ps.shape[0], 2), dtype=complex)
        out[:, 0] = np.cos(t)
        out[:, 1] = np.sin(t) * np.exp(1j * ph)
        return out

    S = S.with_meta(
        kind="kappa103",
        beta_families=[VectorFamily(sphere,
                                    ranges=((0.0, np.pi), (0.0, 2 * np.pi)),
                                    lipschitz=lambda TT: 4 * operator_norm(TT),
                                    label="cp1", grid=160)],
        beta_families_complete=True,
        beta_families_exact_for={
            "matrix": T,
            "families": [VectorFamily(circle, trig_exact=True, trig_degree=4,
                                      label="real-circle")]},
        kappa_witnesses=[T],
    )

    def psi_circle(ts):
        x, y = np.cos(ts), np.sin(ts)
        return 0.5 * (x + y) ** 2 * (al * x - be * y) ** 2 \
            + y ** 2 * (be * x + al * y) ** 2

    return Scene(
        name="kappa103",
        space=S,
        ops={"T": T, "P": P, "Q": Q, "QTP_expected":
             np.array([[al, -be], [be, al]], dtype=complex)},
        expected={"dist": 1.0, "k_min_threshold": 0.058,
                  "kappa_threshold": 1.03, "psi_circle": psi_circle},
        kappa_witnesses=[T],
    )


def small_s_space(s: float, k: int = 2) -> MatrixSubspace:
    """{diag(X, sX, 0_k) : X in M_k} inside M_{3k}."""
    mats = []
    for p in range(k):
        for q in range(k):
            E = np.zeros((k, k), dtype=complex)
            E[p, q] = 1.0
            M = np.zeros((3 * k, 3 * k), dtype=complex)
            M[:k, :k] = E
            M[k:2 * k, k:2 * k] = s * E
            mats.append(M)
    S = from_spanning_set(mats)
    return S.with_meta(
        kind="small_s", s=s, k=k,
        beta_exact=(lambda T, _s=s, _k=k: tied_tensor_beta([1.0, _s, 0.0], _k, T)),
        expected_reflexive=True)


def small_s_scene(s: float) -> Scene:
    """Rank-two tied-diagonal model with the printed extremal pair (A, ψ)."""
    if not 0 < s <= 1:
        raise InputError("s must lie in (0, 1]")
    k = 2
    e1 = np.zeros(k, dtype=complex)
    e1[0] = 1
    e2 = np.zeros(k, dtype=complex)
    e2[1] = 1
    f = e1
    r2 = np.sqrt(2.0)
    A = np.zeros((3 * k, 3 * k), dtype=complex)
    A[:k, :k] = -np.outer(e2, f.conj())
    A[:k, k:2 * k] = np.outer(e1, f.conj()) / r2
    A[k:2 * k, k:2 * k] = np.outer(e2, f.conj()) / r2
    psi = np.zeros((3 * k, 3 * k), dtype=complex)
    psi[:k, :k] = -s / (s + r2) * np.outer(f, e2.conj())
    psi[k:2 * k, :k] = 1 / (s + r2) * np.outer(f, e1.conj())
    psi[k:2 * k, k:2 * k] = 1 / (s + r2) * np.outer(f, e2.conj())
    # our pairing is tr(φ† T); the printed functional pairs by tr(Tφ)
    phi = Functional.from_matrix(psi.conj().T)
    S = small_s_space(s, k)
    return Scene(
        name=f"small-s:{s:g}",
        space=S,
        ops={"A": A},
        duals={"A": phi},
        expected={"dist": 1.0, "beta_limit": 1.0 / r2},
        kappa_witnesses=[A],
    )


def cor_dim2_scene(S2: Optional[MatrixSubspace] = None) -> Scene:
    """S ⊗ C·I_3 for a two-dimensional S, with the lifted block-scalar witness.

    The compression onto span{x1⊗e1, x2⊗e2, x2⊗e3} (and the y-side span)
    is exactly the 1+2 block-scalar algebra, so the extremal matrix there
    lifts to a certified test operator here.
    """
    if S2 is None:
        S2 = from_spanning_set([np.diag([1.0, 0.0]).astype(complex),
                                np.diag([0.0, 1.0]).astype(complex)])
    if S2.dim < 2:
        raise InputError("need a subspace of dimension at least 2")
    big = tensor_with_scalar(S2, 3)
    # choose x_i, y_i making the two functionals <A x_i, y_i> independent
    x1 = np.zeros(S2.d_in, dtype=complex)
    x1[0] = 1
    x2 = np.zeros(S2.d_in, dtype=complex)
    x2[1 % S2.d_in] = 1
    y1 = np.zeros(S2.d_out, dtype=complex)
    y1[0] = 1
    y2 = np.zeros(S2.d_out, dtype=complex)
    y2[1 % S2.d_out] = 1
    n = 3
    def emb_dom(x, j):
        out = np.zeros(S2.d_in * n, dtype=complex)
        out[x.nonzero()[0][0] * n + j] = 1.0
        return out
    def emb_cod(y, j):
        out = np.zeros(S2.d_out * n, dtype=complex)
        out[y.nonzero()[0][0] * n + j] = 1.0
        return out
    FP = np.column_stack([emb_dom(x1, 0), emb_dom(x2, 1), emb_dom(x2, 2)])
    FQ = np.column_stack([emb_cod(y1, 0), emb_cod(y2, 1), emb_cod(y2, 2)])
    scene = prop_two_scene()
    TD = scene.ops["T"]
    T_lift = FQ @ TD @ FP.conj().T
    return Scene(
        name="cor-dim2",
        space=big,
        ops={"T": T_lift, "FP": FP, "FQ": FQ, "TD": TD},
        expected={"dist": np.sqrt(3.0), "kappa_lower": 2.0 / np.sqrt(3.0)},
        kappa_witnesses=[T_lift],
    )


# frozen extremal test operators found by offline ratio search -------------

_MASA32_WITNESS = None   # set below once, numerically cleaned
_MASA3_WITNESS = None


def masa_pattern_32_scene() -> Scene:
    S = masa_pattern_32()
    wit = [] if _MASA32_WITNESS is None else [_MASA32_WITNESS]
    return Scene(name="masa-32", space=S,
                 expected={"kappa_lower": np.sqrt(9.0 / 8.0)},
                 kappa_witnesses=wit)


def masa_diag3_scene() -> Scene:
    S = masa_diag(3)
    wit = [] if _MASA3_WITNESS is None else [_MASA3_WITNESS]
    return Scene(name="masa-diag3", space=S,
                 expected={"kappa_lower": np.sqrt(3.0 / 2.0)},
                 kappa_witnesses=wit)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

def scene_names():
    return ["prop-two", "kappa103", "small-s:<s>", "family22:r=<r>,s=<s>",
            "masa-32", "masa-diag3", "cor-dim2", "upper:<d>", "masa-diag:<d>"]


def get_scene(name: str) -> Scene:
    """Look up a catalog entry by its string id."""
    name = name.strip()
    if name == "prop-two":
        return prop_two_scene()
    if name == "kappa103":
        return kappa103_scene()
    if name == "masa-32":
        return masa_pattern_32_scene()
    if name == "masa-diag3":
        return masa_diag3_scene()
    if name == "cor-dim2":
        return cor_dim2_scene()
    if name.startswith("small-s:"):
        return small_s_scene(float(name.split(":", 1)[1]))
    if name.startswith("family22:"):
        params = dict(kv.split("=") for kv in name.split(":", 1)[1].split(","))
        r, s = float(params["r"]), float(params["s"])
        return Scene(name=name, space=family_22(r, s),
                     expected={"one_hyperreflexive": r == 0 and s == 0})
    if name.startswith("upper:"):
        d = int(name.split(":", 1)[1])
        return Scene(name=name, space=upper_triangular(d))
    if name.startswith("masa-diag:"):
        d = int(name.split(":", 1)[1])
        return Scene(name=name, space=masa_diag(d))
    raise InputError(f"unknown catalog id: {name!r}")

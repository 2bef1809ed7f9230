"""Finite-dimensional Lie theory: the transvection algebra ``g = a x (h + h)``,
the solvable algebra ``s = a x h`` and their invariant tensors."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from . import geometry as geo
from .errors import MissingInvolution, RankAmbiguous
from .report import Report

GAP_RATIO = 10.0


@dataclass(frozen=True)
class SpaceParams:
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")

    @property
    def dim_S(self) -> int:
        return 2 * self.n + 2

    dim_M = dim_S

    @property
    def degenerate(self) -> bool:
        return self.n == 0


@dataclass(frozen=True)
class LieAlgebraData:
    dim: int
    basis_labels: tuple
    structure_constants: np.ndarray  # c[i, j, k]: [e_i, e_j] = c[i, j, k] e_k
    involution: np.ndarray | None = None
    cocycle: np.ndarray | None = None

    def bracket(self, x, y) -> np.ndarray:
        return np.einsum("i,j,ijk->k", x, y, self.structure_constants)

    def ad(self, x) -> np.ndarray:
        """Matrix of ``ad_x`` acting on column vectors."""
        return np.einsum("i,ijk->kj", x, self.structure_constants)


def _bracket_table(dim, rules):
    c = np.zeros((dim, dim, dim))
    for (i, j), out in rules.items():
        for k, coef in out.items():
            c[i, j, k] += coef
            c[j, i, k] -= coef
    return c


def _heisenberg_rules(n, v0, e, sign):
    """``[H, v] = sign v``, ``[H, E] = 2 sign E`` and ``[v_i, v_j] = Omega_ij E``."""
    rules = {}
    for i in range(2 * n):
        rules[(0, v0 + i)] = {v0 + i: sign}
    rules[(0, e)] = {e: 2.0 * sign}
    om = geo.omega_matrix(n)
    for i, j in itertools.combinations(range(2 * n), 2):
        if om[i, j]:
            rules[(v0 + i, v0 + j)] = {e: om[i, j]}
    return rules


def build_solvable_algebra(params: SpaceParams) -> LieAlgebraData:
    n = params.n
    dim = 2 * n + 2
    labels = ("H",) + tuple(f"v{i + 1}" for i in range(2 * n)) + ("E",)
    c = _bracket_table(dim, _heisenberg_rules(n, 1, dim - 1, 1.0))
    return LieAlgebraData(dim, labels, c)


def build_transvection_algebra(params: SpaceParams) -> LieAlgebraData:
    """``g`` with basis ``H, X_1..X_2n, E_1, Y_1..Y_2n, E_2`` (two Heisenberg copies).

    ``H`` acts with weights ``(1, 2)`` on the first copy and ``(-1, -2)`` on the
    second; ``sigma`` swaps the copies and negates ``H``.  The cocycle lives on
    ``p`` with basis ``H, X_i - Y_i, E_1 - E_2`` and equals
    ``H* ^ E_p* + Omega`` there, extended by zero on ``k``.
    """
    n = params.n
    m = 2 * n
    dim = 2 * m + 3
    x0, e1 = 1, m + 1
    y0, e2 = m + 2, 2 * m + 2
    rules = _heisenberg_rules(n, x0, e1, 1.0)
    rules.update(_heisenberg_rules(n, y0, e2, -1.0))
    c = _bracket_table(dim, rules)
    labels = (("H",) + tuple(f"X{i + 1}" for i in range(m)) + ("E1",)
              + tuple(f"Y{i + 1}" for i in range(m)) + ("E2",))

    sig = np.zeros((dim, dim))
    sig[0, 0] = -1.0
    for i in range(m + 1):
        sig[y0 + i, x0 + i] = 1.0
        sig[x0 + i, y0 + i] = 1.0

    # coordinates of a vector of p on H, X_i - Y_i, E_1 - E_2
    proj = np.zeros((m + 2, dim))
    proj[0, 0] = 1.0
    for i in range(m + 1):
        proj[1 + i, x0 + i] = 0.5
        proj[1 + i, y0 + i] = -0.5
    B = np.zeros((m + 2, m + 2))
    B[0, -1], B[-1, 0] = 1.0, -1.0
    B[1:-1, 1:-1] = geo.omega_matrix(n)
    cocycle = proj.T @ B @ proj
    return LieAlgebraData(dim, labels, c, sig, cocycle)


def eigenspaces(sigma: np.ndarray):
    """Orthonormal bases (columns) of the -1 and +1 eigenspaces."""
    d = sigma.shape[0]
    return null_space(sigma + np.eye(d)), null_space(sigma - np.eye(d))


def jacobi_residual(alg: LieAlgebraData) -> float:
    c = alg.structure_constants
    # [[e_i,e_j],e_k] + cyclic, component-wise
    t = np.einsum("ijm,mkl->ijkl", c, c)
    cyc = t + np.transpose(t, (1, 2, 0, 3)) + np.transpose(t, (2, 0, 1, 3))
    return float(np.max(np.abs(cyc))) if alg.dim else 0.0


def antisymmetry_residual(alg: LieAlgebraData) -> float:
    c = alg.structure_constants
    return float(np.max(np.abs(c + np.swapaxes(c, 0, 1)))) if alg.dim else 0.0


def automorphism_residual(alg: LieAlgebraData) -> float:
    s = alg.involution
    c = alg.structure_constants
    lhs = np.einsum("ijm,km->ijk", c, s)  # sigma [e_i, e_j]
    rhs = np.einsum("ai,bj,abk->ijk", s, s, c)  # [sigma e_i, sigma e_j]
    return float(max(np.max(np.abs(lhs - rhs)), np.max(np.abs(s @ s - np.eye(alg.dim)))))


def cocycle_residual(alg: LieAlgebraData, B: np.ndarray | None = None) -> float:
    """Chevalley identity ``B([x,y],z) + B([y,z],x) + B([z,x],y) = 0``."""
    B = alg.cocycle if B is None else B
    c = alg.structure_constants
    t = np.einsum("ijm,mk->ijk", c, B)
    cyc = t + np.transpose(t, (1, 2, 0)) + np.transpose(t, (2, 0, 1))
    return float(np.max(np.abs(cyc)))


def rank_and_gap(m: np.ndarray, tol: float) -> tuple[int, float]:
    """Numerical rank and the ratio of the singular values straddling the cut.

    The ratio is ``inf`` when nothing is cut (full rank or zero matrix).
    """
    if m.size == 0:
        return 0, float("inf")
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0:
        return 0, float("inf")
    s = s / s[0]
    r = int(np.sum(s > tol))
    if 0 < r < len(s):
        return r, float(s[r - 1] / max(s[r], 1e-300))
    return r, float("inf")


def numerical_rank(m: np.ndarray, tol: float, require_gap: bool = True) -> int:
    """Rank from singular values relative to the largest one.

    Raises :class:`RankAmbiguous` when the values straddling the cut are
    closer than a factor ``GAP_RATIO``.
    """
    r, gap = rank_and_gap(m, tol)
    if require_gap and gap < GAP_RATIO:
        raise RankAmbiguous(f"singular values around rank {r} are separated by only {gap:.3g}")
    return r


def center(alg: LieAlgebraData, tol: float = 1e-12) -> np.ndarray:
    """Basis (columns) of the center, from the kernel of ``x -> ad_x``."""
    c = alg.structure_constants
    # rows: (j, k) pairs, columns: i; [e_i, e_j]_k
    m = np.transpose(c, (1, 2, 0)).reshape(-1, alg.dim)
    return null_space(m, rcond=tol)


def check_symmetric_triple(alg: LieAlgebraData, tol: float = 1e-12) -> Report:
    if alg.involution is None:
        raise MissingInvolution("a symmetric couple needs an involution")
    rep = Report("symmetric_triple")
    P, K = eigenspaces(alg.involution)
    rep.info.update(dim_k=K.shape[1], dim_p=P.shape[1])

    brackets = [alg.bracket(P[:, i], P[:, j])
                for i, j in itertools.combinations(range(P.shape[1]), 2)]
    pp = np.array(brackets).T if brackets else np.zeros((alg.dim, 0))
    # [p, p] lies in k and spans it
    outside = np.abs(alg.involution @ pp - pp).max() if pp.size else 0.0
    rank = numerical_rank(pp, 1e-10, require_gap=False) if pp.size else 0
    rep.add("pp_in_k", outside, tol, "symmetric couple: [p,p] = k")
    rep.add("pp_spans_k", abs(rank - K.shape[1]) if K.shape[1] else 1.0, 0.5,
            "symmetric couple: [p,p] = k", note=f"rank [p,p] = {rank}, dim k = {K.shape[1]}")
    rep.add("jacobi", jacobi_residual(alg), tol, "Lie algebra axioms")
    rep.add("sigma_automorphism", automorphism_residual(alg), tol, "involution of g")

    # faithfulness: k acts on p without kernel
    acts = np.array([(P.T @ alg.ad(K[:, i]) @ P).ravel() for i in range(K.shape[1])]).T
    fr = numerical_rank(acts, 1e-10, require_gap=False) if K.shape[1] else 0
    rep.add("k_faithful_on_p", abs(fr - K.shape[1]), 0.5, "symmetric couple: k acts faithfully on p")

    if alg.cocycle is not None:
        B = alg.cocycle
        rep.add("cocycle_vanishes_on_k", float(np.abs(K.T @ B).max()) if K.size else 0.0, tol,
                "symplectic triple")
        rep.add("cocycle_identity", cocycle_residual(alg), tol, "symplectic triple")
        rep.add("cocycle_antisymmetric", float(np.abs(B + B.T).max()), tol, "symplectic triple")
        sv = np.linalg.svd(P.T @ B @ P, compute_uv=False) if P.size else np.zeros(1)
        rep.add("cocycle_nondegenerate_on_p", float(sv.min()), 1e-8, "symplectic triple",
                mode="gt")
    return rep


# --- invariants of k acting on s -----------------------------------------------------

def _field_jacobian(field, p, h=1e-6):
    """``D[r, k, j] = d field_r^k / d x^j`` at ``p`` by central differences."""
    d = p.size
    cols = [(field(p + h * e) - field(p - h * e)) / (2 * h) for e in np.eye(d)]
    return np.stack(cols, axis=-1)


def frame_action(p: np.ndarray) -> np.ndarray:
    """``F[z, i, k]`` with ``[Z*_z, X~_i] = F[z, i, k] X~_k`` at the chart point ``p``."""
    X = geo.left_invariant_fields(p)
    Z = geo.k_fields(p)
    DX = _field_jacobian(geo.left_invariant_fields, p)
    DZ = _field_jacobian(geo.k_fields, p)
    # [A, B]^k = A^j d_j B^k - B^j d_j A^k
    br = np.einsum("zj,ikj->zik", Z, DX) - np.einsum("ij,zkj->zik", X, DZ)
    return br @ np.linalg.inv(X)


def _antisym_basis(d):
    basis = []
    for i, j in itertools.combinations(range(d), 2):
        w = np.zeros((d, d))
        w[i, j], w[j, i] = 1.0, -1.0
        basis.append(w)
    return basis


def _sample_points(params, samples, seed):
    if samples <= 0:
        raise ValueError("need at least one sample point")
    rng = np.random.default_rng(seed)
    return geo.random_points(rng, samples, params.n, a_max=1.0, c_max=1.0)


def invariance_rows(params, samples, seed, covariant: bool):
    """Linear conditions (one row per equation) on antisymmetric frame tensors."""
    d = 2 * params.n + 2
    basis = _antisym_basis(d)
    rows = []
    for p in _sample_points(params, samples, seed):
        for F in frame_action(p):
            if covariant:
                imgs = [-(F @ w + w @ F.T) for w in basis]
            else:
                imgs = [F.T @ w + w @ F for w in basis]
            iu = np.triu_indices(d, 1)
            rows.append(np.array([m[iu] for m in imgs]).T)
    return np.vstack(rows), basis


def invariant_two_vectors(params: SpaceParams, samples: int = 8, tol: float = 1e-8,
                          seed: int = 0):
    """Bivectors in ``s ^ s`` (left-invariant frame) annihilated by every ``Z*``.

    Returns the dimension and a list of antisymmetric coefficient matrices.
    """
    if params.n < 1:
        raise ValueError("invariant bivectors are computed for n >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    A, basis = invariance_rows(params, samples, seed, covariant=False)
    r = numerical_rank(A, tol)
    ns = np.linalg.svd(A)[2][r:].T
    vecs = [sum(c * b for c, b in zip(col, basis)) for col in ns.T]
    return ns.shape[1], vecs


def cochain_differential(alg: LieAlgebraData):
    """Matrices of the Chevalley differentials on ``s*`` and ``Lambda^2 s*``.

    Two-forms are coordinatized by their upper-triangular entries.
    """
    d = alg.dim
    c = alg.structure_constants
    pairs = list(itertools.combinations(range(d), 2))
    triples = list(itertools.combinations(range(d), 3))
    # (d beta)(x, y) = -beta([x, y])
    d1 = np.array([[-c[i, j, k] for k in range(d)] for i, j in pairs]).reshape(len(pairs), d)
    d2 = np.zeros((len(triples), len(pairs)))
    for col, (i, j) in enumerate(pairs):
        w = np.zeros((d, d))
        w[i, j], w[j, i] = 1.0, -1.0
        for row, (x, y, z) in enumerate(triples):
            # (d w)(x,y,z) = -w([x,y],z) + w([x,z],y) - w([y,z],x)
            d2[row, col] = (-(c[x, y] @ w[:, z]) + (c[x, z] @ w[:, y]) - (c[y, z] @ w[:, x]))
    return d1, d2


def coboundary_dimension(alg: LieAlgebraData, tol: float = 1e-10) -> int:
    d1, _ = cochain_differential(alg)
    return numerical_rank(d1, tol)


def _span_dim(m, tol):
    return numerical_rank(m, tol) if m.size else 0


def invariant_h2_dimension(params: SpaceParams, samples: int = 8, tol: float = 1e-8,
                           seed: int = 0) -> int:
    """Dimension of ``k``-invariant closed 2-forms on ``s`` modulo coboundaries."""
    if params.n < 1:
        raise ValueError("invariant H^2 is computed for n >= 1")
    alg = build_solvable_algebra(params)
    d1, d2 = cochain_differential(alg)
    inv_rows, _ = invariance_rows(params, samples, seed, covariant=True)
    system = np.vstack([d2, inv_rows])
    r = numerical_rank(system, tol)
    Zinv = np.linalg.svd(system)[2][r:].T  # closed, invariant
    dz = Zinv.shape[1]
    if dz == 0:
        return 0
    B = d1  # columns span coboundaries
    db = _span_dim(B, tol)
    both = _span_dim(np.hstack([Zinv, B]), tol)
    inter = dz + db - both
    return dz - inter

"""Chart geometry of the symmetric space ``M`` in coordinates ``(a, v, l)``.

Points are handled either as :class:`Point` values or as float arrays whose
last axis holds ``(a, v_1, ..., v_2n, l)``; every array function broadcasts
over leading axes.  ``Omega`` is the standard form on ``V = R^2n`` with
``Omega(e_i, e_{n+i}) = 1``.

The symmetries preserve ``da^dl + Omega/2`` (see :func:`symplectic_form`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

FD_STEP = 1e-4


@dataclass(frozen=True)
class Point:
    a: float
    v: tuple = ()
    l: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(float(x) for x in np.ravel(self.v)))
        if len(self.v) % 2:
            raise ValueError("v must have even length")
        if not np.all(np.isfinite(self.array())):
            raise ValueError("point coordinates must be finite")

    @property
    def n(self) -> int:
        return len(self.v) // 2

    def array(self) -> np.ndarray:
        return np.array([self.a, *self.v, self.l], dtype=float)

    @classmethod
    def from_array(cls, x) -> "Point":
        x = np.asarray(x, dtype=float)
        return cls(float(x[0]), tuple(x[1:-1]), float(x[-1]))

    @classmethod
    def origin(cls, n: int) -> "Point":
        return cls(0.0, (0.0,) * (2 * n), 0.0)


@dataclass(frozen=True)
class Triangle:
    x0: Point
    x1: Point
    x2: Point

    def array(self) -> np.ndarray:
        return np.stack([self.x0.array(), self.x1.array(), self.x2.array()])


def _arr(x) -> np.ndarray:
    return x.array() if isinstance(x, Point) else np.asarray(x, dtype=float)


def _wrap(like, out):
    return Point.from_array(out) if isinstance(like, Point) else out


def _split(x):
    return x[..., 0], x[..., 1:-1], x[..., -1]


def _join(a, v, l):
    return np.concatenate([np.asarray(a)[..., None], v, np.asarray(l)[..., None]], axis=-1)


def omega(v, w):
    """Standard symplectic form on ``V``, broadcasting over leading axes."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape[-1] != w.shape[-1] or v.shape[-1] % 2:
        raise ValueError("Omega needs vectors of equal even length")
    n = v.shape[-1] // 2
    return np.sum(v[..., :n] * w[..., n:] - v[..., n:] * w[..., :n], axis=-1)


def omega_matrix(n: int) -> np.ndarray:
    m = np.zeros((2 * n, 2 * n))
    m[:n, n:] = np.eye(n)
    m[n:, :n] = -np.eye(n)
    return m


def symplectic_form(n: int) -> np.ndarray:
    """Matrix of the invariant chart form ``da^dl + Omega/2``."""
    d = 2 * n + 2
    w = np.zeros((d, d))
    w[0, -1], w[-1, 0] = 1.0, -1.0
    w[1:-1, 1:-1] = 0.5 * omega_matrix(n)
    return w


# --- symmetries ------------------------------------------------------------------

def symmetry(x, y):
    """Geodesic symmetry ``s_x(y)``."""
    X, Y = _arr(x), _arr(y)
    a, v, l = _split(X)
    a2, v2, l2 = _split(Y)
    d = a - a2
    out = _join(2 * a - a2,
                2 * np.cosh(d)[..., None] * v - v2,
                2 * np.cosh(2 * d) * l + omega(v, v2) * np.sinh(d) - l2)
    return _wrap(y, out)


def symmetry_jacobian(x, y) -> np.ndarray:
    """Derivative of ``y -> s_x(y)``, shape ``(..., d, d)``."""
    X, Y = _arr(x), _arr(y)
    a, v, l = _split(X)
    a2, v2, l2 = _split(Y)
    n = v.shape[-1] // 2
    d = a - a2
    dim = 2 * n + 2
    J = np.zeros(np.broadcast_shapes(X.shape, Y.shape)[:-1] + (dim, dim))
    J[..., 0, 0] = -1.0
    J[..., 1:-1, 0] = -2 * np.sinh(d)[..., None] * v
    J[..., 1:-1, 1:-1] = -np.eye(2 * n)
    # d/da' of the l component
    J[..., -1, 0] = -4 * np.sinh(2 * d) * l - omega(v, v2) * np.cosh(d)
    # Omega(v, v') = v^T Om v'
    J[..., -1, 1:-1] = np.sinh(d)[..., None] * (v @ omega_matrix(n))
    J[..., -1, -1] = -1.0
    return J


# --- group law of S ------------------------------------------------------------

def group_mul(g1, g2):
    """``(a,x,z).(a',x',z') = (a+a', e^-a' x + x', e^-2a' z + z' + Omega(e^-a' x, x')/2)``."""
    A, B = _arr(g1), _arr(g2)
    a, x, z = _split(A)
    a2, x2, z2 = _split(B)
    ex = np.exp(-a2)[..., None] * x
    out = _join(a + a2, ex + x2, np.exp(-2 * a2) * z + z2 + 0.5 * omega(ex, x2))
    return _wrap(g1, out)


def group_inv(g):
    a, x, z = _split(_arr(g))
    return _wrap(g, _join(-a, -np.exp(a)[..., None] * x, -np.exp(2 * a) * z))


def group_exp_basis(i: int, t, n: int) -> np.ndarray:
    """``exp(t e_i)`` for the basis ``H, v_1..v_2n, E`` in chart coordinates."""
    out = np.zeros(np.shape(t) + (2 * n + 2,))
    out[..., i] = t
    return out


def symmetry_by_conjugation(x, y):
    """``g_x s_o g_x^-1`` with ``g_x = x`` the group element carrying ``o`` to ``x``."""
    return _wrap(y, group_mul(_arr(x), -group_mul(group_inv(_arr(x)), _arr(y))))


def left_invariant_fields(p) -> np.ndarray:
    """Rows are the fields ``H~, v~_1..v~_2n, E~`` at ``p``, shape ``(..., d, d)``."""
    P = _arr(p)
    a, x, z = _split(P)
    n = x.shape[-1] // 2
    dim = 2 * n + 2
    F = np.zeros(P.shape[:-1] + (dim, dim))
    F[..., 0, 0] = 1.0
    F[..., 0, 1:-1] = -x
    F[..., 0, -1] = -2 * z
    om = omega_matrix(n)
    for i in range(2 * n):
        F[..., 1 + i, 1 + i] = 1.0
        F[..., 1 + i, -1] = 0.5 * (x @ om)[..., i]
    F[..., -1, -1] = 1.0
    return F


def k_fields(p) -> np.ndarray:
    """Fundamental fields of ``k`` at ``p``: rows ``K_v1..K_v2n, K_E``.

    ``K_v = -2 sinh(a) d_v + cosh(a) Omega(v, x) d_l`` and
    ``K_E = -2 sinh(2a) d_l``.
    """
    P = _arr(p)
    a, x, z = _split(P)
    n = x.shape[-1] // 2
    dim = 2 * n + 2
    F = np.zeros(P.shape[:-1] + (2 * n + 1, dim))
    omx = x @ omega_matrix(n).T  # Omega(e_i, x)
    for i in range(2 * n):
        F[..., i, 1 + i] = -2 * np.sinh(a)
        F[..., i, -1] = np.cosh(a) * omx[..., i]
    F[..., 2 * n, -1] = -2 * np.sinh(2 * a)
    return F


# --- kernel ingredients ---------------------------------------------------------

def _tri(t):
    T = t.array() if isinstance(t, Triangle) else np.asarray(t, dtype=float)
    return T[..., 0, :], T[..., 1, :], T[..., 2, :]


def phase_S0(v0, v1, v2):
    """Weyl phase ``Omega(v0,v1) + Omega(v1,v2) + Omega(v2,v0)``."""
    return omega(v0, v1) + omega(v1, v2) + omega(v2, v0)


def phase_S(t):
    """Kernel phase on a triangle (``Triangle`` or array ``(..., 3, d)``)."""
    x0, x1, x2 = _tri(t)
    a0, v0, l0 = _split(x0)
    a1, v1, l1 = _split(x1)
    a2, v2, l2 = _split(x2)
    c0, c1, c2 = np.cosh(a1 - a2), np.cosh(a2 - a0), np.cosh(a0 - a1)
    s0 = phase_S0(c0[..., None] * v0, c1[..., None] * v1, c2[..., None] * v2)
    return s0 - (np.sinh(2 * (a0 - a1)) * l2 + np.sinh(2 * (a1 - a2)) * l0
                 + np.sinh(2 * (a2 - a0)) * l1)


def amplitude_A1(t, n: int | None = None):
    x0, x1, x2 = _tri(t)
    n = (x0.shape[-1] - 2) // 2 if n is None else n
    a0, a1, a2 = x0[..., 0], x1[..., 0], x2[..., 0]
    return np.cosh(2 * (a1 - a2)) * (np.cosh(a2 - a0) * np.cosh(a0 - a1)) ** (2 * n)


def amplitude_Acan(t, n: int | None = None):
    x0, x1, x2 = _tri(t)
    n = (x0.shape[-1] - 2) // 2 if n is None else n
    a0, a1, a2 = x0[..., 0], x1[..., 0], x2[..., 0]
    d01, d12, d20 = a0 - a1, a1 - a2, a2 - a0
    return (np.sqrt(np.cosh(2 * d01) * np.cosh(2 * d12) * np.cosh(2 * d20))
            * (np.cosh(d01) * np.cosh(d12) * np.cosh(d20)) ** n)


def amplitudes_from_a(a0, a1, a2, n: int, canonical: bool = False):
    """Amplitude as a function of the ``a``-coordinates only."""
    pts = [np.stack([np.asarray(a, dtype=float), *([np.zeros_like(a, dtype=float)] * (2 * n + 1))], -1)
           for a in np.broadcast_arrays(a0, a1, a2)]
    t = np.stack(pts, axis=-2)
    return amplitude_Acan(t, n) if canonical else amplitude_A1(t, n)


# --- Loos connection --------------------------------------------------------------

def christoffel(x, h: float = FD_STEP) -> np.ndarray:
    """``Gamma[k, i, j]`` at ``x`` from ``nabla_X Y = [X, Y + s_x* Y] / 2``.

    For coordinate fields the pushed-forward field is ``J(s_x p) e_j`` with
    ``J`` the Jacobian of ``s_x``; its ``i``-th derivative at ``p = x`` is
    taken by central differences.
    """
    X = _arr(x)
    d = X.shape[-1]
    G = np.zeros((d, d, d))
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        Jp = symmetry_jacobian(X, symmetry(X, X + e))
        Jm = symmetry_jacobian(X, symmetry(X, X - e))
        G[:, i, :] = 0.5 * (Jp - Jm) / (2 * h)
    return G


def loos_connection_at(x, h: float = FD_STEP):
    """Christoffel symbols with torsion and ``nabla omega`` residuals at ``x``."""
    if not 1e-6 <= h <= 1e-2:
        raise ValueError("finite-difference step must lie in [1e-6, 1e-2]")
    G = christoffel(x, h)
    X = _arr(x)
    w = symplectic_form((X.shape[-1] - 2) // 2)
    torsion = float(np.max(np.abs(G - np.swapaxes(G, 1, 2))))
    # (nabla_i w)_jk = -Gamma^m_ij w_mk - Gamma^m_ik w_jm for constant w
    nw = -np.einsum("mij,mk->ijk", G, w) - np.einsum("mik,jm->ijk", G, w)
    return G, torsion, float(np.max(np.abs(nw)))


def geodesic(x0, velocity, t_max: float, h: float = FD_STEP, rtol: float = 1e-10):
    """Integrate the geodesic of the Loos connection from ``x0``.

    Returns a callable ``t -> point`` on ``[-t_max, t_max]``.
    """
    X0 = _arr(x0)
    d = X0.size

    def rhs(_, y):
        p, q = y[:d], y[d:]
        return np.concatenate([q, -np.einsum("kij,i,j->k", christoffel(p, h), q, q)])

    y0 = np.concatenate([X0, np.asarray(velocity, dtype=float)])
    fw = solve_ivp(rhs, (0, t_max), y0, rtol=rtol, atol=rtol, dense_output=True)
    bw = solve_ivp(rhs, (0, -t_max), y0, rtol=rtol, atol=rtol, dense_output=True)

    def path(t):
        return (fw.sol(t) if t >= 0 else bw.sol(t))[:d]

    return path


# --- random sampling helpers --------------------------------------------------------

def random_points(rng: np.random.Generator, count: int, n: int, a_max: float = 2.0,
                  c_max: float = 2.0) -> np.ndarray:
    pts = rng.uniform(-c_max, c_max, size=(count, 2 * n + 2))
    pts[:, 0] = rng.uniform(-a_max, a_max, size=count)
    return pts

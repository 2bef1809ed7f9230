"""Direct quadrature of the oscillatory-integral form of the star products.

The kernel phase is linear in every momentum (``l`` and the second half of
``v``), so those integrals are done exactly by trapezoid sums at arbitrary
frequencies.  The remaining position integrals (``a`` and the first half of
``v``) are trapezoid sums on a grid refined by band-limited interpolation of
the inputs; refinement is what resolves the oscillation of the output phase
in these variables.

Supported for ``n`` in {0, 1}.
"""

from __future__ import annotations

import numpy as np

from .errors import CostLimit
from .grid import GridFunction
from .transforms import _sinc_matrix, nudft_l

MAX_PAIRS = 4_000_000


def kernel_constant(n: int) -> float:
    """Normalization in front of ``theta^-dim`` for the package's conventions."""
    return np.pi ** -2 * (2 * np.pi) ** (-2 * n)


def fine_nodes(nodes: np.ndarray, R: int) -> np.ndarray:
    h = nodes[1] - nodes[0]
    lo = nodes[0] - h / 2
    return lo + (np.arange(len(nodes) * R) + 0.5) * h / R


def refine_axis(vals: np.ndarray, nodes: np.ndarray, R: int, axis: int) -> np.ndarray:
    """Band-limited interpolation onto the ``R``-times finer cell-centred grid."""
    if R == 1:
        return vals
    m = _sinc_matrix(nodes, fine_nodes(nodes, R))
    return np.moveaxis(np.tensordot(m, np.moveaxis(vals, axis, 0), axes=(1, 0)), 0, axis)


def _support(vals: np.ndarray, axis: int, tol: float) -> np.ndarray:
    mags = np.abs(vals).max(axis=tuple(i for i in range(vals.ndim) if i != axis))
    idx = np.nonzero(mags > tol * mags.max())[0]
    return np.arange(idx.min(), idx.max() + 1) if idx.size else np.arange(0)


def kernel_product(u: GridFunction, v: GridFunction, theta: float, *, canonical: bool = False,
                   cochain=None, refine: tuple = (9, 3), support_tol: float = 1e-10,
                   constant: float | None = None) -> GridFunction:
    """``C theta^-dim int int A exp(i S / theta + c) u(x1) v(x2) dx1 dx2``.

    ``canonical`` selects ``A_can`` instead of ``A_1``; ``cochain`` is a
    function ``g`` of one variable giving ``c = g(a1-a2) - g(a0-a2) - g(a1-a0)``.
    ``refine`` holds odd refinement factors for ``a`` and for the first half
    of ``v``.
    """
    n = u.spec.n
    if n not in (0, 1):
        raise CostLimit("the kernel quadrature is implemented for n in {0, 1}")
    Ra, Rx = refine
    if Ra % 2 == 0 or Rx % 2 == 0:
        raise ValueError("refinement factors must be odd so coarse nodes stay on the grid")
    C = kernel_constant(n) if constant is None else constant
    if n == 0:
        out = _kernel_n0(u, v, theta, canonical, cochain, Ra, support_tol)
    else:
        out = _kernel_n1(u, v, theta, canonical, cochain, Ra, Rx, support_tol)
    return u.with_values(out * C * theta ** -(2 * n + 2))


def _amp(d01, d12, d20, n, canonical):
    if canonical:
        return (np.sqrt(np.cosh(2 * d01) * np.cosh(2 * d12) * np.cosh(2 * d20))
                * (np.cosh(d01) * np.cosh(d12) * np.cosh(d20)) ** n)
    return np.cosh(2 * d12) * (np.cosh(d20) * np.cosh(d01)) ** (2 * n)


def _a_setup(u, v, Ra, tol):
    spec = u.spec
    a = spec.nodes(0)
    af = fine_nodes(a, Ra)
    hf = af[1] - af[0]
    uf = refine_axis(u.values, a, Ra, 0)
    vf = refine_axis(v.values, a, Ra, 0)
    I1 = _support(uf, 0, tol)
    I2 = _support(vf, 0, tol)
    k0 = np.arange(len(a)) * Ra + (Ra - 1) // 2
    return af, hf, uf, vf, I1, I2, k0


def _kernel_n0(u, v, theta, canonical, cochain, Ra, tol):
    spec = u.spec
    l = spec.nodes(-1)
    af, hf, uf, vf, I1, I2, k0 = _a_setup(u, v, Ra, tol)
    out = np.zeros(spec.shape, dtype=complex)
    if not (I1.size and I2.size):
        return out
    if len(k0) * I1.size * I2.size > 50 * MAX_PAIRS:
        raise CostLimit("kernel quadrature too large; reduce refinement or grid")
    # offsets m = k2 - k0 for u's frequency and m' = k0 - k1 for v's
    m1 = np.arange(I2[0] - k0[-1], I2[-1] - k0[0] + 1)
    m2 = np.arange(k0[0] - I1[-1], k0[-1] - I1[0] + 1)
    U = nudft_l(uf[I1], l, np.sinh(2 * m1 * hf) / theta)  # (I1, m1)
    V = nudft_l(vf[I2], l, np.sinh(2 * m2 * hf) / theta)  # (I2, m2)
    dmin = I1[0] - I2[-1]
    dvals = np.arange(dmin, I1[-1] - I2[0] + 1)
    phase = np.exp(-1j * np.outer(np.sinh(2 * dvals * hf) / theta, l))  # (d, l)
    K1, K2 = np.meshgrid(I1, I2, indexing="ij")
    dflat = (K1 - K2 - dmin).ravel()
    for i, k in enumerate(k0):
        d01 = (k - K1) * hf
        d12 = (K1 - K2) * hf
        d20 = (K2 - k) * hf
        w = _amp(d01, d12, d20, 0, canonical) * hf ** 2
        if cochain is not None:
            w = w * np.exp(cochain(d12) - cochain(-d20) - cochain(-d01))
        M = w * U[np.arange(I1.size)[:, None], K2 - k - m1[0]]
        M = M * V[np.arange(I2.size)[None, :], k - K1 - m2[0]]
        S = np.bincount(dflat, weights=M.real.ravel(), minlength=len(dvals)) \
            + 1j * np.bincount(dflat, weights=M.imag.ravel(), minlength=len(dvals))
        out[i] = S @ phase
    return out


def _kernel_n1(u, v, theta, canonical, cochain, Ra, Rx, tol):
    spec = u.spec
    x = spec.nodes(1)
    y = spec.nodes(2)
    l = spec.nodes(3)
    hy = y[1] - y[0]
    nyq_y = np.pi / hy
    af, hf, uf, vf, I1, I2, k0 = _a_setup(u, v, Ra, tol)
    xf = fine_nodes(x, Rx)
    hx = xf[1] - xf[0]
    uf = refine_axis(uf, x, Rx, 1)
    vf = refine_axis(vf, x, Rx, 1)
    J1 = _support(uf, 1, tol)
    J2 = _support(vf, 1, tol)
    out = np.zeros(spec.shape, dtype=complex)
    if not (I1.size and I2.size and J1.size and J2.size):
        return out
    x1, x2 = xf[J1], xf[J2]
    uf = uf[I1][:, J1]
    vf = vf[I2][:, J2]

    m1 = np.arange(I2[0] - k0[-1], I2[-1] - k0[0] + 1)
    m2 = np.arange(k0[0] - I1[-1], k0[-1] - I1[0] + 1)
    # l-transforms: (a-rows, x, y, offset)
    U = nudft_l(uf, l, np.sinh(2 * m1 * hf) / theta)
    V = nudft_l(vf, l, np.sinh(2 * m2 * hf) / theta)
    Umag = np.abs(U).max(axis=(1, 2))
    Vmag = np.abs(V).max(axis=(1, 2))
    peak = Umag.max() * Vmag.max()

    dvals = np.arange(I1[0] - I2[-1], I1[-1] - I2[0] + 1)
    phase_l = np.exp(-1j * np.outer(np.sinh(2 * dvals * hf) / theta, l))

    for i, k in enumerate(k0):
        K1, K2 = np.meshgrid(np.arange(I1.size), np.arange(I2.size), indexing="ij")
        j1 = (I2[K2] - k - m1[0])
        j2 = (k - I1[K1] - m2[0])
        mag = Umag[K1, j1] * Vmag[K2, j2]
        keep = mag > tol * peak
        if len(k0) * keep.sum() > MAX_PAIRS:
            raise CostLimit("kernel quadrature too large; reduce refinement or grid")
        b1, b2 = K1[keep], K2[keep]
        if b1.size == 0:
            continue
        a0 = af[k]
        a1, a2 = af[I1[b1]], af[I2[b2]]
        c0, c1, c2 = np.cosh(a1 - a2), np.cosh(a2 - a0), np.cosh(a0 - a1)
        w = _amp(a0 - a1, a1 - a2, a2 - a0, 1, canonical) * (hf * hx) ** 2
        if cochain is not None:
            w = w * np.exp(cochain(a1 - a2) - cochain(a0 - a2) - cochain(a1 - a0))
        d = I1[b1] - I2[b2] - dvals[0]
        acc = np.zeros((len(dvals), len(x), len(y)), dtype=complex)
        for s in range(0, b1.size, 64):
            sl = slice(s, s + 64)
            G = _vpart(U[b1[sl], :, :, j1[keep][sl]], V[b2[sl], :, :, j2[keep][sl]],
                       c0[sl], c1[sl], c2[sl], x, x1, x2, y, hy, nyq_y, theta)
            G *= w[sl, None, None]
            np.add.at(acc, d[sl], G)
        out[i] = np.einsum("dxy,dl->xyl", acc, phase_l)
    return out


def _vpart(Ul, Vl, c0, c1, c2, x0, x1, x2, y, hy, nyq, theta):
    """Integrals over ``v1 = (x1, y1)`` and ``v2 = (x2, y2)`` for a batch of ``a``-triples.

    ``Ul[b, x1, y1]`` and ``Vl[b, x2, y2]`` are already transformed in ``l``.
    Returns ``G[b, x0, y0]``.
    """
    cc = lambda c: c[:, None, None]
    # frequency of y1: -(c0 c1 x0 - c1 c2 x2) / theta, on (x0, x2)
    k1 = -(cc(c0 * c1) * x0[None, :, None] - cc(c1 * c2) * x2[None, None, :]) / theta
    E1 = hy * np.exp(-1j * k1[..., None] * y) * (np.abs(k1) <= nyq)[..., None]  # b,x0,x2,y
    Uh = np.einsum("bpy,bqry->bpqr", Ul, E1)  # b, x1, x0, x2
    # frequency of y2: -(c1 c2 x1 - c2 c0 x0) / theta, on (x1, x0)
    k2 = -(cc(c1 * c2) * x1[None, :, None] - cc(c2 * c0) * x0[None, None, :]) / theta
    E2 = hy * np.exp(-1j * k2[..., None] * y) * (np.abs(k2) <= nyq)[..., None]  # b,x1,x0,y
    Vh = np.einsum("bry,bpqy->brpq", Vl, E2)  # b, x2, x1, x0
    P = Uh * np.transpose(Vh, (0, 2, 3, 1))  # b, x1, x0, x2
    F2 = np.exp(1j * cc(c0 * c2) * x2[None, None, :] * y[None, :, None] / theta)  # b, y0, x2
    F1 = np.exp(-1j * cc(c0 * c1) * x1[None, None, :] * y[None, :, None] / theta)  # b, y0, x1
    Q = np.einsum("bpqr,bsr->bpqs", P, F2)  # b, x1, x0, y0
    return np.einsum("bpqs,bsp->bqs", Q, F1)

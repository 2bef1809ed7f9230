"""Weyl product on grids, evaluated as a twisted convolution.

Coordinates pair up as ``(a, l)`` and ``(v_i, v_{n+i})`` with Poisson brackets
``{a, l} = 1`` and ``{v_i, v_{n+i}} = 2`` (the chart form is
``da^dl + Omega/2``).  Fourier transforming the momentum of every pair turns
the product into

    (u * v)^(q, xi) = (2 pi)^-m int u^(q - theta L (xi - xi1) / 2, xi1)
                                   v^(q + theta L xi1 / 2, xi - xi1) dxi1

with ``L`` the diagonal of brackets; the shifts in ``q`` are applied exactly
by FFT phases.
"""

from __future__ import annotations

import itertools

import numpy as np

from .grid import BOUNDARY_TOL, POSITION, GridFunction, require_windowed
from .errors import GridMismatch

V_BRACKET = 2.0


def pair_layout(n: int):
    """Axis indices of positions, momenta and the bracket of each pair."""
    q_axes = [0] + list(range(1, n + 1))
    p_axes = [2 * n + 1] + list(range(n + 1, 2 * n + 1))
    brackets = [1.0] + [V_BRACKET] * n
    return q_axes, p_axes, brackets


def poisson_matrix(n: int) -> np.ndarray:
    """``Lambda[i, j] = {x_i, x_j}`` in the axis order ``(a, v, l)``."""
    d = 2 * n + 2
    lam = np.zeros((d, d))
    for q, p, b in zip(*pair_layout(n)):
        lam[q, p] = b
        lam[p, q] = -b
    return lam


def symplectic_matrix(n: int) -> np.ndarray:
    """Chart symplectic form ``da^dl + Omega/2`` as a matrix ``w[i, j] = w(e_i, e_j)``."""
    return -np.linalg.inv(poisson_matrix(n))


def _momentum_fft(vals, spec, p_axes):
    out = vals
    for ax in p_axes:
        axis = spec.axes[ax]
        xi = axis.frequency_axis().nodes
        out = np.fft.fftshift(np.fft.fft(out, axis=ax), axes=ax)
        shape = [1] * out.ndim
        shape[ax] = -1
        out = out * (axis.step * np.exp(-1j * xi * axis.nodes[0])).reshape(shape)
    return out


def _momentum_ifft(vals, spec, p_axes):
    out = vals
    for ax in p_axes:
        axis = spec.axes[ax]
        xi = axis.frequency_axis().nodes
        shape = [1] * out.ndim
        shape[ax] = -1
        out = out * (np.exp(1j * xi * axis.nodes[0]) / axis.step).reshape(shape)
        out = np.fft.ifft(np.fft.ifftshift(out, axes=ax), axis=ax)
    return out


def moyal_numeric(u: GridFunction, v: GridFunction, theta: float,
                  boundary_tol: float | None = BOUNDARY_TOL, prune: float = 1e-17) -> GridFunction:
    """Weyl product ``u *_theta v`` of two windowed position-space functions.

    Frequency slices whose modulus is below ``prune`` times the peak are
    skipped; they cannot contribute above that relative level.
    """
    if not u.spec.same_as(v.spec) or u.space != POSITION or v.space != POSITION:
        raise GridMismatch("moyal_numeric needs two position-space functions on one grid")
    require_windowed(u, boundary_tol)
    require_windowed(v, boundary_tol)
    spec = u.spec
    n = spec.n
    q_axes, p_axes, brackets = pair_layout(n)
    m = len(q_axes)
    perm = q_axes + p_axes
    inv_perm = np.argsort(perm)

    U = np.transpose(_momentum_fft(u.values, spec, p_axes), perm)
    V = np.transpose(_momentum_fft(v.values, spec, p_axes), perm)
    qshape = U.shape[:m]
    pshape = U.shape[m:]
    Uq = np.fft.fftn(U, axes=range(m))
    Vq = np.fft.fftn(V, axes=range(m))

    dxis = [spec.axes[ax].frequency_axis().step for ax in p_axes]
    alphas = [2 * np.pi * np.fft.fftfreq(spec.axes[ax].points, spec.axes[ax].step) for ax in q_axes]
    # shift per unit frequency index along each pair: theta * bracket * dxi / 2
    unit = [theta * b * dx / 2 for b, dx in zip(brackets, dxis)]

    # index grids on the momentum lattice, offsets k in [-N/2, N/2)
    offs = [np.arange(N) - N // 2 for N in pshape]
    flatU = Uq.reshape(qshape + (-1,))
    flatV = Vq.reshape(qshape + (-1,))
    mags_u = np.abs(U).reshape(qshape + (-1,)).max(axis=tuple(range(m)))
    mags_v = np.abs(V).reshape(qshape + (-1,)).max(axis=tuple(range(m)))
    keep_u = mags_u > prune * mags_u.max()
    keep_v = mags_v > prune * mags_v.max()
    j_all = np.array(list(itertools.product(*offs)))  # (P, m) offsets of xi1
    j_flat = np.ravel_multi_index(tuple((j_all + [N // 2 for N in pshape]).T), pshape)
    j_all, j_flat = j_all[keep_u[j_flat]], j_flat[keep_u[j_flat]]

    # phase factors exp(-i alpha . s) as outer products over q axes
    def phase(offsets, sign):
        # offsets: (J, m) integer frequency offsets -> (J, *qshape)
        ph = np.ones((len(offsets),) + qshape, dtype=complex)
        for i in range(m):
            shape = [len(offsets)] + [1] * m
            shape[1 + i] = -1
            ph = ph * np.exp(sign * 1j * np.outer(offsets[:, i] * unit[i], alphas[i])).reshape(shape)
        return ph

    W = np.zeros(qshape + (int(np.prod(pshape)),), dtype=complex)
    lo = np.array([-(N // 2) for N in pshape])
    hi = np.array([N - N // 2 - 1 for N in pshape])
    for kk, k in enumerate(itertools.product(*offs)):
        k = np.array(k)
        d = k - j_all
        ok = np.all((d >= lo) & (d <= hi), axis=1)
        if not ok.any():
            continue
        jj, dd, jf = j_all[ok], d[ok], j_flat[ok]
        df = np.ravel_multi_index(tuple((dd - lo).T), pshape)
        sel = keep_v[df]
        if not sel.any():
            continue
        jj, dd, jf, df = jj[sel], dd[sel], jf[sel], df[sel]
        # u^(q - s(d), xi_j) and v^(q + s(j), xi_d)
        A = np.moveaxis(flatU[..., jf], -1, 0) * phase(dd, -1)
        B = np.moveaxis(flatV[..., df], -1, 0) * phase(jj, +1)
        A = np.fft.ifftn(A, axes=range(1, m + 1))
        B = np.fft.ifftn(B, axes=range(1, m + 1))
        W[..., kk] = np.sum(A * B, axis=0)
    W *= np.prod(dxis) / (2 * np.pi) ** m
    W = np.transpose(W.reshape(qshape + pshape), inv_perm)
    out = _momentum_ifft(W, spec, p_axes)
    return u.with_values(out)

"""Twisting map, Fourier-space pullbacks and the transport operators.

The twisting map at parameter ``theta`` acts on the Fourier-side variables
``(a, v, xi)``::

    phi(a, v, xi) = (a, v / cosh(theta xi), sinh(2 theta xi) / (2 theta))

and the transport operators are ``T = F^-1 M_exp(tau) (phi^-1)^* F`` and
``T^-1 = F^-1 phi^* M_exp(-tau) F`` with ``F`` the partial Fourier transform in
``l``.  Symbol dictionary: multiplying ``u^`` by ``xi^k`` is ``(-i d/dl)^k u``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .grid import (
    FOURIER,
    POSITION,
    BOUNDARY_TOL,
    GridFunction,
    require_windowed,
)
from .errors import WrongSpaceTag

FORWARD = "forward"
INVERSE = "inverse"
TWIST = "twist"
TWIST_INV = "twist_inv"


@dataclass(frozen=True)
class TwistParams:
    theta: float
    n: int = 0

    def __post_init__(self):
        if not np.isfinite(self.theta):
            raise ValueError("theta must be finite")


def _sinhc_scaled(xi, theta):
    # sinh(2 theta xi) / (2 theta), continuous at theta = 0
    if theta == 0:
        return np.asarray(xi, dtype=float)
    return np.sinh(2 * theta * np.asarray(xi, dtype=float)) / (2 * theta)


def phi_xi(xi, theta):
    return _sinhc_scaled(xi, theta)


def phi_xi_inv(eta, theta):
    eta = np.asarray(eta, dtype=float)
    if theta == 0:
        return eta
    return np.arcsinh(2 * theta * eta) / (2 * theta)


def twist(a, v, xi, tp: TwistParams):
    xi = np.asarray(xi, dtype=float)
    return a, np.asarray(v) / np.cosh(tp.theta * xi), phi_xi(xi, tp.theta)


def twist_inv(a, w, eta, tp: TwistParams):
    xi = phi_xi_inv(eta, tp.theta)
    return a, np.asarray(w) * np.cosh(tp.theta * xi), xi


def twist_jacobian(xi, tp: TwistParams):
    """Determinant of the twisting map, ``cosh(2 theta xi) / cosh(theta xi)^(2n)``."""
    xi = np.asarray(xi, dtype=float)
    return np.cosh(2 * tp.theta * xi) / np.cosh(tp.theta * xi) ** (2 * tp.n)


def twist_inv_jacobian(eta, tp: TwistParams):
    return 1.0 / twist_jacobian(phi_xi_inv(eta, tp.theta), tp)


# --- pullbacks on Fourier-side grids -----------------------------------------

def _spline_eval(nodes, values, targets, axis):
    spl = CubicSpline(nodes, values, axis=axis, extrapolate=False)
    out = spl(targets)
    return np.nan_to_num(out, nan=0.0)


def pullback(f: GridFunction, which: str, tp: TwistParams,
             boundary_tol: float | None = BOUNDARY_TOL) -> GridFunction:
    """``(map^* f)(p) = f(map(p))`` for ``map`` the twist or its inverse.

    Cubic splines along ``xi`` and then along each ``v`` axis; reads outside
    the grid return 0.
    """
    if f.space != FOURIER:
        raise WrongSpaceTag("pullback acts on Fourier-side functions")
    spec = f.spec
    require_windowed(f, boundary_tol, axes=range(1, spec.ndim))
    xi = spec.nodes(-1)
    if which == TWIST:
        xi_t = phi_xi(xi, tp.theta)
        scale = 1.0 / np.cosh(tp.theta * xi)
    elif which == TWIST_INV:
        xi_t = phi_xi_inv(xi, tp.theta)
        scale = np.cosh(tp.theta * xi_t)
    else:
        raise ValueError(f"unknown map {which!r}")
    vals = _spline_eval(xi, f.values, xi_t, axis=-1)
    n = spec.n
    if n:
        out = np.empty_like(vals)
        for k in range(len(xi)):
            sl = vals[..., k]
            for i in range(1, 2 * n + 1):
                nodes = spec.nodes(i)
                sl = _spline_eval(nodes, sl, nodes * scale[k], axis=i)
            out[..., k] = sl
        vals = out
    return f.with_values(vals)


# --- transport operators -------------------------------------------------------

def _sinc_matrix(nodes: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Band-limited interpolation weights from ``nodes`` to ``targets``.

    Targets outside the cell-centred extent of the grid get zero rows.
    """
    h = nodes[1] - nodes[0]
    m = np.sinc((targets[:, None] - nodes[None, :]) / h)
    outside = (targets < nodes[0] - h / 2) | (targets > nodes[-1] + h / 2)
    m[outside] = 0.0
    return m


def nudft_l(values: np.ndarray, l_nodes: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Trapezoid quadrature of ``int exp(-i eta l) u dl`` at arbitrary ``eta``.

    Frequencies beyond the grid's Nyquist limit would alias and are returned
    as zero (the input is assumed band limited).
    """
    h = l_nodes[1] - l_nodes[0]
    mat = h * np.exp(-1j * np.outer(eta, l_nodes))
    mat[np.abs(eta) > np.pi / h * (1 + 1e-12)] = 0.0
    return values @ mat.T


def _inverse_dft_l(vals: np.ndarray, xi: np.ndarray, l_nodes: np.ndarray) -> np.ndarray:
    dxi = xi[1] - xi[0]
    vals = vals * np.exp(1j * xi * l_nodes[0]) * (dxi / (2 * np.pi)) * len(xi)
    return np.fft.ifft(np.fft.ifftshift(vals, axes=-1), axis=-1)


def _eval_tau(tau, theta, xi):
    if tau is None:
        return np.zeros_like(np.asarray(xi, dtype=float), dtype=complex)
    ev = getattr(tau, "eval", tau)
    return np.asarray(ev(theta, xi), dtype=complex)


def transport_fourier(u: GridFunction, tp: TwistParams, tau=None,
                      direction: str = FORWARD) -> np.ndarray:
    """Fourier-side samples of ``T u`` (or ``T^-1 u``) on the FFT frequencies."""
    spec = u.spec
    l_nodes = spec.nodes(-1)
    xi = spec.axes[-1].frequency_axis().nodes
    th = tp.theta
    if direction == FORWARD:
        eta = phi_xi_inv(xi, th)
        vscale = np.cosh(th * eta)
        mult = np.exp(_eval_tau(tau, th, xi))
    elif direction == INVERSE:
        eta = phi_xi(xi, th)
        vscale = 1.0 / np.cosh(th * xi)
        mult = np.exp(-_eval_tau(tau, th, eta))
    else:
        raise ValueError(f"unknown direction {direction!r}")
    vals = nudft_l(u.values, l_nodes, eta)
    for i in range(1, 2 * spec.n + 1):
        nodes = spec.nodes(i)
        mats = np.stack([_sinc_matrix(nodes, nodes * s) for s in vscale])
        # vals[..., v_i, ..., k] <- sum_j mats[k, v_i, j] vals[..., j, ..., k]
        vals = np.moveaxis(vals, i, -2)
        vals = np.einsum("kij,...jk->...ik", mats, vals)
        vals = np.moveaxis(vals, -2, i)
    return vals * mult


def T_apply(u: GridFunction, tp: TwistParams, tau=None, direction: str = FORWARD,
            boundary_tol: float | None = BOUNDARY_TOL) -> GridFunction:
    """Apply ``T_{theta,tau}`` (FORWARD) or its inverse (INVERSE) to position data.

    ``tau=None`` is the unit multiplier (``T_{theta,1}``).  The Fourier
    transform and the pullback are fused: the twisted frequencies are
    evaluated directly by quadrature in ``l`` and the ``v`` rescaling uses
    band-limited interpolation, so the result is spectrally accurate on
    windowed inputs.
    """
    if u.space != POSITION:
        raise WrongSpaceTag("T_apply acts on position-space functions")
    require_windowed(u, boundary_tol)
    spec = u.spec
    vals = transport_fourier(u, tp, tau, direction)
    xi = spec.axes[-1].frequency_axis().nodes
    return u.with_values(_inverse_dft_l(vals, xi, spec.nodes(-1)))

"""Multipliers ``tau``: one-parameter families of functions of ``xi``.

A multiplier is indexed by the parameter of the twisting map it is paired
with; a product with Weyl parameter ``theta`` evaluates its multiplier at
``theta / 2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import sympy as sp
from scipy.interpolate import CubicSpline

from .errors import ScheduleTooAggressive
from .report import Report
from .transforms import phi_xi, phi_xi_inv, twist_jacobian, TwistParams

MEMBERSHIP_THETAS = (0.2, 0.1, 0.05, 0.025)
TRACIAL_SIGN = 1  # fixed by the unitarity test in transforms


@dataclass(frozen=True)
class Multiplier:
    """``eval(theta, xi) -> tau_theta(xi)``.

    ``taylor[k]`` is the Taylor coefficient ``(d/dtheta)^k tau |_0 / k!`` as a
    function of ``xi`` when known.
    """
    eval: Callable
    taylor: tuple = ()
    is_tracial: bool = False
    psi: Callable | None = None
    name: str = "custom"
    is_one: bool = False
    cutoffs: tuple = ()  # Borel cutoff scales eps_k

    def __call__(self, theta, xi):
        return np.asarray(self.eval(theta, np.asarray(xi, dtype=float)), dtype=complex)


ONE = Multiplier(lambda theta, xi: np.zeros_like(np.asarray(xi, dtype=float), dtype=complex),
                 name="one", is_one=True)


def kernel_cochain_function(tau: Multiplier, theta_twist: float) -> Callable:
    """``g(t) = tau(-sinh(2t) / (2 theta))`` at twist parameter ``theta``.

    This is the single-variable function entering the three-point term
    ``g(a1 - a2) - g(a0 - a2) - g(a1 - a0)`` of the kernel.  The sign of the
    argument only matters for the odd part of ``tau``; it was fixed by
    comparing against the transported product with ``tau = i arctan(theta xi)``.
    """
    def g(t):
        return tau(theta_twist, -np.sinh(2 * np.asarray(t, dtype=float)) / (2 * theta_twist))
    return g


# --- membership in the multiplier space -------------------------------------------

def _fd_derivatives(f: np.ndarray, h: float, order: int):
    out = [f]
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(order):
            out.append(np.gradient(out[-1], h))
    return out


def check_theta_membership(tau: Multiplier, thetas: Sequence[float] = MEMBERSHIP_THETAS,
                           xi_range: Sequence[float] = (4, 8, 16, 32, 64),
                           step: float = 0.01, max_degree: float = 8.0,
                           decay_tol: float = 1e-3) -> Report:
    """Heuristic probe of the two defining conditions.

    (i) ``exp(tau_theta)`` and its first four finite-difference derivatives
    grow at most like ``(1 + |xi|)^k`` with ``k <= max_degree``, judged from the
    growth of their maxima over expanding windows.  Sampled data cannot
    decide this, so the check is labelled heuristic.

    (ii) ``sup_{|t| <= 2} |tau_theta(sinh(2t) / (2 theta))|`` decreases to zero
    along ``thetas``.
    """
    rep = Report("theta_membership")
    rep.info["heuristic"] = "O_M probe: growth of FD derivatives up to order 4"
    worst_slope = 0.0
    finite = True
    for th in thetas:
        maxima = []
        for R in xi_range:
            xi = np.arange(-R, R + step / 2, step)
            with np.errstate(over="ignore", invalid="ignore"):
                e = np.exp(tau(th, xi))
            ders = _fd_derivatives(e, step, 4)
            m = [float(np.max(np.abs(d))) for d in ders]
            maxima.append(m)
        maxima = np.array(maxima)
        if not np.all(np.isfinite(maxima)):
            finite = False
            worst_slope = np.inf
            continue
        logs = np.log(np.maximum(maxima, 1e-300))
        x = np.log1p(np.asarray(xi_range, dtype=float))
        for j in range(maxima.shape[1]):
            slope = np.polyfit(x[-3:], logs[-3:, j], 1)[0]
            worst_slope = max(worst_slope, float(slope))
    rep.add("OM_polynomial_growth", worst_slope, max_degree, "multiplier space: polynomial growth", mode="lt",
            note="heuristic" + ("" if finite else "; non-finite values"))

    t = np.linspace(-2, 2, 801)
    sups = []
    for th in thetas:
        with np.errstate(over="ignore", invalid="ignore"):
            vals = tau(th, np.sinh(2 * t) / (2 * th))
        sups.append(float(np.max(np.abs(vals))) if np.all(np.isfinite(vals)) else np.inf)
    rep.info["rescaled_sups"] = sups
    decreasing = all(b <= a + 1e-15 for a, b in zip(sups, sups[1:]))
    # extrapolate the last two values linearly in theta to theta = 0
    th1, th2 = thetas[-2], thetas[-1]
    s1, s2 = sups[-2], sups[-1]
    limit = s2 - (s1 - s2) * th2 / (th1 - th2) if np.isfinite(s1 + s2) else np.inf
    resid = abs(limit) if decreasing else max(abs(limit), sups[-1], 1.0)
    tol = decay_tol * max(1.0, sups[0]) if np.isfinite(sups[0]) else decay_tol
    rep.add("rescaled_limit_zero", resid, tol, "multiplier space: rescaled decay",
            note="sups " + ", ".join(f"{s:.3g}" for s in sups))
    return rep


# --- tracial multipliers --------------------------------------------------------------

def tracial_multiplier(n: int, psi: Callable | None = None, sign: int = TRACIAL_SIGN) -> Multiplier:
    """``tau_theta = (sign / 2) log Jac_{phi^-1} + i psi_theta``.

    ``psi(theta, xi)`` is real; ``None`` means zero.
    """
    def ev(theta, xi):
        xi = np.asarray(xi, dtype=float)
        jac_inv = 1.0 / twist_jacobian(phi_xi_inv(xi, theta), TwistParams(theta, n))
        out = 0.5 * sign * np.log(jac_inv) + 0j
        if psi is not None:
            out = out + 1j * np.asarray(psi(theta, xi), dtype=float)
        return out

    return Multiplier(ev, is_tracial=True, psi=psi, name="tracial")


def tracial_cochain_real_part(n: int) -> Callable:
    """Closed form of the real part of the kernel function for tracial ``tau``.

    ``g(t) = log(cosh(t)^(2n) / cosh(2t)) / 2``; it does not depend on theta.
    """
    return lambda t: 0.5 * (2 * n * np.log(np.cosh(t)) - np.log(np.cosh(2 * t)))


# --- Borel realization ------------------------------------------------------------------

def _h(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def bump(s):
    """Smooth cutoff: 1 for ``|s| <= 1/2``, 0 for ``|s| >= 1``."""
    s = np.abs(np.asarray(s, dtype=float))
    a, b = _h(2 - 2 * s), _h(2 * s - 1)
    return a / (a + b)


@dataclass(frozen=True)
class BorelSchedule:
    eps0: float = 1.0
    ratio: float = 0.5
    window: float = 10.0

    def eps(self, k: int, bound: float) -> float:
        # halve per order and keep |theta^k c_k| below 2^-k on the probe window
        base = self.eps0 * self.ratio ** (k - 1)
        if bound > 0 and k > 0:
            base = min(base, (2.0 ** -k / bound) ** (1.0 / k))
        return base


def borel_realize(coeffs: Sequence[Callable | None], schedule: BorelSchedule = BorelSchedule(),
                  check: bool = True, rel_tol: float = 1e-4) -> Multiplier:
    """``tau(theta, xi) = sum_k theta^k c_k(xi) chi(theta / eps_k)``, ``k >= 1``.

    ``coeffs[k - 1]`` is ``c_k``; ``None`` entries are zero.  With ``check`` the
    finite-difference Taylor coefficients at ``theta = 0`` are compared to the
    targets and :class:`ScheduleTooAggressive` is raised on mismatch.
    """
    probe = np.linspace(-schedule.window, schedule.window, 401)
    terms = []
    for k, c in enumerate(coeffs, start=1):
        if c is None:
            continue
        bound = float(np.max(np.abs(c(probe))))
        if bound == 0:
            continue
        terms.append((k, c, schedule.eps(k, bound)))

    def ev(theta, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(np.broadcast_shapes(np.shape(theta), xi.shape), dtype=complex)
        for k, c, eps in terms:
            out = out + theta ** k * c(xi) * bump(theta / eps)
        return out

    taylor = tuple([lambda xi: np.zeros_like(np.asarray(xi, dtype=float))]
                   + [c if c is not None else (lambda xi: np.zeros_like(xi)) for c in coeffs])
    tau = Multiplier(ev, taylor=taylor, name="borel", cutoffs=tuple(e for _, _, e in terms))
    if check and terms:
        res = taylor_match(tau, coeffs, probe)
        if res > rel_tol:
            raise ScheduleTooAggressive(f"FD Taylor mismatch {res:.2e} exceeds {rel_tol:.0e}")
    return tau


def fd_taylor(tau: Multiplier, xi, order: int, h: float | None = None) -> np.ndarray:
    """Taylor coefficients in theta at 0 from a symmetric polynomial fit."""
    xi = np.asarray(xi, dtype=float)
    h = 1e-3 if h is None else h
    m = order + 2
    nodes = h * np.arange(-m, m + 1)
    vals = np.array([tau(t, xi) for t in nodes])  # (nodes, xi)
    V = np.vander(nodes, 2 * m + 1, increasing=True)
    coef = np.linalg.solve(V, vals.reshape(len(nodes), -1))
    return coef[: order + 1].reshape((order + 1,) + xi.shape)


def taylor_match(tau: Multiplier, coeffs: Sequence[Callable | None], xi) -> float:
    """Largest relative mismatch between FD Taylor coefficients and targets."""
    order = len(coeffs)
    # stay where every cutoff equals one, so tau is a polynomial in theta
    smallest = min(tau.cutoffs, default=1.0)
    got = fd_taylor(tau, xi, order, h=smallest / (2 * (order + 2)))
    worst = 0.0
    for k, c in enumerate(coeffs, start=1):
        target = np.zeros_like(xi, dtype=complex) if c is None else np.asarray(c(xi), dtype=complex)
        scale = max(float(np.max(np.abs(target))), 1e-300)
        err = float(np.max(np.abs(got[k] - target)))
        worst = max(worst, err / scale if scale > 1e-300 else err)
    return worst


# --- presets --------------------------------------------------------------------------

_XI, _THETA = sp.symbols("xi theta", real=True)


def expression_function(expr: str, with_theta: bool = False) -> Callable:
    """Compile an expression in ``xi`` (and optionally ``theta``) with sympy."""
    try:
        parsed = sp.sympify(expr, locals={"xi": _XI, "theta": _THETA, "I": sp.I})
    except (sp.SympifyError, TypeError, SyntaxError) as exc:
        raise ValueError(f"cannot parse {expr!r}: {exc}") from exc
    free = getattr(parsed, "free_symbols", None)
    if free is None:
        raise ValueError(f"{expr!r} is not an expression")
    free = free - {_XI, _THETA}
    if free:
        raise ValueError(f"unknown symbols in {expr!r}: {sorted(map(str, free))}")
    if with_theta:
        f = sp.lambdify((_THETA, _XI), parsed, "numpy")
        return lambda theta, xi: np.broadcast_to(f(theta, xi), np.shape(xi)) * 1.0
    f = sp.lambdify(_XI, parsed, "numpy")
    return lambda xi: np.broadcast_to(f(xi), np.shape(xi)) * 1.0


def load_borel_file(path) -> Multiplier:
    """JSON ``{"coefficients": [...], "xi_grid": [lo, hi, points]}``.

    ``coefficients[k-1]`` is an expression for ``c_k(xi)`` or a list of
    samples on ``xi_grid`` (interpolated by cubic splines).
    """
    data = json.loads(Path(path).read_text())
    unknown = set(data) - {"coefficients", "xi_grid", "eps0", "ratio"}
    if unknown:
        raise ValueError(f"unknown keys in {path}: {sorted(unknown)}")
    coeffs = []
    grid = None
    if "xi_grid" in data:
        lo, hi, pts = data["xi_grid"]
        grid = np.linspace(lo, hi, int(pts))
    for c in data["coefficients"]:
        if c is None or c == 0 or c == "0":
            coeffs.append(None)
        elif isinstance(c, str):
            coeffs.append(expression_function(c))
        else:
            if grid is None:
                raise ValueError("sampled coefficients need xi_grid")
            arr = np.asarray(c, dtype=complex)
            sr, si = CubicSpline(grid, arr.real), CubicSpline(grid, arr.imag)
            coeffs.append(lambda xi, sr=sr, si=si: sr(xi) + 1j * si(xi))
    sched = BorelSchedule(eps0=data.get("eps0", 1.0), ratio=data.get("ratio", 0.5))
    return borel_realize(coeffs, sched)


def multiplier_from_spec(spec: str, n: int) -> Multiplier:
    """``one``, ``tracial``, ``tracial:<psi(theta, xi)>`` or ``borel:<file>``."""
    if spec == "one":
        return ONE
    if spec == "tracial":
        return tracial_multiplier(n)
    if spec.startswith("tracial:"):
        psi = expression_function(spec.split(":", 1)[1], with_theta=True)
        return tracial_multiplier(n, psi=lambda th, xi: np.real(psi(th, xi)))
    if spec.startswith("borel:"):
        return load_borel_file(spec.split(":", 1)[1])
    raise ValueError(f"unknown multiplier spec {spec!r}")

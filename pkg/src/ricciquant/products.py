"""Non-formal star products on grids, their Hilbert structure and the
comparison with the formal expansion.

Two routes compute the same product:

* ``PIPELINE``: ``T(T^-1 u *0 T^-1 v)`` with the numerical Weyl product in
  the middle;
* ``KERNEL`` / ``TRACIAL_KERNEL``: direct quadrature of the three-point
  oscillatory integral (see :mod:`ricciquant.kernel`).

``theta`` is always the Weyl parameter; the twist and the multiplier are
evaluated at ``theta / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from . import geometry as geo
from .algebra import SpaceParams
from .errors import CostLimit
from .formal import coordinates, transported_product_exprs
from .grid import BOUNDARY_TOL, GridFunction, GridSpec, inner, rel_l2, require_windowed
from .kernel import kernel_constant, kernel_product
from .moyal import moyal_numeric
from .multipliers import ONE, Multiplier, kernel_cochain_function
from .report import Report
from .transforms import FORWARD, INVERSE, T_apply, TwistParams

PIPELINE = "pipeline"
KERNEL = "kernel"
TRACIAL_KERNEL = "tracial_kernel"
ROUTES = (PIPELINE, KERNEL, TRACIAL_KERNEL)

# finest a-step the kernel quadrature aims for, per n
KERNEL_A_STEP = {0: 0.025, 1: 0.1}
KERNEL_X_REFINE = 3


@dataclass(frozen=True)
class Gaussian:
    """``amplitude * exp(-sum_i (x_i - c_i)^2 / w_i)`` in the chart ``(a, v, l)``."""
    center: tuple
    width: tuple | float = 1.0
    amplitude: complex = 1.0

    @property
    def dim(self) -> int:
        return len(self.center)

    def widths(self) -> np.ndarray:
        w = np.broadcast_to(np.asarray(self.width, dtype=float), (self.dim,))
        if np.any(w <= 0):
            raise ValueError("Gaussian widths must be positive")
        return w

    def at(self, pts: np.ndarray) -> np.ndarray:
        """Evaluate on points with the chart coordinates on the last axis."""
        pts = np.asarray(pts, dtype=float)
        q = ((pts - np.asarray(self.center, dtype=float)) ** 2 / self.widths()).sum(-1)
        return self.amplitude * np.exp(-q)

    def __call__(self, a, v, l):
        comps = [a] + [v[i] for i in range(len(v))] + [l]
        if len(comps) != self.dim:
            raise ValueError(f"Gaussian of dimension {self.dim} sampled on {len(comps)} axes")
        q = sum((x - c) ** 2 / w for x, c, w in zip(comps, self.center, self.widths()))
        return self.amplitude * np.exp(-q)

    def expr(self):
        n = (self.dim - 2) // 2
        gens = coordinates(n)
        amp = sp.nsimplify(self.amplitude)
        return amp * sp.exp(-sum((g - sp.nsimplify(c)) ** 2 / sp.nsimplify(w)
                                 for g, c, w in zip(gens, self.center, self.widths())))

    def sample(self, spec: GridSpec) -> GridFunction:
        return GridFunction.from_callable(spec, self)


def translate(f: Callable, w) -> Callable:
    """``f o s_w`` for a point function ``f`` (points on the last axis)."""
    w = np.asarray(w, dtype=float)
    return lambda pts: f(geo.symmetry(np.broadcast_to(w, np.shape(pts)), pts))


def sample_points(spec: GridSpec, f: Callable) -> GridFunction:
    """Sample a point function (coordinates on the last axis) on the grid."""
    mesh = np.meshgrid(*[ax.nodes for ax in spec.axes], indexing="ij")
    return GridFunction(spec, f(np.stack(mesh, axis=-1)))


@dataclass(frozen=True)
class ProductConfig:
    params: SpaceParams
    theta: float
    tau: Multiplier = ONE
    route: str = PIPELINE
    grid: GridSpec | None = None
    boundary_tol: float | None = BOUNDARY_TOL
    refine: tuple | None = None
    constant: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.theta) or self.theta == 0:
            raise ValueError("theta must be finite and nonzero")
        if self.route not in ROUTES:
            raise ValueError(f"unknown route {self.route!r}; expected one of {ROUTES}")
        if self.route != PIPELINE and self.params.n > 1:
            raise CostLimit("kernel routes are limited to n in {0, 1}")
        if self.route == TRACIAL_KERNEL and not self.tau.is_tracial:
            raise ValueError("TRACIAL_KERNEL needs a tracial multiplier")
        if self.grid is not None and self.grid.n != self.params.n:
            raise ValueError("grid dimension does not match n")

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def twist(self) -> TwistParams:
        return TwistParams(self.theta / 2, self.n)

    def _tau(self):
        return None if self.tau.is_one else self.tau


def transport(u: GridFunction, cfg: ProductConfig, direction: str = FORWARD,
              boundary_tol: float | None = None) -> GridFunction:
    return T_apply(u, cfg.twist, cfg._tau(), direction, boundary_tol=boundary_tol)


def star_pipeline(u: GridFunction, v: GridFunction, cfg: ProductConfig) -> GridFunction:
    """``T(T^-1 u *0 T^-1 v)``; only the inputs are checked for boundary mass."""
    tu = transport(u, cfg, INVERSE, cfg.boundary_tol)
    tv = transport(v, cfg, INVERSE, cfg.boundary_tol)
    w = moyal_numeric(tu, tv, cfg.theta, boundary_tol=None)
    return transport(w, cfg, FORWARD)


def default_refine(spec: GridSpec) -> tuple:
    n = spec.n
    h = spec.axes[0].step
    Ra = int(np.ceil(h / KERNEL_A_STEP[n]))
    Ra += 1 - Ra % 2
    return (max(Ra, 1), KERNEL_X_REFINE if n else 1)


def star_kernel(u: GridFunction, v: GridFunction, cfg: ProductConfig) -> GridFunction:
    """Oscillatory-integral form; the constant defaults to the calibrated value."""
    require_windowed(u, cfg.boundary_tol)
    require_windowed(v, cfg.boundary_tol)
    canonical = cfg.route == TRACIAL_KERNEL
    cochain = None
    if canonical:
        # the tracial real part is absorbed into A_can; only i psi remains
        if cfg.tau.psi is not None:
            psi = cfg.tau.psi
            odd = Multiplier(lambda th, xi: 1j * np.asarray(psi(th, xi), dtype=float), name="i psi")
            cochain = kernel_cochain_function(odd, cfg.theta / 2)
    elif not cfg.tau.is_one:
        cochain = kernel_cochain_function(cfg.tau, cfg.theta / 2)
    refine = cfg.refine or default_refine(u.spec)
    return kernel_product(u, v, cfg.theta, canonical=canonical, cochain=cochain,
                          refine=refine, constant=cfg.constant)


def star(u: GridFunction, v: GridFunction, cfg: ProductConfig) -> GridFunction:
    if cfg.route == PIPELINE:
        return star_pipeline(u, v, cfg)
    return star_kernel(u, v, cfg)


def inner_product(a: GridFunction, b: GridFunction, cfg: ProductConfig) -> complex:
    """``(a|b) = int T^-1 a  conj(T^-1 b)``."""
    return inner(transport(a, cfg, INVERSE, cfg.boundary_tol),
                 transport(b, cfg, INVERSE, cfg.boundary_tol))


def calibrate_constant(cfg: ProductConfig, pair: Sequence[Gaussian]) -> tuple[float, float]:
    """Least-squares constant of the kernel route against the pipeline.

    Returns ``(fitted / default, residual)``; the default constant is kept
    frozen in :func:`ricciquant.kernel.kernel_constant`.
    """
    u, v = (g.sample(cfg.grid) for g in pair)
    P = star_pipeline(u, v, cfg).values
    K = kernel_product(u, v, cfg.theta, refine=cfg.refine or default_refine(cfg.grid),
                       constant=1.0).values
    C = np.vdot(K, P) / np.vdot(K, K)
    return float(abs(C) / kernel_constant(cfg.n)), float(np.linalg.norm(C * K - P) / np.linalg.norm(P))


# --- traces -------------------------------------------------------------------------------

def nontracial_witness() -> Multiplier:
    """``tau = theta^2 xi^2 / (1 + theta^2 xi^2)``: a damped, real, even multiplier."""
    return Multiplier(lambda th, xi: (th * xi) ** 2 / (1 + (th * xi) ** 2) + 0j, name="damped")


def random_gaussians(rng: np.random.Generator, count: int, n: int, spread: float = 0.4,
                     width: float = 0.5) -> list[Gaussian]:
    dim = 2 * n + 2
    return [Gaussian(tuple(rng.uniform(-spread, spread, dim)), width) for _ in range(count)]


def trace_symmetry_check(cfg: ProductConfig, samples: int = 2, seed: int = 0,
                         tol: float = 1e-6) -> Report:
    """Trace properties of the integral on random Gaussian pairs.

    Three residuals are recorded: ``int u*v - int v*u`` (trace symmetry),
    ``int u*v - int u v`` (closedness) and ``|T u| / |u| - 1`` (unitarity).
    Since ``int T f = exp(tau(0)) int f``, trace symmetry holds for every
    multiplier; closedness is what tells tracial multipliers apart.
    """
    rng = np.random.default_rng(seed)
    rep = Report(f"trace[{cfg.tau.name}]")
    worst_tr = worst_cl = worst_unit = 0.0
    for _ in range(samples):
        g1, g2 = random_gaussians(rng, 2, cfg.n)
        u, v = g1.sample(cfg.grid), g2.sample(cfg.grid)
        uv, vu = star(u, v, cfg).integral(), star(v, u, cfg).integral()
        worst_tr = max(worst_tr, abs(uv - vu) / abs(uv))
        worst_cl = max(worst_cl, abs(uv - (u * v).integral()) / abs(uv))
        Tu = transport(u, cfg, FORWARD, cfg.boundary_tol)
        worst_unit = max(worst_unit, abs(Tu.norm() / u.norm() - 1))
    rep.info.update(trace_residual=worst_tr, closedness_residual=worst_cl,
                    unitarity_residual=worst_unit)
    if cfg.tau.is_tracial:
        rep.add("trace_symmetry", worst_tr, tol, "trace symmetry")
        rep.add("closedness", worst_cl, tol, "closedness of the integral")
        rep.add("unitarity", worst_unit, tol, "unitarity of the transport")
    else:
        rep.add("trace_violation", worst_tr, 1e-3, "trace symmetry", mode="gt",
                note="int u*v = int v*u for every multiplier; this witness cannot fire")
        rep.add("closedness_violation", worst_cl, 1e-3, "closedness of the integral", mode="gt")
    return rep


# --- asymptotics --------------------------------------------------------------------------

def richardson_slope(thetas: Sequence[float], residuals: Sequence[float],
                     corrected: bool = True) -> float:
    """Order ``p`` of ``residual ~ C theta^p``.

    With ``corrected`` and at least three samples the model is
    ``log r = c + p log theta + b theta``, which removes the leading
    correction that otherwise biases the plain log-log slope.
    """
    t = np.asarray(thetas, dtype=float)
    r = np.log(np.asarray(residuals, dtype=float))
    cols = [np.ones_like(t), np.log(t)]
    if corrected and len(t) >= 3:
        cols.append(t)
    coef = np.linalg.lstsq(np.stack(cols, 1), r, rcond=None)[0]
    return float(coef[1])


def asymptotic_compare(cfg: ProductConfig, orders: int = 1,
                       theta_sweep: Sequence[float] = (0.1, 0.05, 0.025),
                       pair: Sequence[Gaussian] | None = None,
                       polys: Sequence[str] = ("a + l", "1 + a*l"),
                       tau_taylor: Sequence | None = None) -> Report:
    """Residuals of the pipeline product against the formal expansion.

    The data are ``p_i * G_i`` with Gaussians ``G_i`` and polynomials
    ``p_i``.  The residual at order ``K`` is the relative L2 distance to
    ``sum_{k <= K} theta^k P_k``; its slope in ``theta`` should be ``K + 1``.
    ``cfg.tau`` must be ONE or a multiplier whose Taylor coefficients are
    given in ``tau_taylor`` (expressions in ``xi``).
    """
    if orders > 2:
        raise ValueError("numerical comparison is limited to orders <= 2")
    n = cfg.n
    spec = cfg.grid
    if pair is None:
        pair = (Gaussian((0.2,) + (0.0,) * (2 * n) + (0.1,), 0.6),
                Gaussian((-0.1,) + (0.1,) * (2 * n) + (-0.2,), 0.6))
    gens = coordinates(n)
    exprs = [sp.sympify(p, locals={str(g): g for g in gens}) * g.expr() for p, g in zip(polys, pair)]
    coeffs = transported_product_exprs(exprs[0], exprs[1], n, orders, tau_taylor)
    fns = [sp.lambdify(gens, c, "numpy") for c in coeffs]

    def sample_expr(f):
        return GridFunction.from_callable(spec, lambda a, v, l: f(a, *[v[i] for i in range(2 * n)], l))

    P = [sample_expr(f) for f in fns]
    u, v = (sample_expr(sp.lambdify(gens, e, "numpy")) for e in exprs)
    rep = Report("asymptotics")
    res = np.zeros((orders + 1, len(theta_sweep)))
    for j, th in enumerate(theta_sweep):
        c = ProductConfig(cfg.params, th, cfg.tau, PIPELINE, spec, cfg.boundary_tol)
        w = star_pipeline(u, v, c)
        approx = P[0]
        for K in range(orders + 1):
            if K:
                approx = approx + P[K] * th ** K
            res[K, j] = rel_l2(w, approx)
    rep.info["thetas"] = list(map(float, theta_sweep))
    rep.info["residuals"] = res.tolist()
    for K in range(orders + 1):
        slope = richardson_slope(theta_sweep, res[K])
        rep.info[f"slope_{K}"] = slope
        rep.info[f"plain_slope_{K}"] = richardson_slope(theta_sweep, res[K], corrected=False)
        rep.add(f"order{K}_slope", slope, K + 1.0, "asymptotic expansion",
                mode="ge")
    return rep

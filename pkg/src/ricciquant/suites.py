"""Verification batteries, one per module, each returning a :class:`Report`.

Residuals of point identities are measured relative to ``1 +`` the largest
magnitude among the points involved: the symmetries stretch coordinates
exponentially in ``a``, so absolute residuals of exact identities grow with
the size of the intermediate points.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass

import numpy as np
import sympy as sp

from . import algebra as alg
from . import cochains as co
from . import formal
from . import geometry as geo
from . import multipliers as mu
from . import products as pr
from .grid import GridFunction, GridSpec, inner, rel_l2
from .moyal import moyal_numeric, poisson_matrix
from .report import Report
from .transforms import FORWARD, INVERSE, T_apply, TwistParams

SUITES = ("algebra", "geometry", "cochains", "transforms", "moyal", "multipliers", "products")


@dataclass(frozen=True)
class SuiteParams:
    n: int = 0
    theta: float = 0.5
    grid: int = 128
    seed: int = 0
    samples: int = 1000


def _rel(x, y, *involved):
    """``|x - y|`` over ``1 +`` the largest magnitude among the points involved."""
    scale = np.linalg.norm(np.atleast_2d(y), axis=-1)
    for p in involved:
        scale = np.maximum(scale, np.linalg.norm(np.atleast_2d(p), axis=-1))
    return np.linalg.norm(np.atleast_2d(x - y), axis=-1) / (1.0 + scale)


# --- algebra ----------------------------------------------------------------------------

def algebra_suite(p: SuiteParams) -> Report:
    rep = Report("algebra")
    for n in range(0, 4):
        params = alg.SpaceParams(n)
        for name, a in (("g", alg.build_transvection_algebra(params)),
                        ("s", alg.build_solvable_algebra(params))):
            rep.add(f"n{n}.{name}.jacobi", alg.jacobi_residual(a), 1e-12, "Lie algebra axioms")
            rep.add(f"n{n}.{name}.antisymmetry", alg.antisymmetry_residual(a), 1e-12,
                    "Lie algebra axioms")
        rep.extend(alg.check_symmetric_triple(alg.build_transvection_algebra(params)), f"n{n}.")
    for n in (1, 2):
        params = alg.SpaceParams(n)
        dim, _ = alg.invariant_two_vectors(params)
        rows, _ = alg.invariance_rows(params, 8, 0, covariant=False)
        _, gap_b = alg.rank_and_gap(rows, 1e-8)
        rep.add(f"n{n}.bivector_dim", abs(dim - (1 + 2 * n)), 0.5, "invariant bivectors",
                note=f"dim = {dim}")
        h2 = alg.invariant_h2_dimension(params)
        d1, d2 = alg.cochain_differential(alg.build_solvable_algebra(params))
        crow, _ = alg.invariance_rows(params, 8, 0, covariant=True)
        _, gap_h = alg.rank_and_gap(np.vstack([d2, crow]), 1e-8)
        rep.add(f"n{n}.h2_dim", h2, 0.5, "invariant second cohomology", note=f"dim = {h2}")
        rep.add(f"n{n}.svd_gap", min(gap_b, gap_h), alg.GAP_RATIO, "rank decisions", mode="ge")
    return rep


# --- geometry ---------------------------------------------------------------------------

def symmetric_space_residuals(n: int, samples: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    x, y, z = (geo.random_points(rng, samples, n) for _ in range(3))
    sxy = geo.symmetry(x, y)
    inv = _rel(geo.symmetry(x, sxy), y, sxy).max()
    sxz = geo.symmetry(x, z)
    mid = geo.symmetry(y, sxz)
    lhs = geo.symmetry(x, mid)
    braid = _rel(lhs, geo.symmetry(sxy, z), sxy, sxz, mid).max()
    fixed = _rel(geo.symmetry(x, x), x).max()
    conj = _rel(geo.symmetry_by_conjugation(x, y), sxy).max()
    return dict(involution=float(inv), braid=float(braid), fixed_point=float(fixed),
                group_conjugation=float(conj))


def phase_invariance_residuals(n: int, samples: int, seed: int) -> dict:
    """``f(s_w x0, s_w x1, s_w x2) = f(x0, x1, x2)`` for the kernel ingredients."""
    rng = np.random.default_rng(seed)
    t = np.stack([geo.random_points(rng, samples, n) for _ in range(3)], axis=-2)
    w = geo.random_points(rng, samples, n)[:, None, :]
    ts = geo.symmetry(np.broadcast_to(w, t.shape), t)
    out = {}
    for name, f in (("S", geo.phase_S), ("A1", geo.amplitude_A1), ("Acan", geo.amplitude_Acan)):
        a, b = f(ts), f(t)
        out[name] = float(np.max(np.abs(a - b) / (1 + np.abs(b))))
    # an odd multiplier gives a term that flips under one symmetry (a-differences
    # change sign), so it is tested under transvections s_w s_w'
    g = mu.kernel_cochain_function(mu.tracial_multiplier(n, psi=lambda th, xi: np.arctan(th * xi)), 0.25)
    c = co.multiplier_three_point(g)
    w2 = geo.random_points(rng, samples, n)[:, None, :]
    tt = geo.symmetry(np.broadcast_to(w2, t.shape), ts)
    a, b = c(tt[:, 0], tt[:, 1], tt[:, 2]), c(t[:, 0], t[:, 1], t[:, 2])
    out["cochain"] = float(np.max(np.abs(a - b) / (1 + np.abs(b))))
    return out


def connection_residuals(n: int, points: int = 20, seed: int = 0) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    tors = nab = 0.0
    for x in geo.random_points(rng, points, n, a_max=1.0, c_max=1.0):
        _, t, w = geo.loos_connection_at(x)
        tors, nab = max(tors, t), max(nab, w)
    return tors, nab


def geometry_suite(p: SuiteParams) -> Report:
    rep = Report("geometry")
    r = symmetric_space_residuals(p.n, p.samples, p.seed)
    rep.add("involution", r["involution"], 1e-12, "s_x involutive")
    rep.add("braid", r["braid"], 1e-9, "s_x s_y s_x = s_{s_x y}")
    rep.add("fixed_point", r["fixed_point"], 1e-12, "s_x x = x")
    rep.add("group_conjugation", r["group_conjugation"], 1e-9, "symmetry from the group law")
    for k, v in phase_invariance_residuals(p.n, p.samples, p.seed).items():
        rep.add(f"invariance.{k}", v, 1e-9, "diagonal symmetry invariance")
    tors, nab = connection_residuals(p.n, 20, p.seed)
    rep.add("torsion", tors, 1e-6, "Loos connection torsion free")
    rep.add("nabla_omega", nab, 1e-6, "Loos connection symplectic")
    return rep


# --- cochains -----------------------------------------------------------------------------

def _test_cochain(arity: int, n: int, seed: int) -> co.Cochain:
    rng = np.random.default_rng(seed)
    W = rng.normal(size=(arity, 2 * n + 2))

    def ev(*xs):
        s = sum(np.tanh(x @ W[i]) * (i + 1) for i, x in enumerate(xs))
        return np.sin(s) + s ** 2

    return co.Cochain(arity, ev, label=f"test{arity}")


def cochain_identity_residuals(n: int, samples: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    out = {"delta2": 0.0, "delta_op2": 0.0}
    for q in (1, 2, 3):
        c = _test_cochain(q, n, seed + q)
        pts = [geo.random_points(rng, samples, n) for _ in range(q + 2)]
        out["delta2"] = max(out["delta2"], float(np.abs(co.coboundary(co.coboundary(c))(*pts)).max()))
        out["delta_op2"] = max(out["delta_op2"],
                               float(np.abs(co.coboundary_op(co.coboundary_op(c))(*pts)).max()))
    g = lambda t: 0.3 * np.sin(t) + 0.1 * t ** 2 + 0.2j * np.tanh(t)
    out["heuristic_ratio"] = co.select_embedding(g, samples, seed).info["forward"]
    return out


def cochains_suite(p: SuiteParams) -> Report:
    rep = Report("cochains")
    r = cochain_identity_residuals(p.n, p.samples, p.seed)
    rep.add("delta_squared", r["delta2"], 1e-12, "coboundary complex")
    rep.add("delta_op_squared", r["delta_op2"], 1e-12, "coboundary complex (op)")
    rep.add("multiplier_vs_heuristic", r["heuristic_ratio"], 1e-12, "heuristic transported product")
    rep.extend(co.admissibility_check(co.phase_cochain(), p.n, p.samples, p.seed))
    return rep


# --- transforms ---------------------------------------------------------------------------

def _gauss_spec(n, points, half=6.0):
    return GridSpec.box(n, -half, half, points)


def transport_slope(thetas=(0.4, 0.2, 0.1, 0.05)) -> tuple[float, list]:
    """Plain log-log slope of ``|T^-1_theta u - u|`` in the Weyl parameter (``U_1 = 0``).

    The data are wide in ``l``; narrow windows are still pre-asymptotic at
    ``theta = 0.4``.
    """
    spec = GridSpec.box(0, -8, 8, 128)
    u = pr.Gaussian((0.2, 0.1), (0.6, 2.0)).sample(spec)
    res = [rel_l2(T_apply(u, TwistParams(th / 2, 0), None, INVERSE), u) for th in thetas]
    return pr.richardson_slope(thetas, res, corrected=False), res


def transforms_suite(p: SuiteParams) -> Report:
    rep = Report("transforms")
    spec = _gauss_spec(0, max(p.grid, 256))
    u = pr.Gaussian((0.2, -0.1), 0.6).sample(spec)
    tp = TwistParams(p.theta / 2, 0)
    Tu = T_apply(u, tp, None, FORWARD)
    rep.add("roundtrip", rel_l2(T_apply(Tu, tp, None, INVERSE, None), u), 1e-5, "T^-1 T = id")
    n = min(p.n, 1)
    if n == 0:
        v, tpn = u, tp
    else:
        v = pr.Gaussian((0.2, 0.1, 0.0, -0.1), (0.8, 1.5, 1.5, 2.0)).sample(GridSpec.box(1, -6, 6, 32))
        tpn = TwistParams(p.theta / 2, 1)
    Tv = T_apply(v, tpn, mu.tracial_multiplier(n), FORWARD, None)
    rep.add(f"tracial_unitarity.n{n}", abs(Tv.norm() / v.norm() - 1), 1e-6,
            "unitarity of the transport")
    slope, _ = transport_slope()
    rep.add("U1_vanishes_slope", abs(slope - 2), 0.2, "asymptotic expansion, U_1 = 0",
            note=f"slope = {slope:.3f}")
    return rep


# --- moyal --------------------------------------------------------------------------------

def gaussian_idempotent(theta: float, points: int = 256, half: float = 6.0) -> float:
    spec = GridSpec.box(0, -half, half, points)
    e = GridFunction.from_callable(spec, lambda a, v, l: 2 * np.exp(-(a ** 2 + l ** 2) / theta))
    return rel_l2(moyal_numeric(e, e, theta), e)


def commutator_slope(thetas=(0.2, 0.1, 0.05), points: int = 128) -> tuple[float, list]:
    """``(u*v - v*u) / (i theta) -> {u, v}``; the residual is ``O(theta^2)``."""
    spec = GridSpec.box(0, -6, 6, points)
    a_, l_ = formal.coordinates(0)
    ue = sp.exp(-((a_ - sp.Rational(1, 5)) ** 2 + l_ ** 2) * sp.Rational(5, 4)) * (1 + a_)
    ve = sp.exp(-(a_ ** 2 + (l_ - sp.Rational(3, 10)) ** 2) * sp.Rational(5, 4)) * (1 + l_)
    br = formal.moyal_bidiff_expr(ue, ve, 1, 0)
    fs = [sp.lambdify((a_, l_), e, "numpy") for e in (ue, ve, br)]
    u, v, b = (GridFunction.from_callable(spec, lambda a, vv, l, f=f: f(a, l)) for f in fs)
    res = []
    for th in thetas:
        com = (moyal_numeric(u, v, th) - moyal_numeric(v, u, th)) * (1 / (1j * th))
        res.append(rel_l2(com, b))
    return pr.richardson_slope(thetas, res, corrected=False), res


def formal_associativity(n: int, K: int = 4, seed: int = 0) -> bool:
    rng = np.random.default_rng(seed)
    gens = formal.coordinates(n)

    def cubic():
        mons = [m for m in sp.itermonomials(gens, 3)]
        picks = rng.choice(len(mons), size=4, replace=False)
        return sum(int(rng.integers(-3, 4)) * mons[i] for i in picks) + 1

    u, v, w = (formal.PolyObservable.from_expr(cubic(), n) for _ in range(3))
    lhs = formal.moyal_formal(formal.moyal_formal(u, v, K), w, K)
    rhs = formal.moyal_formal(u, formal.moyal_formal(v, w, K), K)
    return (lhs - rhs).is_zero()


def moyal_suite(p: SuiteParams) -> Report:
    rep = Report("moyal")
    for th in (0.5, 1.0):
        rep.add(f"idempotent.theta{th}", gaussian_idempotent(th, max(p.grid, 64)), 1e-6,
                "Weyl product of Gaussians")
    slope, _ = commutator_slope()
    rep.add("commutator_slope", abs(slope - 2), 0.2, "classical limit: Poisson bracket",
            note=f"slope = {slope:.3f}")
    for n in (0, 1):
        ok = formal_associativity(n, 4, p.seed)
        rep.add(f"formal_associativity.n{n}", 0.0 if ok else 1.0, 0.5, "associativity through theta^4")
    return rep


# --- multipliers --------------------------------------------------------------------------

def multipliers_suite(p: SuiteParams) -> Report:
    rep = Report("multipliers")
    rep.extend(mu.check_theta_membership(mu.ONE), "one.")
    coeffs = [lambda xi: xi ** 2 / 2, None, lambda xi: 1j * xi ** 3 / 6,
              lambda xi: np.sin(xi)]
    tau = mu.borel_realize(coeffs, mu.BorelSchedule(), check=False)
    rep.add("borel_taylor_match", mu.taylor_match(tau, coeffs, np.linspace(-3, 3, 61)), 1e-4,
            "Borel realization")
    return rep


# --- products -----------------------------------------------------------------------------

def _gaussians(n):
    z = (0.0,) * (2 * n)
    if n == 0:
        w = (0.5, 1.0)
        return [pr.Gaussian((0.3,) + z + (0.0,), w), pr.Gaussian((-0.2,) + z + (0.3,), w),
                pr.Gaussian((0.0,) + z + (-0.2,), (0.6, 0.8))]
    w = (0.8, 1.5, 1.5, 2.0)
    return [pr.Gaussian((0.2, 0.1, 0.0, 0.0), w), pr.Gaussian((-0.1, 0.0, 0.2, 0.1), w),
            pr.Gaussian((0.0, -0.1, 0.1, -0.2), w)]


def product_grid(n: int, points: int) -> GridSpec:
    return GridSpec.box(0, -6, 6, points) if n == 0 else GridSpec.box(1, -4, 4, 12)


def products_battery(n: int, theta: float, points: int, seed: int = 0) -> Report:
    rep = Report("products")
    spec = product_grid(n, points)
    # n = 1 data on 12^4 cannot decay to 1e-12 and be resolved at the same time
    btol = 1e-12 if n == 0 else 5e-3
    cfg = pr.ProductConfig(alg.SpaceParams(n), theta, grid=spec, boundary_tol=btol)
    free = dataclasses.replace(cfg, boundary_tol=None)
    u, v, w = (g.sample(spec) for g in _gaussians(n))
    uv = pr.star(u, v, cfg)
    assoc = rel_l2(pr.star(uv, w, free), pr.star(u, pr.star(v, w, cfg), free))
    rep.add("associativity", assoc, 1e-4 if n == 0 else 1e-1, "associativity")
    kcfg = dataclasses.replace(cfg, route=pr.KERNEL)
    rep.add("kernel_vs_pipeline", rel_l2(pr.star(u, v, kcfg), uv), 1e-3 if n == 0 else 5e-2,
            "kernel form of the product")
    if n == 0:
        c = pr.Gaussian((0.1, 0.1), (0.7, 0.7), 1 + 0.5j).sample(spec)
        lhs = pr.inner_product(pr.star(u, c, cfg), v, free)
        rhs = pr.inner_product(u, pr.star(v, c.conj(), cfg), free)
        rep.add("hilbert_compatibility", abs(lhs - rhs) / abs(lhs), 1e-6, "compatibility with the Hilbert structure")
        gs = _gaussians(0)
        wpt = np.array([0.15, 0.0])
        ut, vt, wt = (pr.sample_points(spec, pr.translate(g.at, wpt)) for g in gs)
        ip, ipt = pr.inner_product(u, v, cfg), pr.inner_product(ut, vt, cfg)
        rep.add("inner_product_invariance", abs(ipt - ip) / abs(ip), 1e-6,
                "invariance of the inner product")
        cov0, cov1 = inner(uv, w), inner(pr.star(ut, vt, cfg), wt)
        rep.add("product_covariance", abs(cov1 - cov0) / abs(cov0), 1e-3,
                "covariance under symmetries")
        for tau in (mu.tracial_multiplier(0, psi=lambda th, xi: np.arctan(th * xi)),
                    pr.nontracial_witness()):
            tr = pr.trace_symmetry_check(dataclasses.replace(cfg, tau=tau), seed=seed)
            if not tau.is_tracial:
                # int u*v = int v*u for every multiplier; keep only the closedness witness
                tr.checks = [c for c in tr.checks if c.id != "trace_violation"]
            rep.extend(tr, f"{tau.name}.")
        asym = pr.asymptotic_compare(cfg, orders=1)
        rep.extend(asym)
    return rep


def products_suite(p: SuiteParams) -> Report:
    return products_battery(min(p.n, 1), p.theta, p.grid, p.seed)


RUNNERS = {
    "algebra": algebra_suite,
    "geometry": geometry_suite,
    "cochains": cochains_suite,
    "transforms": transforms_suite,
    "moyal": moyal_suite,
    "multipliers": multipliers_suite,
    "products": products_suite,
}


def run(names, params: SuiteParams, timings: dict | None = None) -> Report:
    """Run suites by name.  Wall-clock seconds go to ``timings``, not the report,
    so reports stay deterministic."""
    out = Report("verify")
    for name in names:
        t0 = time.perf_counter()
        out.extend(RUNNERS[name](params), f"{name}.")
        if timings is not None:
            timings[name] = time.perf_counter() - t0
    return out

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from ricciquant import formal
from ricciquant.errors import GridMismatch
from ricciquant.formal import (DiffOp, FormalSeries, PolyObservable, expand_T, expand_T_inverse,
                               formal_transported_product, moyal_formal, poisson_bracket)
from ricciquant.grid import GridFunction, GridSpec, rel_l2
from ricciquant.moyal import moyal_numeric, poisson_matrix, symplectic_matrix
from ricciquant.products import Gaussian
from ricciquant.suites import commutator_slope, formal_associativity, gaussian_idempotent
from ricciquant.transforms import INVERSE, T_apply, TwistParams

P = PolyObservable.from_expr


# --- numerical Weyl product ---------------------------------------------------------------

@pytest.mark.parametrize("theta", [0.5, 1.0])
def test_gaussian_idempotent(theta):
    assert gaussian_idempotent(theta, 256) < 1e-6


def test_commutator_tends_to_poisson_bracket():
    slope, res = commutator_slope()
    assert abs(slope - 2) < 0.2
    assert res[-1] < res[0]


def test_weyl_product_is_closed():
    spec = GridSpec.box(0, -6, 6, 128)
    u = Gaussian((0.3, -0.2), (0.5, 0.8)).sample(spec)
    v = Gaussian((-0.1, 0.4), (0.7, 0.6)).sample(spec)
    w = moyal_numeric(u, v, 0.5)
    assert abs(w.integral() - (u * v).integral()) / abs((u * v).integral()) < 1e-6


def test_numeric_associativity():
    spec = GridSpec.box(0, -6, 6, 128)
    u, v, w = (Gaussian(c, wd).sample(spec) for c, wd in
               (((0.3, 0.0), (0.5, 1.0)), ((-0.2, 0.3), (0.5, 1.0)), ((0.0, -0.2), (0.6, 0.8))))
    th = 0.5
    lhs = moyal_numeric(moyal_numeric(u, v, th), w, th, boundary_tol=None)
    rhs = moyal_numeric(u, moyal_numeric(v, w, th), th, boundary_tol=None)
    assert rel_l2(lhs, rhs) < 1e-4


def test_n1_idempotent_fixes_v_bracket():
    # With {v1,v2}=2 the Gaussian idempotent is twice as wide in v; a bracket of 1 would not be.
    th = 1.0
    spec = GridSpec.box(1, -6, 6, 20)

    def idem(bv):
        return GridFunction.from_callable(
            spec, lambda a, v, l: 4 * np.exp(-(a ** 2 + l ** 2) / th - (v[0] ** 2 + v[1] ** 2) / (bv * th)))

    e = idem(2)
    assert rel_l2(moyal_numeric(e, e, th, None), e) < 5e-3
    wrong = idem(1)
    assert rel_l2(moyal_numeric(wrong, wrong, th, None), wrong) > 0.1


def test_grid_mismatch():
    u = Gaussian((0.0, 0.0), 0.5).sample(GridSpec.box(0, -6, 6, 64))
    v = Gaussian((0.0, 0.0), 0.5).sample(GridSpec.box(0, -6, 6, 32))
    with pytest.raises(GridMismatch):
        moyal_numeric(u, v, 0.5)


def test_poisson_matrix_inverts_chart_form():
    for n in (0, 1, 2):
        lam = poisson_matrix(n)
        assert np.allclose(lam @ -symplectic_matrix(n), np.eye(2 * n + 2))
    assert poisson_matrix(0)[0, 1] == 1.0


# --- formal Weyl product ------------------------------------------------------------------

def test_canonical_commutator():
    a_l = moyal_formal(P("a", 0), P("l", 0), 2)
    l_a = moyal_formal(P("l", 0), P("a", 0), 2)
    diff = a_l - l_a
    assert diff[0].is_zero() and diff[2].is_zero()
    assert diff[1] == P(sp.I, 0)


def test_unit():
    u = P("a**2*l - 3*v1*v2 + l**3", 1)
    s = moyal_formal(u, PolyObservable.one(1), 4)
    assert s[0] == u and all(s[k].is_zero() for k in range(1, 5))


@pytest.mark.parametrize("n", [0, 1])
def test_formal_associativity_through_theta4(n):
    assert formal_associativity(n, K=4, seed=3)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=6, max_size=6))
def test_first_order_commutator_is_poisson(cs):
    a, l = formal.coordinates(0)
    u = P(cs[0] * a ** 2 + cs[1] * a * l + cs[2] * l ** 3, 0)
    v = P(cs[3] * l ** 2 + cs[4] * a ** 3 + cs[5] * a, 0)
    com = moyal_formal(u, v, 1) - moyal_formal(v, u, 1)
    assert com[0].is_zero()
    assert com[1] == poisson_bracket(u, v) * sp.I


# --- transport series ---------------------------------------------------------------------

@pytest.mark.parametrize("n", [0, 1])
def test_U1_vanishes_and_odd_orders_vanish(n):
    S = expand_T_inverse(n, 5)
    assert S.coeffs[0] == DiffOp.identity(n)
    for k in (1, 3, 5):
        assert S.coeffs[k].is_zero()
    assert not S.coeffs[2].is_zero()


@pytest.mark.parametrize("n", [0, 1])
def test_forward_and_inverse_series_compose_to_identity(n):
    K = 4
    assert (expand_T(n, K) @ expand_T_inverse(n, K) - FormalSeries.identity(n, K)).is_zero()
    assert (expand_T_inverse(n, K).inverse() - expand_T(n, K)).is_zero()


def test_series_annihilate_functions_of_a():
    S = expand_T_inverse(1, 4)
    f = P("a**3 - 2*a + 1", 1)
    for k in range(1, 5):
        assert S.coeffs[k].apply(f).is_zero()


def test_second_order_coefficient_matches_transport():
    # Weyl parameter 0.05 means twist parameter 0.025; the remainder is pure fourth order.
    th = 0.05
    spec = GridSpec.box(0, -8, 8, 256)
    a, l = formal.coordinates(0)
    expr = (1 + a * l) * sp.exp(-(a ** 2 + l ** 2) / 2)
    f = sp.lambdify((a, l), expr, "numpy")
    series = expand_T_inverse(0, 4)
    U2, U4 = (sp.lambdify((a, l), series.coeffs[k].apply_expr(expr), "numpy") for k in (2, 4))
    u = GridFunction.from_callable(spec, lambda aa, v, ll: f(aa, ll))
    t2 = GridFunction.from_callable(spec, lambda aa, v, ll: U2(aa, ll))
    t4 = GridFunction.from_callable(spec, lambda aa, v, ll: U4(aa, ll))
    tw = th / 2
    num = (T_apply(u, TwistParams(tw), None, INVERSE) - u) * (1 / tw ** 2)
    assert rel_l2(num, t2) < 1e-2
    assert rel_l2(num, t2 + t4 * tw ** 2) < 1e-3


def test_transport_series_order_limit():
    with pytest.raises(ValueError):
        expand_T_inverse(0, 9)


# --- transported formal product -----------------------------------------------------------

def _star(T, K):
    Tinv = T.inverse()

    def star(A, B):
        return T.apply(moyal_formal(Tinv.apply(A), Tinv.apply(B), K))

    return star


@pytest.mark.parametrize("n", [0, 1])
def test_transported_product_low_orders(n):
    K = 2
    u = P("a*l + l**2" if n == 0 else "a*v1 + l**2 + v2*l", n)
    v = P("l**3 - a**2" if n == 0 else "v1*v2*l - a**2 + v1", n)
    S = formal_transported_product(u, v, expand_T(n, K), K)
    W = moyal_formal(u, v, K)
    assert S[0] == u * v
    assert S[1] == W[1]
    anti = formal_transported_product(v, u, expand_T(n, K), K)
    assert S[1] - anti[1] == poisson_bracket(u, v) * sp.I


@pytest.mark.parametrize("n", [0, 1])
def test_transported_product_associative_through_theta3(n):
    K = 3
    T = expand_T(n, K).rescale(sp.Rational(1, 2))
    star = _star(T, K)
    rng = np.random.default_rng(n)
    gens = formal.coordinates(n)
    mons = list(sp.itermonomials(gens, 2))

    def quad():
        idx = rng.choice(len(mons), size=3, replace=False)
        return P(sum(int(rng.integers(-2, 3)) * mons[i] for i in idx) + gens[-1] ** 2, n)

    u, v, w = quad(), quad(), quad()
    K1 = formal.ObservableSeries
    lhs = star(star(K1([u] + [PolyObservable.zero(n)] * K), K1([v] + [PolyObservable.zero(n)] * K)),
               K1([w] + [PolyObservable.zero(n)] * K))
    rhs = star(K1([u] + [PolyObservable.zero(n)] * K),
               star(K1([v] + [PolyObservable.zero(n)] * K), K1([w] + [PolyObservable.zero(n)] * K)))
    assert (lhs - rhs).is_zero()


def test_expression_and_polynomial_engines_agree():
    u, v = "a*l + l**2 + 1", "l**3 - a**2*l"
    K = 3
    poly = formal_transported_product(P(u, 0), P(v, 0), expand_T(0, K), K)
    expr = formal.transported_product_exprs(u, v, 0, K)
    for k in range(K + 1):
        assert sp.expand(expr[k] - poly[k].as_expr()) == 0

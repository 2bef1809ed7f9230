import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ricciquant import multipliers as mu
from ricciquant.errors import BoundaryMassError, WrongSpaceTag
from ricciquant.grid import (FOURIER, Axis, GridFunction, GridSpec, partial_fourier,
                             partial_fourier_inv, read_binary, read_csv, rel_l2, write_binary,
                             write_csv)
from ricciquant.products import Gaussian
from ricciquant.suites import transport_slope
from ricciquant.transforms import (FORWARD, INVERSE, TWIST, TWIST_INV, T_apply, TwistParams,
                                   pullback, twist, twist_inv, twist_jacobian)


def line_spec(half=20.0, points=256):
    return GridSpec.box(0, -half, half, points)


def fourier_spec(a_half=4.0, xi_half=12.0, points=(32, 512)):
    return GridSpec((Axis("a", -a_half, a_half, points[0]),
                     Axis("xi", -xi_half, xi_half, points[1], centered=False)))


# --- partial Fourier transform ------------------------------------------------------------

def test_gaussian_transform_oracle():
    spec = line_spec()
    u = GridFunction.from_callable(spec, lambda a, v, l: np.exp(-a ** 2) * np.exp(-l ** 2 / 2))
    uh = partial_fourier(u)
    xi = uh.spec.nodes(-1)
    a = spec.nodes(0)[:, None]
    expect = np.exp(-a ** 2) * np.sqrt(2 * np.pi) * np.exp(-xi ** 2 / 2)
    assert np.abs(uh.values - expect).max() < 1e-8


def test_symbol_dictionary():
    # xi u^ is the transform of -i du/dl
    spec = line_spec()
    u = GridFunction.from_callable(spec, lambda a, v, l: np.exp(-(a ** 2 + l ** 2) / 2))
    du = GridFunction.from_callable(spec, lambda a, v, l: 1j * l * np.exp(-(a ** 2 + l ** 2) / 2))
    uh, duh = partial_fourier(u), partial_fourier(du)
    assert np.abs(duh.values - uh.spec.nodes(-1) * uh.values).max() < 1e-10


def test_fourier_round_trip_and_parseval():
    spec = line_spec()
    u = Gaussian((0.3, -1.0), (1.0, 2.0), 1 - 0.5j).sample(spec)
    uh = partial_fourier(u)
    back = partial_fourier_inv(uh)
    assert back.spec.same_as(spec)
    assert rel_l2(back, u) < 1e-10
    lines = np.sum(np.abs(u.values) ** 2, -1)
    live = lines > 1e-200 * lines.max()
    ratio = (np.sum(np.abs(uh.values) ** 2, -1)[live] * uh.spec.axes[-1].step
             / (2 * np.pi * lines[live] * spec.axes[-1].step))
    assert np.abs(ratio - 1).max() < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.complex_numbers(max_magnitude=5), st.complex_numbers(max_magnitude=5))
def test_fourier_linearity(c1, c2):
    spec = line_spec(points=64)
    u = Gaussian((0.0, 1.0), 1.0).sample(spec)
    v = Gaussian((0.5, -1.0), 2.0).sample(spec)
    lhs = partial_fourier(u * c1 + v * c2).values
    rhs = c1 * partial_fourier(u).values + c2 * partial_fourier(v).values
    assert np.abs(lhs - rhs).max() < 1e-12 * (1 + abs(c1) + abs(c2))


def test_wrong_space_tag():
    u = Gaussian((0.0, 0.0), 1.0).sample(line_spec(points=64))
    with pytest.raises(WrongSpaceTag):
        partial_fourier_inv(u)
    with pytest.raises(WrongSpaceTag):
        T_apply(partial_fourier(u), TwistParams(0.2))
    with pytest.raises(WrongSpaceTag):
        pullback(u, TWIST, TwistParams(0.2))


# --- twisting map -------------------------------------------------------------------------

def test_twist_fixes_zero_frequency():
    tp = TwistParams(0.7, 1)
    a, v, xi = twist(0.3, np.array([1.0, -2.0]), 0.0, tp)
    assert (a, xi) == (0.3, 0.0) and np.array_equal(v, [1.0, -2.0])
    assert twist_jacobian(0.0, tp) == 1.0


def test_twist_small_theta_limit():
    tp = TwistParams(1e-6, 1)
    xi = np.linspace(-5, 5, 11)
    _, v, eta = twist(0.0, np.ones(2)[:, None] * xi, xi, tp)
    assert np.abs(eta - xi).max() < 1e-9
    assert np.abs(v - xi).max() < 1e-9


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-8, 8),
       st.sampled_from([0.05, 0.3, 1.0]))
def test_twist_inverse(a, v1, v2, xi, theta):
    tp = TwistParams(theta, 1)
    v = np.array([v1, v2])
    b, w, eta = twist(a, v, xi, tp)
    a2, v2_, xi2 = twist_inv(b, w, eta, tp)
    assert abs(a2 - a) < 1e-12
    assert np.abs(v2_ - v).max() < 1e-12 * (1 + np.abs(v).max())
    assert abs(xi2 - xi) < 1e-12 * (1 + abs(xi))


@pytest.mark.parametrize("theta", [0.3, 1.0])
def test_jacobian_matches_fd_determinant(theta, rng):
    tp = TwistParams(theta, 1)

    def F(p):
        a, v, xi = twist(p[0], p[1:3], p[3], tp)
        return np.concatenate([[a], v, [xi]])

    h = 1e-6
    for p in rng.uniform(-1.5, 1.5, size=(100, 4)):
        J = np.stack([(F(p + h * e) - F(p - h * e)) / (2 * h) for e in np.eye(4)], axis=-1)
        det = np.linalg.det(J)
        assert abs(det - twist_jacobian(p[3], tp)) < 1e-6 * max(1, abs(det))


# --- pullbacks ----------------------------------------------------------------------------

def _fourier_gaussian(spec):
    a = spec.nodes(0)[:, None]
    xi = spec.nodes(-1)[None, :]
    return GridFunction(spec, np.exp(-a ** 2 - xi ** 2 / 4), FOURIER)


def test_pullback_matches_analytic_composition():
    spec = fourier_spec()
    f = _fourier_gaussian(spec)
    tp = TwistParams(0.1)
    got = pullback(f, TWIST, tp)
    a, xi = spec.nodes(0)[:, None], spec.nodes(-1)[None, :]
    eta = np.sinh(2 * 0.1 * xi) / 0.2
    assert np.abs(got.values - np.exp(-a ** 2 - eta ** 2 / 4)).max() < 1e-6


def test_pullback_leaves_a_only_functions_alone():
    spec = fourier_spec()
    g = np.exp(-spec.nodes(0) ** 2)[:, None] * np.ones(spec.shape)
    f = GridFunction(spec, g, FOURIER)
    out = pullback(f, TWIST_INV, TwistParams(0.4), boundary_tol=None)
    assert np.abs(out.values - g).max() < 1e-14


def test_pullback_round_trip():
    spec = fourier_spec()
    f = _fourier_gaussian(spec)
    tp = TwistParams(0.1)
    back = pullback(pullback(f, TWIST, tp), TWIST_INV, tp)
    assert np.abs(back.values - f.values).max() < 1e-5


def test_pullback_rejects_boundary_mass():
    spec = fourier_spec(xi_half=4.0, points=(32, 128))
    with pytest.raises(BoundaryMassError):
        pullback(_fourier_gaussian(spec), TWIST, TwistParams(0.1))


def test_pullback_rescales_v_for_n1():
    spec = GridSpec((Axis("a", -3, 3, 8), Axis("v1", -6, 6, 64), Axis("v2", -6, 6, 64),
                     Axis("xi", -12, 12, 128, centered=False)))
    a, v1, v2, xi = np.meshgrid(*[ax.nodes for ax in spec.axes], indexing="ij", sparse=True)
    f = GridFunction(spec, np.exp(-a ** 2 - v1 ** 2 - v2 ** 2 - xi ** 2 / 4), FOURIER)
    th = 0.1
    c = np.cosh(th * xi)
    eta = np.sinh(2 * th * xi) / (2 * th)
    expect = np.exp(-a ** 2 - (v1 / c) ** 2 - (v2 / c) ** 2 - eta ** 2 / 4)
    got = pullback(f, TWIST, TwistParams(th, 1))
    assert np.abs(got.values - expect).max() < 1e-4


# --- transport operators ------------------------------------------------------------------

def test_transport_round_trip():
    spec = GridSpec.box(0, -6, 6, 256)
    u = Gaussian((0.2, -0.1), 0.6).sample(spec)
    tp = TwistParams(0.25)
    back = T_apply(T_apply(u, tp, None, FORWARD), tp, None, INVERSE, boundary_tol=None)
    assert rel_l2(back, u) < 1e-5


def test_inverse_transport_is_second_order():
    slope, res = transport_slope()
    assert abs(slope - 2) < 0.2
    assert all(r1 > r2 for r1, r2 in zip(res, res[1:]))


def test_tracial_transport_is_unitary_n0():
    u = Gaussian((0.2, -0.1), 0.6).sample(GridSpec.box(0, -6, 6, 256))
    Tu = T_apply(u, TwistParams(0.25), mu.tracial_multiplier(0), FORWARD)
    assert abs(Tu.norm() / u.norm() - 1) < 1e-6


@pytest.mark.slow
def test_tracial_transport_is_unitary_n1():
    u = Gaussian((0.2, 0.1, 0.0, -0.1), (0.8, 1.5, 1.5, 2.0)).sample(GridSpec.box(1, -6, 6, 32))
    Tu = T_apply(u, TwistParams(0.25, 1), mu.tracial_multiplier(1), FORWARD, None)
    assert abs(Tu.norm() / u.norm() - 1) < 1e-6


def test_unit_multiplier_not_unitary():
    u = Gaussian((0.2, -0.1), 0.6).sample(GridSpec.box(0, -6, 6, 128))
    Tu = T_apply(u, TwistParams(0.5), None, FORWARD)
    assert abs(Tu.norm() / u.norm() - 1) > 1e-3


def test_zero_multiplier_equals_unit_bitwise():
    u = Gaussian((0.2, -0.1), 0.6).sample(GridSpec.box(0, -6, 6, 64))
    zero = mu.Multiplier(lambda th, xi: np.zeros_like(xi) + 0j)
    tp = TwistParams(0.25)
    for d in (FORWARD, INVERSE):
        assert np.array_equal(T_apply(u, tp, zero, d).values, T_apply(u, tp, None, d).values)


def test_transport_commutes_with_a_translations_only():
    spec = GridSpec.box(1, -8, 8, 32)  # step 0.5
    w = (0.6, 0.8, 0.8, 1.0)
    tp = TwistParams(0.25, 1)
    Tu = T_apply(Gaussian((0.0,) * 4, w).sample(spec), tp, boundary_tol=1e-9).values
    res = []
    for ax in range(4):
        c = np.zeros(4)
        c[ax] = 1.0
        Tus = T_apply(Gaussian(tuple(c), w).sample(spec), tp, boundary_tol=1e-9).values
        res.append(rel_l2(Tus, np.roll(Tu, 2, axis=ax)))
    assert res[0] < 1e-12
    # v is rescaled by cosh(theta xi) and l is mixed by the twist
    assert min(res[1:]) > 1e-2


def test_transport_rejects_wide_data():
    u = Gaussian((0.0, 0.0), 4.0).sample(GridSpec.box(0, -4, 4, 64))
    with pytest.raises(BoundaryMassError):
        T_apply(u, TwistParams(0.25))


# --- grids and I/O ------------------------------------------------------------------------

def test_grid_validation():
    with pytest.raises(ValueError):
        Axis("a", 0, 1, 4)
    with pytest.raises(ValueError):
        Axis("a", 1, 0, 16)
    # any size of at least 8 is accepted, powers of two are not required
    assert GridSpec.box(1, points=12).shape == (12, 12, 12, 12)


def test_binary_round_trip_is_bit_exact(tmp_path):
    spec = GridSpec.box(1, -3, 3, (8, 10, 12, 16))
    rng = np.random.default_rng(0)
    f = GridFunction(spec, rng.normal(size=spec.shape) + 1j * rng.normal(size=spec.shape))
    write_binary(f, tmp_path / "f.bin")
    g = read_binary(tmp_path / "f.bin")
    assert g.spec == f.spec and g.space == f.space
    assert g.values.tobytes() == f.values.tobytes()
    fh = partial_fourier(f)
    write_binary(fh, tmp_path / "fh.bin")
    gh = read_binary(tmp_path / "fh.bin")
    assert gh.space == FOURIER and gh.values.tobytes() == fh.values.tobytes()


def test_csv_round_trip(tmp_path):
    spec = GridSpec.box(0, -2, 2, 8)
    f = Gaussian((0.1, 0.2), 1.0, 1 + 2j).sample(spec)
    write_csv(f, tmp_path / "f.csv")
    header = (tmp_path / "f.csv").read_text().splitlines()[0]
    assert header == "a,l,re,im"
    g = read_csv(tmp_path / "f.csv")
    assert np.array_equal(g.values, f.values)
    assert np.allclose(g.spec.nodes(0), spec.nodes(0), atol=1e-15)

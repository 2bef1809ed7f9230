"""Formal power series in ``theta`` acting on polynomial observables.

All arithmetic is exact over the Gaussian rationals.  Coordinates are
``a, v1..v2n, l`` in that order.  Under the Fourier convention of the package
``xi`` corresponds to ``D = -i d/dl``, which is how the transport operators
become differential operators.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
import sympy as sp

from .moyal import poisson_matrix

DOMAIN = "QQ_I"


@lru_cache(maxsize=None)
def coordinates(n: int):
    return sp.symbols(["a"] + [f"v{i + 1}" for i in range(2 * n)] + ["l"], real=True)


class PolyObservable:
    """Polynomial in the chart coordinates with Gaussian-rational coefficients."""

    __slots__ = ("n", "poly")

    def __init__(self, poly: sp.Poly, n: int):
        self.n = n
        self.poly = poly

    @classmethod
    def from_expr(cls, expr, n: int) -> "PolyObservable":
        return cls(sp.Poly(_sympify(expr, n), *coordinates(n), domain=DOMAIN), n)

    @classmethod
    def from_terms(cls, terms: dict, n: int) -> "PolyObservable":
        gens = coordinates(n)
        expr = sum(sp.nsimplify(c) * sp.Mul(*[g ** e for g, e in zip(gens, k)])
                   for k, c in terms.items())
        return cls.from_expr(expr, n)

    @classmethod
    def zero(cls, n: int) -> "PolyObservable":
        return cls.from_expr(0, n)

    @classmethod
    def one(cls, n: int) -> "PolyObservable":
        return cls.from_expr(1, n)

    def terms(self) -> dict:
        return dict(self.poly.terms())

    def as_expr(self):
        return self.poly.as_expr()

    def diff(self, i: int, k: int = 1) -> "PolyObservable":
        p = self.poly
        g = coordinates(self.n)[i]
        for _ in range(k):
            p = p.diff(g)
        return PolyObservable(p, self.n)

    def is_zero(self) -> bool:
        return self.poly.is_zero

    def degree(self) -> int:
        return self.poly.total_degree()

    def __add__(self, o):
        return PolyObservable(self.poly + _poly(o, self.n), self.n)

    __radd__ = __add__

    def __sub__(self, o):
        return PolyObservable(self.poly - _poly(o, self.n), self.n)

    def __neg__(self):
        return PolyObservable(-self.poly, self.n)

    def __mul__(self, o):
        return PolyObservable(self.poly * _poly(o, self.n), self.n)

    __rmul__ = __mul__

    def __eq__(self, o):
        return isinstance(o, PolyObservable) and (self.poly - o.poly).is_zero

    def __hash__(self):
        return hash(self.poly)

    def __repr__(self):
        return f"PolyObservable({self.as_expr()})"

    def numeric(self):
        """Vectorized evaluator ``f(a, v, l)`` with ``v`` stacked on a leading axis."""
        gens = coordinates(self.n)
        f = sp.lambdify(gens, self.as_expr(), "numpy")
        return lambda a, v, l: f(a, *[v[i] for i in range(2 * self.n)], l)


def _sympify(expr, n):
    if isinstance(expr, str):
        names = {str(g): g for g in coordinates(n)}
        return sp.sympify(expr, locals=names)
    return sp.sympify(expr)


def _poly(o, n):
    if isinstance(o, PolyObservable):
        return o.poly
    return sp.Poly(_sympify(o, n), *coordinates(n), domain=DOMAIN)


# --- differential operators ------------------------------------------------------------

class DiffOp:
    """``sum_alpha c_alpha(x) d^alpha`` with polynomial coefficients."""

    __slots__ = ("n", "terms")

    def __init__(self, terms: dict, n: int):
        self.n = n
        self.terms = {k: v for k, v in terms.items() if not v.is_zero()}

    @classmethod
    def identity(cls, n: int) -> "DiffOp":
        return cls({(0,) * (2 * n + 2): PolyObservable.one(n)}, n)

    @classmethod
    def zero(cls, n: int) -> "DiffOp":
        return cls({}, n)

    @classmethod
    def multiplication(cls, p, n: int) -> "DiffOp":
        p = p if isinstance(p, PolyObservable) else PolyObservable.from_expr(p, n)
        return cls({(0,) * (2 * n + 2): p}, n)

    @classmethod
    def partial(cls, i: int, k: int, n: int, coef=1) -> "DiffOp":
        alpha = [0] * (2 * n + 2)
        alpha[i] = k
        return cls({tuple(alpha): PolyObservable.from_expr(coef, n)}, n)

    @classmethod
    def euler_v(cls, n: int) -> "DiffOp":
        """``E = sum_i v_i d/dv_i``."""
        gens = coordinates(n)
        terms = {}
        for i in range(1, 2 * n + 1):
            alpha = [0] * (2 * n + 2)
            alpha[i] = 1
            terms[tuple(alpha)] = PolyObservable.from_expr(gens[i], n)
        return cls(terms, n)

    def is_zero(self) -> bool:
        return not self.terms

    def apply(self, p: PolyObservable) -> PolyObservable:
        out = PolyObservable.zero(self.n)
        for alpha, c in self.terms.items():
            q = p
            for i, k in enumerate(alpha):
                if k:
                    q = q.diff(i, k)
                    if q.is_zero():
                        break
            if not q.is_zero():
                out = out + c * q
        return out

    def apply_expr(self, expr):
        """Apply to an arbitrary sympy expression in the coordinates."""
        gens = coordinates(self.n)
        out = 0
        for alpha, c in self.terms.items():
            args = [x for g, k in zip(gens, alpha) for x in (g, k) if k]
            d = sp.diff(expr, *args) if args else expr
            out += c.as_expr() * d
        return out

    def __add__(self, o: "DiffOp") -> "DiffOp":
        terms = dict(self.terms)
        for k, v in o.terms.items():
            terms[k] = terms[k] + v if k in terms else v
        return DiffOp(terms, self.n)

    def __sub__(self, o):
        return self + o.scale(-1)

    def scale(self, c) -> "DiffOp":
        c = sp.nsimplify(c)
        return DiffOp({k: v * c for k, v in self.terms.items()}, self.n)

    def __matmul__(self, o: "DiffOp") -> "DiffOp":
        """Composition ``self o o`` by the Leibniz rule."""
        terms: dict = {}
        for alpha, c in self.terms.items():
            for beta, d in o.terms.items():
                ranges = [range(k + 1) for k in alpha]
                for gamma in itertools.product(*ranges):
                    coef = math.prod(math.comb(a, g) for a, g in zip(alpha, gamma))
                    dd = d
                    for i, k in enumerate(gamma):
                        if k:
                            dd = dd.diff(i, k)
                            if dd.is_zero():
                                break
                    if dd.is_zero():
                        continue
                    key = tuple(a - g + b for a, g, b in zip(alpha, gamma, beta))
                    val = c * dd * coef
                    terms[key] = terms[key] + val if key in terms else val
        return DiffOp(terms, self.n)

    def __eq__(self, o):
        return isinstance(o, DiffOp) and (self - o).is_zero()

    def __repr__(self):
        gens = coordinates(self.n)
        parts = [f"({c.as_expr()})*d[{','.join(f'{g}^{k}' for g, k in zip(gens, a) if k)}]"
                 for a, c in self.terms.items()]
        return "DiffOp(" + " + ".join(parts) + ")" if parts else "DiffOp(0)"


# --- formal series ------------------------------------------------------------------------

@dataclass
class ObservableSeries:
    """``sum_k theta^k coeffs[k]`` truncated after ``len(coeffs) - 1``."""
    coeffs: list

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, k):
        return self.coeffs[k]

    def __sub__(self, o):
        K = min(self.order, o.order)
        return ObservableSeries([self.coeffs[k] - o.coeffs[k] for k in range(K + 1)])

    def rescale(self, c) -> "ObservableSeries":
        c = sp.nsimplify(c)
        return ObservableSeries([p * c ** k for k, p in enumerate(self.coeffs)])

    def is_zero(self) -> bool:
        return all(p.is_zero() for p in self.coeffs)


@dataclass
class FormalSeries:
    """``sum_k theta^k coeffs[k]`` with differential-operator coefficients."""
    coeffs: list
    n: int

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def identity(cls, n: int, K: int) -> "FormalSeries":
        return cls([DiffOp.identity(n)] + [DiffOp.zero(n) for _ in range(K)], n)

    def __matmul__(self, o: "FormalSeries") -> "FormalSeries":
        K = min(self.order, o.order)
        out = [DiffOp.zero(self.n) for _ in range(K + 1)]
        for i in range(K + 1):
            for j in range(K + 1 - i):
                if self.coeffs[i].is_zero() or o.coeffs[j].is_zero():
                    continue
                out[i + j] = out[i + j] + (self.coeffs[i] @ o.coeffs[j])
        return FormalSeries(out, self.n)

    def __sub__(self, o):
        K = min(self.order, o.order)
        return FormalSeries([self.coeffs[k] - o.coeffs[k] for k in range(K + 1)], self.n)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def inverse(self) -> "FormalSeries":
        """Series inverse; the zeroth coefficient must be the identity."""
        if not self.coeffs[0] == DiffOp.identity(self.n):
            raise ValueError("series inversion needs identity at order zero")
        K = self.order
        N = FormalSeries([DiffOp.zero(self.n)] + [c.scale(-1) for c in self.coeffs[1:]], self.n)
        out = FormalSeries.identity(self.n, K)
        power = FormalSeries.identity(self.n, K)
        for _ in range(K):
            power = power @ N
            out = FormalSeries([x + y for x, y in zip(out.coeffs, power.coeffs)], self.n)
        return out

    def rescale(self, c) -> "FormalSeries":
        """Substitute ``theta -> c theta``."""
        c = sp.nsimplify(c)
        return FormalSeries([op.scale(c ** k) for k, op in enumerate(self.coeffs)], self.n)

    def apply(self, u) -> ObservableSeries:
        if isinstance(u, ObservableSeries):
            K = min(self.order, u.order)
            out = [PolyObservable.zero(self.n) for _ in range(K + 1)]
            for i in range(K + 1):
                for j in range(K + 1 - i):
                    out[i + j] = out[i + j] + self.coeffs[i].apply(u.coeffs[j])
            return ObservableSeries(out)
        return ObservableSeries([op.apply(u) for op in self.coeffs])


# --- Moyal product ------------------------------------------------------------------------

def moyal_bidiff(u: PolyObservable, v: PolyObservable, k: int) -> PolyObservable:
    """``Lambda^{i1 j1}..Lambda^{ik jk} d_I u d_J v`` (no prefactor)."""
    n = u.n
    lam = poisson_matrix(n)
    pairs = [(i, j, sp.nsimplify(lam[i, j])) for i in range(lam.shape[0])
             for j in range(lam.shape[1]) if lam[i, j]]
    # expand the k-th power of sum_ij Lambda_ij d_i x d_j over multisets
    out = PolyObservable.zero(n)
    for combo in itertools.combinations_with_replacement(range(len(pairs)), k):
        counts = {c: combo.count(c) for c in set(combo)}
        mult = math.factorial(k)
        for c in counts.values():
            mult //= math.factorial(c)
        du, dv = u, v
        coef = sp.Integer(mult)
        for idx in combo:
            i, j, lv = pairs[idx]
            du = du.diff(i)
            dv = dv.diff(j)
            coef *= lv
            if du.is_zero() or dv.is_zero():
                break
        if du.is_zero() or dv.is_zero():
            continue
        out = out + du * dv * coef
    return out


def moyal_formal(u, v, K: int) -> ObservableSeries:
    """``u * v = sum_k (i theta / 2)^k / k! B_k(u, v)`` through ``theta^K``."""
    if K < 0:
        raise ValueError("K must be non-negative")
    if isinstance(u, ObservableSeries) or isinstance(v, ObservableSeries):
        return _moyal_series(_as_series(u, K), _as_series(v, K), K)
    return ObservableSeries([moyal_bidiff(u, v, k) * ((sp.I / 2) ** k / sp.factorial(k))
                             for k in range(K + 1)])


def _as_series(u, K):
    if isinstance(u, ObservableSeries):
        return u
    return ObservableSeries([u] + [PolyObservable.zero(u.n) for _ in range(K)])


def _moyal_series(A: ObservableSeries, B: ObservableSeries, K: int) -> ObservableSeries:
    n = A.coeffs[0].n
    out = [PolyObservable.zero(n) for _ in range(K + 1)]
    for i in range(min(K, A.order) + 1):
        for j in range(min(K - i, B.order) + 1):
            if A.coeffs[i].is_zero() or B.coeffs[j].is_zero():
                continue
            for k in range(K - i - j + 1):
                term = moyal_bidiff(A.coeffs[i], B.coeffs[j], k)
                out[i + j + k] = out[i + j + k] + term * ((sp.I / 2) ** k / sp.factorial(k))
    return ObservableSeries(out)


def poisson_bracket(u: PolyObservable, v: PolyObservable) -> PolyObservable:
    return moyal_bidiff(u, v, 1)


# --- transport operators as series -------------------------------------------------------

_T, _D, _E = sp.symbols("theta D E")


def _symbol_to_op(sym, n: int) -> DiffOp:
    """Polynomial in ``D = -i d/dl`` and ``E = v.d/dv`` to a differential operator."""
    poly = sp.Poly(sp.expand(sym), _D, _E)
    ell = 2 * n + 1
    euler = DiffOp.euler_v(n)
    out = DiffOp.zero(n)
    epow = {0: DiffOp.identity(n)}
    for (p, q), c in poly.terms():
        for j in range(1, q + 1):
            if j not in epow:
                epow[j] = epow[j - 1] @ euler
        op = DiffOp.partial(ell, p, n, (-sp.I) ** p) @ epow[q] if p else epow[q]
        out = out + op.scale(c)
    return out


def _transport_series(n: int, K: int, inverse: bool, tau_taylor: Sequence | None) -> FormalSeries:
    if K < 0 or K > 8:
        raise ValueError("expansion order must lie in [0, 8]")
    if inverse:
        shifted = sp.sinh(2 * _T * _D) / (2 * _T)
        vscale = sp.exp(-_E * sp.log(sp.cosh(_T * _D)))
    else:
        shifted = sp.asinh(2 * _T * _D) / (2 * _T)
        vscale = sp.exp(_E * sp.log(sp.cosh(_T * shifted)))
    tau = 0
    for k, c in enumerate(tau_taylor or [], start=1):
        if c is not None:
            tau += _T ** k * sp.sympify(c).subs(sp.Symbol("xi"), shifted if inverse else _D)
    mult = sp.exp(-tau) if inverse else sp.exp(tau)
    f = shifted - _D
    ell = 2 * n + 1
    gens = coordinates(n)
    coeffs = [DiffOp.zero(n) for _ in range(K + 1)]
    # f = O(theta^2), so the m-th term starts at theta^(2m)
    for m in range(K // 2 + 1):
        sym = sp.series(mult * f ** m * vscale, _T, 0, K + 1).removeO()
        sym = sp.expand(sym / sp.factorial(m))
        right = DiffOp.multiplication((-sp.I * gens[ell]) ** m, n)
        for k in range(K + 1):
            ck = sym.coeff(_T, k)
            if ck == 0:
                continue
            coeffs[k] = coeffs[k] + (_symbol_to_op(ck, n) @ right)
    return FormalSeries(coeffs, n)


def expand_T_inverse(n: int, K: int, tau_taylor: Sequence | None = None) -> FormalSeries:
    """Asymptotic series of ``T^-1`` in the twist parameter.

    ``T^-1 = sum_m (1/m!) e^{-tau(phi(D))} (phi(D) - D)^m cosh(theta D)^{-E} (-i l)^m``.
    ``tau_taylor[k-1]`` is the ``theta^k`` coefficient of the multiplier as an
    expression in ``xi``.
    """
    return _transport_series(n, K, True, tau_taylor)


def expand_T(n: int, K: int, tau_taylor: Sequence | None = None) -> FormalSeries:
    """Asymptotic series of the forward transport ``T`` in the twist parameter."""
    return _transport_series(n, K, False, tau_taylor)


def formal_transported_product(u: PolyObservable, v: PolyObservable, equivalence: FormalSeries,
                               K: int, twist_ratio=sp.Rational(1, 2)) -> ObservableSeries:
    """``T(T^-1 u * T^-1 v)`` through ``theta^K`` with ``T = equivalence``.

    ``equivalence`` is a series in the twist parameter, which equals
    ``twist_ratio`` times the Weyl parameter ``theta``.
    """
    if not equivalence.coeffs[0] == DiffOp.identity(equivalence.n):
        raise ValueError("the equivalence must start with the identity")
    T = FormalSeries(equivalence.coeffs[: K + 1], equivalence.n).rescale(twist_ratio)
    Tinv = T.inverse()
    return T.apply(moyal_formal(Tinv.apply(u), Tinv.apply(v), K))


def multiplier_shift(u: PolyObservable, v: PolyObservable, c1, twist_ratio=sp.Rational(1, 2)):
    """First-order effect of ``tau = theta c1(xi)``: ``r (c1(D)(uv) - c1(D)u v - u c1(D)v)``."""
    op = _symbol_to_op(sp.sympify(c1).subs(sp.Symbol("xi"), _D), u.n)
    return (op.apply(u * v) - op.apply(u) * v - u * op.apply(v)) * sp.nsimplify(twist_ratio)


# --- the same expansion on arbitrary expressions ---------------------------------------

def _pairs(n):
    lam = poisson_matrix(n)
    return [(i, j, sp.nsimplify(lam[i, j])) for i in range(lam.shape[0])
            for j in range(lam.shape[1]) if lam[i, j]]


def moyal_bidiff_expr(u, v, k: int, n: int):
    """:func:`moyal_bidiff` for sympy expressions (Gaussian-windowed data, say)."""
    gens = coordinates(n)
    pairs = _pairs(n)
    out = sp.Integer(0)
    for combo in itertools.combinations_with_replacement(range(len(pairs)), k):
        mult = math.factorial(k)
        for c in set(combo):
            mult //= math.factorial(combo.count(c))
        du, dv, coef = u, v, sp.Integer(mult)
        for idx in combo:
            i, j, lv = pairs[idx]
            du, dv, coef = sp.diff(du, gens[i]), sp.diff(dv, gens[j]), coef * lv
        out += coef * du * dv
    return out


def _series_apply_expr(S: FormalSeries, coeffs: list) -> list:
    K = min(S.order, len(coeffs) - 1)
    out = [sp.Integer(0)] * (K + 1)
    for i in range(K + 1):
        for j in range(K + 1 - i):
            if not S.coeffs[i].is_zero() and coeffs[j] != 0:
                out[i + j] += S.coeffs[i].apply_expr(coeffs[j])
    return out


def transported_product_exprs(u, v, n: int, K: int, tau_taylor: Sequence | None = None,
                              twist_ratio=sp.Rational(1, 2)) -> list:
    """Coefficients ``[P_0, .., P_K]`` of ``u * v`` in the Weyl parameter.

    ``u`` and ``v`` are sympy expressions (or strings) in the coordinates and
    ``tau_taylor`` is as in :func:`expand_T`.
    """
    u, v = _sympify(u, n), _sympify(v, n)
    T = expand_T(n, K, tau_taylor).rescale(twist_ratio)
    Tinv = T.inverse()
    A = _series_apply_expr(Tinv, [u] + [0] * K)
    B = _series_apply_expr(Tinv, [v] + [0] * K)
    prod = [sp.Integer(0)] * (K + 1)
    for i in range(K + 1):
        for j in range(K + 1 - i):
            if A[i] == 0 or B[j] == 0:
                continue
            for k in range(K - i - j + 1):
                prod[i + j + k] += (sp.I / 2) ** k / sp.factorial(k) * moyal_bidiff_expr(A[i], B[j], k, n)
    return _series_apply_expr(T, prod)

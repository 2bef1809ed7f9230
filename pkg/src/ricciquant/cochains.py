"""Multi-point functions on ``M``: coboundaries, the op-complex and
admissibility.

A cochain of arity ``q`` is a callable of ``q`` point arrays (last axis the
chart coordinates) that broadcasts over leading axes.  Identities are exact,
so they are checked pointwise on random samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import geometry as geo
from .errors import NotSkewsymmetric
from .report import Report

DEFAULT_SAMPLES = 1000


@dataclass(frozen=True)
class Cochain:
    arity: int
    eval: Callable
    invariant: bool = False
    leafwise_constant: bool = False
    label: str = ""

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError("cochains have arity >= 1")

    def __call__(self, *points):
        if len(points) != self.arity:
            raise ValueError(f"expected {self.arity} points, got {len(points)}")
        return self.eval(*[np.asarray(p, dtype=float) for p in points])


def coboundary(c: Cochain) -> Cochain:
    """``(dc)(x_0..x_q) = sum_j (-1)^j c(.., x_j omitted, ..)``."""
    q = c.arity

    def ev(*xs):
        return sum((-1) ** j * c.eval(*(xs[:j] + xs[j + 1:])) for j in range(q + 1))

    return Cochain(q + 1, ev, c.invariant, c.leafwise_constant, f"d({c.label})")


def sigma12(c: Cochain) -> Cochain:
    """Swap the first two arguments; identity on arity 1."""
    if c.arity == 1:
        return c
    return Cochain(c.arity, lambda x0, x1, *rest: c.eval(x1, x0, *rest),
                   c.invariant, c.leafwise_constant, f"s12({c.label})")


def coboundary_op(c: Cochain) -> Cochain:
    """``d_op = -s12 . d . s12``."""
    inner = sigma12(coboundary(sigma12(c)))
    return Cochain(inner.arity, lambda *xs: -inner.eval(*xs), c.invariant,
                   c.leafwise_constant, f"dop({c.label})")


def leafwise_two_cochain(g: Callable, order: str = "forward") -> Cochain:
    """Two-point function of ``a``-differences: ``g(a0 - a1)`` or ``g(a1 - a0)``."""
    if order == "forward":
        ev = lambda x0, x1: g(x0[..., 0] - x1[..., 0])
    elif order == "backward":
        ev = lambda x0, x1: g(x1[..., 0] - x0[..., 0])
    else:
        raise ValueError(f"unknown order {order!r}")
    return Cochain(2, ev, invariant=True, leafwise_constant=True, label=f"g[{order}]")


def project_to_function(c: Cochain, t, n: int = 0):
    """Recover ``g`` from a leafwise-constant 2-cochain built with order ``forward``."""
    t = np.asarray(t, dtype=float)
    x0 = np.zeros(t.shape + (2 * n + 2,))
    x1 = np.zeros_like(x0)
    x0[..., 0] = t
    return c(x0, x1)


def multiplier_closed_form(g: Callable, a0, a1, a2):
    """``g(a1 - a2) - g(a0 - a2) - g(a1 - a0)``."""
    return g(a1 - a2) - g(a0 - a2) - g(a1 - a0)


def multiplier_three_point(g: Callable, order: str = "forward") -> Cochain:
    """``d_op(s12 c)`` for the leafwise 2-cochain ``c`` built from ``g``.

    With ``order="forward"`` (``c(x0, x1) = g(a0 - a1)``) the result is
    :func:`multiplier_closed_form`, whose exponential is the ratio
    ``P(a1-a2) / (P(a0-a2) P(a1-a0))`` with ``P = exp(g)``.
    """
    return coboundary_op(sigma12(leafwise_two_cochain(g, order)))


def select_embedding(g: Callable, samples: int = 200, seed: int = 0) -> Report:
    """Evaluate both embeddings against the heuristic ratio and record the match."""
    rng = np.random.default_rng(seed)
    a = rng.uniform(-2, 2, size=(3, samples))
    pts = [np.stack([ai, np.zeros(samples)], -1) for ai in a]
    target = np.exp(g(a[1] - a[2])) / (np.exp(g(a[0] - a[2])) * np.exp(g(a[1] - a[0])))
    rep = Report("multiplier_embedding")
    for order in ("forward", "backward"):
        val = np.exp(multiplier_three_point(g, order)(*pts))
        res = float(np.max(np.abs(val - target) / np.abs(target)))
        rep.info[order] = res
    rep.info["selected"] = min(("forward", "backward"), key=lambda o: rep.info[o])
    return rep


def phase_cochain() -> Cochain:
    return Cochain(3, lambda x0, x1, x2: geo.phase_S(np.stack([x0, x1, x2], axis=-2)),
                   invariant=True, label="S")


def _random_points(rng, count, n, a_max=2.0):
    return geo.random_points(rng, count, n, a_max=a_max, c_max=2.0)


def skew_residual(S: Cochain, n: int, samples: int = DEFAULT_SAMPLES, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    x, y, z = (_random_points(rng, samples, n) for _ in range(3))
    base = S(x, y, z)
    scale = 1.0 + np.abs(base)
    worst = 0.0
    for perm, sign in (((y, x, z), -1), ((x, z, y), -1), ((z, y, x), -1), ((y, z, x), 1)):
        worst = max(worst, float(np.max(np.abs(S(*perm) - sign * base) / scale)))
    return worst


def admissibility_check(S: Cochain, n: int, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                        tol: float = 1e-9) -> Report:
    """Residuals of ``S(x, s_x y, z) + S(x, y, z)``, relative to ``1 + |S|``."""
    skew = skew_residual(S, n, samples, seed)
    if skew > tol:
        raise NotSkewsymmetric(f"cochain is not totally skew (residual {skew:.3e})")
    rng = np.random.default_rng(seed + 1)
    x, y, z = (_random_points(rng, samples, n) for _ in range(3))
    base = S(x, y, z)
    res = np.abs(S(x, geo.symmetry(x, y), z) + base) / (1.0 + np.abs(base))
    rep = Report("admissibility")
    rep.add("skew", skew, tol, "admissible phase")
    rep.add("admissible", float(res.max()), tol, "admissible phase")
    return rep

"""Rectangular grids over the Darboux chart, sampled functions and grid I/O.

Position axes are cell centred, ``x_j = min + (j + 1/2) h`` with
``h = (max - min) / points``, so symmetric domains give grids symmetric about
zero.  Frequency axes are the FFT frequencies ``k * dxi`` for
``k = -N/2 .. N/2 - 1`` stored in increasing order.

The last axis carries ``l`` (position space) or ``xi`` (Fourier space).
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BoundaryMassError, GridMismatch, WrongSpaceTag

POSITION = "position"
FOURIER = "fourier"

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class Axis:
    name: str
    min: float
    max: float
    points: int
    centered: bool = True

    def __post_init__(self):
        if not self.max > self.min:
            raise ValueError(f"axis {self.name}: max must exceed min")
        if self.points < 8:
            raise ValueError(f"axis {self.name}: need at least 8 points")

    @property
    def step(self) -> float:
        return (self.max - self.min) / self.points

    @property
    def nodes(self) -> np.ndarray:
        off = 0.5 if self.centered else 0.0
        return self.min + (np.arange(self.points) + off) * self.step

    @property
    def nyquist(self) -> float:
        return np.pi / self.step

    def frequency_axis(self, name: str = "xi") -> "Axis":
        n = self.points
        dxi = 2 * np.pi / (n * self.step)
        return Axis(name, -(n // 2) * dxi, (n - n // 2) * dxi, n, centered=False)

    def position_axis(self, name: str, lmin: float) -> "Axis":
        """Position axis whose frequency grid is this axis (inverse of ``frequency_axis``)."""
        n = self.points
        h = 2 * np.pi / (n * self.step)
        return Axis(name, lmin, lmin + n * h, n, centered=True)


@dataclass(frozen=True)
class GridSpec:
    axes: tuple[Axis, ...]

    @classmethod
    def box(cls, n: int, lo: float = -6.0, hi: float = 6.0, points: int | Sequence[int] = 64):
        """Cubic grid over ``[lo, hi]^(2n+2)`` in the chart ``(a, v_1..v_2n, l)``."""
        names = ["a"] + [f"v{i + 1}" for i in range(2 * n)] + ["l"]
        if isinstance(points, (int, np.integer)):
            points = [int(points)] * len(names)
        if len(points) != len(names):
            raise ValueError("one point count per axis")
        return cls(tuple(Axis(nm, lo, hi, int(p)) for nm, p in zip(names, points)))

    @property
    def n(self) -> int:
        return (len(self.axes) - 2) // 2

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.points for ax in self.axes)

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def cell_volume(self) -> float:
        return float(np.prod([ax.step for ax in self.axes]))

    def nodes(self, i: int) -> np.ndarray:
        return self.axes[i].nodes

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*[ax.nodes for ax in self.axes], indexing="ij", sparse=True)

    def with_last(self, ax: Axis) -> "GridSpec":
        return GridSpec(self.axes[:-1] + (ax,))

    def same_as(self, other: "GridSpec") -> bool:
        return self.axes == other.axes


@dataclass(frozen=True)
class GridFunction:
    spec: GridSpec
    values: np.ndarray
    space: str = POSITION

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.spec.shape:
            raise GridMismatch(f"values shape {vals.shape} != grid shape {self.spec.shape}")
        if self.space not in (POSITION, FOURIER):
            raise ValueError(f"unknown space tag {self.space!r}")
        last = self.spec.axes[-1].name
        if (self.space == FOURIER) != (last == "xi"):
            raise WrongSpaceTag(f"space {self.space} inconsistent with last axis {last!r}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, spec: GridSpec, f) -> "GridFunction":
        """Sample ``f(a, v, l)`` (``v`` stacked along a leading axis) on the grid."""
        return cls(spec, sample(spec, f))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.spec, values, self.space)

    def conj(self) -> "GridFunction":
        return self.with_values(np.conj(self.values))

    def __add__(self, other):
        _check_same(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        _check_same(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c):
        if isinstance(c, GridFunction):
            _check_same(self, c)
            return self.with_values(self.values * c.values)
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def integral(self) -> complex:
        return complex(self.values.sum() * self.spec.cell_volume)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.spec.cell_volume))


def _check_same(f: GridFunction, g: GridFunction):
    if not f.spec.same_as(g.spec) or f.space != g.space:
        raise GridMismatch("grid functions live on different grids")


def sample(spec: GridSpec, f) -> np.ndarray:
    mesh = spec.mesh()
    a, l = mesh[0], mesh[-1]
    v = np.array(np.broadcast_arrays(*mesh[1:-1])) if spec.n else np.zeros((0,) + (1,) * spec.ndim)
    out = np.broadcast_to(np.asarray(f(a, v, l), dtype=complex), spec.shape)
    return np.array(out)


def inner(f: GridFunction, g: GridFunction) -> complex:
    """L^2 inner product, linear in the first slot."""
    _check_same(f, g)
    return complex(np.sum(f.values * np.conj(g.values)) * f.spec.cell_volume)


def rel_l2(f, g) -> float:
    """Relative L^2 distance ``|f - g| / |g|`` of two grid functions or arrays."""
    fv = f.values if isinstance(f, GridFunction) else np.asarray(f)
    gv = g.values if isinstance(g, GridFunction) else np.asarray(g)
    return float(np.linalg.norm(fv - gv) / np.linalg.norm(gv))


def boundary_mass(values: np.ndarray, axes: Sequence[int] | None = None) -> float:
    """Max modulus on the boundary shell relative to the global max modulus."""
    vals = np.abs(values)
    peak = vals.max()
    if peak == 0:
        return 0.0
    axes = range(vals.ndim) if axes is None else axes
    worst = 0.0
    for ax in axes:
        edge = np.take(vals, [0, vals.shape[ax] - 1], axis=ax)
        worst = max(worst, float(edge.max()))
    return worst / peak


def require_windowed(f: GridFunction, tol: float | None = BOUNDARY_TOL, axes=None):
    if tol is None:
        return
    m = boundary_mass(f.values, axes)
    if m > tol:
        raise BoundaryMassError(
            f"boundary mass {m:.3e} exceeds {tol:.1e}; enlarge the domain or narrow the window")


# --- partial Fourier transform in the last axis ----------------------------

def partial_fourier(u: GridFunction) -> GridFunction:
    """``u^(a, v, xi) = int exp(-i xi l) u(a, v, l) dl`` sampled on the FFT frequencies."""
    if u.space != POSITION:
        raise WrongSpaceTag("partial_fourier expects a position-space function")
    ax = u.spec.axes[-1]
    fax = ax.frequency_axis()
    xi = fax.nodes
    l0 = ax.nodes[0]
    vals = np.fft.fftshift(np.fft.fft(u.values, axis=-1), axes=-1)
    vals = vals * (ax.step * np.exp(-1j * xi * l0))
    return GridFunction(u.spec.with_last(fax), vals, FOURIER)


def partial_fourier_inv(f: GridFunction, lmin: float | None = None) -> GridFunction:
    """Inverse of :func:`partial_fourier`, ``(2 pi)^-1 int exp(i xi l) f dxi``.

    ``lmin`` fixes the position window; by default it is centred on zero.
    """
    if f.space != FOURIER:
        raise WrongSpaceTag("partial_fourier_inv expects a Fourier-space function")
    fax = f.spec.axes[-1]
    n = fax.points
    if lmin is None:
        lmin = -0.5 * n * (2 * np.pi / (n * fax.step))
    ax = fax.position_axis("l", lmin)
    xi = fax.nodes
    l0 = ax.nodes[0]
    vals = f.values * np.exp(1j * xi * l0) / ax.step
    vals = np.fft.ifft(np.fft.ifftshift(vals, axes=-1), axis=-1)
    return GridFunction(f.spec.with_last(ax), vals, POSITION)


# --- I/O ---------------------------------------------------------------------

_MAGIC = b"RQGRID01"


def write_binary(f: GridFunction, path) -> None:
    """Raw little-endian layout.

    ``magic(8) | ndim:u32 | space:u32 (0 position, 1 fourier)`` then per axis
    ``name(8, NUL padded) | min:f64 | max:f64 | points:u32 | centered:u32``,
    then the values as interleaved ``re, im`` doubles in C order.
    """
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<II", f.spec.ndim, 0 if f.space == POSITION else 1))
    for ax in f.spec.axes:
        name = ax.name.encode("ascii")
        if len(name) > 8:
            raise ValueError("axis names are limited to 8 bytes")
        buf.write(name.ljust(8, b"\0"))
        buf.write(struct.pack("<ddII", ax.min, ax.max, ax.points, int(ax.centered)))
    buf.write(np.ascontiguousarray(f.values).astype("<c16").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def read_binary(path) -> GridFunction:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != _MAGIC:
        raise ValueError("not a grid file")
    ndim, space = struct.unpack_from("<II", data, 8)
    off = 16
    axes = []
    for _ in range(ndim):
        name = data[off:off + 8].rstrip(b"\0").decode("ascii")
        lo, hi, pts, cen = struct.unpack_from("<ddII", data, off + 8)
        axes.append(Axis(name, lo, hi, pts, bool(cen)))
        off += 8 + 24
    spec = GridSpec(tuple(axes))
    vals = np.frombuffer(data, dtype="<c16", offset=off).reshape(spec.shape)
    return GridFunction(spec, vals.astype(complex), POSITION if space == 0 else FOURIER)


def write_csv(f: GridFunction, path) -> None:
    names = [ax.name for ax in f.spec.axes]
    coords = np.meshgrid(*[ax.nodes for ax in f.spec.axes], indexing="ij")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["re", "im"])
        flat = [c.ravel() for c in coords]
        vals = f.values.ravel()
        for i in range(vals.size):
            w.writerow([repr(float(c[i])) for c in flat]
                       + [repr(float(vals[i].real)), repr(float(vals[i].imag))])


def read_csv(path) -> GridFunction:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    names = header[:-2]
    axes = []
    for i, nm in enumerate(names):
        nodes = np.unique(body[:, i])
        h = (nodes[-1] - nodes[0]) / (len(nodes) - 1)
        if nm == "xi":
            axes.append(Axis(nm, nodes[0], nodes[0] + len(nodes) * h, len(nodes), False))
        else:
            axes.append(Axis(nm, nodes[0] - h / 2, nodes[-1] + h / 2, len(nodes), True))
    spec = GridSpec(tuple(axes))
    vals = (body[:, -2] + 1j * body[:, -1]).reshape(spec.shape)
    return GridFunction(spec, vals, FOURIER if names[-1] == "xi" else POSITION)

"""Uniform grids on the truncated box [-L, L]^n and nonnegative fields on them."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import IncompatibilityError, InvalidParameterError, NumericError

SHELL_FRACTION = 0.1


class BC(str, Enum):
    DIRICHLET = "dirichlet"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class Grid:
    """Box [-L, L]^n sampled with ``m`` nodes per axis (spacing 2L/(m-1)).

    Periodic grids identify x = -L with x = L, so they store m - 1 distinct
    nodes per axis.
    """

    n: int
    L: float
    m: int
    bc: BC = BC.DIRICHLET

    def __post_init__(self):
        object.__setattr__(self, "bc", BC(self.bc))
        if self.n not in (1, 2, 3):
            raise InvalidParameterError(f"grid dimension must be 1, 2 or 3, got {self.n}")
        if not self.L > 0:
            raise InvalidParameterError(f"half width L must be > 0, got {self.L}")
        if self.m < 3:
            raise InvalidParameterError(f"need m >= 3 points per axis, got {self.m}")

    @property
    def h(self):
        return 2.0 * self.L / (self.m - 1)

    @property
    def periodic(self):
        return self.bc is BC.PERIODIC

    @property
    def points_per_axis(self):
        return self.m - 1 if self.periodic else self.m

    @property
    def shape(self):
        return (self.points_per_axis,) * self.n

    @property
    def volume(self):
        return (2.0 * self.L) ** self.n

    @cached_property
    def axis(self):
        return -self.L + self.h * np.arange(self.points_per_axis)

    def coords(self):
        """Sparse open mesh: one broadcastable coordinate array per axis."""
        return np.meshgrid(*([self.axis] * self.n), indexing="ij", sparse=True)

    @cached_property
    def axis_weights(self):
        w = np.full(self.points_per_axis, self.h)
        if not self.periodic:
            w[0] = w[-1] = 0.5 * self.h
        return w

    @cached_property
    def weights(self):
        """Tensor trapezoid weights (uniform on periodic grids)."""
        w = self.axis_weights
        out = w
        for _ in range(self.n - 1):
            out = np.multiply.outer(out, w)
        return np.ascontiguousarray(out)

    @cached_property
    def boundary_mask(self):
        mask = np.zeros(self.shape, dtype=bool)
        if self.periodic:
            return mask
        for ax in range(self.n):
            idx = [slice(None)] * self.n
            idx[ax] = 0
            mask[tuple(idx)] = True
            idx[ax] = -1
            mask[tuple(idx)] = True
        return mask

    @cached_property
    def shell_mask(self):
        """Nodes in the outer shell max_i |x_i| >= (1 - SHELL_FRACTION) L."""
        edge = (1.0 - SHELL_FRACTION) * self.L - 1e-12 * self.L
        far = np.abs(self.axis) >= edge
        mask = far
        for _ in range(self.n - 1):
            mask = np.logical_or.outer(mask, far)
        return mask


def pairwise_sum(a):
    """Sum with a fixed balanced binary tree, independent of array layout."""
    a = np.asarray(a, dtype=float).ravel()
    if a.size == 0:
        return 0.0
    size = 1 << (a.size - 1).bit_length()
    if size != a.size:
        a = np.concatenate([a, np.zeros(size - a.size)])
    while a.size > 1:
        a = a[0::2] + a[1::2]
    return float(a[0])


class Field:
    """Nonnegative grid function.  The value array is read-only."""

    __slots__ = ("grid", "values")

    def __init__(self, grid, values, check=True):
        values = np.array(values, dtype=float)
        if values.shape != grid.shape:
            raise InvalidParameterError(
                f"values of shape {values.shape} do not match grid shape {grid.shape}"
            )
        if check:
            if not np.all(np.isfinite(values)):
                raise NumericError("field contains non-finite values")
            if np.any(values < 0):
                raise InvalidParameterError("field values must be nonnegative")
            if np.any(values[grid.boundary_mask] != 0):
                raise InvalidParameterError("Dirichlet field must vanish on the boundary")
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    def __repr__(self):
        return f"Field({self.grid!r}, sup={sup_norm(self):.6g})"


# -- initial data ---------------------------------------------------------


def _center(x0, n):
    c = np.broadcast_to(np.asarray(x0, dtype=float), (n,))
    return tuple(float(v) for v in c)


def _sq_dist(coords, x0):
    return sum((x - c) ** 2 for x, c in zip(coords, x0))


@dataclass(frozen=True)
class Gaussian:
    """A exp(-|x - x0|^2 / w^2)."""

    amplitude: float
    center: float | tuple = 0.0
    width: float = 1.0

    def evaluate(self, grid):
        r2 = _sq_dist(grid.coords(), _center(self.center, grid.n))
        return self.amplitude * np.exp(-r2 / self.width**2)


@dataclass(frozen=True)
class Bump:
    """Smooth compactly supported bump with peak ``amplitude`` at ``center``."""

    amplitude: float
    center: float | tuple = 0.0
    radius: float = 1.0

    def evaluate(self, grid):
        x0 = _center(self.center, grid.n)
        rho2 = _sq_dist(grid.coords(), x0) / self.radius**2
        rho2 = np.broadcast_to(rho2, grid.shape)
        out = np.zeros(grid.shape)
        inside = rho2 < 1.0
        out[inside] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - rho2[inside]))
        if not inside.any():
            warnings.warn(
                f"bump at {x0} with radius {self.radius} lies outside the box; "
                "support clipped to nothing",
                stacklevel=3,
            )
        return out


@dataclass(frozen=True)
class Constant:
    value: float

    def evaluate(self, grid):
        if not grid.periodic:
            raise IncompatibilityError("Constant initial data needs a periodic grid")
        return np.full(grid.shape, float(self.value))


@dataclass(frozen=True)
class Sum:
    terms: tuple

    def evaluate(self, grid):
        out = np.zeros(grid.shape)
        for term in self.terms:
            out = out + term.evaluate(grid)
        return out


def _check_amplitudes(init):
    if isinstance(init, Sum):
        for t in init.terms:
            _check_amplitudes(t)
        return
    a = init.value if isinstance(init, Constant) else init.amplitude
    if not (math.isfinite(a) and a >= 0):
        raise InvalidParameterError(f"initial data amplitude must be finite and >= 0, got {a}")
    for name in ("width", "radius"):
        v = getattr(init, name, None)
        if v is not None and not v > 0:
            raise InvalidParameterError(f"{name} must be > 0, got {v}")


def make_field(grid, init):
    """Sample ``init`` on ``grid``; Dirichlet boundary nodes are set to zero."""
    _check_amplitudes(init)
    values = np.broadcast_to(init.evaluate(grid), grid.shape).copy()
    values[grid.boundary_mask] = 0.0
    return Field(grid, values)


# -- functionals ----------------------------------------------------------


def _power(u, k):
    if k == 1:
        return u
    return np.power(u, k)


def integral_power(f, k):
    """Quadrature of ∫ u^k over the box."""
    u = f.values
    if not np.all(np.isfinite(u)):
        raise NumericError("non-finite field values in integral")
    return pairwise_sum(f.grid.weights * _power(u, k))


def sup_norm(f):
    return float(f.values.max()) if f.values.size else 0.0


def boundary_shell_mass(f):
    """∫ u over the outer shell of the box (truncation diagnostic)."""
    g = f.grid
    return pairwise_sum(np.where(g.shell_mask, g.weights * f.values, 0.0))


def laplacian(values, grid):
    """Second-order 5/7-point Laplacian of a raw array (zero on Dirichlet boundary)."""
    u = np.asarray(values, dtype=float)
    out = np.zeros_like(u)
    for ax in range(grid.n):
        out += np.roll(u, 1, axis=ax) + np.roll(u, -1, axis=ax) - 2.0 * u
    out /= grid.h**2
    if not grid.periodic:
        out[grid.boundary_mask] = 0.0
    return out


def laplacian_apply(f):
    return laplacian(f.values, f.grid)


def gradient_power_energy(f, k):
    """Quadrature of ∫ |∇ u^{k/2}|^2 from forward differences on grid edges.

    Edges carry weight h along the difference axis and the node weights on
    the remaining axes, which makes -Σ w u Δ_h u equal to the k = 2 energy.
    """
    g = f.grid
    v = _power(f.values, 0.5 * k)
    total = []
    for ax in range(g.n):
        if g.periodic:
            d = np.roll(v, -1, axis=ax) - v
        else:
            d = np.diff(v, axis=ax)
        w = np.ones(())
        for other in range(g.n):
            wa = np.full(d.shape[other], g.h) if other == ax else g.axis_weights
            w = np.multiply.outer(w, wa)
        total.append(pairwise_sum(w * d * d) / g.h**2)
    return pairwise_sum(np.array(total))


# -- snapshot IO ----------------------------------------------------------


def dump_field(f, path):
    """Write a snapshot: header ``n,L,m,bc`` then row-major values.

    ``.csv`` writes one value per line with 17 significant digits; any other
    suffix writes the header line followed by raw little-endian float64.
    """
    path = Path(path)
    g = f.grid
    header = f"{g.n},{g.L!r},{g.m},{g.bc.value}\n"
    flat = np.ascontiguousarray(f.values).ravel()
    if path.suffix == ".csv":
        with open(path, "w") as fh:
            fh.write(header)
            fh.writelines(f"{v:.17g}\n" for v in flat)
    else:
        with open(path, "wb") as fh:
            fh.write(header.encode())
            fh.write(flat.astype("<f8").tobytes())


def load_field(path):
    path = Path(path)
    if path.suffix == ".csv":
        with open(path) as fh:
            header = fh.readline()
            flat = np.array([float(line) for line in fh if line.strip()])
    else:
        with open(path, "rb") as fh:
            header = fh.readline().decode()
            flat = np.frombuffer(fh.read(), dtype="<f8")
    n, L, m, bc = header.strip().split(",")
    grid = Grid(int(n), float(L), int(m), BC(bc))
    return Field(grid, flat.reshape(grid.shape))

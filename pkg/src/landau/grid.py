"""Uniform cell-centered velocity grids, quadrature, gradients, and normalization.

All integrals over velocity space are midpoint sums ``h^N * sum(...)`` on a
uniform tensor grid with nodes at the cell centers
``v_d(i) = -L + (i + 0.5) h``, ``h = 2L/n``.  Densities are implicitly
extended by zero outside the box.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates

from .errors import DegeneracyError, NumericError, ResourceError, ValidationError

# Below this value a node contributes 0 to log/sqrt functionals
# (consistent with f ln f -> 0 as f -> 0).
EPS_FLOOR = 1e-30

# Guard against accidentally allocating enormous tensor grids.
DEFAULT_MAX_NODES = 2**24


class VelocityGrid:
    """Uniform cell-centered grid on [-L, L]^N.

    Parameters
    ----------
    dim : int
        Velocity-space dimension N >= 2.
    half_width : float
        Box half-width L > 0 (same on every axis).
    nodes_per_axis : int
        Number of cells n >= 4 per axis; spacing h = 2L/n.
    """

    def __init__(self, dim, half_width, nodes_per_axis, max_nodes=DEFAULT_MAX_NODES):
        if dim < 2:
            raise ValidationError(f"dim must be >= 2, got {dim}")
        if not (half_width > 0):
            raise ValidationError(f"half_width must be > 0, got {half_width}")
        if nodes_per_axis < 4:
            raise ValidationError(f"nodes_per_axis must be >= 4, got {nodes_per_axis}")
        if nodes_per_axis ** dim > max_nodes:
            raise ResourceError(
                f"{nodes_per_axis}^{dim} nodes exceed the budget of {max_nodes}"
            )
        self.dim = int(dim)
        self.half_width = float(half_width)
        self.n = int(nodes_per_axis)
        self.h = 2.0 * self.half_width / self.n
        self.axis = -self.half_width + (np.arange(self.n) + 0.5) * self.h
        self.axis.flags.writeable = False
        self.shape = (self.n,) * self.dim
        self.size = self.n ** self.dim
        # (size, dim) node coordinates, first axis slowest (C order).
        mesh = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        self.coords = np.stack([m.ravel() for m in mesh], axis=-1)
        self.coords.flags.writeable = False
        self.sq_norm = np.sum(self.coords**2, axis=1)
        self.sq_norm.flags.writeable = False

    @property
    def nodes_per_axis(self):
        return self.n

    @property
    def cell_volume(self):
        return self.h ** self.dim

    def same_layout(self, other):
        return (
            self.dim == other.dim
            and self.n == other.n
            and self.half_width == other.half_width
        )

    def __repr__(self):
        return f"VelocityGrid(dim={self.dim}, half_width={self.half_width}, n={self.n})"


def build_grid(dim, half_width, nodes_per_axis, max_nodes=DEFAULT_MAX_NODES):
    """Construct a :class:`VelocityGrid` (validating arguments)."""
    return VelocityGrid(dim, half_width, nodes_per_axis, max_nodes=max_nodes)


class DiscreteDistribution:
    """Nonnegative density sampled at the cell centers of a grid.

    `values` is flat in C order (first axis slowest).
    """

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=float).ravel()
        if values.size != grid.size:
            raise ValidationError(
                f"values has {values.size} entries, grid has {grid.size} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise NumericError("distribution values must be finite")
        if np.any(values < 0):
            raise ValidationError("distribution values must be nonnegative")
        self.grid = grid
        self.values = values
        self.values.flags.writeable = False

    def reshaped(self):
        return self.values.reshape(self.grid.shape)

    def with_values(self, values):
        return DiscreteDistribution(self.grid, values)

    def to_json_dict(self):
        return {
            "dim": self.grid.dim,
            "half_width": self.grid.half_width,
            "nodes_per_axis": self.grid.n,
            "values": self.values.tolist(),
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)

    @staticmethod
    def from_json_dict(obj):
        grid = build_grid(obj["dim"], obj["half_width"], obj["nodes_per_axis"])
        return DiscreteDistribution(grid, np.asarray(obj["values"], dtype=float))

    @staticmethod
    def load(path):
        with open(path) as fh:
            return DiscreteDistribution.from_json_dict(json.load(fh))


@dataclass(frozen=True)
class NormalizationTransform:
    """Affine change of unknown and variables f(v) -> a f(b v + c)."""

    amplitude: float
    dilation: float
    shift: tuple

    @property
    def is_identity(self):
        return (
            abs(self.amplitude - 1.0) < 1e-9
            and abs(self.dilation - 1.0) < 1e-9
            and max(abs(s) for s in self.shift) < 1e-9
        )

    def compose(self, other):
        """Transform equivalent to applying self first, then `other`."""
        a = self.amplitude * other.amplitude
        b = self.dilation * other.dilation
        c = tuple(
            self.dilation * oc + sc for oc, sc in zip(other.shift, self.shift)
        )
        return NormalizationTransform(a, b, c)


def integrate(f, weight=None):
    """Midpoint quadrature h^N * sum_k w(v_k) f_k.

    `weight` is None (constant 1), an array of per-node values, or a callable
    taking the (size, dim) coordinate array.
    """
    if weight is None:
        w = 1.0
    elif callable(weight):
        w = np.asarray(weight(f.grid.coords), dtype=float)
    else:
        w = np.asarray(weight, dtype=float)
    prod = f.values * w
    if not np.all(np.isfinite(prod[f.values > 0])):
        raise NumericError("non-finite weight value on the support of f")
    # np.sum uses fixed-order pairwise summation: bit-reproducible.
    return f.grid.cell_volume * float(np.sum(np.where(f.values > 0, prod, 0.0)))


def _gradient_nd(field, h):
    """Second-order gradient (central interior, one-sided boundary).

    Returns an array of shape (dim,) + field.shape.
    """
    grads = np.gradient(field, h, edge_order=2)
    if field.ndim == 1:
        grads = [grads]
    return np.stack(grads, axis=0)


def gradient_sqrt(f):
    """Gradient of sqrt(f), shape (size, dim); zero where f vanishes."""
    g = np.sqrt(np.where(f.values > EPS_FLOOR, f.values, 0.0)).reshape(f.grid.shape)
    grads = _gradient_nd(g, f.grid.h)
    return grads.reshape(f.grid.dim, f.grid.size).T


def grad_log(f):
    """Node-wise estimate of grad(log f) and its validity mask.

    Central differences of log f on interior nodes (second-order one-sided at
    the box boundary).  Where the stencil touches floored nodes, falls back to
    a one-sided two-point difference toward the valid side; isolated nodes get
    a zero component.  Returns (xi, mask) with xi of shape (size, dim) and
    mask true where f > EPS_FLOOR.
    """
    grid = f.grid
    vals = f.reshaped()
    mask = vals > EPS_FLOOR
    if mask.all():
        logf = np.log(vals)
        xi = _gradient_nd(logf, grid.h)
        return xi.reshape(grid.dim, grid.size).T, mask.ravel()

    logf = np.where(mask, np.log(np.where(mask, vals, 1.0)), 0.0)
    h = grid.h
    xi = np.zeros((grid.dim,) + grid.shape)
    for d in range(grid.dim):
        lf = np.moveaxis(logf, d, 0)
        mk = np.moveaxis(mask, d, 0)
        comp = np.moveaxis(xi[d], d, 0)
        up = np.roll(lf, -1, axis=0)
        dn = np.roll(lf, 1, axis=0)
        up_ok = np.roll(mk, -1, axis=0)
        dn_ok = np.roll(mk, 1, axis=0)
        up_ok[-1] = False
        dn_ok[0] = False
        central = (up - dn) / (2 * h)
        fwd = (up - lf) / h
        bwd = (lf - dn) / h
        comp[...] = np.select(
            [up_ok & dn_ok, up_ok, dn_ok], [central, fwd, bwd], default=0.0
        )
        comp[~mk] = 0.0
    return xi.reshape(grid.dim, grid.size).T, mask.ravel()


def raw_moments(f):
    """(mass, mean-velocity vector, scalar temperature) of f."""
    rho = integrate(f)
    if rho <= 0:
        raise ValidationError("distribution has zero mass")
    u = np.array([integrate(f, f.grid.coords[:, d]) for d in range(f.grid.dim)]) / rho
    centered = f.grid.sq_norm - 2 * (f.grid.coords @ u) + u @ u
    temp = integrate(f, centered) / (f.grid.dim * rho)
    return rho, u, temp


def _resample(f, transform):
    """Sample a f(b v + c) back onto the grid by multilinear interpolation."""
    grid = f.grid
    a, b = transform.amplitude, transform.dilation
    c = np.asarray(transform.shift)
    # node v maps to source point b v + c; convert to fractional index.
    pts = b * grid.coords + c[None, :]
    idx = (pts + grid.half_width) / grid.h - 0.5
    vals = map_coordinates(
        f.reshaped(), idx.T.reshape(grid.dim, *grid.shape), order=1,
        mode="constant", cval=0.0,
    )
    out = a * vals.ravel()
    np.maximum(out, 0.0, out=out)
    return f.with_values(out)


def normalize(f, tol=1e-3, max_iter=12):
    """Rescale f to mass 1, zero momentum, and energy moment ∫f|v|² = N.

    Returns (normalized distribution, recorded transform).  Raises
    ValidationError on zero mass and DegeneracyError when the temperature is
    degenerate relative to the grid scale.
    """
    grid = f.grid
    rho, u, temp = raw_moments(f)
    if temp < 1e-12 * grid.half_width**2:
        raise DegeneracyError(f"temperature {temp} is degenerate on this grid")

    total = NormalizationTransform(1.0, 1.0, (0.0,) * grid.dim)
    current = f
    for _ in range(max_iter):
        b = np.sqrt(temp)
        a = temp ** (grid.dim / 2.0) / rho
        step = NormalizationTransform(a, b, tuple(u))
        total = total.compose(step)
        if step.is_identity:
            break
        current = _resample(current, step)
        rho, u, temp = raw_moments(current)
        if rho > 0:
            # interpolation perturbs the mass; a scalar rescale fixes it
            # exactly without another resample
            current = current.with_values(current.values / rho)
            total = total.compose(
                NormalizationTransform(1.0 / rho, 1.0, (0.0,) * grid.dim)
            )
            rho, u, temp = 1.0, u, temp
        err = max(
            abs(rho - 1.0),
            float(np.max(np.abs(u))),
            abs(grid.dim * temp * rho + rho * (u @ u) - grid.dim) / grid.dim,
        )
        if err <= 0.25 * tol:
            break
    return current, total

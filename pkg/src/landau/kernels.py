"""Collision-kernel laws, the perpendicular projection, and the nonlocal
coefficient fields a*f, b*f, c*f.

For an isotropic kernel psi(|z|) the coefficient functions of the pair
difference z = v - w are

    a_ij(z) = psi(r) (delta_ij - z_i z_j / r^2),         r = |z|,
    b_i(z)  = -(N-1) psi(r) z_i / r^2,
    c(z)    = -(N-1) [ (N-2) psi(r)/r^2 + psi'(r)/r ],

and the fields are the convolutions (a_ij*f)(v), etc.  In the Coulomb case
(psi(r) = 1/r, N = 3) c collapses to a point mass at the origin and
(c*f)(v) = -8*pi*f(v) pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import ValidationError
from .grid import DiscreteDistribution

_SANDWICH_RADII = np.logspace(-3.0, 3.0, 1000)


@dataclass(frozen=True)
class PowerLawPsi:
    """psi(r) = r^(gamma+2)."""

    gamma: float

    @property
    def kind(self):
        return "power_law"

    @property
    def is_coulomb(self):
        return False

    def psi(self, r):
        p = self.gamma + 2.0
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(r > 0, r, 1.0) ** p
        if p < 0:
            out = np.where(r > 0, out, np.inf)
        elif p == 0:
            out = np.where(r >= 0, 1.0, out)
        else:
            out = np.where(r > 0, out, 0.0)
        return out if out.ndim else float(out)

    def psi_prime(self, r):
        p = self.gamma + 2.0
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            out = p * np.where(r > 0, r, 1.0) ** (p - 1.0)
        out = np.where(r > 0, out, 0.0)
        return out if out.ndim else float(out)

    def to_json_dict(self):
        return {"kind": "power_law", "gamma": self.gamma}


@dataclass(frozen=True)
class CoulombPsi(PowerLawPsi):
    """psi(r) = 1/r in dimension 3; (c*f) = -8*pi*f."""

    gamma: float = -3.0

    def __post_init__(self):
        if self.gamma != -3.0:
            raise ValidationError("Coulomb kernel has gamma = -3")

    @property
    def kind(self):
        return "coulomb"

    @property
    def is_coulomb(self):
        return True

    def to_json_dict(self):
        return {"kind": "coulomb"}


@dataclass(frozen=True)
class BracketedPsi:
    """A user-supplied psi sandwiched between explicit power-law envelopes.

    Asserts, on a log-spaced sample of radii,

        K3 * min(1, r^(gamma1+2))  <=  psi(r)  <=  K1 * r^(2-delta) + K2 * r^(gamma2+2).
    """

    K1: float
    K2: float
    K3: float
    delta: float
    gamma1: float
    gamma2: float
    psi_fn: object
    psi_prime_fn: object = None
    label: str = "bracketed"

    def __post_init__(self):
        if not (self.K1 > 0 and self.K2 > 0 and self.K3 > 0):
            raise ValidationError("K1, K2, K3 must be positive")
        if not (0 < self.delta <= 2):
            raise ValidationError(f"delta must be in (0, 2], got {self.delta}")
        if self.gamma1 > 0:
            raise ValidationError(f"gamma1 must be <= 0, got {self.gamma1}")
        g2 = self.gamma2
        if not (-4 < g2 < 0) or g2 == -2:
            raise ValidationError(
                f"gamma2 must lie in (-4,-2) or (-2,0), got {g2}"
            )
        r = _SANDWICH_RADII
        vals = np.asarray([self.psi_fn(x) for x in r], dtype=float)
        if np.any(vals < 0):
            raise ValidationError("psi must be nonnegative")
        lower = self.K3 * np.minimum(1.0, r ** (self.gamma1 + 2.0))
        upper = self.K1 * r ** (2.0 - self.delta) + self.K2 * r ** (g2 + 2.0)
        slack = 1.0 + 1e-12
        if np.any(vals * slack < lower) or np.any(vals > upper * slack):
            k = int(
                np.argmax((vals * slack < lower) | (vals > upper * slack))
            )
            raise ValidationError(
                f"sandwich bound violated at r = {r[k]}: "
                f"{lower[k]} <= {vals[k]} <= {upper[k]} fails"
            )

    @property
    def kind(self):
        return "bracketed"

    @property
    def is_coulomb(self):
        return False

    def psi(self, r):
        if np.ndim(r) == 0:
            if r == 0:
                return math.inf if self.gamma1 + 2.0 < 0 else float(self.psi_fn(0.0))
            return float(self.psi_fn(r))
        r = np.asarray(r, dtype=float)
        return np.asarray([self.psi(x) for x in r.ravel()]).reshape(r.shape)

    def psi_prime(self, r):
        if self.psi_prime_fn is not None:
            if np.ndim(r) == 0:
                return float(self.psi_prime_fn(r))
            r = np.asarray(r, dtype=float)
            return np.asarray(
                [self.psi_prime_fn(x) for x in r.ravel()]
            ).reshape(r.shape)
        # central difference with relative step
        r = np.asarray(r, dtype=float)
        dr = 1e-6 * np.maximum(r, 1e-6)
        out = (self.psi(r + dr) - self.psi(np.maximum(r - dr, 1e-300))) / (2 * dr)
        return out if out.ndim else float(out)

    def to_json_dict(self):
        return {
            "kind": "bracketed",
            "K1": self.K1,
            "K2": self.K2,
            "K3": self.K3,
            "delta": self.delta,
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "label": self.label,
        }


def psi_spec_from_json(obj):
    """Parse the tagged-union JSON form of a kernel law."""
    kind = obj.get("kind")
    if kind == "coulomb":
        return CoulombPsi()
    if kind == "power_law":
        return PowerLawPsi(float(obj["gamma"]))
    if kind == "bracketed":
        raise ValidationError(
            "bracketed kernels need a callable psi and cannot be built from JSON"
        )
    raise ValidationError(f"unknown kernel kind {kind!r}")


def psi_eval(spec, r):
    """Kernel value psi(r); +inf at r = 0 for negative exponents."""
    if r < 0:
        raise ValidationError(f"radius must be >= 0, got {r}")
    return spec.psi(r)


def projection(z):
    """Orthogonal projection onto the hyperplane perpendicular to z."""
    z = np.asarray(z, dtype=float)
    rsq = float(z @ z)
    if rsq == 0:
        raise ValidationError("projection is undefined at z = 0")
    return np.eye(z.size) - np.outer(z, z) / rsq


@dataclass
class CollisionCoefficients:
    """Convolved coefficient fields sampled at the grid nodes.

    A has shape (size, N, N) and is symmetric positive semidefinite at every
    node; B has shape (size, N); Cc has shape (size,).
    """

    A: np.ndarray
    B: np.ndarray
    Cc: np.ndarray
    method: str

    def max_diffusion_eigenvalue(self):
        return float(np.max(np.linalg.eigvalsh(self.A)))


def _difference_tables(grid, spec):
    """Per-component kernel tables on the (2n-1)^N difference grid.

    Entry d corresponds to z = (d - (n-1)) * h componentwise; the z = 0
    center is zeroed (the source cell w = v is excluded from the quadrature).
    Returns (a_tables[(i,j)], b_tables[i], c_table or None).
    """
    n, h, dim = grid.n, grid.h, grid.dim
    axis = (np.arange(2 * n - 1) - (n - 1)) * h
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    rsq = sum(m**2 for m in mesh)
    center = (n - 1,) * dim
    rsq_safe = rsq.copy()
    rsq_safe[center] = 1.0
    r = np.sqrt(rsq_safe)
    psi = np.asarray(spec.psi(r), dtype=float)
    psi[center] = 0.0

    a_tabs = {}
    for i in range(dim):
        for j in range(i, dim):
            tab = -psi * mesh[i] * mesh[j] / rsq_safe
            if i == j:
                tab = tab + psi
            tab[center] = 0.0
            a_tabs[(i, j)] = tab

    b_tabs = []
    for i in range(dim):
        tab = -(dim - 1) * psi * mesh[i] / rsq_safe
        tab[center] = 0.0
        b_tabs.append(tab)

    if spec.is_coulomb:
        c_tab = None
    else:
        psip = np.asarray(spec.psi_prime(r), dtype=float)
        c_tab = -(dim - 1) * ((dim - 2) * psi / rsq_safe + psip / r)
        c_tab[center] = 0.0
    return a_tabs, b_tabs, c_tab


_TABLE_CACHE = {}


def _cached_tables(grid, spec):
    try:
        key = (grid.dim, grid.half_width, grid.n, spec)
        hit = _TABLE_CACHE.get(key)
        if hit is None:
            hit = _difference_tables(grid, spec)
            if len(_TABLE_CACHE) > 8:
                _TABLE_CACHE.clear()
            _TABLE_CACHE[key] = hit
        return hit
    except TypeError:  # unhashable spec (callable payload)
        return _difference_tables(grid, spec)


def _convolve_fft(table, fvals):
    # valid-mode linear convolution against the (2n-1)^N table equals the
    # exact quadrature sum over source nodes.
    return fftconvolve(table, fvals, mode="valid")


def _convolve_direct(table, fvals):
    """O(M^2) reference summation: out[i] = sum_j table[i - j + n - 1] f[j]."""
    n = fvals.shape[0]
    dim = fvals.ndim
    out = np.empty_like(fvals)
    rev = table[(slice(None, None, -1),) * dim]
    for idx in np.ndindex(fvals.shape):
        window = rev[tuple(slice(n - 1 - k, 2 * n - 1 - k) for k in idx)]
        out[idx] = np.sum(window * fvals)
    return out


def collision_coefficients(f, spec, method="fft"):
    """Assemble (a*f, b*f, c*f) at every node by quadrature.

    `method="direct"` is the exact-summation reference path (O(M^2), for
    small grids and testing); `method="fft"` evaluates the same zero-padded
    linear convolution with FFTs and agrees with it to roundoff.
    """
    if method not in ("direct", "fft"):
        raise ValidationError(f"unknown method {method!r}")
    grid = f.grid
    fvals = f.reshaped()
    conv = _convolve_direct if method == "direct" else _convolve_fft
    a_tabs, b_tabs, c_tab = _cached_tables(grid, spec)
    hN = grid.cell_volume

    dim = grid.dim
    A = np.empty((grid.size, dim, dim))
    for i in range(dim):
        for j in range(i, dim):
            comp = hN * conv(a_tabs[(i, j)], fvals).ravel()
            A[:, i, j] = comp
            A[:, j, i] = comp
    B = np.empty((grid.size, dim))
    for i in range(dim):
        B[:, i] = hN * conv(b_tabs[i], fvals).ravel()
    if spec.is_coulomb:
        Cc = -8.0 * math.pi * f.values.copy()
    else:
        Cc = hN * conv(c_tab, fvals).ravel()
    return CollisionCoefficients(A=A, B=B, Cc=Cc, method=method)

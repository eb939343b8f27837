"""Generator families of velocity distributions used by scenarios and
verification suites: Gaussians, bimodal states, shells, heavy tails, and
mixtures, each optionally normalized to mass 1 / zero momentum / energy
moment N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .grid import DiscreteDistribution, normalize


@dataclass
class DistributionSpec:
    kind: str
    params: dict = field(default_factory=dict)
    normalize: bool = False

    @staticmethod
    def from_json_dict(obj):
        obj = dict(obj)
        kind = obj.pop("kind", None)
        if kind is None:
            raise ValidationError("distribution spec needs a 'kind'")
        norm = bool(obj.pop("normalize", False))
        params = obj.pop("params", None)
        if params is not None:
            if not isinstance(params, dict):
                raise ValidationError("'params' must be an object")
            if obj:
                raise ValidationError(
                    f"unexpected keys besides 'params': {sorted(obj)}"
                )
            return DistributionSpec(kind=kind, params=dict(params), normalize=norm)
        return DistributionSpec(kind=kind, params=obj, normalize=norm)

    def to_json_dict(self):
        return {
            "kind": self.kind,
            "normalize": self.normalize,
            "params": dict(self.params),
        }


def _maxwellian_values(grid, temperature, mean, mass=1.0):
    if temperature <= 0:
        raise ValidationError(f"temperature must be > 0, got {temperature}")
    mean = np.asarray(mean, dtype=float)
    if mean.shape != (grid.dim,):
        mean = np.broadcast_to(mean, (grid.dim,)).astype(float)
    d2 = np.sum((grid.coords - mean[None, :]) ** 2, axis=1)
    return (
        mass
        * (2.0 * math.pi * temperature) ** (-grid.dim / 2.0)
        * np.exp(-d2 / (2.0 * temperature))
    )


def _raw_values(spec, grid):
    kind, p = spec.kind, spec.params
    if kind == "maxwellian":
        return _maxwellian_values(
            grid, p.get("temperature", 1.0), p.get("mean", np.zeros(grid.dim))
        )
    if kind == "bimaxwellian":
        sep = p.get("separation", 2.0)
        temp = p.get("temperature", 1.0)
        axis = int(p.get("axis", 0))
        u = np.zeros(grid.dim)
        u[axis] = 0.5 * sep
        return 0.5 * (
            _maxwellian_values(grid, temp, u)
            + _maxwellian_values(grid, temp, -u)
        )
    if kind == "anisotropic_gaussian":
        var = np.asarray(p.get("variances", np.ones(grid.dim)), dtype=float)
        if var.shape != (grid.dim,) or np.any(var <= 0):
            raise ValidationError("variances must be positive, one per axis")
        mean = np.asarray(p.get("mean", np.zeros(grid.dim)), dtype=float)
        q = np.sum((grid.coords - mean[None, :]) ** 2 / var[None, :], axis=1)
        norm = (2.0 * math.pi) ** (-grid.dim / 2.0) / math.sqrt(float(np.prod(var)))
        return norm * np.exp(-0.5 * q)
    if kind == "radial_shell":
        radius = p.get("radius", 2.0)
        width = p.get("width", 0.5)
        if radius <= 0 or width <= 0:
            raise ValidationError("radius and width must be > 0")
        r = np.sqrt(grid.sq_norm)
        return np.exp(-((r - radius) ** 2) / (2.0 * width**2))
    if kind == "radial_heavy_tail":
        expo = p.get("exponent", 4.0)
        if expo <= (grid.dim + 2.0) / 2.0:
            raise ValidationError(
                f"exponent {expo} gives an infinite energy moment"
            )
        return (1.0 + grid.sq_norm) ** (-expo)
    if kind == "mixture":
        comps = p.get("components")
        if not comps:
            raise ValidationError("mixture needs a nonempty component list")
        weights = p.get("weights", [1.0 / len(comps)] * len(comps))
        if len(weights) != len(comps) or any(w < 0 for w in weights):
            raise ValidationError("mixture weights must be nonnegative, one per component")
        out = np.zeros(grid.size)
        for w, comp in zip(weights, comps):
            sub = comp if isinstance(comp, DistributionSpec) else DistributionSpec.from_json_dict(comp)
            cf = generate_distribution(sub, grid)
            out += w * cf.values / max(np.sum(cf.values), 1e-300)
        return out
    if kind == "custom_file":
        path = p.get("path")
        if path is None:
            raise ValidationError("custom_file needs a 'path'")
        loaded = DiscreteDistribution.load(path)
        if not loaded.grid.same_layout(grid):
            raise ValidationError(
                f"distribution in {path} has layout "
                f"{loaded.grid!r}, expected {grid!r}"
            )
        return loaded.values
    raise ValidationError(f"unknown distribution kind {kind!r}")


def generate_distribution(spec, grid):
    """Sample a distribution family at the cell centers of `grid`."""
    if not isinstance(spec, DistributionSpec):
        spec = DistributionSpec.from_json_dict(spec)
    f = DiscreteDistribution(grid, _raw_values(spec, grid))
    if spec.normalize:
        f, _ = normalize(f)
    return f

"""Velocity grid, distributions, quadrature, gradients, and normalization."""

import json
import math

import numpy as np
import pytest

from landau.errors import DegeneracyError, NumericError, ValidationError
from landau.grid import (
    DiscreteDistribution,
    NormalizationTransform,
    VelocityGrid,
    build_grid,
    gradient_sqrt,
    grad_log,
    integrate,
    normalize,
)


def maxwellian(grid, temperature=1.0, mean=None):
    mean = np.zeros(grid.dim) if mean is None else np.asarray(mean, dtype=float)
    d2 = np.sum((grid.coords - mean) ** 2, axis=1)
    norm = (2.0 * math.pi * temperature) ** (grid.dim / 2.0)
    return DiscreteDistribution(grid, np.exp(-0.5 * d2 / temperature) / norm)


class TestBuildGrid:
    def test_cell_centered_coordinates(self):
        g = build_grid(2, 2.0, 4)
        assert g.h == pytest.approx(1.0)
        np.testing.assert_allclose(g.axis, [-1.5, -0.5, 0.5, 1.5])
        assert g.coords.shape == (16, 2)
        # C-order flat indexing: last axis varies fastest
        np.testing.assert_allclose(g.coords[1], [-1.5, -0.5])

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValidationError):
            build_grid(1, 2.0, 4)
        with pytest.raises(ValidationError):
            build_grid(3, -1.0, 4)
        with pytest.raises(ValidationError):
            build_grid(3, 2.0, 3)

    def test_memory_budget_guard(self):
        from landau.errors import ResourceError

        with pytest.raises(ResourceError):
            build_grid(3, 2.0, 4096)


class TestDiscreteDistribution:
    def test_rejects_negative_and_nonfinite(self):
        g = build_grid(2, 1.0, 4)
        with pytest.raises(ValidationError):
            DiscreteDistribution(g, np.full(16, -1.0))
        with pytest.raises(NumericError):
            DiscreteDistribution(g, np.full(16, math.nan))

    def test_json_round_trip(self, tmp_path):
        g = build_grid(2, 1.5, 6)
        f = maxwellian(g)
        path = tmp_path / "f.json"
        f.save(path)
        back = DiscreteDistribution.load(path)
        assert back.grid.same_layout(g)
        np.testing.assert_array_equal(back.values, f.values)

    def test_load_rejects_negative_values(self, tmp_path):
        path = tmp_path / "bad.json"
        obj = {"dim": 2, "half_width": 1.0, "nodes_per_axis": 4, "values": [0.0] * 16}
        obj["values"][3] = -0.5
        path.write_text(json.dumps(obj))
        with pytest.raises(ValidationError):
            DiscreteDistribution.load(path)


class TestIntegrate:
    def test_gaussian_mass_close_to_one(self):
        g = build_grid(3, 6.0, 16)
        f = maxwellian(g)
        assert integrate(f) == pytest.approx(1.0, abs=5e-4)

    def test_zero_distribution(self):
        g = build_grid(2, 1.0, 4)
        f = DiscreteDistribution(g, np.zeros(16))
        assert integrate(f) == 0.0

    def test_odd_weight_on_symmetric_f_vanishes(self):
        g = build_grid(3, 4.0, 12)
        f = maxwellian(g)
        val = integrate(f, weight=g.coords[:, 0])
        assert abs(val) < 1e-14

    def test_linearity(self):
        rng = np.random.default_rng(7)
        g = build_grid(2, 2.0, 8)
        fa = DiscreteDistribution(g, rng.random(g.size))
        fb = DiscreteDistribution(g, rng.random(g.size))
        w = rng.standard_normal(g.size)
        lhs = integrate(
            DiscreteDistribution(g, 2.0 * fa.values + 3.0 * fb.values), weight=w
        )
        rhs = 2.0 * integrate(fa, weight=w) + 3.0 * integrate(fb, weight=w)
        assert lhs == pytest.approx(rhs, rel=1e-13)

    def test_callable_weight(self):
        g = build_grid(2, 3.0, 12)
        f = maxwellian(g)
        a = integrate(f, weight=lambda c: np.sum(c**2, axis=1))
        b = integrate(f, weight=g.sq_norm)
        assert a == pytest.approx(b, rel=1e-14)

    def test_nonfinite_weight_on_support_raises(self):
        g = build_grid(2, 1.0, 4)
        f = DiscreteDistribution(g, np.ones(16))
        w = np.ones(16)
        w[0] = math.inf
        with pytest.raises(NumericError):
            integrate(f, weight=w)


class TestGradientSqrt:
    def test_constant_function_zero_in_interior(self):
        g = build_grid(2, 2.0, 8)
        f = DiscreteDistribution(g, np.ones(g.size))
        grad = gradient_sqrt(f)
        interior = np.all(np.abs(g.coords) < g.half_width - g.h, axis=1)
        assert np.max(np.abs(grad[interior])) == 0.0

    def test_single_cell_locality(self):
        g = build_grid(2, 2.0, 8)
        vals = np.zeros(g.size)
        vals[g.size // 2 + 3] = 1.0
        grad = gradient_sqrt(DiscreteDistribution(g, vals))
        touched = np.flatnonzero(np.any(grad != 0.0, axis=1))
        # only the cell itself and its axis neighbors can respond
        idx = np.unravel_index(g.size // 2 + 3, g.shape)
        expect = set()
        for d in range(2):
            for off in (-1, 0, 1):
                j = list(idx)
                j[d] += off
                if 0 <= j[d] < g.n:
                    expect.add(np.ravel_multi_index(j, g.shape))
        assert set(touched) <= expect

    def test_maxwellian_analytic_gradient(self):
        g = build_grid(3, 5.0, 24)
        f = maxwellian(g)
        grad = gradient_sqrt(f)
        exact = -0.5 * g.coords * np.sqrt(f.values)[:, None]
        # compare away from the outer layer where tails are truncated
        interior = g.sq_norm < 9.0
        # central differences: error ~ h^2 |d3 sqrt(M)|/6 ~ 3e-3 at h = 0.42
        err = np.max(np.abs(grad[interior] - exact[interior]))
        assert err < 5e-3

    def test_second_order_in_weighted_norm(self):
        errs = []
        for n in (16, 32):
            g = build_grid(3, 4.0, n)
            f = maxwellian(g)
            grad = gradient_sqrt(f)
            exact = -0.5 * g.coords * np.sqrt(f.values)[:, None]
            w = (1.0 + g.sq_norm) ** -1.5
            err2 = g.cell_volume * np.sum(w * np.sum((grad - exact) ** 2, axis=1))
            errs.append(math.sqrt(err2))
        assert errs[0] / errs[1] > 3.5


class TestGradLog:
    def test_gaussian_log_gradient(self):
        g = build_grid(3, 5.0, 20)
        f = maxwellian(g)
        xi, mask = grad_log(f)
        interior = mask & (g.sq_norm < 4.0)
        err = np.max(np.abs(xi[interior] + g.coords[interior]))
        assert err < 5e-2


class TestNormalize:
    def test_already_normalized_is_identity(self):
        g = build_grid(3, 6.0, 20)
        f = maxwellian(g)
        out, tr = normalize(f)
        # fixed point up to the normalization tolerance
        assert tr.amplitude == pytest.approx(1.0, abs=5e-3)
        assert tr.dilation == pytest.approx(1.0, abs=5e-3)
        assert np.max(np.abs(tr.shift)) < 5e-3
        assert integrate(out) == pytest.approx(1.0, abs=1e-3)

    def test_shift_recovered(self):
        g = build_grid(3, 6.0, 24)
        u = np.array([0.4, -0.2, 0.1])
        f = maxwellian(g, mean=u)
        out, tr = normalize(f)
        np.testing.assert_allclose(tr.shift, u, atol=5e-3)
        mom = integrate(out, weight=lambda c: c[:, 0])
        assert abs(mom) <= 1e-3

    def test_outputs_within_tolerance_for_families(self):
        from landau.families import DistributionSpec, generate_distribution

        g = build_grid(3, 6.0, 16)
        specs = [
            DistributionSpec("maxwellian", {"temperature": 1.3}),
            DistributionSpec("bimaxwellian", {"separation": 1.0, "temperature": 1.0}),
            DistributionSpec("radial_shell", {"radius": 2.0, "width": 0.6}),
        ]
        for spec in specs:
            f = generate_distribution(spec, g)
            out, _ = normalize(f)
            mass = integrate(out)
            mom = integrate(out, weight=g.coords[:, 0])
            en = integrate(out, weight=g.sq_norm)
            assert abs(mass - 1.0) <= 1e-3
            assert abs(mom) <= 1e-3
            assert abs(en - 3.0) <= 3e-3

    def test_zero_mass_raises(self):
        g = build_grid(2, 1.0, 4)
        with pytest.raises(ValidationError):
            normalize(DiscreteDistribution(g, np.zeros(16)))

    def test_degenerate_covariance_raises(self):
        g = build_grid(2, 1.0, 8)
        vals = np.zeros(g.size)
        center = np.argmin(g.sq_norm)
        vals[center] = 1.0
        with pytest.raises(DegeneracyError):
            normalize(DiscreteDistribution(g, vals))

    def test_transform_compose(self):
        a = NormalizationTransform(2.0, 3.0, (1.0, 0.0))
        b = NormalizationTransform(0.5, 2.0, (0.0, 4.0))
        c = a.compose(b)
        assert c.amplitude == pytest.approx(1.0)
        assert c.dilation == pytest.approx(6.0)
        np.testing.assert_allclose(c.shift, (1.0, 12.0))

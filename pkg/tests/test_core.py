"""Parameter spaces, grid densities, nests, and grid construction."""

import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refprior.core import (CompactNest, GridDensity, ParamSpace, density_from_function,
                           make_grid, mesh, mixture, normalize, restrict_renormalize,
                           sample_grid_density)
from refprior.errors import ConfigError, NumericalError


class TestParamSpace:
    def test_box_basics(self):
        sp = ParamSpace.box([(0.0, 1.0), (-1.0, np.inf)])
        assert sp.dim == 2
        assert not sp.compact
        assert ParamSpace.box([(0.0, 1.0)]).compact

    def test_empty_rejected(self):
        with pytest.raises(ConfigError, match="at least one axis"):
            ParamSpace.box([])

    def test_inverted_bounds_rejected(self):
        with pytest.raises(ConfigError, match="invalid axis bounds"):
            ParamSpace.box([(2.0, 1.0)])


class TestGridDensity:
    def test_roundtrip_log_linear(self, unit_space):
        grid = (np.linspace(0.0, 1.0, 11),)
        vals = np.exp(np.sin(grid[0]))
        d = GridDensity.from_values(unit_space, grid, vals)
        npt.assert_allclose(d.log_values(), np.log(vals), rtol=1e-14)
        npt.assert_allclose(d.linear_values(), vals, rtol=1e-14)

    def test_zero_nodes_allowed_in_linear_form(self, unit_space):
        grid = (np.linspace(0.0, 1.0, 5),)
        vals = np.array([0.0, 1.0, 2.0, 1.0, 0.0])
        d = GridDensity.from_values(unit_space, grid, vals)
        assert d.log_values()[0] == -np.inf

    def test_identically_zero_rejected(self, unit_space):
        grid = (np.linspace(0.0, 1.0, 5),)
        with pytest.raises(NumericalError, match="identically zero"):
            GridDensity.from_values(unit_space, grid, np.zeros(5))

    def test_negative_rejected(self, unit_space):
        grid = (np.linspace(0.0, 1.0, 5),)
        with pytest.raises(NumericalError, match=">= 0"):
            GridDensity.from_values(unit_space, grid, np.array([1, 1, -1, 1, 1.0]))

    def test_nan_log_values_rejected(self, unit_space):
        grid = (np.linspace(0.0, 1.0, 5),)
        with pytest.raises(NumericalError):
            GridDensity.from_log_values(unit_space, grid, np.array([0, 0, np.nan, 0, 0.0]))

    def test_grid_outside_space_rejected(self):
        sp = ParamSpace.box([(0.0, 0.5)])
        grid = (np.linspace(0.0, 1.0, 5),)
        with pytest.raises(ConfigError, match="leaves the parameter space"):
            GridDensity.from_values(sp, grid, np.ones(5))

    def test_shape_mismatch_rejected(self, unit_space):
        grid = (np.linspace(0.0, 1.0, 5),)
        with pytest.raises(ConfigError, match="shape does not match"):
            GridDensity.from_values(unit_space, grid, np.ones(6))

    def test_non_increasing_grid_rejected(self, unit_space):
        with pytest.raises(ConfigError, match="strictly increasing"):
            GridDensity.from_values(unit_space, (np.array([0.0, 0.5, 0.5, 1.0]),),
                                    np.ones(4))

    def test_max_normalized(self, unit_space):
        grid = (np.linspace(0.0, 1.0, 9),)
        d = GridDensity.from_values(unit_space, grid, 3.0 + np.cos(grid[0]))
        u = d.max_normalized()
        assert u.max() == 1.0
        assert (u > 0).all()

    def test_values_at_interpolates(self, unit_space):
        grid = (np.linspace(0.0, 1.0, 101),)
        d = GridDensity.from_values(unit_space, grid, 2.0 * grid[0] + 1.0)
        got = d.values_at(np.array([0.25, 0.503, 0.9]))
        npt.assert_allclose(got, [1.5, 2.006, 2.8], rtol=1e-12)

    def test_class_distance_scale_invariant(self, unit_space):
        grid = (np.linspace(0.0, 1.0, 21),)
        vals = 1.0 + grid[0] ** 2
        d1 = GridDensity.from_values(unit_space, grid, vals)
        d2 = GridDensity.from_values(unit_space, grid, 17.3 * vals)
        assert d1.class_distance(d2) < 1e-12
        assert d1.class_equal(d2)

    def test_class_distance_detects_shape_change(self, unit_space):
        grid = (np.linspace(0.0, 1.0, 21),)
        d1 = GridDensity.from_values(unit_space, grid, np.ones(21))
        d2 = GridDensity.from_values(unit_space, grid, 1.0 + grid[0])
        assert d1.class_distance(d2) > 0.1
        assert not d1.class_equal(d2)

    def test_class_distance_grid_mismatch(self, unit_space):
        d1 = GridDensity.from_values(unit_space, (np.linspace(0, 1, 5),), np.ones(5))
        d2 = GridDensity.from_values(unit_space, (np.linspace(0, 1, 6),), np.ones(6))
        with pytest.raises(ConfigError, match="identical grids"):
            d1.class_distance(d2)


class TestNormalize:
    def test_uniform(self, unit_space):
        grid = (np.linspace(0.0, 1.0, 17),)
        d = normalize(GridDensity.from_values(unit_space, grid, np.full(17, 42.0)))
        assert d.properness == "proper"
        npt.assert_allclose(d.linear_values(), 1.0, rtol=1e-14)
        npt.assert_allclose(d.integral(), 1.0, rtol=1e-14)

    @given(scale=st.floats(min_value=1e-8, max_value=1e8),
           seed=st.integers(min_value=0, max_value=2**31))
    @settings(max_examples=40, deadline=None)
    def test_normalize_is_scale_invariant(self, scale, seed):
        # two densities in one ray normalize to the same proper density
        rng = np.random.default_rng(seed)
        grid = (np.linspace(0.0, 1.0, 33),)
        vals = np.exp(rng.standard_normal(33))
        sp = ParamSpace.box([(0.0, 1.0)])
        a = normalize(GridDensity.from_values(sp, grid, vals))
        b = normalize(GridDensity.from_values(sp, grid, scale * vals))
        npt.assert_allclose(a.linear_values(), b.linear_values(), rtol=1e-12)
        assert abs(a.integral() - 1.0) < 1e-12

    def test_normalize_2d(self):
        sp = ParamSpace.box([(0.0, 2.0), (0.0, 3.0)])
        grid = (np.linspace(0, 2, 21), np.linspace(0, 3, 31))
        x, y = mesh(grid)
        d = normalize(GridDensity.from_values(sp, grid, np.exp(-x - y)))
        npt.assert_allclose(d.integral(), 1.0, rtol=1e-12)


class TestCompactNest:
    def test_explicit_boxes(self):
        sp = ParamSpace.box([(0.0, 1.0)], open_lower=[True])
        nest = CompactNest(sp, (((0.1, 1.0),), ((0.01, 1.0),)))
        assert nest.depth == 2

    def test_boxes_must_grow(self):
        sp = ParamSpace.box([(0.0, 1.0)], open_lower=[True])
        with pytest.raises(ConfigError, match="increasing"):
            CompactNest(sp, (((0.01, 1.0),), ((0.1, 1.0),)))

    def test_box_must_stay_inside(self):
        sp = ParamSpace.box([(0.0, 1.0)])
        with pytest.raises(ConfigError, match="leaves the parameter space"):
            CompactNest(sp, (((0.1, 2.0),),))

    def test_infinite_box_rejected(self):
        sp = ParamSpace.box([(0.0, np.inf)], open_lower=[True])
        with pytest.raises(ConfigError, match="compact"):
            CompactNest(sp, (((0.1, np.inf),),))

    def test_default_schedule_exhausts_space(self):
        # open lower edge walks to 10^-(i+1); infinite upper to 10^(i+1)
        sp = ParamSpace.box([(0.0, np.inf)], open_lower=[True])
        nest = CompactNest.default(sp, 3)
        assert nest.depth == 3
        lo2, hi2 = nest.boxes[2][0]
        npt.assert_allclose([lo2, hi2], [1e-3, 1e3])

    def test_default_pins_closed_edges(self):
        sp = ParamSpace.box([(0.0, 1.0)])
        nest = CompactNest.default(sp, 2)
        assert nest.boxes[0][0] == (0.0, 1.0)
        assert nest.boxes[1][0] == (0.0, 1.0)


class TestMakeGrid:
    def test_compact_space_needs_no_nest(self):
        sp = ParamSpace.box([(0.1, 10.0)])
        grid = make_grid(sp, nodes_per_axis=51)
        assert grid[0].size == 51
        assert grid[0][0] == 0.1 and grid[0][-1] == 10.0

    def test_unbounded_space_requires_nest_index(self):
        sp = ParamSpace.box([(0.0, np.inf)], open_lower=[True])
        with pytest.raises(ConfigError, match="compact box required"):
            make_grid(sp, nodes_per_axis=11)
        grid = make_grid(sp, nest_index=1, nodes_per_axis=11)
        assert grid[0][0] > 0 and np.isfinite(grid[0][-1])

    def test_nodes_per_axis_broadcast_and_mismatch(self):
        sp = ParamSpace.box([(0.0, 1.0), (0.0, 1.0)])
        g = make_grid(sp, nodes_per_axis=[5, 7])
        assert (g[0].size, g[1].size) == (5, 7)
        with pytest.raises(ConfigError, match="length does not match"):
            make_grid(sp, nodes_per_axis=[5, 7, 9])


class TestDensityHelpers:
    def test_density_from_function(self):
        sp = ParamSpace.box([(0.0, 1.0), (0.0, 1.0)])
        grid = (np.linspace(0, 1, 5), np.linspace(0, 1, 7))
        d = density_from_function(sp, grid, lambda x, y: np.exp(x + y))
        x, y = mesh(grid)
        npt.assert_allclose(d.linear_values(), np.exp(x + y))

    def test_restrict_renormalize(self, unit_space):
        grid = (np.linspace(0.0, 1.0, 101),)
        d = GridDensity.from_values(unit_space, grid, np.ones(101))
        r = restrict_renormalize(d, [(0.25, 0.75)])
        assert r.properness == "proper"
        npt.assert_allclose(r.integral(), 1.0, rtol=1e-12)
        assert r.grid[0][0] == 0.25 and r.grid[0][-1] == 0.75

    def test_mixture_needs_proper_inputs(self, unit_space):
        grid = (np.linspace(0.0, 1.0, 11),)
        d = GridDensity.from_values(unit_space, grid, np.ones(11))
        with pytest.raises(ConfigError, match="proper densities"):
            mixture(d, d, 0.5)

    def test_mixture_interpolates_mass(self, unit_space):
        grid = (np.linspace(0.0, 1.0, 51),)
        a = normalize(GridDensity.from_values(unit_space, grid, np.ones(51)))
        b = normalize(GridDensity.from_values(unit_space, grid, 1.0 + grid[0]))
        m = mixture(a, b, 0.25)
        npt.assert_allclose(m.linear_values(),
                            0.25 * a.linear_values() + 0.75 * b.linear_values(),
                            rtol=1e-12)
        with pytest.raises(ConfigError, match="weight"):
            mixture(a, b, 1.5)

    def test_sample_grid_density_matches_cdf(self, unit_space):
        # triangular density on [0,1]: P(X <= 0.5) = 0.25
        grid = (np.linspace(0.0, 1.0, 201),)
        d = normalize(GridDensity.from_values(unit_space, grid, 2.0 * grid[0]))
        rng = np.random.default_rng(5)
        draws = sample_grid_density(d, 40000, rng)
        assert draws.shape == (40000, 1)
        frac = float(np.mean(draws[:, 0] <= 0.5))
        assert abs(frac - 0.25) < 0.01

    def test_sample_is_seed_deterministic(self, unit_space):
        grid = (np.linspace(0.0, 1.0, 31),)
        d = normalize(GridDensity.from_values(unit_space, grid, 1.0 + grid[0]))
        a = sample_grid_density(d, 100, np.random.default_rng(3))
        b = sample_grid_density(d, 100, np.random.default_rng(3))
        npt.assert_array_equal(a, b)

"""Trapezoid quadrature, log-domain integration, box restriction."""

import numpy as np
import numpy.testing as npt
import pytest

from refprior import quadrature
from refprior.errors import NumericalError


class TestTrapezoidWeights:
    def test_uniform_grid(self):
        w = quadrature.trapezoid_weights(np.linspace(0.0, 1.0, 5))
        npt.assert_allclose(w, [0.125, 0.25, 0.25, 0.25, 0.125])

    def test_nonuniform_matches_numpy(self):
        rng = np.random.default_rng(1)
        x = np.sort(rng.uniform(0, 10, 40))
        v = rng.standard_normal(40)
        npt.assert_allclose(np.sum(quadrature.trapezoid_weights(x) * v),
                            np.trapezoid(v, x), rtol=1e-13)

    def test_single_node_rejected(self):
        with pytest.raises(NumericalError, match="at least 2 nodes"):
            quadrature.trapezoid_weights(np.array([1.0]))


class TestIntegrate:
    def test_2d_separable(self):
        gx = np.linspace(0.0, 1.0, 301)
        gy = np.linspace(0.0, 2.0, 301)
        x, y = np.meshgrid(gx, gy, indexing="ij")
        got = quadrature.integrate(x * y, (gx, gy))
        npt.assert_allclose(got, 0.5 * 2.0, rtol=1e-6)

    def test_log_integrate_shift_safe(self):
        # offsets of +-1000 nats must not overflow or lose the answer
        g = np.linspace(0.0, 1.0, 101)
        base = np.log(1.0 + g)
        ref = quadrature.log_integrate(base, (g,))
        for off in (-1000.0, 1000.0):
            got = quadrature.log_integrate(base + off, (g,))
            npt.assert_allclose(got - off, ref, atol=1e-12)

    def test_log_integrate_matches_linear(self):
        g = np.linspace(0.0, 3.0, 501)
        vals = np.exp(-g)
        lin = quadrature.integrate(vals, (g,))
        npt.assert_allclose(np.exp(quadrature.log_integrate(np.log(vals), (g,))),
                            lin, rtol=1e-13)

    def test_log_integrate_handles_minus_inf_nodes(self):
        g = np.linspace(0.0, 1.0, 5)
        lv = np.array([-np.inf, 0.0, 0.0, 0.0, -np.inf])
        got = np.exp(quadrature.log_integrate(lv, (g,)))
        npt.assert_allclose(got, quadrature.integrate(np.exp(lv), (g,)), rtol=1e-13)


class TestRestrictValues:
    def test_on_node_edges(self):
        g = np.linspace(0.0, 1.0, 11)
        sub, vals = quadrature.restrict_values(np.ones(11), (g,), [(0.2, 0.8)])
        npt.assert_allclose(sub[0], np.linspace(0.2, 0.8, 7))
        assert vals.shape == (7,)

    def test_off_node_edge_interpolates(self):
        g = np.linspace(0.0, 1.0, 11)
        v = 3.0 * g  # linear, so interpolation is exact
        sub, vals = quadrature.restrict_values(v, (g,), [(0.25, 1.0)])
        assert sub[0][0] == 0.25
        npt.assert_allclose(vals[0], 0.75, rtol=1e-13)

    def test_restriction_preserves_linear_integral(self):
        g = np.linspace(0.0, 2.0, 41)
        v = 1.0 + g
        sub, vals = quadrature.restrict_values(v, (g,), [(0.33, 1.71)])
        got = quadrature.integrate(vals, sub)
        exact = (1.71 - 0.33) + 0.5 * (1.71**2 - 0.33**2)
        npt.assert_allclose(got, exact, rtol=1e-12)

    def test_edge_outside_grid_rejected(self):
        g = np.linspace(0.0, 1.0, 11)
        with pytest.raises(NumericalError, match="exceeds grid span"):
            quadrature.restrict_values(np.ones(11), (g,), [(-0.5, 1.0)])

    def test_empty_interior_rejected(self):
        g = np.linspace(0.0, 1.0, 11)
        with pytest.raises(NumericalError, match="empty interior"):
            quadrature.restrict_values(np.ones(11), (g,), [(0.42, 0.42)])


class TestRichardsonError:
    def test_tracks_true_trapezoid_error(self):
        g = np.linspace(0.0, np.pi, 129)
        v = np.sin(g)
        est = quadrature.richardson_error(v, (g,))
        true_err = abs(quadrature.integrate(v, (g,)) - 2.0)
        # h^2 halving puts the classic estimate within a small factor of truth
        assert true_err / 4 < est < true_err * 40

    def test_log_domain_variant(self):
        g = np.linspace(0.0, 1.0, 65)
        lv = -g * g
        est = quadrature.richardson_error(lv, (g,), log_domain=True)
        lin = quadrature.integrate(np.exp(lv), (g,))
        fine = np.linspace(0.0, 1.0, 4097)
        truth = quadrature.integrate(np.exp(-fine * fine), (fine,))
        assert est > abs(lin - truth) / 4

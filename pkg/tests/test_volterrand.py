from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from conftest import constant_flux
from halfspace_heat.errors import BoundViolation, DomainError
from halfspace_heat.greens import ConstantProfile, GaussianBump, SpacePoint, initial_flux_term
from halfspace_heat.specfun import SQRT_PI
from halfspace_heat.volterra1d import SourceLaw, TimeGrid, solve_abel_nonlinear, temperature_1d
from halfspace_heat.volterrand import (
    TangentialGrid,
    apriori_kernel_bound,
    axis_kernel,
    bound_integral,
    gaussian_layer_convolve,
    reconstruct_temperature_nd,
    solve_flux_nd,
)


@pytest.fixture(scope="module")
def reduction():
    F, h = SourceLaw.linear(1.0), ConstantProfile(1.0)
    grid, space = TimeGrid(1.0, 256), TangentialGrid(2, 4.0, 33)
    hist = solve_flux_nd(F, h, grid, space)
    one = solve_abel_nonlinear(F, constant_flux(1.0), grid)
    return F, h, hist, one


class TestTangentialGrid:
    def test_lattice(self):
        g = TangentialGrid(3, 2.0, 5)
        assert g.spacing == 1.0
        assert g.nodes.shape == (25, 2)
        np.testing.assert_array_equal(g.nodes[g.origin_index], [0.0, 0.0])
        np.testing.assert_allclose(np.diff(g.axis), g.spacing)

    @pytest.mark.parametrize("n, L, P", [(1, 1.0, 5), (4, 1.0, 5), (2, 0.0, 5), (2, 1.0, 4), (2, 1.0, 1)])
    def test_invalid(self, n, L, P):
        with pytest.raises(DomainError):
            TangentialGrid(n, L, P)


class TestLayerConvolution:
    def test_zero_field(self):
        g = TangentialGrid(2, 4.0, 41)
        np.testing.assert_array_equal(gaussian_layer_convolve(np.zeros(41), 0.1, g).values, 0.0)

    @pytest.mark.parametrize("n", [2, 3])
    def test_gaussian_mass(self, n):
        g = TangentialGrid(n, 4.0, 81)
        s = 0.01
        out = gaussian_layer_convolve(np.ones(81 ** (n - 1)), s, g)
        inner = np.abs(g.axis) <= g.half_width - 6 * math.sqrt(2 * s)
        vals = out.values if n == 2 else out.values[np.ix_(inner, inner)]
        vals = vals[inner] if n == 2 else vals
        np.testing.assert_allclose(vals, (2 * math.sqrt(math.pi * s)) ** (n - 1), atol=1e-8)
        assert not out.truncated

    def test_impulse(self):
        g = TangentialGrid(2, 4.0, 81)
        delta = np.zeros(81)
        delta[40] = 1 / g.spacing
        out = gaussian_layer_convolve(delta, 0.05, g).values
        np.testing.assert_allclose(out, np.exp(-g.axis**2 / 0.2), atol=1e-6)

    def test_against_quadrature(self):
        g = TangentialGrid(2, 5.0, 201)
        f = lambda y: np.exp(-y**2) * np.cos(y)
        out = gaussian_layer_convolve(f(g.axis), 0.3, g).values
        for k in (100, 120, 60):
            y = g.axis[k]
            ref, _ = integrate.quad(lambda e: math.exp(-(y - e) ** 2 / 1.2) * f(e), -5, 5, epsabs=1e-13)
            assert out[k] == pytest.approx(ref, abs=1e-8)

    def test_truncation_flag(self):
        g = TangentialGrid(2, 1.0, 11)
        assert gaussian_layer_convolve(np.ones(11), 1.0, g).truncated

    def test_edge_mode_normalizes_to_full_mass(self):
        g = TangentialGrid(2, 1.0, 21)
        K, _ = axis_kernel(g, 0.5, mode="edge")
        np.testing.assert_allclose(K.sum(axis=1), 2 * math.sqrt(math.pi * 0.5), rtol=1e-6)

    def test_size_checked(self):
        with pytest.raises(DomainError):
            gaussian_layer_convolve(np.ones(10), 0.1, TangentialGrid(2, 1.0, 11))

    @given(st.floats(0.001, 0.2), st.integers(0, 40))
    @settings(max_examples=30, deadline=None)
    def test_symmetric_operator(self, s, k):
        g = TangentialGrid(2, 4.0, 41)
        e = np.zeros(41)
        e[k] = 1.0
        col = gaussian_layer_convolve(e, s, g).values
        row, _ = axis_kernel(g, s)
        np.testing.assert_allclose(col, row[:, k], rtol=1e-15)
        np.testing.assert_allclose(row, row.T, rtol=1e-14, atol=1e-300)


class TestSolveFluxNd:
    def test_reduction_matches_1d(self, reduction):
        _, _, hist, one = reduction
        window = hist.grid.nodes >= hist.grid.T / 16
        assert np.max(np.abs(hist.V[window] - one.W[window, None])) <= 1e-3

    def test_translation_invariance(self, reduction):
        _, _, hist, _ = reduction
        spread = np.max(np.abs(hist.V[1:] - hist.V_origin[1:, None]))
        assert spread <= 1e-6 * np.max(np.abs(hist.V[1:]))

    @pytest.mark.parametrize("n", [2, 3])
    def test_no_source(self, n):
        hist = solve_flux_nd(SourceLaw.zero(), ConstantProfile(2.0), TimeGrid(1.0, 16), TangentialGrid(n, 2.0, 5))
        t = hist.grid.nodes[1:]
        np.testing.assert_allclose(hist.V[1:], (2.0 / np.sqrt(np.pi * t))[:, None] * np.ones((1, 5 ** (n - 1))),
                                   rtol=1e-12)

    def test_zero_data(self):
        hist = solve_flux_nd(SourceLaw.linear(1.0), ConstantProfile(0.0), TimeGrid(1.0, 16), TangentialGrid(2, 2.0, 5))
        np.testing.assert_array_equal(hist.V[1:], 0.0)
        np.testing.assert_array_equal(hist.A, 0.0)

    def test_symmetry(self):
        space = TangentialGrid(2, 4.0, 33)
        hist = solve_flux_nd(SourceLaw.linear(1.0), GaussianBump(1.0, 1.0, 1.0, (0.0,)), TimeGrid(1.0, 64), space)
        np.testing.assert_allclose(hist.V[1:], hist.V[1:, ::-1], rtol=0, atol=1e-12)

    def test_bump_initial_flux(self):
        h = GaussianBump(1.0, 1.0, 0.7, (0.5,))
        space = TangentialGrid(2, 3.0, 13)
        hist = solve_flux_nd(SourceLaw.zero(), h, TimeGrid(0.5, 8), space)
        for k in (0, 6, 9):
            y = tuple(space.nodes[k])
            assert hist.V[-1, k] == pytest.approx(initial_flux_term(y, 0.5, h, 2), abs=1e-12)

    def test_local_source_spreads(self):
        # a localized bump cools most under its peak
        space = TangentialGrid(2, 4.0, 33)
        h = GaussianBump(1.0, 1.0, 0.8, (0.0,))
        F = SourceLaw.linear(2.0)
        with_src = solve_flux_nd(F, h, TimeGrid(1.0, 64), space)
        without = solve_flux_nd(SourceLaw.zero(), h, TimeGrid(1.0, 64), space)
        drop = without.V[-1] - with_src.V[-1]
        assert np.argmax(drop) == space.origin_index
        assert np.all(drop > -1e-12)

    def test_cumulative_interpolation(self, reduction):
        _, _, hist, _ = reduction
        mid = hist.cumulative_at([0.5])
        np.testing.assert_allclose(mid[0], hist.A[128], rtol=1e-14)
        with pytest.raises(DomainError):
            hist.cumulative_at([2.0])


class TestReconstruction:
    def test_matches_1d(self, reduction):
        F, h, hist, one = reduction
        u_nd = reconstruct_temperature_nd(SpacePoint(1.0, (0.0,)), 0.5, hist, F, h)
        assert u_nd == pytest.approx(temperature_1d(1.0, 0.5, one, F, h), abs=2e-3)

    def test_wall(self, reduction):
        F, h, hist, _ = reduction
        assert reconstruct_temperature_nd(SpacePoint(0.0, (1.0,)), 0.5, hist, F, h) == 0.0

    def test_no_source(self):
        hist = solve_flux_nd(SourceLaw.zero(), ConstantProfile(1.0), TimeGrid(1.0, 16), TangentialGrid(2, 2.0, 5))
        u = reconstruct_temperature_nd(SpacePoint(0.8, (0.3,)), 0.7, hist, SourceLaw.zero(), ConstantProfile(1.0))
        assert u == pytest.approx(math.erf(0.8 / (2 * math.sqrt(0.7))), abs=1e-6)

    def test_small_time(self):
        h = GaussianBump(1.0, 1.5, 1.0, (0.0,))
        F = SourceLaw.linear(1.0)
        hist = solve_flux_nd(F, h, TimeGrid(0.01, 16), TangentialGrid(2, 3.0, 13))
        u = reconstruct_temperature_nd(SpacePoint(1.5, (0.0,)), 1e-4, hist, F, h)
        assert u == pytest.approx(1.0, abs=1e-2)

    def test_horizon(self, reduction):
        F, h, hist, _ = reduction
        with pytest.raises(DomainError):
            reconstruct_temperature_nd(SpacePoint(1.0, (0.0,)), 3.0, hist, F, h)


class TestAprioriBound:
    def test_zero_source(self, reduction):
        _, _, hist, _ = reduction
        assert apriori_kernel_bound(hist, SourceLaw.zero(), 10.0) == 0.0

    def test_linear(self, reduction):
        F, _, hist, _ = reduction
        B = float(np.max(np.abs(hist.A)))
        assert apriori_kernel_bound(hist, F, B) <= 1.01

    def test_custom_law(self):
        F = SourceLaw.custom(np.tanh, 1.0, name="tanh")
        space = TangentialGrid(2, 4.0, 17)
        hist = solve_flux_nd(F, GaussianBump(1.0, 1.0, 0.8, (0.5,)), TimeGrid(1.0, 32), space)
        assert apriori_kernel_bound(hist, F, float(np.max(np.abs(hist.A)))) <= 1.01

    def test_violation_names_node(self, reduction):
        F, _, hist, _ = reduction
        with pytest.raises(BoundViolation) as info:
            apriori_kernel_bound(hist, F, 1e-3)
        assert len(info.value.node) == 2

    @pytest.mark.parametrize("t", [0.25, 1.0, 3.0])
    def test_bound_integral(self, t):
        assert bound_integral(t, 1.7) == pytest.approx(2 / SQRT_PI * 1.7 * math.sqrt(t), abs=1e-10)

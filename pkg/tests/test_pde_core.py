"""Grid, Cole-Hopf data, reconstruction, and diagnostics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qburgers.pde_core import (
    VelocityField,
    build_grid,
    cole_hopf_initial,
    dissipation_rate,
    initial_velocity,
    l2_error,
    reconstruct_velocity,
    shock_position,
)


def field(values, u_left=None, u_right=None):
    values = np.asarray(values, dtype=float)
    left = values[0] if u_left is None else u_left
    right = values[-1] if u_right is None else u_right
    return VelocityField(values=values, u_left=left, u_right=right)


class TestBuildGrid:
    def test_rejects_two_points(self):
        with pytest.raises(ValueError):
            build_grid(2)

    def test_three_points(self):
        grid = build_grid(3)
        assert grid.dx == 0.5
        np.testing.assert_allclose(grid.points, [0.0, 0.5, 1.0])

    def test_sixteen_points_spacing(self):
        assert build_grid(16).dx == pytest.approx(1.0 / 15.0)

    @given(st.integers(min_value=3, max_value=128))
    def test_endpoints_and_monotone(self, n):
        grid = build_grid(n)
        assert grid.points[0] == 0.0
        assert abs(grid.points[-1] - 1.0) < 1e-12
        assert np.all(np.diff(grid.points) > 0)


class TestInitialVelocity:
    def test_three_point_sine(self):
        u = initial_velocity(build_grid(3), 0.0, 0.0)
        np.testing.assert_allclose(u.values, [0.0, 1.0, 0.0], atol=1e-15)

    def test_boundary_overwrite(self):
        u = initial_velocity(build_grid(3), 2.0, 0.0)
        np.testing.assert_allclose(u.values, [2.0, 1.0, 0.0], atol=1e-15)

    def test_five_point_interior(self):
        u = initial_velocity(build_grid(5), 3.0, 0.0)
        expected = [math.sin(math.pi / 4), 1.0, math.sin(3 * math.pi / 4)]
        np.testing.assert_allclose(u.values[1:-1], expected, atol=1e-15)


class TestColeHopfInitial:
    def test_zero_velocity_gives_uniform_phi(self):
        grid = build_grid(7)
        phi = cole_hopf_initial(grid, field(np.zeros(7)), nu=0.05).phi
        np.testing.assert_allclose(phi, np.full(7, 1.0 / math.sqrt(7)), atol=1e-12)

    def test_trapezoid_hand_case(self):
        # u0=[0,1,0] on dx=0.5: I=[0, 0.25, 0.5]; with nu=0.5 the un-normalized
        # phi is [1, e^-0.25, e^-0.5]; ratios survive normalization.
        grid = build_grid(3)
        phi = cole_hopf_initial(grid, field([0.0, 1.0, 0.0]), nu=0.5).phi
        ratios = phi / phi[0]
        np.testing.assert_allclose(
            ratios, [1.0, math.exp(-0.25), math.exp(-0.5)], rtol=1e-12
        )

    def test_rejects_nonpositive_nu(self):
        grid = build_grid(3)
        with pytest.raises(ValueError):
            cole_hopf_initial(grid, field([0.0, 1.0, 0.0]), nu=0.0)

    @given(
        st.lists(st.floats(min_value=-5, max_value=5), min_size=3, max_size=24),
        st.floats(min_value=0.01, max_value=0.2),
    )
    @settings(max_examples=60)
    def test_unit_norm_and_nonnegative(self, values, nu):
        grid = build_grid(len(values))
        phi = cole_hopf_initial(grid, field(values), nu=nu).phi
        assert abs(np.linalg.norm(phi) - 1.0) < 1e-12
        assert np.all(phi >= 0)


class TestReconstructVelocity:
    def test_constant_phi_zero_interior(self):
        grid = build_grid(5)
        u = reconstruct_velocity(np.full(5, 0.3), 0.1, grid, 1.0, 0.0)
        np.testing.assert_allclose(u.values[1:-1], 0.0, atol=1e-15)
        assert u.values[0] == 1.0 and u.values[-1] == 0.0

    def test_hand_case(self):
        # u_1 = -2*0.1*(0.25-1)/(2*0.5*0.5) = 0.3
        grid = build_grid(3)
        u = reconstruct_velocity(np.array([1.0, 0.5, 0.25]), 0.1, grid, 0.0, 0.0)
        assert u.values[1] == pytest.approx(0.3, abs=1e-14)

    def test_zero_phi_regularized(self):
        grid = build_grid(3)
        u = reconstruct_velocity(np.array([1.0, 0.0, 0.5]), 0.1, grid, 0.0, 0.0)
        assert np.all(np.isfinite(u.values))

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            reconstruct_velocity(np.ones(4), 0.1, build_grid(3), 0.0, 0.0)

    @given(
        st.lists(st.floats(min_value=0.05, max_value=1.0), min_size=3, max_size=16),
        st.floats(min_value=0.5, max_value=50.0),
    )
    @settings(max_examples=60)
    def test_scale_invariance(self, phi, c):
        grid = build_grid(len(phi))
        phi = np.asarray(phi)
        a = reconstruct_velocity(phi, 0.1, grid, 1.0, 0.0)
        b = reconstruct_velocity(c * phi, 0.1, grid, 1.0, 0.0)
        np.testing.assert_allclose(a.values, b.values, rtol=1e-10, atol=1e-12)


class TestL2Error:
    def test_identity(self):
        grid = build_grid(4)
        u = field([1.0, 2.0, 3.0, 4.0])
        assert l2_error(u, u, grid) == 0.0

    def test_hand_case(self):
        # difference [1,1,1] on dx=0.5 -> sqrt(0.5*3)
        grid = build_grid(3)
        value = l2_error(field([1.0, 1.0, 1.0]), field([0.0, 0.0, 0.0]), grid)
        assert value == pytest.approx(math.sqrt(1.5), abs=1e-14)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            l2_error(field([1.0, 2.0]), field([0.0, 0.0, 0.0]), build_grid(3))

    @given(
        st.lists(st.floats(min_value=-3, max_value=3), min_size=3, max_size=12),
        st.lists(st.floats(min_value=-3, max_value=3), min_size=3, max_size=12),
    )
    @settings(max_examples=60)
    def test_symmetry_and_nonnegativity(self, a, b):
        n = min(len(a), len(b))
        grid = build_grid(max(n, 3))
        ua = field(a[: grid.n_points] + [0.0] * (grid.n_points - n))
        ub = field(b[: grid.n_points] + [0.0] * (grid.n_points - n))
        forward = l2_error(ua, ub, grid)
        assert forward >= 0.0
        assert forward == l2_error(ub, ua, grid)


class TestShockPosition:
    def test_constant_field_first_point(self):
        grid = build_grid(5)
        assert shock_position(field(np.ones(5)), grid) == 0.0

    def test_tie_breaks_to_smallest_index(self):
        grid = build_grid(4)
        assert shock_position(field([0.0, 1.0, 0.0, 0.0]), grid) == 0.0

    def test_interior_maximum(self):
        grid = build_grid(4)
        assert shock_position(field([0.0, 0.0, 1.0, 0.0]), grid) == pytest.approx(1 / 3)

    @given(st.lists(st.floats(min_value=-5, max_value=5), min_size=3, max_size=20))
    @settings(max_examples=60)
    def test_constant_shift_invariance(self, values):
        grid = build_grid(len(values))
        base = shock_position(field(values), grid)
        shifted = shock_position(field(np.asarray(values) + 2.5), grid)
        assert base == shifted
        assert base <= grid.points[-2] + 1e-15


class TestDissipationRate:
    def test_constant_field_zero(self):
        grid = build_grid(6)
        assert dissipation_rate(field(np.full(6, 2.0)), grid, 0.1) == 0.0

    def test_hand_case(self):
        grid = build_grid(4)
        value = dissipation_rate(field([0.0, 1.0, 0.0, 0.0]), grid, 0.1)
        assert value == pytest.approx(0.6, abs=1e-13)

    @given(
        st.lists(st.floats(min_value=-2, max_value=2), min_size=3, max_size=16),
        st.floats(min_value=0.1, max_value=3.0),
    )
    @settings(max_examples=60)
    def test_shift_invariant_and_quadratic_scaling(self, values, c):
        grid = build_grid(len(values))
        base = dissipation_rate(field(values), grid, 0.1)
        assert base >= 0.0
        shifted = dissipation_rate(field(np.asarray(values) + 1.0), grid, 0.1)
        assert shifted == pytest.approx(base, rel=1e-9, abs=1e-12)
        scaled = dissipation_rate(field(c * np.asarray(values)), grid, 0.1)
        assert scaled == pytest.approx(c * c * base, rel=1e-9, abs=1e-12)

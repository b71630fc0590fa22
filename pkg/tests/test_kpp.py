"""Tests for the reaction-diffusion front solver.

Oracles:
- fixed points u=0 and u=lambda* are preserved exactly by both split stages;
- for amplitude eps -> 0 the equation linearizes to u_t = u_xx/2 + u, whose
  solution for a Gaussian bump is the heat-smoothed bump times e^t, in closed
  form.  At eps = 1e-6 the nonlinear correction is O(eps) relative, far below
  the scheme error, so the closed form is an oracle for the full solver.
- the centering m(t) is an explicit formula.
"""

import math

import numpy as np
import pytest

from sbmlab.csbp import extinction_prob
from sbmlab.kpp import (
    FrontTouchedBoundaryError,
    Grid1D,
    InitialCondition,
    KppError,
    front_m,
    median_m_tilde,
    solve_U,
    solve_V,
)
from sbmlab.mechanism import BranchingMechanism, LevyMeasure

QUADRATIC = BranchingMechanism(alpha=1.0, beta=1.0, levy=LevyMeasure.none())


def gaussian_phi(amp: float):
    return lambda s: amp * np.exp(-np.asarray(s) ** 2 / 2.0)


class TestGrid1D:
    def test_auto_satisfies_domain_invariant(self):
        g = Grid1D.auto(t_end=7.0)
        assert g.x_max - g.x_min >= 2.0 * (math.sqrt(2.0) * 7.0 + 20.0) - 1e-9
        assert g.x[0] == pytest.approx(g.x_min)
        assert g.x[-1] == pytest.approx(g.x_max)
        assert np.allclose(np.diff(g.x), g.dx)

    def test_steps_divide_horizon(self):
        g = Grid1D(x_min=-10.0, x_max=10.0, dx=0.1, dt=0.01, t_end=1.0)
        assert g.nt == 100
        assert g.nx == 201

    def test_invalid_grids_raise(self):
        with pytest.raises(KppError):
            Grid1D(x_min=1.0, x_max=-1.0, dx=0.1, dt=0.01, t_end=1.0)
        with pytest.raises(KppError):
            Grid1D(x_min=-1.0, x_max=1.0, dx=-0.1, dt=0.01, t_end=1.0)
        with pytest.raises(KppError):
            Grid1D(x_min=-1.0, x_max=1.0, dx=0.1, dt=0.3, t_end=1.0)


class TestInitialCondition:
    def test_heaviside_field_orientation(self):
        init = InitialCondition.heaviside()
        x = np.array([-2.0, -0.05, 0.0, 0.05, 2.0])
        assert np.array_equal(init.field_values(x), [1.0, 1.0, 0.0, 0.0, 0.0])

    def test_bounded_field_is_reflected(self):
        # phi supported on (0, 1) must appear at (-1, 0) in field coordinates
        init = InitialCondition.bounded(
            lambda s: np.where((np.asarray(s) > 0) & (np.asarray(s) < 1), 0.5, 0.0),
            sup_norm=0.5,
        )
        x = np.array([-0.5, 0.5])
        assert np.array_equal(init.field_values(x), [0.5, 0.0])

    def test_integrability_flag(self):
        assert InitialCondition.bounded(gaussian_phi(1.0), sup_norm=1.0).integrable_tail
        left_indicator = InitialCondition.bounded(
            lambda s: np.where(np.asarray(s) < 0, 1.0, 0.0), sup_norm=1.0
        )
        assert not left_indicator.integrable_tail

    def test_barrier_kind_rejected_by_solve_U(self):
        grid = Grid1D(x_min=-5.0, x_max=5.0, dx=0.1, dt=0.01, t_end=0.1)
        with pytest.raises(KppError):
            solve_U(QUADRATIC, InitialCondition.barrier(), grid)


class TestSolveU:
    def test_zero_is_a_fixed_point(self):
        grid = Grid1D(x_min=-8.0, x_max=8.0, dx=0.1, dt=0.01, t_end=1.0)
        field = solve_U(
            QUADRATIC, InitialCondition.bounded(lambda s: 0.0 * np.asarray(s), sup_norm=0.0), grid
        )
        assert np.max(np.abs(field.at(1.0))) < 1e-12

    def test_lambda_star_is_a_fixed_point(self):
        grid = Grid1D(x_min=-8.0, x_max=8.0, dx=0.1, dt=0.01, t_end=1.0)
        field = solve_U(
            QUADRATIC,
            InitialCondition.bounded(lambda s: np.ones_like(np.asarray(s, dtype=float)), sup_norm=1.0),
            grid,
        )
        assert np.max(np.abs(field.at(1.0) - 1.0)) < 1e-12

    def test_linearized_gaussian_oracle(self):
        eps = 1e-6
        grid = Grid1D.auto(t_end=1.0, dx=0.05, dt=0.01)
        field = solve_U(QUADRATIC, InitialCondition.bounded(gaussian_phi(eps), sup_norm=eps), grid)
        u = field.at(1.0)
        sig2 = 1.0 + grid.t_end
        exact = eps * math.e / math.sqrt(sig2) * np.exp(-grid.x**2 / (2.0 * sig2))
        scale = eps * math.e / math.sqrt(sig2)
        assert np.max(np.abs(u - exact)) / scale < 1e-3

    def test_second_order_convergence_on_linear_oracle(self):
        eps = 1e-6

        def err(dx, dt):
            grid = Grid1D(x_min=-12.0, x_max=12.0, dx=dx, dt=dt, t_end=0.5)
            field = solve_U(
                QUADRATIC, InitialCondition.bounded(gaussian_phi(eps), sup_norm=eps), grid
            )
            sig2 = 1.0 + 0.5
            exact = eps * math.exp(0.5) / math.sqrt(sig2) * np.exp(-grid.x**2 / (2.0 * sig2))
            return np.max(np.abs(field.at(0.5) - exact))

        coarse = err(0.1, 0.02)
        fine = err(0.05, 0.01)
        assert coarse / fine > 2.5

    def test_bounded_by_initial_sup_and_equilibrium(self):
        grid = Grid1D.auto(t_end=2.0, dx=0.1, dt=0.02)
        field = solve_U(
            QUADRATIC, InitialCondition.bounded(gaussian_phi(1.7), sup_norm=1.7), grid
        )
        for t in field.times:
            u = field.at(t)
            assert np.all(u >= 0.0)
            assert np.max(u) <= 1.7 + 1e-9

    def test_heaviside_supremum_stays_at_equilibrium(self):
        grid = Grid1D.auto(t_end=2.0, dx=0.1, dt=0.02)
        field = solve_U(QUADRATIC, InitialCondition.heaviside(), grid)
        assert np.max(field.at(2.0)) <= 1.0 + 1e-9
        assert np.min(field.at(2.0)) >= -1e-15

    def test_front_touching_boundary_raises(self):
        grid = Grid1D(x_min=-6.0, x_max=6.0, dx=0.1, dt=0.01, t_end=6.0)
        with pytest.raises(FrontTouchedBoundaryError):
            solve_U(QUADRATIC, InitialCondition.heaviside(), grid)

    def test_snapshot_times_are_recorded(self):
        grid = Grid1D(x_min=-8.0, x_max=8.0, dx=0.1, dt=0.01, t_end=1.0)
        field = solve_U(
            QUADRATIC,
            InitialCondition.heaviside(),
            grid,
            snapshot_times=[0.25, 0.5],
        )
        assert field.times[0] == 0.0
        assert field.times[-1] == pytest.approx(1.0)
        assert any(abs(t - 0.25) < 1e-9 for t in field.times)
        assert field.at(0.5).shape == grid.x.shape

    def test_interp_matches_snapshots_on_nodes(self):
        grid = Grid1D(x_min=-8.0, x_max=8.0, dx=0.1, dt=0.01, t_end=1.0)
        field = solve_U(QUADRATIC, InitialCondition.heaviside(), grid, snapshot_times=[0.5])
        u = field.at(0.5)
        j = 40
        assert field.interp(0.5, grid.x[j]) == pytest.approx(u[j], rel=1e-12)
        mid = field.interp(0.5, grid.x[j] + grid.dx / 2.0)
        assert min(u[j], u[j + 1]) - 1e-12 <= mid <= max(u[j], u[j + 1]) + 1e-12


class TestComparisonProperties:
    def test_constant_multiple_comparison(self):
        # u1(0) = c * u2(0) with c > 1 must propagate to u1 <= c u2 + O(grid)
        grid = Grid1D.auto(t_end=1.0, dx=0.05, dt=0.01)
        phi_small = InitialCondition.bounded(gaussian_phi(0.3), sup_norm=0.3)
        phi_large = InitialCondition.bounded(gaussian_phi(0.5), sup_norm=0.5)
        c = 0.5 / 0.3
        u2 = solve_U(QUADRATIC, phi_small, grid).at(1.0)
        u1 = solve_U(QUADRATIC, phi_large, grid).at(1.0)
        violation = np.max(u1 - c * u2)
        assert violation <= 5e-4

    def test_subadditivity(self):
        grid = Grid1D.auto(t_end=1.0, dx=0.05, dt=0.01)
        phi_a = InitialCondition.bounded(gaussian_phi(0.4), sup_norm=0.4)
        phi_b = InitialCondition.bounded(
            lambda s: 0.6 * np.exp(-((np.asarray(s) - 1.0) ** 2)), sup_norm=0.6
        )
        phi_sum = InitialCondition.bounded(
            lambda s: 0.4 * np.exp(-np.asarray(s) ** 2 / 2.0)
            + 0.6 * np.exp(-((np.asarray(s) - 1.0) ** 2)),
            sup_norm=1.0,
        )
        ua = solve_U(QUADRATIC, phi_a, grid).at(1.0)
        ub = solve_U(QUADRATIC, phi_b, grid).at(1.0)
        us = solve_U(QUADRATIC, phi_sum, grid).at(1.0)
        assert np.max(us - ua - ub) <= 5e-4

    def test_weighted_tail_sum_bounded_by_heat_semigroup(self):
        # u(t,x) <= e^t E_x u(0, B_t) integrated against y exp(sqrt2 y) on y>0
        grid = Grid1D.auto(t_end=1.0, dx=0.05, dt=0.01)
        amp, t = 0.5, 1.0
        field = solve_U(QUADRATIC, InitialCondition.bounded(gaussian_phi(amp), sup_norm=amp), grid)
        x = grid.x
        mask = x > 0
        w = x[mask] * np.exp(math.sqrt(2.0) * x[mask])
        lhs = float(np.trapezoid(w * field.at(t)[mask], x[mask]))
        sig2 = 1.0 + t
        heat = amp / math.sqrt(sig2) * np.exp(-x[mask] ** 2 / (2.0 * sig2))
        rhs = math.exp(t) * float(np.trapezoid(w * heat, x[mask]))
        assert lhs <= rhs * (1.0 + 1e-6)


class TestSolveV:
    def test_ladder_output_and_dominance(self):
        grid = Grid1D.auto(t_end=1.0, dx=0.05, dt=0.01)
        phi = InitialCondition.bounded(gaussian_phi(0.8), sup_norm=0.8)
        v_field = solve_V(QUADRATIC, phi, grid)
        u_field = solve_U(QUADRATIC, phi, grid)
        assert v_field.provenance == "V_phi"
        assert v_field.theta == pytest.approx(1e4)
        assert v_field.theta_ladder == (1e2, 1e3, 1e4)
        assert np.all(v_field.at(1.0) >= u_field.at(1.0) - 1e-8)

    def test_pure_barrier_has_V_provenance(self):
        grid = Grid1D.auto(t_end=1.0, dx=0.1, dt=0.02)
        v_field = solve_V(QUADRATIC, None, grid)
        assert v_field.provenance == "V"

    def test_bounded_by_extinction_exponent(self):
        grid = Grid1D.auto(t_end=1.0, dx=0.05, dt=0.01)
        v_field = solve_V(QUADRATIC, None, grid)
        v_bar = extinction_prob(QUADRATIC, t=1.0).v_bar
        assert np.max(v_field.at(1.0)) <= v_bar + 1e-3

    def test_theta_increment_ahead_of_front(self):
        # measured on this grid: 1.65e-2, shrinking slowly under refinement;
        # the rungs collapse to the mass flow early on, and v(0.01, 1e3) and
        # v(0.01, 1e4) still differ by 9%, so percent-level increments out
        # here are real and not a bug
        grid = Grid1D.auto(t_end=1.0, dx=0.05, dt=0.01)
        v_field = solve_V(QUADRATIC, None, grid)
        j = int(np.argmin(np.abs(grid.x - 3.0)))
        increments = v_field.increment_at(1.0)
        assert 1e-3 < increments[j] < 2e-2

    def test_extrapolation_dominates_top_rung(self):
        grid = Grid1D.auto(t_end=1.0, dx=0.1, dt=0.02)
        v_field = solve_V(QUADRATIC, None, grid)
        assert np.all(v_field.extrapolated_at(1.0) >= v_field.at(1.0) - 1e-12)


@pytest.fixture(scope="module")
def long_heaviside_field():
    grid = Grid1D.auto(t_end=50.0, dx=0.05, dt=0.02)
    return solve_U(QUADRATIC, InitialCondition.heaviside(), grid, snapshot_times=[20.0])


class TestMedian:
    def test_heaviside_median_starts_at_zero(self):
        grid = Grid1D(x_min=-8.0, x_max=8.0, dx=0.1, dt=0.01, t_end=0.5)
        field = solve_U(QUADRATIC, InitialCondition.heaviside(), grid)
        assert abs(median_m_tilde(field, 0.0)) <= grid.dx

    def test_constant_equilibrium_gives_plus_inf(self):
        grid = Grid1D(x_min=-8.0, x_max=8.0, dx=0.1, dt=0.01, t_end=0.5)
        field = solve_U(
            QUADRATIC,
            InitialCondition.bounded(lambda s: np.ones_like(np.asarray(s, dtype=float)), sup_norm=1.0),
            grid,
        )
        assert median_m_tilde(field, 0.5) == math.inf

    def test_zero_field_gives_minus_inf(self):
        grid = Grid1D(x_min=-8.0, x_max=8.0, dx=0.1, dt=0.01, t_end=0.5)
        field = solve_U(
            QUADRATIC, InitialCondition.bounded(lambda s: 0.0 * np.asarray(s), sup_norm=0.0), grid
        )
        assert median_m_tilde(field, 0.5) == -math.inf

    def test_median_tracks_centering_at_t20(self, long_heaviside_field):
        gap = median_m_tilde(long_heaviside_field, 20.0) - front_m(1.0, 20.0)
        assert -5.0 <= gap <= 5.0

    def test_median_minus_centering_band_is_narrow(self, long_heaviside_field):
        ts = np.linspace(5.0, 50.0, 181)
        gaps = np.array(
            [median_m_tilde(long_heaviside_field, t) - front_m(1.0, t) for t in ts]
        )
        assert np.all(np.isfinite(gaps))
        assert gaps.max() - gaps.min() <= 2.0


class TestFrontM:
    def test_values(self):
        assert front_m(1.0, 1.0) == pytest.approx(math.sqrt(2.0))
        assert front_m(2.0, 1.0) == pytest.approx(2.0)
        assert front_m(1.0, math.e**2) == pytest.approx(
            math.sqrt(2.0) * math.e**2 - 3.0 / math.sqrt(2.0)
        )

    def test_rejects_nonpositive_time(self):
        with pytest.raises(KppError):
            front_m(1.0, 0.0)

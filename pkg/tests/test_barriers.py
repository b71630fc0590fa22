"""Blow-up BVP solver, confinement-bound constants, and tail integrability."""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar

from sbmlab import barriers as bar
from sbmlab.kpp import Field, Grid1D, solve_V
from sbmlab.particles import PointMeasure, SimConfig, simulate
from sbmlab.mechanism import BranchingMechanism, LevyMeasure

QUADRATIC_CASE = (1.0, 1.0, 1.0, 5.0)
HEAVY_CASE = (1.0, 2.0, 0.5, 3.0)


@pytest.fixture(scope="module")
def sol_quadratic():
    return bar.solve_hA(*QUADRATIC_CASE)


@pytest.fixture(scope="module")
def sol_heavy():
    return bar.solve_hA(*HEAVY_CASE)


def quadrature_center_value(a, b, th, A):
    """Blow-up center value via the first integral of the autonomous ODE.

    With G(h) = -a h^2 + 2b/(2+th) h^{2+th} the even solution satisfies
    (1/2)(h')^2 = G(h) - G(h0), so the half width is the h-integral of
    1/sqrt(2(G - G0)) from h0 to infinity; h0 is the root matching A.
    """

    def halfwidth(h0):
        c = 2.0 * b / (2.0 + th)

        def delta_G(d):
            # G(h0 + d) - G(h0) computed from the increment d itself, so
            # that increments far below ulp(h0) still register.
            power_diff = h0 ** (2.0 + th) * math.expm1(
                (2.0 + th) * math.log1p(d / h0)
            )
            return -a * d * (2.0 * h0 + d) + c * power_diff

        def near(u):
            return 2.0 * u / math.sqrt(2.0 * delta_G(u * u)) if u > 0 else 0.0

        def far(h):
            return 1.0 / math.sqrt(2.0 * delta_G(h - h0))

        v1, _ = quad(near, 0.0, 2.0, limit=200)
        v2, _ = quad(far, h0 + 4.0, np.inf, limit=200)
        return v1 + v2

    eq = (a / b) ** (1.0 / th)
    return brentq(lambda h: halfwidth(h) - A, eq * (1 + 1e-10), eq * 400, xtol=1e-12)


class TestConstants:
    def test_equilibrium(self):
        assert bar.equilibrium(1.0, 1.0, 1.0) == pytest.approx(1.0)
        assert bar.equilibrium(1.0, 2.0, 0.5) == pytest.approx(0.25)

    def test_c2_closed_forms(self):
        assert bar.c2_constant(1.0, 1.0) == pytest.approx(2.0, abs=1e-12)
        assert bar.c2_constant(2.0, 0.5) == pytest.approx(4.0, abs=1e-12)

    def test_c4_quadratic_is_one(self):
        assert bar.c4_convexity(1.0) == pytest.approx(1.0, abs=1e-6)

    def test_c4_theta_half_matches_direct_minimization(self):
        th = 0.5

        def quotient(lam):
            return ((1.0 + lam) ** (1.0 + th) - (1.0 + lam)) / lam ** (1.0 + th)

        res = minimize_scalar(quotient, bounds=(0.5, 20.0), method="bounded")
        assert bar.c4_convexity(th) == pytest.approx(res.fun, abs=1e-6)

    def test_c1_and_c3_quadratic(self):
        assert bar.c1_constant(1.0, 1.0) == pytest.approx(12.0, abs=1e-5)
        assert bar.c3_constant(1.0, 1.0) == pytest.approx(24.0, abs=1e-4)


class TestShapeWitness:
    def test_measured_bounds(self):
        w = bar.shape_witness()
        assert w.K == pytest.approx(16.0, abs=1e-9)
        assert w.delta == pytest.approx(1.0 / 32.0, abs=1e-12)
        assert w.inf_ratio == pytest.approx(1.0, abs=1e-9)
        assert w.c4 == pytest.approx(1.0 / 32.0, abs=1e-10)

    def test_endpoint_checks_recorded(self):
        checks = bar.shape_witness().endpoint_checks
        assert checks["f(0)"] == pytest.approx(1.0)
        assert checks["f''(1)"] > 0.0
        assert checks["min f on (0,1)"] > 0.0


class TestSolveInputs:
    def test_rejects_bad_parameters(self):
        with pytest.raises(bar.BarriersError):
            bar.solve_hA(1.0, 1.0, 1.5, 5.0)
        with pytest.raises(bar.BarriersError):
            bar.solve_hA(1.0, 1.0, 1.0, -2.0)
        with pytest.raises(bar.BarriersError):
            bar.solve_hA(1.0, 2.0, 0.5, 3.0, m_ladder=(0.2, 10.0))
        with pytest.raises(bar.BarriersError):
            bar.solve_hA(1.0, 1.0, 1.0, 5.0, m_ladder=(1e3, 1e2))
        with pytest.raises(bar.BarriersError):
            bar.solve_hA(1.0, 1.0, 1.0, 5.0, n_cells=33)

    def test_custom_n_cells_respected(self):
        sol = bar.solve_hA(1.0, 1.0, 1.0, 5.0, n_cells=24)
        assert len(sol.x) == 25


class TestBlowupProfile:
    def test_boundary_values_match_rungs(self, sol_quadratic):
        for m, table in zip(sol_quadratic.m_ladder, sol_quadratic.h_tables):
            assert table[0] == pytest.approx(m)
            assert table[-1] == pytest.approx(m)

    def test_even_profile(self, sol_quadratic, sol_heavy):
        for sol in (sol_quadratic, sol_heavy):
            gap = np.max(np.abs(sol.h - sol.h[::-1]))
            assert gap <= 1e-9 * np.max(sol.h)

    def test_derivative_vanishes_at_center(self, sol_quadratic, sol_heavy):
        for sol in (sol_quadratic, sol_heavy):
            mid = len(sol.x) // 2
            assert abs(sol.derivative()[mid]) <= 1e-9 * sol.h[mid]

    def test_ladder_monotone_pointwise(self, sol_quadratic, sol_heavy):
        for sol in (sol_quadratic, sol_heavy):
            for lo, hi in zip(sol.h_tables, sol.h_tables[1:]):
                assert np.min(hi - lo) >= -1e-7 * (1.0 + np.max(hi))

    def _sandwich_ok(self, sol):
        lower, upper = bar.sandwich_bounds(sol)
        h_i = sol.h[1:-1]
        rel = np.maximum(lower - h_i, h_i - upper) / np.maximum(h_i, 1.0)
        bad = set(np.nonzero(rel > 1e-6)[0].tolist())
        n = h_i.size
        assert bad <= {0, 1, n - 2, n - 1}, f"sandwich broken at cells {sorted(bad)}"

    def test_sandwich_quadratic_case(self, sol_quadratic):
        self._sandwich_ok(sol_quadratic)

    def test_sandwich_heavy_case(self, sol_heavy):
        self._sandwich_ok(sol_heavy)

    def test_log_derivative_within_proof_bound(self, sol_quadratic, sol_heavy):
        for sol in (sol_quadratic, sol_heavy):
            assert sol.log_derivative_max() <= bar.c3_constant(sol.a, sol.theta)

    def test_center_matches_quadrature_oracle(self, sol_quadratic):
        h0_exact = quadrature_center_value(*QUADRATIC_CASE)
        mid = len(sol_quadratic.x) // 2
        assert sol_quadratic.h[mid] == pytest.approx(h0_exact, abs=2e-3)

    def test_center_error_bar_brackets_limit_deficit(self, sol_heavy):
        """The slow heavy-tail ladder undershoots the true limit at the
        center by roughly the last rung increment, which is the advertised
        error-bar semantics."""
        h0_exact = quadrature_center_value(*HEAVY_CASE)
        mid = len(sol_heavy.x) // 2
        deficit = h0_exact - sol_heavy.h[mid]
        last_inc = sol_heavy.h_tables[-1][mid] - sol_heavy.h_tables[-2][mid]
        assert 0.0 < deficit <= 1.5 * last_inc

    def test_extended_ladder_approaches_quadrature_value(self):
        sol = bar.solve_hA(
            *HEAVY_CASE, m_ladder=(1e2, 1e3, 1e4, 1e5, 1e6)
        )
        h0_exact = quadrature_center_value(*HEAVY_CASE)
        mid = len(sol.x) // 2
        assert sol.h[mid] == pytest.approx(h0_exact, abs=0.02)

    def test_wider_strip_is_smaller_inside(self):
        narrow = bar.solve_hA(1.0, 1.0, 1.0, 4.0)
        wide = bar.solve_hA(1.0, 1.0, 1.0, 5.0)
        xq = np.linspace(-3.2, 3.2, 41)
        assert np.all(wide.interpolate(xq) <= narrow.interpolate(xq) * (1 + 1e-6))

    def test_interpolation_hits_nodes_and_guards_domain(self, sol_quadratic):
        k = len(sol_quadratic.x) // 3
        assert sol_quadratic.interpolate(
            sol_quadratic.x[k]
        ) == pytest.approx(sol_quadratic.h[k], rel=1e-9)
        with pytest.raises(bar.BarriersError):
            sol_quadratic.interpolate(5.0)

    def test_bookkeeping_fields(self, sol_quadratic):
        assert len(sol_quadratic.newton_iterations) == len(sol_quadratic.m_ladder)
        assert sol_quadratic.error > 0.0
        assert np.isfinite(sol_quadratic.error)


class TestStripBound:
    def test_c5_matches_closed_form_for_quadratic(self):
        sc = bar.strip_constants(1.0, 1.0, 1.0)
        # With c3 = 24 the binding condition reduces to
        # c5^2 - (4 c3 + 2) c5 - 8 a c1 = 0; take the positive root.
        c3 = bar.c3_constant(1.0, 1.0)
        rhs = 2.0 * bar.c1_constant(1.0, 1.0)
        expected = 0.5 * ((4 * c3 + 2) + math.sqrt((4 * c3 + 2) ** 2 + 16 * rhs))
        assert sc.c5 == pytest.approx(expected, abs=1e-3)
        assert sc.c4 == pytest.approx(1.0 / 32.0, abs=1e-10)

    def test_domain_violations_raise(self):
        with pytest.raises(bar.BarriersError):
            bar.strip_bound(1.0, 1.0, 1.0, 5.0, 5.0, 1.0)
        with pytest.raises(bar.BarriersError):
            bar.strip_bound(1.0, 1.0, 1.0, 5.0, 0.0, 0.0)

    def test_limits_in_t_and_x(self):
        tiny_t = bar.strip_bound(1.0, 1.0, 1.0, 5.0, 0.0, 1e-4)
        assert tiny_t == 0.0
        center = bar.strip_bound(1.0, 1.0, 1.0, 5.0, 0.0, 1.0)
        near_wall = bar.strip_bound(1.0, 1.0, 1.0, 5.0, 4.9, 1.0)
        assert near_wall > center > 0.0

    def test_bound_dominates_confinement_mc(self):
        """One-sided: the analytic value must exceed the measured negative
        log confinement frequency.  The constants are sufficient rather
        than sharp, so the margin is huge by construction."""
        mech = BranchingMechanism(alpha=1.0, beta=1.0, levy=LevyMeasure.none())
        config = SimConfig(
            mech=mech,
            epsilon=0.1,
            dt=0.01,
            t_end=1.0,
            seed=4242,
            n_replicas=150,
            initial=PointMeasure.single(0.0),
            snapshot_times=tuple(np.round(np.arange(0.1, 1.01, 0.1), 10)),
        )
        result = simulate(config)
        confined = 0
        for stats, clouds in zip(result.stats, result.clouds):
            inside = all(
                cloud.positions.size == 0 or np.max(np.abs(cloud.positions)) <= 5.0
                for cloud in clouds
            )
            confined += bool(inside)
        freq = confined / config.n_replicas
        assert freq > 0.5
        neg_log = -math.log(freq)
        assert bar.strip_bound(1.0, 1.0, 1.0, 5.0, 0.0, 1.0) >= neg_log


def _barrier_field(half: float) -> Field:
    mech = BranchingMechanism(alpha=1.0, beta=1.0, levy=LevyMeasure.none())
    grid = Grid1D(x_min=-half, x_max=half, dx=0.05, dt=0.001, t_end=1.0)
    return solve_V(mech, None, grid)


@pytest.fixture(scope="module")
def v_field():
    return _barrier_field(12.0)


class TestIntegrability:
    def test_gaussian_tail_and_finite_integral(self, v_field):
        report = bar.v_integrability_check(v_field, theta=0.5)
        assert report.slope < 0.0
        assert report.n_fit_points >= 6
        assert 0.0 < report.fit_window[0] < report.fit_window[1] <= 12.0
        assert report.integral > 0.0
        assert report.tail_part < 0.05 * report.grid_part

    def test_integral_stable_under_domain_doubling(self, v_field):
        base = bar.v_integrability_check(v_field, theta=0.5)
        doubled = bar.v_integrability_check(_barrier_field(24.0), theta=0.5)
        rel = abs(doubled.integral - base.integral) / base.integral
        assert rel < 0.02

    def test_zero_theta_weight_is_smaller(self, v_field):
        weighted = bar.v_integrability_check(v_field, theta=0.5)
        plain = bar.v_integrability_check(v_field, theta=0.0)
        assert 0.0 < plain.integral < weighted.integral

    def test_failure_modes(self, v_field):
        with pytest.raises(bar.BarriersError):
            bar.v_integrability_check(v_field, theta=-0.5)
        grid = Grid1D(x_min=-4.0, x_max=4.0, dx=0.5, dt=0.01, t_end=0.1)
        x = grid.x
        flat = Field(
            grid=grid,
            times=np.array([0.1]),
            snapshots=np.zeros((1, x.size)),
            provenance="V",
            theta=None,
            median_times=np.array([0.0]),
            median_values=np.array([0.0]),
        )
        with pytest.raises(bar.TailFitError):
            bar.v_integrability_check(flat, theta=0.5)

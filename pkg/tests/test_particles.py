"""Tests for the branching-particle engine.

Oracles: the closed-form mass Laplace transform and extinction
probability from the continuous-state module (exact for the limiting
process, so the particle scheme must agree within Monte Carlo error at
small epsilon), plug-in values for the derivative-martingale functional,
and distributional invariances (martingale drift, epsilon robustness,
barrier-offset robustness) at fixed seeds.  Every stochastic assertion
below was sized against a measured run; seeds are frozen so the suite
is deterministic.
"""

import math

import numpy as np
import pytest
from scipy import stats as sps

from sbmlab import csbp
from sbmlab.kpp import front_m
from sbmlab.mechanism import BranchingMechanism, LevyMeasure
from sbmlab.particles import (
    AcceptanceTooLowError,
    ConditionedClusterSample,
    ParticleCloud,
    ParticlesError,
    PointMeasure,
    SimConfig,
    derivative_martingale,
    extremal_measure,
    joint_front_stats,
    max_position,
    offspring_table,
    sample_conditioned_cluster,
    sample_conditioned_clusters,
    simulate,
)

SQRT2 = math.sqrt(2.0)
QUADRATIC = BranchingMechanism(alpha=1.0, beta=1.0, levy=LevyMeasure.none())
ATOMIC = BranchingMechanism(
    alpha=1.0, beta=0.6, levy=LevyMeasure.atoms(((0.3, 1.0), (0.75, 0.4)))
)


class TestPointMeasure:
    def test_empty_rightmost_is_minus_infinity(self):
        mu = PointMeasure.empty()
        assert mu.rightmost == -math.inf
        assert mu.total_mass == 0.0
        assert mu.size == 0

    def test_single_atom(self):
        mu = PointMeasure.single(3.2, 0.5)
        assert mu.rightmost == 3.2
        assert mu.total_mass == 0.5

    def test_shift_moves_atoms(self):
        mu = PointMeasure(np.array([0.0, 1.0]), np.array([1.0, 2.0]))
        assert mu.shifted(-0.5).rightmost == pytest.approx(0.5)
        assert mu.shifted(-0.5).total_mass == pytest.approx(3.0)

    def test_integrate_pairs_weights_with_values(self):
        mu = PointMeasure(np.array([0.0, 2.0]), np.array([1.0, 3.0]))
        assert mu.integrate(lambda x: x) == pytest.approx(6.0)

    def test_rejects_nonpositive_weights(self):
        with pytest.raises(ParticlesError):
            PointMeasure(np.array([0.0]), np.array([0.0]))

    def test_rejects_infinite_locations(self):
        with pytest.raises(ParticlesError):
            PointMeasure(np.array([math.inf]), np.array([1.0]))


class TestCloudObservables:
    def test_max_position_of_empty_cloud(self):
        cloud = ParticleCloud(1.0, np.empty(0), 0.1)
        assert max_position(cloud) == -math.inf
        assert not cloud.alive

    def test_max_position_single_particle(self):
        cloud = ParticleCloud(1.0, np.array([3.2]), 0.1)
        assert max_position(cloud) == pytest.approx(3.2)

    def test_derivative_martingale_unit_mass_one_behind(self):
        # unit mass at sqrt(2) t - 1 contributes 1 * e^{-sqrt(2)}
        t = 2.0
        cloud = ParticleCloud(t, np.array([SQRT2 * t - 1.0]), 1.0)
        assert derivative_martingale(cloud, t) == pytest.approx(math.exp(-SQRT2))
        assert derivative_martingale(cloud, t) == pytest.approx(0.24312, abs=5e-6)

    def test_derivative_martingale_vanishes_at_the_line(self):
        t = 3.0
        cloud = ParticleCloud(t, np.array([SQRT2 * t]), 1.0)
        assert derivative_martingale(cloud, t) == pytest.approx(0.0, abs=1e-15)

    def test_extremal_measure_recenters_by_front_position(self):
        cloud = ParticleCloud(10.0, np.array([5.0, 11.0]), 0.5)
        meas = extremal_measure(cloud, 10.0)
        assert meas.rightmost == pytest.approx(11.0 - front_m(1.0, 10.0))
        assert meas.total_mass == pytest.approx(1.0)

    def test_extremal_measure_of_empty_cloud_is_empty(self):
        assert extremal_measure(ParticleCloud(5.0, np.empty(0), 0.1), 5.0).size == 0

    def test_extremal_measure_needs_positive_time(self):
        with pytest.raises(ParticlesError):
            extremal_measure(ParticleCloud(0.0, np.array([0.0]), 0.1), 0.0)


class TestOffspringTable:
    def test_quadratic_rates_split_the_linear_part(self):
        tab = offspring_table(QUADRATIC, 0.05)
        assert tab.split_rate == pytest.approx(1.0 / 0.05 + 0.5)
        assert tab.death_rate == pytest.approx(1.0 / 0.05 - 0.5)
        assert tab.jump_counts.size == 0

    def test_atom_measure_bins_preserve_mean_inflow(self):
        # ceil(0.3/0.05) = 6 and ceil(0.75/0.05) = 15, rates eps * weight
        tab = offspring_table(ATOMIC, 0.05)
        assert list(tab.jump_counts) == [6, 15]
        assert tab.jump_rates == pytest.approx([0.05 * 1.0, 0.05 * 0.4])
        m1 = float(np.sum(tab.jump_counts * tab.jump_rates))
        assert m1 == pytest.approx(0.3 * 1.0 + 0.75 * 0.4)

    def test_coarse_bins_keep_linear_coefficient_exact(self):
        # ceiling overshoot inflates m1; the drift correction absorbs it
        tab = offspring_table(ATOMIC, 0.1)
        m1 = float(np.sum(tab.jump_counts * tab.jump_rates))
        assert m1 == pytest.approx(0.62)
        assert tab.split_rate - tab.death_rate == pytest.approx(1.0 - m1)

    def test_unbounded_stable_tail_is_lumped(self):
        mech = BranchingMechanism(
            alpha=1.0, beta=0.5, levy=LevyMeasure.truncated_stable(0.2, 1.5)
        )
        tab = offspring_table(mech, 0.05)
        total = mech.levy.mass_between(0.05, math.inf) * 0.05
        assert tab.jump_rates.sum() == pytest.approx(total, rel=1e-9)
        assert tab.split_rate > 0.0 and tab.death_rate > 0.0

    def test_epsilon_too_coarse_for_heavy_jumps_raises(self):
        heavy = BranchingMechanism(
            alpha=1.0, beta=0.01, levy=LevyMeasure.atoms(((4.0, 1.0),))
        )
        with pytest.raises(ParticlesError, match="epsilon too large"):
            offspring_table(heavy, 1.0)


class TestSimConfig:
    def test_dt_above_stability_cap_rejected(self):
        with pytest.raises(ParticlesError, match="stability cap"):
            SimConfig(mech=QUADRATIC, epsilon=0.1, dt=0.02, t_end=1.0,
                      seed=1, n_replicas=1)

    def test_snapshot_beyond_horizon_rejected(self):
        with pytest.raises(ParticlesError, match="snapshot"):
            SimConfig(mech=QUADRATIC, epsilon=0.1, dt=0.005, t_end=1.0,
                      seed=1, n_replicas=1, snapshot_times=(2.0,))

    def test_snapshots_colliding_on_step_grid_rejected(self):
        with pytest.raises(ParticlesError, match="collide"):
            SimConfig(mech=QUADRATIC, epsilon=2.0, dt=0.1, t_end=1.0,
                      seed=1, n_replicas=1, snapshot_times=(0.26, 0.3))

    def test_barrier_requires_unit_drift(self):
        tilted = BranchingMechanism(alpha=2.0, beta=1.0)
        with pytest.raises(ParticlesError, match="unit-drift"):
            SimConfig(mech=tilted, epsilon=0.1, dt=0.004, t_end=1.0,
                      seed=1, n_replicas=1, barrier_offset=3.0)

    def test_initial_atom_lighter_than_half_particle_rejected(self):
        cfg = SimConfig(mech=QUADRATIC, epsilon=0.5, dt=0.01, t_end=1.0,
                        seed=1, n_replicas=1,
                        initial=PointMeasure.single(0.0, 0.2))
        with pytest.raises(ParticlesError, match="lighter"):
            cfg.initial_positions()

    def test_t_end_appended_to_snapshots(self):
        cfg = SimConfig(mech=QUADRATIC, epsilon=0.1, dt=0.005, t_end=1.0,
                        seed=1, n_replicas=1, snapshot_times=(0.5,))
        assert cfg.snapshot_times == (0.5, 1.0)


class TestEngineBasics:
    def test_zero_initial_measure_stays_empty(self):
        cfg = SimConfig(mech=QUADRATIC, epsilon=0.1, dt=0.005, t_end=0.5,
                        seed=3, n_replicas=2, initial=PointMeasure.empty())
        res = simulate(cfg)
        for stats, snaps in zip(res.stats, res.clouds):
            assert not stats.survived
            assert stats.extinction_time == 0.0
            assert stats.m_path == (-math.inf,)
            assert all(not c.alive for c in snaps)

    def test_same_seed_is_bit_identical(self):
        cfg = SimConfig(mech=ATOMIC, epsilon=0.05, dt=0.002, t_end=0.3,
                        seed=9, n_replicas=8, snapshot_times=(0.1, 0.3))
        a, b = simulate(cfg), simulate(cfg)
        for sa, sb in zip(a.stats, b.stats):
            assert sa.m_path == sb.m_path
            assert sa.z_path == sb.z_path
            assert sa.mass_path == sb.mass_path
        for ca, cb in zip(a.clouds, b.clouds):
            for snap_a, snap_b in zip(ca, cb):
                assert np.array_equal(snap_a.positions, snap_b.positions)

    def test_explosion_guard_flags_and_truncates(self):
        cfg = SimConfig(mech=QUADRATIC, epsilon=0.05, dt=0.002, t_end=3.0,
                        seed=12, n_replicas=3, explosion_cap=60,
                        snapshot_times=(1.0, 3.0))
        res = simulate(cfg)
        exploded = [s for s in res.stats if s.exploded]
        assert exploded
        for s in exploded:
            assert s.survived
            assert math.isnan(s.m_path[-1])

    def test_replica_mass_is_particle_count_times_epsilon(self):
        cfg = SimConfig(mech=QUADRATIC, epsilon=0.1, dt=0.005, t_end=0.2,
                        seed=4, n_replicas=3)
        res = simulate(cfg)
        for stats, snaps in zip(res.stats, res.clouds):
            assert stats.mass_path[-1] == pytest.approx(snaps[-1].total_mass)


@pytest.fixture(scope="module")
def extinction_run():
    # quadratic, t = log 2: the limiting extinction probability is e^{-2}
    cfg = SimConfig(mech=QUADRATIC, epsilon=0.02, dt=0.001, t_end=math.log(2.0),
                    seed=20250822, n_replicas=1500, stats_only=True)
    return simulate(cfg)


class TestAgainstMassOracles:
    def test_extinction_frequency_matches_closed_form(self, extinction_run):
        p = 1.0 - extinction_run.survival_frequency()
        target = math.exp(-2.0)
        se = math.sqrt(target * (1.0 - target) / len(extinction_run.stats))
        assert abs(p - target) < 3.0 * se

    def test_extinction_frequency_robust_under_epsilon_halving(self, extinction_run):
        coarse = simulate(SimConfig(mech=QUADRATIC, epsilon=0.04, dt=0.002,
                                    t_end=math.log(2.0), seed=20250823,
                                    n_replicas=1500, stats_only=True))
        p_fine = 1.0 - extinction_run.survival_frequency()
        p_coarse = 1.0 - coarse.survival_frequency()
        se = math.sqrt(2.0 * 0.135 * 0.865 / 1500)
        assert abs(p_fine - p_coarse) < 3.0 * se

    def test_mass_laplace_quadratic(self):
        cfg = SimConfig(mech=QUADRATIC, epsilon=0.02, dt=0.001, t_end=0.5,
                        seed=7, n_replicas=1000, stats_only=True)
        res = simulate(cfg)
        for theta in (0.5, 1.0, 2.0):
            est, se = res.mass_laplace_estimate(theta)
            exact = csbp.mass_laplace(QUADRATIC, theta, 0.5)
            assert abs(est - exact) < 3.0 * se

    def test_mass_laplace_with_jumps(self):
        # end-to-end check of the binned offspring law against the
        # continuous-state transform for a mechanism with two jump atoms
        cfg = SimConfig(mech=ATOMIC, epsilon=0.02, dt=0.0008, t_end=0.5,
                        seed=11, n_replicas=1000, stats_only=True)
        res = simulate(cfg)
        for theta in (0.5, 1.0, 2.0):
            est, se = res.mass_laplace_estimate(theta)
            exact = csbp.mass_laplace(ATOMIC, theta, 0.5)
            assert abs(est - exact) < 3.0 * se

    def test_derivative_martingale_has_no_drift(self):
        # started from unit mass at -1 the expected value stays e^{-sqrt(2)}
        cfg = SimConfig(mech=QUADRATIC, epsilon=0.04, dt=0.002, t_end=0.5,
                        seed=23, n_replicas=1500, stats_only=True,
                        initial=PointMeasure.single(-1.0, 1.0))
        res = simulate(cfg)
        z = res.z_values()
        se = z.std(ddof=1) / math.sqrt(z.size)
        assert abs(z.mean() - math.exp(-SQRT2)) < 3.0 * se


class TestFrontTracking:
    def test_speed_band_at_t_twenty(self):
        # measured once at this seed: mean M/t = 1.281, inside the band
        cfg = SimConfig(mech=QUADRATIC, epsilon=0.1, dt=0.01, t_end=20.0,
                        seed=101, n_replicas=60, stats_only=True,
                        barrier_offset=5.0)
        res = simulate(cfg)
        m = res.m_values()
        m = m[np.isfinite(m)]
        assert m.size >= 20
        assert 1.25 <= float(np.mean(m / 20.0)) <= 1.45

    def test_front_law_stable_under_barrier_offset(self):
        out = {}
        for L in (5.0, 7.0):
            cfg = SimConfig(mech=QUADRATIC, epsilon=0.2, dt=0.01, t_end=10.0,
                            seed=55, n_replicas=300, stats_only=True,
                            barrier_offset=L)
            m = simulate(cfg).m_values()
            out[L] = m[np.isfinite(m)]
        ks = sps.ks_2samp(out[5.0], out[7.0])
        assert ks.pvalue > 0.01
        assert abs(np.median(out[5.0]) - np.median(out[7.0])) < 0.5


@pytest.fixture(scope="module")
def small_cluster_sample():
    cfg = SimConfig(mech=QUADRATIC, epsilon=0.1, dt=0.005, t_end=6.0,
                    seed=606, n_replicas=64, stats_only=True,
                    barrier_offset=4.0)
    return sample_conditioned_clusters(cfg, 0.0, 6.0, n_accept=25)


class TestConditionedClusters:
    def test_clusters_are_recentred_at_their_tip(self, small_cluster_sample):
        assert isinstance(small_cluster_sample, ConditionedClusterSample)
        assert len(small_cluster_sample.clusters) == 25
        for cluster in small_cluster_sample.clusters:
            assert cluster.rightmost == pytest.approx(0.0, abs=1e-12)

    def test_overshoots_are_positive_with_workable_acceptance(self, small_cluster_sample):
        assert np.all(small_cluster_sample.overshoots > 0.0)
        assert 0.0 < small_cluster_sample.acceptance <= 1.0
        assert small_cluster_sample.attempts >= 25

    def test_single_draw_wrapper(self):
        cfg = SimConfig(mech=QUADRATIC, epsilon=0.1, dt=0.005, t_end=6.0,
                        seed=607, n_replicas=64, stats_only=True,
                        barrier_offset=4.0)
        delta, overshoot = sample_conditioned_cluster(cfg, 0.0, 6.0)
        assert delta.rightmost == pytest.approx(0.0, abs=1e-12)
        assert overshoot > 0.0

    def test_hopeless_conditioning_raises(self):
        cfg = SimConfig(mech=QUADRATIC, epsilon=0.1, dt=0.005, t_end=4.0,
                        seed=608, n_replicas=64, stats_only=True,
                        barrier_offset=4.0)
        with pytest.raises(AcceptanceTooLowError):
            sample_conditioned_clusters(cfg, 8.0, 4.0, n_accept=5, max_attempts=256)


class TestJointFrontStats:
    def test_zero_test_function_gives_unit_laplace(self):
        cfg = SimConfig(mech=QUADRATIC, epsilon=0.2, dt=0.01, t_end=8.0,
                        seed=77, n_replicas=40, stats_only=True,
                        barrier_offset=4.0)
        report = joint_front_stats(cfg, lambda x: np.zeros_like(x),
                                   t_ladder=(4.0, 8.0))
        assert report.laplace_values == pytest.approx((1.0, 1.0))
        assert report.laplace_target is None

    def test_report_shape_with_compact_bump(self):
        from sbmlab.fronts import TestFunction

        cfg = SimConfig(mech=QUADRATIC, epsilon=0.2, dt=0.01, t_end=8.0,
                        seed=78, n_replicas=40, stats_only=True,
                        barrier_offset=4.0)
        phi = TestFunction.compact_bump(center=0.0, width=2.0, height=1.0)
        report = joint_front_stats(cfg, phi, t_ladder=(4.0, 8.0), c_phi=0.5)
        assert report.t_values == (4.0, 8.0)
        assert all(n > 0 for n in report.n_used)
        assert all(-1.0 <= c <= 1.0 for c in report.correlations)
        assert all(0.0 < v <= 1.0 for v in report.laplace_values)
        assert report.laplace_target == pytest.approx(math.exp(-0.5))
        assert len(report.laplace_gaps) == 2

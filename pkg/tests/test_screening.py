from __future__ import annotations

import csv
import io
import math

import numpy as np
import pytest

from confopt.screening import (
    REPORT_HEADER,
    ScreeningStats,
    compute_stats,
    elementary_effect,
    generate_trajectories,
    reduce_bounds,
    run_screening,
    screening_report_csv,
    trajectory_delta,
)
from confopt.space import Configuration, ParameterSpec, SearchSpace


def grid_space(k, *, minimum=500, maximum=1125, granularity=125):
    return SearchSpace(
        tuple(
            ParameterSpec(f"p{i}", minimum, maximum, granularity, "m")
            for i in range(k)
        )
    )


class TestTrajectoryGeneration:
    def test_delta_formula(self):
        assert trajectory_delta(6) == pytest.approx(0.6)
        assert trajectory_delta(2) == 1.0
        with pytest.raises(ValueError):
            trajectory_delta(5)
        with pytest.raises(ValueError):
            trajectory_delta(1)

    def test_planned_budget(self):
        space = grid_space(14)
        plans = generate_trajectories(space, r=10, p=6, seed=0)
        assert len(plans) == 10
        assert sum(plan.points.shape[0] for plan in plans) == 150

    def test_single_dimension(self):
        space = grid_space(1)
        (plan,) = generate_trajectories(space, r=1, p=6, seed=3)
        assert plan.points.shape == (2, 1)
        diff = plan.points[1, 0] - plan.points[0, 0]
        assert abs(diff) == pytest.approx(trajectory_delta(6))

    def test_points_stay_on_grid_inside_cube(self):
        space = grid_space(5)
        for plan in generate_trajectories(space, r=20, p=6, seed=11):
            assert np.all(plan.points >= 0.0)
            assert np.all(plan.points <= 1.0)
            # on the p-level lattice: coords are multiples of 1/(p-1)
            scaled = plan.points * 5
            assert np.allclose(scaled, np.round(scaled), atol=1e-12)

    def test_each_dimension_perturbed_once(self):
        space = grid_space(6)
        for plan in generate_trajectories(space, r=5, p=6, seed=2):
            assert sorted(plan.perturbed_dimension) == list(range(6))
            for step, dim in enumerate(plan.perturbed_dimension):
                moved = plan.points[step + 1] - plan.points[step]
                assert abs(moved[dim]) == pytest.approx(plan.delta)
                others = np.delete(moved, dim)
                assert np.all(others == 0.0)

    def test_deterministic_given_seed(self):
        space = grid_space(4)
        a = generate_trajectories(space, r=3, p=6, seed=9)
        b = generate_trajectories(space, r=3, p=6, seed=9)
        for pa, pb in zip(a, b):
            assert np.array_equal(pa.points, pb.points)
            assert pa.perturbed_dimension == pb.perturbed_dimension

    def test_odd_p_rejected(self):
        with pytest.raises(ValueError):
            generate_trajectories(grid_space(2), r=1, p=5, seed=0)


class TestElementaryEffects:
    def test_arithmetic(self):
        assert elementary_effect(1250.0, 650.0, 0.6) == pytest.approx(1000.0)
        assert elementary_effect(5.0, 5.0, 0.6) == 0.0
        assert elementary_effect(1.0, 2.0, -0.5) == pytest.approx(2.0)
        with pytest.raises(ValueError):
            elementary_effect(1.0, 2.0, 0.0)

    def test_stats_hand_computed(self):
        stats = compute_stats(np.array([[2.0], [-2.0]]).reshape(2, 1), ("a",))
        assert stats.mu[0] == 0.0
        assert stats.mu_star[0] == 2.0
        assert stats.sigma[0] == pytest.approx(math.sqrt(8.0))

    def test_stats_single_sample(self):
        stats = compute_stats(np.array([[5.0]]), ("a",))
        assert stats.mu[0] == stats.mu_star[0] == 5.0
        assert math.isnan(stats.sigma[0])

    def test_stats_constant_samples(self):
        stats = compute_stats(np.full((3, 1), 4.0), ("a",))
        assert stats.sigma[0] == 0.0

    def test_mu_star_bounds_mu(self):
        rng = np.random.default_rng(0)
        samples = rng.normal(size=(8, 3))
        stats = compute_stats(samples, ("a", "b", "c"))
        assert np.all(stats.mu_star >= np.abs(stats.mu))
        assert np.all(stats.mu_star >= 0)


def linear_sli(coefficients):
    coefficients = np.asarray(coefficients, dtype=float)

    def objective(space):
        def f(config):
            return float(coefficients @ space.to_normalized(config))

        return f

    return objective


class TestScreeningRuns:
    def test_linear_oracle_exact(self):
        """On an additive objective every EE sample equals its coefficient."""
        space = grid_space(4)
        coeffs = (5.0, 1.0, 0.0, 3.0)
        outcome = run_screening(
            space, linear_sli(coeffs)(space), r=10, seed=42
        )
        for i, a in enumerate(coeffs):
            assert np.all(np.abs(outcome.stats.ee_samples[:, i] - a) <= 1e-9)
            assert outcome.stats.sigma[i] <= 1e-9 or math.isnan(outcome.stats.sigma[i])
        assert list(outcome.stats.ranking()) == [0, 3, 1, 2]

    def test_evaluation_count(self):
        space = grid_space(3)
        outcome = run_screening(space, lambda c: 1.0, r=4, seed=0)
        assert len(outcome.evaluations) == 4 * (3 + 1)

    def test_interaction_raises_sigma(self):
        space = grid_space(4)

        def f(config):
            x = space.to_normalized(config)
            return float(5 * x[0] + 1 * x[1] + 3 * x[3] + 4 * x[0] * x[2])

        outcome = run_screening(space, f, r=20, seed=7)
        sigma = outcome.stats.sigma
        assert sigma[0] > sigma[1] and sigma[2] > sigma[1]
        assert sigma[0] > sigma[3] and sigma[2] > sigma[3]

    def test_mixed_level_counts_need_explicit_p(self):
        space = SearchSpace(
            (ParameterSpec("a", 0, 5, 1), ParameterSpec("b", 0, 6, 2))
        )
        with pytest.raises(ValueError):
            run_screening(space, lambda c: 0.0, r=2, seed=0)
        outcome = run_screening(space, lambda c: 0.0, r=2, p=4, seed=0)
        assert len(outcome.evaluations) == 6


def stats_for(names, mu_star):
    mu_star = np.asarray(mu_star, dtype=float)
    return ScreeningStats(
        names=tuple(names),
        mu=mu_star.copy(),
        mu_star=mu_star,
        sigma=np.zeros_like(mu_star),
        ee_samples=mu_star.reshape(1, -1),
    )


def eval_at(space, settings, sli):
    return (Configuration(tuple(settings)), sli)


class TestBoundReduction:
    def test_rho_min_max_scaling(self):
        space = grid_space(3)
        stats = stats_for(space.names, [1.0, 3.0, 5.0])
        evals = [
            eval_at(space, (500, 500, 500), 100.0),
            eval_at(space, (1125, 1125, 1125), 100.0),
        ]
        report = reduce_bounds(space, stats, evals, slo_threshold=1000.0)
        assert list(report.rho) == [0.0, 0.5, 1.0]

    def test_bounds_arithmetic(self):
        """MinBound from the relaxed set, MaxBound scaled by rho then
        snapped up to the grid."""
        space = grid_space(2)
        stats = stats_for(space.names, [1.0, 3.0])  # rho = [0, 1]
        evals = [
            eval_at(space, (625, 625), 900.0),
            eval_at(space, (1000, 1000), 700.0),
            eval_at(space, (1125, 1125), 1100.0),  # relaxed only (<= 1250)
        ]
        report = reduce_bounds(space, stats, evals, slo_threshold=1000.0)
        p0 = report.reduced_space.parameter("p0")
        p1 = report.reduced_space.parameter("p1")
        # relaxed set {625, 1000, 1125}, strict set {1000}
        assert (p0.minimum, p0.maximum) == (625, 625)
        assert (p1.minimum, p1.maximum) == (625, 1000)

    def test_snap_up_lands_on_grid(self):
        space = grid_space(2)
        stats = stats_for(space.names, [1.0, 2.0])  # rho = [0, 1]
        evals = [
            eval_at(space, (500, 500), 700.0),
            eval_at(space, (875, 875), 700.0),
        ]
        report = reduce_bounds(space, stats, evals, slo_threshold=1000.0)
        p1 = report.reduced_space.parameter("p1")
        assert (p1.minimum, p1.maximum) == (500, 875)
        for spec in report.reduced_space.parameters:
            original = space.parameter(spec.name)
            assert spec.minimum in original.levels()
            assert spec.maximum in original.levels()
            assert original.minimum <= spec.minimum <= spec.maximum <= original.maximum

    def test_fractional_target_snaps_upward(self):
        space = SearchSpace(
            (
                ParameterSpec("a", 0, 10, 1),
                ParameterSpec("b", 0, 10, 1),
                ParameterSpec("c", 0, 10, 1),
            )
        )
        stats = stats_for(space.names, [1.0, 2.0, 3.0])  # rho = [0, 0.5, 1]
        evals = [
            eval_at(space, (0, 0, 0), 500.0),
            eval_at(space, (5, 5, 5), 500.0),
        ]
        report = reduce_bounds(space, stats, evals, slo_threshold=1000.0)
        b = report.reduced_space.parameter("b")
        # target = 0 + 5 * 0.5 = 2.5, snapped up to 3
        assert b.maximum == 3

    def test_degenerate_equal_mu_star(self):
        space = grid_space(2)
        stats = stats_for(space.names, [2.0, 2.0])
        evals = [
            eval_at(space, (625, 750), 700.0),
            eval_at(space, (1000, 1000), 700.0),
        ]
        report = reduce_bounds(space, stats, evals, slo_threshold=1000.0)
        for name, low in (("p0", 625), ("p1", 750)):
            spec = report.reduced_space.parameter(name)
            assert (spec.minimum, spec.maximum) == (low, low)
        assert list(report.rho) == [1.0, 1.0]

    def test_empty_relaxed_set_keeps_bounds(self, caplog):
        space = grid_space(2)
        stats = stats_for(space.names, [1.0, 2.0])
        evals = [eval_at(space, (500, 500), 5000.0)]
        with caplog.at_level("WARNING"):
            report = reduce_bounds(space, stats, evals, slo_threshold=1000.0)
        for spec, original in zip(
            report.reduced_space.parameters, space.parameters
        ):
            assert (spec.minimum, spec.maximum) == (original.minimum, original.maximum)
        assert any("relaxed" in n for n in report.notes)

    def test_empty_strict_set_keeps_upper(self):
        space = grid_space(2)
        stats = stats_for(space.names, [1.0, 2.0])
        evals = [eval_at(space, (750, 750), 1100.0)]  # relaxed only
        report = reduce_bounds(space, stats, evals, slo_threshold=1000.0)
        for spec in report.reduced_space.parameters:
            assert (spec.minimum, spec.maximum) == (750, 1125)
        assert any("strict" in n for n in report.notes)

    def test_thresholds_recorded(self):
        space = grid_space(1)
        stats = stats_for(space.names, [1.0])
        evals = [eval_at(space, (500,), 700.0)]
        report = reduce_bounds(space, stats, evals, slo_threshold=1000.0)
        assert report.relaxed_slo == 1250.0
        assert report.strict_slo == 750.0

    def test_empty_evaluations_rejected(self):
        space = grid_space(1)
        with pytest.raises(ValueError):
            reduce_bounds(space, stats_for(space.names, [1.0]), [], 1000.0)

    def test_factor_validation(self):
        space = grid_space(1)
        stats = stats_for(space.names, [1.0])
        evals = [eval_at(space, (500,), 700.0)]
        with pytest.raises(ValueError):
            reduce_bounds(space, stats, evals, 1000.0, relaxed_factor=0.9)
        with pytest.raises(ValueError):
            reduce_bounds(space, stats, evals, 1000.0, strict_factor=1.1)


class TestReport:
    def test_csv_shape_and_order(self):
        space = grid_space(3)
        coeffs = (1.0, 6.0, 3.0)
        outcome = run_screening(space, linear_sli(coeffs)(space), r=4, seed=1)
        report = reduce_bounds(
            space, outcome.stats, outcome.evaluations, slo_threshold=1e9
        )
        text = screening_report_csv(outcome.stats, report)
        rows = list(csv.reader(io.StringIO(text)))
        assert tuple(rows[0]) == REPORT_HEADER
        assert [r[0] for r in rows[1:]] == ["p1", "p2", "p0"]  # mu_star descending
        mu_stars = [float(r[2]) for r in rows[1:]]
        assert mu_stars == sorted(mu_stars, reverse=True)

    def test_single_parameter_report(self):
        space = grid_space(1)
        outcome = run_screening(space, lambda c: 100.0, r=2, seed=0)
        report = reduce_bounds(
            space, outcome.stats, outcome.evaluations, slo_threshold=1000.0
        )
        text = screening_report_csv(outcome.stats, report)
        rows = list(csv.reader(io.StringIO(text)))
        assert len(rows) == 2
        assert float(rows[1][8]) == 1.0  # degenerate rho reported as 1

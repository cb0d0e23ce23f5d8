import itertools
import warnings

import numpy as np
import pytest

from streamdemand.allocate import (
    AllocationPath,
    BudgetPolicy,
    PlannerState,
    closed_form_null,
    compare_schemes,
    forced_phase_max,
    lp_null_max,
    plan_horizon,
    reallocate_across_segments,
)
from streamdemand.envelope import ChangePoints, EnvelopeFit
from streamdemand.errors import ConfigurationError, DomainError, InfeasibleError
from streamdemand.rng import rng_from_seed


def vertex_oracle(theta, gz, budget):
    """Exact LP optimum by enumerating vertices of the feasible polytope.

    Constraints: x >= 0 (C rows), sum(x) <= budget, theta.x <= 1 - gz.
    Every vertex activates C linearly independent constraints.
    """
    theta = np.asarray(theta, dtype=float)
    C = theta.shape[0]
    rows = [np.eye(C)[i] for i in range(C)] + [np.ones(C), theta]
    rhs = [0.0] * C + [budget, 1.0 - gz]
    best = gz  # x = 0 is always feasible when gz <= 1
    for active in itertools.combinations(range(C + 2), C):
        A = np.array([rows[i] for i in active])
        b = np.array([rhs[i] for i in active])
        if abs(np.linalg.det(A)) < 1e-12:
            continue
        x = np.linalg.solve(A, b)
        if np.any(x < -1e-9):
            continue
        if x.sum() > budget + 1e-9 or theta @ x > 1.0 - gz + 1e-9:
            continue
        best = max(best, gz + float(theta @ x))
    return best


class TestClosedForm:
    def test_identity_effect(self):
        x = closed_form_null([1.0], [], [], 0.4)
        assert np.allclose(x, [0.4])

    def test_unit_norm_pair(self):
        x = closed_form_null([0.6, 0.8], [], [], 0.5)
        assert np.allclose(x, [0.3, 0.4])
        assert np.dot([0.6, 0.8], x) == pytest.approx(0.5, abs=1e-15)

    def test_ceiling_branch(self):
        x = closed_form_null([0.6, 0.8], [0.4], [0.5], 2.0)
        assert np.allclose(x, [0.48, 0.64])
        assert np.dot([0.6, 0.8], x) == pytest.approx(0.8, abs=1e-15)

    def test_zero_theta_rejected(self):
        with pytest.raises(DomainError):
            closed_form_null([0.0, 0.0], [], [], 1.0)

    def test_pseudo_inverse_identity_random(self):
        rng = rng_from_seed(1)
        for _ in range(500):
            C = int(rng.integers(1, 6))
            theta = rng.random(C) + 0.01
            gz = float(rng.random() * 0.9)
            budget = float(rng.random() * 2.0)
            x = closed_form_null(theta, [gz], [1.0], budget)
            assert theta @ x == pytest.approx(min(budget, 1.0 - gz), abs=1e-12)


class TestLpNullMax:
    def test_concentrates_on_best_channel(self):
        x, obj = lp_null_max([0.6, 0.8], [], [], 0.5)
        assert np.allclose(x, [0.0, 0.5])
        assert obj == pytest.approx(0.4, abs=1e-15)

    def test_no_profitable_channel(self):
        x, obj = lp_null_max([-0.5, 0.0], [0.3], [1.0], 1.0)
        assert np.allclose(x, 0.0)
        assert obj == pytest.approx(0.3, abs=1e-15)

    def test_ceiling_binds(self):
        x, obj = lp_null_max([2.0], [0.5], [1.0], 1.0)
        assert np.allclose(x, [0.25])
        assert obj == pytest.approx(1.0, abs=1e-15)

    def test_infeasible_ambient(self):
        with pytest.raises(InfeasibleError):
            lp_null_max([1.0], [1.5], [1.0], 1.0)

    def test_matches_vertex_oracle(self):
        rng = rng_from_seed(2)
        for _ in range(200):
            C = int(rng.integers(1, 6))
            theta = rng.random(C)
            gz = float(rng.random() * 0.95)
            budget = float(rng.random() * 2.0)
            _, obj = lp_null_max(theta, [gz], [1.0], budget)
            assert obj == pytest.approx(vertex_oracle(theta, gz, budget), abs=1e-12)


class TestCompareSchemes:
    def test_flags_budget_violation(self):
        report = compare_schemes([0.6, 0.8], [], [], 0.5)
        assert report["closed_budget_violation"]
        assert report["closed_form"]["spend_total"] == pytest.approx(0.7)
        assert report["lp"]["objective"] == pytest.approx(0.4)
        assert report["closed_form"]["objective"] == pytest.approx(0.5)
        assert report["dominant"] == "lp"

    def test_single_channel_identical(self):
        report = compare_schemes([1.0], [], [], 0.4)
        assert not report["closed_budget_violation"]
        assert np.allclose(report["closed_form"]["spend"], report["lp"]["spend"])
        assert report["dominant"] == "tie"

    def test_symmetric_channels(self):
        report = compare_schemes([0.5, 0.5], [], [], 0.3)
        assert np.allclose(report["closed_form"]["spend"], [0.3, 0.3])
        assert report["closed_budget_violation"]  # spends 0.6 of a 0.3 budget
        lp_spend = report["lp"]["spend"]
        assert sorted(lp_spend) == [0.0, pytest.approx(0.3)]

    def test_lp_dominates_feasible_closed_form(self):
        rng = rng_from_seed(3)
        for _ in range(300):
            C = int(rng.integers(1, 6))
            theta = rng.random(C)
            gz = float(rng.random() * 0.9)
            budget = float(rng.random() * 1.5)
            report = compare_schemes(theta, [gz], [1.0], budget)
            if not report["closed_budget_violation"]:
                assert report["lp"]["objective"] >= report["closed_form"]["objective"] - 1e-9
            else:
                assert report["closed_form"]["spend_total"] > budget + 1e-9


class TestForcedPhaseMax:
    fit = EnvelopeFit(ChangePoints(5, 15, 25, 39), np.array([700.0, 600.0, 140.0]),
                      omega=5.0)

    def test_rising_attack_at_right_endpoint(self):
        (week, value), *_ = forced_phase_max(self.fit)
        assert (week, value) == (5, 700.0)

    def test_decaying_phases_at_left_endpoint(self):
        phases = forced_phase_max(self.fit)
        assert phases[1] == (5, 700.0)      # sustain declines: left endpoint
        assert phases[2] == (15, 600.0)     # decay declines: left endpoint
        assert phases[3] == (25, 140.0)     # release declines: left endpoint

    def test_flat_sustain_breaks_to_earliest(self):
        fit = EnvelopeFit(ChangePoints(5, 15, 25, 39), np.array([700.0, 700.0, 140.0]),
                          omega=5.0)
        phases = forced_phase_max(fit)
        assert phases[1] == (5, 700.0)

    def test_rising_sustain_at_right_endpoint(self):
        fit = EnvelopeFit(ChangePoints(5, 15, 25, 39), np.array([500.0, 700.0, 140.0]),
                          omega=5.0)
        phases = forced_phase_max(fit)
        assert phases[1] == (15, 700.0)

    def test_agrees_with_bruteforce(self):
        from streamdemand.envelope import adsr_mean

        rng = rng_from_seed(4)
        for _ in range(50):
            vals = np.sort(rng.random(3) * 900 + 10)[::-1].copy()
            fit = EnvelopeFit(ChangePoints(4, 11, 20, 30), vals, omega=2.0)
            phases = forced_phase_max(fit)
            supports = [(0, 4), (4, 11), (11, 20), (20, 30)]
            for (lo, hi), (week, value) in zip(supports, phases):
                grid = np.arange(lo, hi + 1)
                means = adsr_mean(grid, fit)
                best = grid[int(np.argmax(means))]  # argmax takes the earliest tie
                assert week == best
                assert value == pytest.approx(float(np.max(means)))


class TestReallocate:
    def test_size_dominance(self):
        res = reallocate_across_segments([[0.5], [0.5]], [1000, 100], [0.0, 0.0], 1.0)
        assert res.split[0] == pytest.approx(1.0)
        assert res.split[1] == 0.0

    def test_effect_dominance_with_spill(self):
        res = reallocate_across_segments([[0.8], [0.2]], [100, 100], [0.0, 0.0], 2.0)
        # segment 1 ceiling: 1.0 / 0.8 = 1.25 money units, remainder spills
        assert res.split[0] == pytest.approx(1.25)
        assert res.split[1] == pytest.approx(0.75)

    def test_zero_budget(self):
        res = reallocate_across_segments([[0.8], [0.2]], [100, 100], [0.0, 0.0], 0.0)
        assert np.allclose(res.split, 0.0)
        assert res.gain == 0.0

    def test_surplus_warning(self):
        with pytest.warns(UserWarning, match="unspent"):
            res = reallocate_across_segments([[1.0]], [100], [0.5], 5.0)
        assert res.unspent == pytest.approx(4.5)

    def test_matches_grid_oracle(self):
        rng = rng_from_seed(5)
        for _ in range(50):
            theta = rng.random((2, 1)) * 0.9 + 0.05
            sizes = rng.integers(50, 2000, size=2).astype(float)
            loads = rng.random(2) * 0.5
            budget = float(rng.random() * 4.0)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                res = reallocate_across_segments(theta, sizes, loads, budget)
            caps = (1.0 - loads) / theta[:, 0]
            grid = np.linspace(0.0, min(budget, caps[0]), 2001)
            x2 = np.minimum(budget - grid, caps[1])
            gains = (sizes[0] * theta[0, 0] * grid
                     + sizes[1] * theta[1, 0] * np.maximum(x2, 0.0))
            assert res.gain >= gains.max() - 1e-6 * max(gains.max(), 1.0)


class TestPlanHorizon:
    def _state(self, T=10, theta=0.05, gamma=0.1):
        return PlannerState(theta=[[theta]], gamma=[[gamma]], sizes=[1000],
                            z=np.full((T, 1), 0.2))

    def test_budget_exhausted_without_ceilings(self):
        policy = BudgetPolicy.uniform(3.0, 10)
        path = plan_horizon(policy, self._state(), scheme="null")
        assert path.spend.sum() == pytest.approx(3.0, abs=1e-9)
        assert path.unspent == 0.0

    def test_forced_constant_within_phase(self):
        T = 40
        fit = EnvelopeFit(ChangePoints(5, 15, 25, 39), np.array([700.0, 600.0, 140.0]),
                          omega=5.0)
        state = PlannerState(theta=[[0.05]], gamma=[[0.1]], sizes=[1000],
                             z=np.full((T, 1), 0.2), envelope=fit)
        policy = BudgetPolicy(np.linspace(0.1, 0.5, T))
        path = plan_horizon(policy, state, scheme="forced")
        for weeks in fit.change_points.phase_weeks():
            first = path.spend[weeks[0]]
            for t in weeks:
                assert np.array_equal(path.spend[t], first)

    def test_null_tracks_weekly_ceiling(self):
        rng = rng_from_seed(6)
        T = 12
        z = rng.random((T, 1))
        state = PlannerState(theta=[[0.9]], gamma=[[0.8]], sizes=[500], z=z)
        policy = BudgetPolicy.uniform(12.0, T)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            path = plan_horizon(policy, state, scheme="null")
        for t in range(T):
            x_t, _ = lp_null_max([0.9], [0.8], z[t], 1.0)
            assert np.allclose(path.spend[t, 0], x_t)

    def test_weekly_totals_within_budget(self):
        rng = rng_from_seed(7)
        T = 8
        state = PlannerState(theta=rng.random((3, 2)), gamma=rng.random((3, 1)) * 0.3,
                             sizes=[100, 200, 300], z=rng.random((T, 1)) * 0.5)
        policy = BudgetPolicy(rng.random(T))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            path = plan_horizon(policy, state, scheme="null")
        assert np.all(path.spend >= 0)
        assert np.all(path.weekly_totals() <= policy.weekly + 1e-9)

    def test_social_cap_enforced(self):
        state = self._state()
        policy = BudgetPolicy(np.full(10, 0.1), social_cap=0.1)
        with pytest.raises(InfeasibleError):
            plan_horizon(policy, state, scheme="null")

    def test_forced_requires_envelope(self):
        policy = BudgetPolicy.uniform(1.0, 10)
        with pytest.raises(ConfigurationError):
            plan_horizon(policy, self._state(), scheme="forced")

    def test_zero_budget_zero_plan(self):
        policy = BudgetPolicy.uniform(0.0, 10)
        path = plan_horizon(policy, self._state(), scheme="null")
        assert np.allclose(path.spend, 0.0)

    def test_allocation_path_serialization(self):
        policy = BudgetPolicy.uniform(1.0, 10)
        path = plan_horizon(policy, self._state(), scheme="null")
        doc = path.to_dict()
        assert doc["scheme"] == "null"
        assert np.allclose(doc["spend"], path.spend)

    def test_negative_spend_rejected(self):
        with pytest.raises(DomainError):
            AllocationPath(spend=np.array([[[-1.0]]]), probabilities=np.zeros((1, 1)),
                           objective=0.0, scheme="null")

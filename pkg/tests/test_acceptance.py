"""Acceptance suite: one test per sign-off criterion.

Each test prints a single PASS line on success (run with ``-s`` or
``-rP`` to see them); tolerances and runtime bounds are asserted inline.
"""

import json
import time

import numpy as np
import pytest
from scipy import stats

from streamdemand.allocate import (
    BudgetPolicy,
    PlannerState,
    closed_form_null,
    compare_schemes,
    lp_null_max,
    plan_horizon,
)
from streamdemand.bayes import (
    DemandPanel,
    MCMCConfig,
    NullModelSpec,
    fit_null_model,
    sample_prior,
)
from streamdemand.cli import main as cli_main
from streamdemand.cluster import cluster_purity, dtw_distance, kmeans_curves
from streamdemand.core import AffinityModel, CovariatePath, DemandCurve
from streamdemand.envelope import ChangePoints, EnvelopeFit, fit_changepoints
from streamdemand.estimate import (
    fit_count_regression,
    negbin_strata_pmf,
    negbin_strata_support_sum,
)
from streamdemand.rng import rng_from_seed
from streamdemand.core import simulate_segment_demand

from test_cluster import adsr_template, dtw_path_enumeration_oracle
from test_envelope import envelope_series, oracle_changepoints, random_integer_envelope


def report(line):
    print(f"\nPASS {line}")


class TestCriterion1CountingProcess:
    def test_counting_process_fidelity(self):
        t0 = time.monotonic()
        rng = rng_from_seed(101)
        reps = 1000
        for p in (0.1, 0.5, 0.9):
            theta = np.array([[p]])
            model = AffinityModel(theta, np.zeros((1, 0)))
            cov = CovariatePath(np.ones((4, 1)), np.zeros((4, 0)))
            for n in (10, 100, 1000):
                segment = frozenset(range(n))
                draws = [simulate_segment_demand(segment, model, cov, 0, rng)
                         for _ in range(reps)]
                se = np.sqrt(n * p * (1 - p) / reps)
                assert abs(np.mean(draws) - n * p) <= 3 * se, (p, n)
        elapsed = time.monotonic() - t0
        assert elapsed < 10.0
        report(f"criterion 1: segment means within 3 sigma for all 9 cells "
               f"({elapsed:.1f}s < 10s)")


class TestCriterion2StrataPmf:
    def test_sums_and_oracle(self):
        for y in (1, 3, 10):
            for p in (0.2, 0.5, 0.8):
                total = negbin_strata_support_sum(y, p, tol=1e-9)
                assert abs(total - 1.0) <= 1e-6, (y, p)
        import test_estimate

        checked = 0
        for n in range(1, 11):
            for y in range(1, n + 1):
                for p in (0.2, 0.5, 0.8):
                    want = test_estimate.strata_pmf_enumeration_oracle(n, y, p)
                    assert abs(negbin_strata_pmf(n, y, p) - want) <= 1e-12
                    checked += 1
        report(f"criterion 2: strata pmf sums to 1 +- 1e-6 and matches "
               f"enumeration on {checked} cells to 1e-12")


class TestCriterion3RegressionRecovery:
    def test_recovery_rates(self):
        t0 = time.monotonic()
        rng = rng_from_seed(103)
        T, reps = 200, 200
        theta, gamma, b0, omega = 0.8, 0.4, 2.0, 5.0
        hits = {"poisson": 0, "negbin": 0}
        for _ in range(reps):
            x = rng.random((T, 1))
            z = rng.random((T, 1))
            mu = np.exp(b0 + theta * x[:, 0] + gamma * z[:, 0])
            cov = CovariatePath(x, z)
            for family in ("poisson", "negbin"):
                if family == "poisson":
                    y = rng.poisson(mu)
                else:
                    y = rng.negative_binomial(omega, omega / (omega + mu))
                fit = fit_count_regression(DemandCurve("r", 0, y), cov, family)
                ok = (abs(fit.theta[0] - theta) <= 3 * fit.se_theta[0]
                      and abs(fit.gamma[0] - gamma) <= 3 * fit.se_gamma[0]
                      and abs(fit.intercept - b0) <= 3 * fit.se_intercept)
                hits[family] += int(ok)
        elapsed = time.monotonic() - t0
        for family, count in hits.items():
            assert count / reps >= 0.95, (family, count)
        assert elapsed < 60.0
        report(f"criterion 3: 3-SE coverage poisson {hits['poisson']}/200, "
               f"negbin {hits['negbin']}/200 ({elapsed:.1f}s < 60s)")


class TestCriterion4McmcCalibration:
    def test_simulation_based_calibration(self):
        t0 = time.monotonic()
        master = rng_from_seed(20260808)
        T, J = 60, 2
        spec = NullModelSpec(artists=("a",), segments_per_artist=(J,),
                             mu_x=[0.5], scale_x=[1.0], mu_z=[0.5], scale_z=[1.0])
        ranks = []
        for rep in range(50):
            rng = master.spawn(1)[0]
            x = rng.random((T, 1))
            z = rng.random((T, 1))
            truth = sample_prior(spec, rng)
            curves = []
            for j in range(J):
                lp = np.clip(truth["theta"][j, 0] * x[:, 0]
                             + truth["gamma"][j, 0] * z[:, 0], -30, 30)
                mu = np.exp(lp)
                w = truth["omega"][j]
                curves.append(DemandCurve("s", j,
                                          rng.negative_binomial(w, w / (w + mu))))
            panel = DemandPanel(tuple(curves), ("a",) * J, CovariatePath(x, z))
            cfg = MCMCConfig(chains=2, warmup=1000, draws=1000,
                             seed=1000 + rep, thin=4)
            draws = fit_null_model(panel, spec, cfg)
            for key in ("theta", "gamma", "omega"):
                pool = draws.pooled(key).reshape(draws.pooled(key).shape[0], -1)
                tr = truth[key].ravel()
                for jj in range(pool.shape[1]):
                    ranks.append(np.sum(pool[:, jj] < tr[jj]) / (pool.shape[0] + 1))
        counts, _ = np.histogram(ranks, bins=10, range=(0, 1))
        expected = len(ranks) / 10
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        p_value = float(1 - stats.chi2.cdf(chi2, 9))
        elapsed = time.monotonic() - t0
        assert p_value > 0.01, (chi2, p_value)
        assert elapsed < 900.0
        report(f"criterion 4: SBC rank uniformity chi2={chi2:.2f} "
               f"p={p_value:.3f} > 0.01 ({elapsed:.0f}s < 900s)")


class TestCriterion5ChangePoints:
    def test_noiseless_exact_recovery(self):
        rng = rng_from_seed(105)
        for _ in range(20):
            knots, nodes = random_integer_envelope(rng, T=40)
            y = envelope_series(40, knots, nodes)
            taus = fit_changepoints(DemandCurve("s", 0, y))
            assert taus.as_tuple() == knots
        report("criterion 5a: exact knot recovery on 20 random noiseless "
               "configurations (T=40)")

    def test_noisy_recovery_rate(self):
        rng = rng_from_seed(106)
        knots = (5, 15, 25, 39)
        base = envelope_series(40, knots, (700 * 14, 600 * 14, 140 * 14)).astype(float)
        sigma = 0.01 * base.max()
        hits = 0
        for _ in range(100):
            noisy = np.clip(np.rint(base + rng.normal(0, sigma, 40)), 0, None)
            taus = fit_changepoints(DemandCurve("s", 0, noisy.astype(int)))
            if all(abs(t - k) <= 1 for t, k in zip(taus.as_tuple()[:3], knots[:3])):
                hits += 1
        assert hits >= 95
        report(f"criterion 5b: knots within +-1 week in {hits}/100 noisy "
               "replications (1% noise)")

    def test_search_equals_exhaustive_oracle(self):
        rng = rng_from_seed(107)
        for T in (12, 20, 31, 45, 60):
            knots, nodes = random_integer_envelope(rng, T=T)
            base = envelope_series(T, knots, nodes).astype(float)
            noisy = np.clip(np.rint(base + rng.normal(0, 0.05 * base.max(), T)),
                            0, None)
            got = fit_changepoints(DemandCurve("s", 0, noisy.astype(int)))
            want = oracle_changepoints(noisy)
            assert got.as_tuple()[:3] == want, T
        report("criterion 5c: prefix-sum search equals exhaustive oracle "
               "for T in {12, 20, 31, 45, 60}")


class TestCriterion6Optimizer:
    def test_lp_oracle_and_closed_form(self):
        from test_allocate import vertex_oracle

        rng = rng_from_seed(108)
        flagged, infeasible_total = 0, 0
        for _ in range(1000):
            C = int(rng.integers(1, 6))
            theta = rng.random(C)
            gz = float(rng.random() * 0.95)
            budget = float(rng.random() * 2.0)
            _, lp_obj = lp_null_max(theta, [gz], [1.0], budget)
            assert abs(lp_obj - vertex_oracle(theta, gz, budget)) <= 1e-12
            x_closed = closed_form_null(theta, [gz], [1.0], budget)
            assert abs(theta @ x_closed - min(budget, 1.0 - gz)) <= 1e-12
            rep = compare_schemes(theta, [gz], [1.0], budget)
            over_budget = float(x_closed.sum()) > budget + 1e-9
            assert rep["closed_budget_violation"] == over_budget
            flagged += int(rep["closed_budget_violation"])
            infeasible_total += int(over_budget)
        assert flagged == infeasible_total
        report(f"criterion 6: 1000 LP instances match the vertex oracle; "
               f"pseudo-inverse identity to 1e-12; {flagged} budget "
               "violations all flagged")

    def test_lp_dominates_feasible_closed_form(self):
        rng = rng_from_seed(109)
        for _ in range(1000):
            C = int(rng.integers(1, 6))
            theta = rng.random(C)
            gz = float(rng.random() * 0.95)
            budget = float(rng.random() * 2.0)
            rep = compare_schemes(theta, [gz], [1.0], budget)
            if not rep["closed_budget_violation"]:
                assert rep["lp"]["objective"] >= \
                    rep["closed_form"]["objective"] - 1e-9
        report("criterion 6b: LP objective dominates every budget-feasible "
               "closed-form allocation (1000 instances)")


class TestCriterion7ForcedPlan:
    def test_constant_spend_within_phase(self):
        fit = EnvelopeFit(ChangePoints(5, 15, 25, 39),
                          np.array([700.0, 600.0, 140.0]), omega=5.0)
        T = 40
        rng = rng_from_seed(110)
        state = PlannerState(theta=[[0.04, 0.07]], gamma=[[0.05]], sizes=[1500],
                             z=rng.random((T, 1)) * 0.4, envelope=fit)
        policy = BudgetPolicy(rng.random(T) * 0.5)
        path = plan_horizon(policy, state, scheme="forced")
        for weeks in fit.change_points.phase_weeks():
            first = path.spend[weeks[0]]
            for t in weeks:
                assert np.array_equal(path.spend[t], first)
        report("criterion 7: forced-scheme spend exactly constant within "
               "each of the four phases")


class TestCriterion8Clustering:
    def test_purity_over_seeds(self):
        rng = rng_from_seed(111)
        curves, labels = [], []
        for label, scale in enumerate((1.0, 3.0, 9.0)):
            template = adsr_template(30, peak=100.0 * scale)
            for _ in range(20):
                noise = rng.normal(0, 0.05 * template.max(), 30)
                curves.append(np.clip(template + noise, 0, None))
                labels.append(label)
        purities = []
        for seed in range(5):
            clusters = kmeans_curves(curves, k=3, seed=seed)
            purities.append(cluster_purity(clusters, labels))
        assert min(purities) >= 0.9, purities
        report(f"criterion 8a: purity {min(purities):.2f}..{max(purities):.2f} "
               ">= 0.9 across 5 seeds")

    def test_dtw_matches_enumeration(self):
        rng = rng_from_seed(112)
        checked = 0
        for _ in range(100):
            a = rng.integers(0, 9, size=int(rng.integers(1, 7))).astype(float)
            b = rng.integers(0, 9, size=int(rng.integers(1, 7))).astype(float)
            assert dtw_distance(a, b) == pytest.approx(
                dtw_path_enumeration_oracle(a, b), abs=1e-12)
            checked += 1
        report(f"criterion 8b: DTW equals exhaustive path enumeration on "
               f"{checked} short-series pairs")


class TestCriterion9EndToEndDeterminism:
    SCENARIO = {
        "song_id": "syn-e2e",
        "artist_id": "artist-x",
        "release_date": "2021-01-04",
        "population": {"size": 1500, "horizon": 40},
        "segments": [{"label": "dsp-a", "members": [0, 900]},
                     {"label": "dsp-b", "members": [700, 1500]}],
        "link": "identity-clipped",
        "effects": {"theta": [[0.9], [0.7]], "gamma": [[0.05], [0.02]]},
        "covariates": {
            "x": [{"kind": "adsr", "knots": [6, 14, 26], "peak": 0.6,
                   "sustain": 0.5, "tail": 0.2}],
            "z": [{"kind": "ramp", "from": 0.1, "to": 0.5}],
        },
    }

    def _run_pipeline(self, root):
        root.mkdir()
        scenario = root / "scenario.json"
        scenario.write_text(json.dumps(self.SCENARIO, sort_keys=True))
        sim = root / "sim.csv"
        store = root / "store"
        fit_out = root / "fit.json"
        plan_out = root / "plan.json"
        assert cli_main(["--seed", "7", "simulate", "--scenario", str(scenario),
                         "-o", str(sim)]) == 0
        assert cli_main(["--store", str(store), "ingest", "--csv", str(sim)]) == 0
        assert cli_main(["--store", str(store), "--seed", "7", "fit-adsr",
                         "--song", "syn-e2e", "-o", str(fit_out)]) == 0
        fit_id = json.loads(fit_out.read_text())["fit_id"]
        assert cli_main(["--store", str(store), "optimize", "--fit", fit_id,
                         "--scheme", "forced", "--budget", "5",
                         "-o", str(plan_out)]) == 0
        return {
            "sim": sim.read_bytes(),
            "fit": fit_out.read_bytes(),
            "plan": plan_out.read_bytes(),
            "store_fits": {k: (store / "fits" / f"{k}.json").read_bytes()
                           for k in [fit_id]},
        }

    def test_pipeline_byte_identical(self, tmp_path):
        a = self._run_pipeline(tmp_path / "run1")
        b = self._run_pipeline(tmp_path / "run2")
        assert a["sim"] == b["sim"]
        assert a["fit"] == b["fit"]
        assert a["plan"] == b["plan"]
        assert a["store_fits"] == b["store_fits"]
        report("criterion 9: simulate -> ingest -> fit-adsr -> optimize "
               "byte-identical across two seeded runs")

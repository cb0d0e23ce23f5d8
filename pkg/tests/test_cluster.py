import numpy as np
import pytest

from streamdemand.cluster import (
    cluster_purity,
    dba_barycenter,
    dtw_distance,
    inertia_of,
    kmeans_curves,
)
from streamdemand.errors import DomainError
from streamdemand.rng import rng_from_seed


def dtw_path_enumeration_oracle(a, b):
    """Minimum warped cost over every monotone path (lengths <= 6 only)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = len(a), len(b)
    best = [np.inf]

    def walk(i, j, acc):
        acc = acc + (a[i] - b[j]) ** 2
        if acc >= best[0]:
            return
        if i == n - 1 and j == m - 1:
            best[0] = acc
            return
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, acc)
        if i + 1 < n:
            walk(i + 1, j, acc)
        if j + 1 < m:
            walk(i, j + 1, acc)

    walk(0, 0, 0.0)
    return float(np.sqrt(best[0]))


def adsr_template(T, peak, knots=(0.15, 0.4, 0.7)):
    a, s, d = (int(k * T) for k in knots)
    xs = [0, a, s, d, T - 1]
    vs = [0.0, peak, 0.85 * peak, 0.3 * peak, 0.0]
    return np.interp(np.arange(T, dtype=float), xs, vs)


class TestDtwDistance:
    def test_zero_self_distance(self):
        rng = rng_from_seed(0)
        for _ in range(20):
            a = rng.random(int(rng.integers(1, 15)))
            assert dtw_distance(a, a) == 0.0

    def test_constant_offset(self):
        # diagonal path, three unit costs
        assert dtw_distance([0, 0, 0], [1, 1, 1]) == pytest.approx(np.sqrt(3.0))

    def test_warp_absorbs_repeat(self):
        assert dtw_distance([1, 2, 3], [1, 2, 2, 3]) == 0.0

    def test_symmetry_and_nonnegativity(self):
        rng = rng_from_seed(1)
        for _ in range(50):
            a = rng.random(int(rng.integers(1, 12)))
            b = rng.random(int(rng.integers(1, 12)))
            d_ab = dtw_distance(a, b)
            assert d_ab >= 0
            assert d_ab == pytest.approx(dtw_distance(b, a), abs=1e-12)

    def test_matches_path_enumeration_oracle(self):
        rng = rng_from_seed(2)
        for _ in range(60):
            a = rng.integers(0, 10, size=int(rng.integers(1, 7))).astype(float)
            b = rng.integers(0, 10, size=int(rng.integers(1, 7))).astype(float)
            assert dtw_distance(a, b) == pytest.approx(
                dtw_path_enumeration_oracle(a, b), abs=1e-12)

    def test_empty_series_rejected(self):
        with pytest.raises(DomainError):
            dtw_distance([], [1.0])


class TestDbaBarycenter:
    def test_single_curve_fixed_point(self):
        curve = np.array([0.0, 3.0, 7.0, 2.0])
        assert np.array_equal(dba_barycenter([curve]), curve)

    def test_identical_curves_fixed_point(self):
        curve = np.array([0.0, 3.0, 7.0, 2.0, 1.0])
        out = dba_barycenter([curve, curve.copy(), curve.copy()])
        assert np.allclose(out, curve)

    def test_recovers_template_under_noise(self):
        rng = rng_from_seed(3)
        template = adsr_template(30, peak=100.0)
        curves = [np.clip(template + rng.normal(0, 2.0, 30), 0, None)
                  for _ in range(15)]
        bary = dba_barycenter(curves)
        rmse = np.sqrt(np.mean((bary - template) ** 2))
        assert rmse <= 0.05 * template.max()

    def test_inertia_non_increasing_in_iterations(self):
        rng = rng_from_seed(4)
        template = adsr_template(24, peak=50.0)
        curves = [np.clip(template + rng.normal(0, 4.0, 24), 0, None)
                  for _ in range(8)]
        inertias = [inertia_of(curves, dba_barycenter(curves, iterations=i))
                    for i in range(1, 6)]
        for early, late in zip(inertias, inertias[1:]):
            assert late <= early + 1e-9

    def test_median_output_length(self):
        rng = rng_from_seed(5)
        curves = [rng.random(n) for n in (10, 14, 20)]
        assert dba_barycenter(curves).shape[0] == 14


class TestKmeansCurves:
    def _labeled_corpus(self, rng, per_class=20, T=30):
        curves, labels = [], []
        for label, scale in enumerate((1.0, 3.0, 9.0)):
            template = adsr_template(T, peak=100.0 * scale)
            for _ in range(per_class):
                noise = rng.normal(0, 0.05 * template.max(), T)
                curves.append(np.clip(template + noise, 0, None))
                labels.append(label)
        return curves, np.array(labels)

    def test_purity_on_separated_templates(self):
        rng = rng_from_seed(6)
        curves, labels = self._labeled_corpus(rng)
        for seed in (0, 1):
            clusters = kmeans_curves(curves, k=3, seed=seed)
            assert cluster_purity(clusters, labels) >= 0.9

    def test_k_equals_n(self):
        rng = rng_from_seed(7)
        curves = [rng.random(8) * (i + 1) for i in range(5)]
        clusters = kmeans_curves(curves, k=5, seed=0)
        sizes = sorted(len(c.members) for c in clusters)
        assert sizes == [1, 1, 1, 1, 1]
        assert all(c.inertia == pytest.approx(0.0, abs=1e-18) for c in clusters)

    def test_k_one_gives_global_barycenter(self):
        rng = rng_from_seed(8)
        curves = [rng.random(10) for _ in range(6)]
        clusters = kmeans_curves(curves, k=1, seed=3)
        assert len(clusters) == 1
        assert np.allclose(clusters[0].centroid, dba_barycenter(curves))
        assert sorted(clusters[0].members) == list(range(6))

    def test_k_too_large(self):
        with pytest.raises(DomainError):
            kmeans_curves([np.ones(4)], k=2, seed=0)

    def test_deterministic_given_seed(self):
        rng = rng_from_seed(9)
        curves, _ = self._labeled_corpus(rng, per_class=6, T=20)
        a = kmeans_curves(curves, k=3, seed=42)
        b = kmeans_curves(curves, k=3, seed=42)
        assert [c.members for c in a] == [c.members for c in b]
        for ca, cb in zip(a, b):
            assert np.array_equal(ca.centroid, cb.centroid)

    def test_every_curve_assigned_once(self):
        rng = rng_from_seed(10)
        curves, _ = self._labeled_corpus(rng, per_class=5, T=15)
        clusters = kmeans_curves(curves, k=3, seed=1)
        seen = sorted(i for c in clusters for i in c.members)
        assert seen == list(range(len(curves)))

    def test_inertia_definition(self):
        rng = rng_from_seed(11)
        curves, _ = self._labeled_corpus(rng, per_class=4, T=12)
        clusters = kmeans_curves(curves, k=2, seed=5)
        for cl in clusters:
            member_curves = [curves[i] for i in cl.members]
            want = sum(dtw_distance(c, cl.centroid) ** 2 for c in member_curves)
            assert cl.inertia == pytest.approx(want, rel=1e-12)

    def test_normalize_clusters_on_shape_not_magnitude(self):
        rng = rng_from_seed(12)
        T = 24
        early = adsr_template(T, peak=1.0, knots=(0.1, 0.25, 0.45))
        late = adsr_template(T, peak=1.0, knots=(0.45, 0.6, 0.8))
        curves, shape_labels = [], []
        for shape_label, base in enumerate((early, late)):
            for scale in (1.0, 50.0):
                for _ in range(5):
                    noise = rng.normal(0, 0.02, T)
                    curves.append(np.clip(base * scale + noise * scale, 0, None))
                    shape_labels.append(shape_label)
        clusters = kmeans_curves(curves, k=2, seed=0, normalize=True)
        assert cluster_purity(clusters, np.array(shape_labels)) == 1.0

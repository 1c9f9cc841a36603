import itertools

import numpy as np
import pytest

from dayahead.clustering import ClusterModel, assign, encode_sequence, fit_kmeans
from dayahead.core import DayMatrix, GeometryError, InsufficientDataError, ParameterError

from conftest import make_days


def brute_force_inertia(X: np.ndarray, k: int) -> float:
    """Exhaustive optimum over all label assignments (oracle, small n only)."""
    n = X.shape[0]
    best = np.inf
    for labels in itertools.product(range(k), repeat=n):
        labels = np.asarray(labels)
        sse = 0.0
        for j in range(k):
            members = X[labels == j]
            if members.size:
                sse += ((members - members.mean(axis=0)) ** 2).sum()
        best = min(best, sse)
    return best


class TestFitKmeans:
    def test_two_well_separated_pairs(self):
        days = make_days([0.0, 0.1, 10.0, 10.1])
        model = fit_kmeans(days, 2, seed=0)
        np.testing.assert_allclose(sorted(model.centroids.ravel()), [0.05, 10.05])
        # by hand: 4 points, each 0.05 from its centroid -> 4 * 0.05^2
        assert model.inertia == pytest.approx(0.01, abs=1e-12)
        X = np.array([[0.0], [0.1], [10.0], [10.1]])
        assert model.inertia == pytest.approx(brute_force_inertia(X, 2), abs=1e-12)

    def test_k_equals_n_gives_zero_inertia(self):
        days = make_days([1.0, 2.0, 4.0, 8.0])
        model = fit_kmeans(days, 4, seed=7)
        assert model.inertia == 0.0
        np.testing.assert_allclose(sorted(model.centroids.ravel()), [1, 2, 4, 8])

    def test_k1_is_mean_day(self):
        days = make_days([[1.0, 5.0], [3.0, 7.0]], h=2)
        model = fit_kmeans(days, 1, seed=0)
        np.testing.assert_allclose(model.centroids[0], [2.0, 6.0])

    def test_determinism_bit_for_bit(self):
        rng = np.random.default_rng(3)
        days = make_days(rng.normal(size=(30, 6)), h=3)
        a = fit_kmeans(days, 4, seed=42)
        b = fit_kmeans(days, 4, seed=42)
        assert np.array_equal(a.centroids, b.centroids)
        assert a.inertia == b.inertia

    def test_centroids_are_cluster_means(self, rng):
        days = make_days(rng.normal(size=(40, 8)), h=4)
        model = fit_kmeans(days, 5, seed=1)
        labels = np.array([assign(model, d) for d in days])
        X = np.stack([d.flatten() for d in days])
        for j in range(5):
            np.testing.assert_allclose(
                model.centroids[j], X[labels == j].mean(axis=0), atol=1e-9
            )

    def test_inertia_nonincreasing_in_max_iter(self, rng):
        days = make_days(rng.normal(size=(60, 4)), h=2)
        inertias = [
            fit_kmeans(days, 6, seed=9, max_iter=m, n_init=1).inertia
            for m in (1, 2, 3, 5, 10, 300)
        ]
        for earlier, later in zip(inertias, inertias[1:]):
            assert later <= earlier + 1e-12

    def test_duplicate_points_and_empty_cluster_repair(self):
        days = make_days([0.0, 0.0, 0.0, 1.0])
        model = fit_kmeans(days, 3, seed=0)
        assert model.k == 3
        assert model.inertia == pytest.approx(0.0, abs=1e-20)

    def test_infeasible_k(self):
        with pytest.raises(InsufficientDataError, match="infeasible k"):
            fit_kmeans(make_days([1.0, 2.0]), 3, seed=0)

    def test_bad_parameters(self):
        days = make_days([1.0, 2.0])
        with pytest.raises(ParameterError):
            fit_kmeans(days, 0, seed=0)
        with pytest.raises(ParameterError):
            fit_kmeans(days, 1, seed=0, max_iter=0)

    def test_mixed_geometry_rejected(self):
        days = make_days([1.0, 2.0]) + [DayMatrix([[1.0], [2.0]])]
        with pytest.raises(GeometryError):
            fit_kmeans(days, 2, seed=0)

    def test_planted_partition_recovery_rate(self):
        # inter-cluster gap 10x the intra-cluster spread
        rng = np.random.default_rng(2024)
        centers = np.array([0.0, 10.0, 20.0])
        truth = np.repeat([0, 1, 2], 8)
        X = centers[truth] + rng.normal(0.0, 0.3, size=truth.size)
        days = make_days(X)
        hits = 0
        for seed in range(100):
            model = fit_kmeans(days, 3, seed=seed)
            labels = np.array([assign(model, d) for d in days])
            # planted partition recovered iff labels are a relabeling of truth
            mapping = {}
            ok = True
            for t, lab in zip(truth, labels):
                mapping.setdefault(t, lab)
                if mapping[t] != lab:
                    ok = False
                    break
            hits += ok and len(set(mapping.values())) == 3
        assert hits >= 95


class TestAssign:
    def test_nearest_centroid(self):
        model = ClusterModel(centroids=np.array([[0.05], [10.05]]), k=2, h=1, p=1)
        assert assign(model, DayMatrix([[0.2]])) == 0
        assert assign(model, DayMatrix([[9.0]])) == 1

    def test_exact_centroid_match(self):
        model = ClusterModel(centroids=np.array([[1.0, 2.0], [3.0, 4.0]]), k=2, h=2, p=1)
        assert assign(model, DayMatrix([[3.0], [4.0]])) == 1

    def test_tie_goes_to_lowest_index(self):
        model = ClusterModel(centroids=np.array([[0.0], [2.0]]), k=2, h=1, p=1)
        assert assign(model, DayMatrix([[1.0]])) == 0

    def test_geometry_mismatch(self):
        model = ClusterModel(centroids=np.array([[0.0, 0.0]]), k=1, h=2, p=1)
        with pytest.raises(GeometryError):
            assign(model, DayMatrix([[1.0]]))

    def test_fitted_centroids_assign_to_themselves(self, rng):
        days = make_days(rng.normal(size=(20, 3)), h=3)
        model = fit_kmeans(days, 4, seed=5)
        for j in range(4):
            day = DayMatrix(model.centroids[j].reshape(3, 1))
            assert assign(model, day) == j


class TestEncodeSequence:
    def test_alternating_days(self):
        days = make_days([0.0, 10.0, 0.1, 10.1])
        model = fit_kmeans(days, 2, seed=0)
        seq = encode_sequence(model, days)
        assert seq == [assign(model, d) for d in days]
        assert seq[0] == seq[2] and seq[1] == seq[3] and seq[0] != seq[1]

    def test_single_day(self):
        days = make_days([1.0, 5.0])
        model = fit_kmeans(days, 2, seed=0)
        assert len(encode_sequence(model, days[:1])) == 1

    def test_all_same_cluster(self):
        days = make_days([0.0, 0.2, 0.1, 5.0])
        model = fit_kmeans(days, 2, seed=0)
        near_zero = [d for d in days[:3]]
        seq = encode_sequence(model, near_zero)
        assert len(set(seq)) == 1

    def test_empty_input(self):
        model = ClusterModel(centroids=np.array([[0.0]]), k=1, h=1, p=1)
        with pytest.raises(InsufficientDataError):
            encode_sequence(model, [])

import numpy as np
import pytest

from riskscene.data import AgentCategory, SceneWindow
from riskscene.errors import ConfigError, ValidationError
from riskscene.patterns import (
    DEFAULT_CLUSTER_COUNTS,
    assign_pattern,
    fit_patterns,
    kmeans,
    normalize_trajectory,
    normalized_laplacian,
    patterns_from_arrays,
    patterns_to_arrays,
    rbf_affinity,
    spectral_cluster,
)


def pair_agreement(labels_a, labels_b):
    """Oracle: adjusted pair-counting agreement (1.0 iff identical partitions
    up to label permutation). Counts co-membership agreement over all pairs."""
    n = len(labels_a)
    same_a = np.equal.outer(labels_a, labels_a)
    same_b = np.equal.outer(labels_b, labels_b)
    iu = np.triu_indices(n, k=1)
    return float(np.mean(same_a[iu] == same_b[iu]))


def two_group_trajectories(rng, n_per_group=8, t_obs=4, spread=0.05):
    """Straight trajectories in two well-separated direction groups."""
    groups = []
    labels = []
    for g, heading in enumerate((0.0, np.pi / 2)):
        for _ in range(n_per_group):
            speed = 1.0 + spread * rng.standard_normal()
            angle = heading + spread * rng.standard_normal()
            step = speed * np.array([np.cos(angle), np.sin(angle)])
            start = rng.uniform(-20, 20, 2)
            pts = start + np.arange(t_obs)[:, None] * step
            groups.append(pts)
            labels.append(g)
    return groups, np.array(labels)


def window_from_trajectories(trajs, category, small_map, t_pred=6):
    from riskscene.data import AgentTrack

    tracks = []
    for i, obs in enumerate(trajs):
        full = np.vstack([obs, np.tile(obs[-1], (t_pred, 1))])
        tracks.append(
            AgentTrack(
                agent_id=f"a{i}",
                category=category,
                frames=np.arange(len(full)),
                positions=full,
            )
        )
    return SceneWindow(tracks=tracks, map=small_map, t_obs=len(trajs[0]), t_pred=t_pred, fps=2.0)


class TestAffinity:
    def test_symmetric_unit_diagonal_in_range(self):
        rng = np.random.default_rng(0)
        vectors = rng.normal(size=(12, 8))
        w, bandwidth = rbf_affinity(vectors)
        assert bandwidth > 0
        np.testing.assert_allclose(w, w.T, atol=1e-15)
        np.testing.assert_allclose(np.diag(w), 1.0, atol=1e-15)
        assert np.all(w > 0) and np.all(w <= 1.0)

    def test_laplacian_eigenvalues_in_0_2(self):
        rng = np.random.default_rng(1)
        for trial in range(20):
            vectors = rng.normal(size=(rng.integers(4, 15), 6))
            w, _ = rbf_affinity(vectors)
            eigvals = np.linalg.eigvalsh(normalized_laplacian(w))
            assert eigvals.min() > -1e-8
            assert eigvals.max() < 2.0 + 1e-8


class TestSpectralClustering:
    def test_recovers_two_planted_groups(self):
        rng = np.random.default_rng(3)
        trajs, truth = two_group_trajectories(rng)
        vectors = np.stack([normalize_trajectory(t) for t in trajs])
        labels, _ = spectral_cluster(vectors, k=2, seed=0)
        assert pair_agreement(labels, truth) == 1.0

    def test_identical_trajectories_single_cluster(self):
        pts = np.tile(np.arange(4)[:, None] * [1.0, 0.0], (1, 1))
        vectors = np.stack([normalize_trajectory(pts)] * 5)
        labels, _ = spectral_cluster(vectors, k=1, seed=0)
        assert set(labels) == {0}
        centroid = vectors[labels == 0].mean(axis=0)
        assert np.max(np.abs(vectors - centroid)) < 1e-12

    def test_permutation_invariant_partition(self):
        rng = np.random.default_rng(5)
        trajs, _ = two_group_trajectories(rng)
        vectors = np.stack([normalize_trajectory(t) for t in trajs])
        labels = spectral_cluster(vectors, k=2, seed=0)[0]
        perm = rng.permutation(len(vectors))
        labels_perm = spectral_cluster(vectors[perm], k=2, seed=0)[0]
        assert pair_agreement(labels_perm, labels[perm]) == 1.0


class TestKMeans:
    def test_exact_on_separated_blobs(self):
        rng = np.random.default_rng(0)
        a = rng.normal(0, 0.1, (10, 3))
        b = rng.normal(10, 0.1, (12, 3))
        points = np.vstack([a, b])
        labels, centers = kmeans(points, 2, seed=0)
        truth = np.array([0] * 10 + [1] * 12)
        assert pair_agreement(labels, truth) == 1.0
        assert centers.shape == (2, 3)

    def test_deterministic(self):
        rng = np.random.default_rng(2)
        points = rng.normal(size=(30, 4))
        l1, c1 = kmeans(points, 3, seed=7)
        l2, c2 = kmeans(points, 3, seed=7)
        assert np.array_equal(l1, l2)
        assert np.array_equal(c1, c2)


class TestFitAssign:
    def test_default_cluster_counts(self):
        assert DEFAULT_CLUSTER_COUNTS[AgentCategory.PEDESTRIAN] == 6
        assert DEFAULT_CLUSTER_COUNTS[AgentCategory.CAR] == 3
        assert DEFAULT_CLUSTER_COUNTS[AgentCategory.RIDER] == 3

    def test_too_few_trajectories_names_category(self, small_map):
        rng = np.random.default_rng(0)
        trajs, _ = two_group_trajectories(rng, n_per_group=2)
        window = window_from_trajectories(trajs, AgentCategory.PEDESTRIAN, small_map)
        with pytest.raises(ConfigError, match="pedestrian"):
            fit_patterns([window])  # default k=6 > 4 trajectories

    def test_absent_category_is_skipped(self, small_map):
        rng = np.random.default_rng(0)
        trajs, _ = two_group_trajectories(rng)
        window = window_from_trajectories(trajs, AgentCategory.CAR, small_map)
        model = fit_patterns([window], cluster_counts={AgentCategory.CAR: 2})
        assert AgentCategory.CAR in model.per_category
        assert AgentCategory.RIDER not in model.per_category
        with pytest.raises(ConfigError, match="rider"):
            assign_pattern(trajs[0], AgentCategory.RIDER, model)

    def test_centroid_maps_to_own_index(self, small_map):
        rng = np.random.default_rng(4)
        trajs, _ = two_group_trajectories(rng)
        window = window_from_trajectories(trajs, AgentCategory.CAR, small_map)
        model = fit_patterns([window], cluster_counts={AgentCategory.CAR: 2})
        cp = model.per_category[AgentCategory.CAR]
        for idx in range(cp.k):
            centroid_pts = cp.centroids[idx].reshape(-1, 2)
            assert assign_pattern(centroid_pts, AgentCategory.CAR, model) == idx

    def test_assignment_ignores_other_tracks(self, small_map):
        rng = np.random.default_rng(4)
        trajs, _ = two_group_trajectories(rng)
        window = window_from_trajectories(trajs, AgentCategory.CAR, small_map)
        model = fit_patterns([window], cluster_counts={AgentCategory.CAR: 2})
        # the op takes one track only, so this is a pure-function check
        a = assign_pattern(trajs[0], AgentCategory.CAR, model)
        b = assign_pattern(trajs[0], AgentCategory.CAR, model)
        assert a == b

    def test_midpoint_resolves_to_nearer_centroid(self, small_map):
        rng = np.random.default_rng(4)
        trajs, _ = two_group_trajectories(rng)
        window = window_from_trajectories(trajs, AgentCategory.CAR, small_map)
        model = fit_patterns([window], cluster_counts={AgentCategory.CAR: 2})
        cp = model.per_category[AgentCategory.CAR]
        # 40/60 interpolation between centroids; nearer one must win
        blend = 0.6 * cp.centroids[0] + 0.4 * cp.centroids[1]
        pts = blend.reshape(-1, 2)
        # oracle: nearest centroid by euclidean distance
        d = np.linalg.norm(cp.centroids - normalize_trajectory(pts), axis=1)
        assert assign_pattern(pts, AgentCategory.CAR, model) == int(np.argmin(d)) == 0

    def test_translation_invariance(self, small_map):
        rng = np.random.default_rng(4)
        trajs, _ = two_group_trajectories(rng)
        window = window_from_trajectories(trajs, AgentCategory.CAR, small_map)
        model = fit_patterns([window], cluster_counts={AgentCategory.CAR: 2})
        base = assign_pattern(trajs[0], AgentCategory.CAR, model)
        shifted = trajs[0] + np.array([123.0, -55.0])
        assert assign_pattern(shifted, AgentCategory.CAR, model) == base

    def test_wrong_length_rejected(self, small_map):
        rng = np.random.default_rng(4)
        trajs, _ = two_group_trajectories(rng)
        window = window_from_trajectories(trajs, AgentCategory.CAR, small_map)
        model = fit_patterns([window], cluster_counts={AgentCategory.CAR: 2})
        with pytest.raises(ValidationError, match="shape"):
            assign_pattern(trajs[0][:2], AgentCategory.CAR, model)

    def test_round_trip_through_arrays(self, small_map):
        rng = np.random.default_rng(4)
        trajs, _ = two_group_trajectories(rng)
        window = window_from_trajectories(trajs, AgentCategory.CAR, small_map)
        model = fit_patterns([window], cluster_counts={AgentCategory.CAR: 2})
        back = patterns_from_arrays(patterns_to_arrays(model))
        assert back.t_obs == model.t_obs
        cp0 = model.per_category[AgentCategory.CAR]
        cp1 = back.per_category[AgentCategory.CAR]
        assert cp0.k == cp1.k
        assert np.array_equal(cp0.centroids, cp1.centroids)

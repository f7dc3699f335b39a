"""Moving-pattern discovery: normalized spectral clustering per agent category.

Observed trajectories are made translation-invariant (first point subtracted)
and flattened to 2*t_obs vectors, so clusters group *motions* rather than
locations. The affinity uses an RBF kernel exp(-d^2 / (2*sigma)) with sigma
set to the median pairwise distance of the category. Cluster membership for
unseen trajectories is nearest-centroid in the flattened-trajectory space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data.types import AgentCategory
from .errors import ConfigError, ValidationError

DEFAULT_CLUSTER_COUNTS = {
    AgentCategory.PEDESTRIAN: 6,
    AgentCategory.CAR: 3,
    AgentCategory.RIDER: 3,
}

_KMEANS_MAX_ITER = 100


@dataclass
class CategoryPatterns:
    k: int
    bandwidth: float
    centroids: np.ndarray  # (k, 2*t_obs), translation-normalized


@dataclass
class PatternModel:
    t_obs: int
    per_category: dict  # AgentCategory -> CategoryPatterns

    @property
    def max_k(self) -> int:
        if not self.per_category:
            return 1
        return max(cp.k for cp in self.per_category.values())

    def cluster_count(self, category: AgentCategory) -> int:
        return self.per_category[category].k


def normalize_trajectory(points: np.ndarray) -> np.ndarray:
    """Subtract the first point and flatten to a 2*T vector."""
    points = np.asarray(points, dtype=np.float64)
    return (points - points[0]).ravel()


def rbf_affinity(vectors: np.ndarray, bandwidth: float | None = None):
    """(affinity, bandwidth): symmetric, unit diagonal, entries in (0, 1]."""
    d2 = np.sum((vectors[:, None, :] - vectors[None, :, :]) ** 2, axis=-1)
    if bandwidth is None:
        n = len(vectors)
        if n > 1:
            off = np.sqrt(d2[np.triu_indices(n, k=1)])
            bandwidth = float(np.median(off))
        else:
            bandwidth = 1.0
        bandwidth = max(bandwidth, 1e-12)
    w = np.exp(-d2 / (2.0 * bandwidth))
    return w, bandwidth


def normalized_laplacian(w: np.ndarray) -> np.ndarray:
    """D^-1/2 (D - W) D^-1/2; eigenvalues lie in [0, 2]."""
    deg = w.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(np.maximum(deg, 1e-300))
    lap = np.diag(deg) - w
    lsym = inv_sqrt[:, None] * lap * inv_sqrt[None, :]
    return 0.5 * (lsym + lsym.T)  # symmetrize rounding error


def _farthest_point_init(points: np.ndarray, k: int, rng) -> np.ndarray:
    n = len(points)
    chosen = [int(rng.integers(n))]
    d2 = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(d2))
        chosen.append(nxt)
        d2 = np.minimum(d2, np.sum((points - points[nxt]) ** 2, axis=1))
    return points[chosen].copy()


def kmeans(points: np.ndarray, k: int, seed: int = 0):
    """Deterministic Lloyd iterations with farthest-point seeding.

    Returns (labels, centers). Empty clusters are re-seeded with the point
    farthest from its current center.
    """
    rng = np.random.default_rng(seed)
    centers = _farthest_point_init(points, k, rng)
    labels = np.zeros(len(points), dtype=np.int64)
    for _ in range(_KMEANS_MAX_ITER):
        d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=-1)
        new_labels = np.argmin(d2, axis=1)
        for c in range(k):
            members = points[new_labels == c]
            if len(members) == 0:
                worst = int(np.argmax(np.min(d2, axis=1)))
                centers[c] = points[worst]
                new_labels[worst] = c
            else:
                centers[c] = members.mean(axis=0)
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
    return labels, centers


def spectral_cluster(vectors: np.ndarray, k: int, seed: int = 0):
    """Cluster row vectors into k groups; returns (labels, affinity)."""
    w, _ = rbf_affinity(vectors)
    lsym = normalized_laplacian(w)
    eigvals, eigvecs = np.linalg.eigh(lsym)
    order = np.argsort(eigvals)
    basis = eigvecs[:, order[:k]]
    norms = np.linalg.norm(basis, axis=1, keepdims=True)
    basis = basis / np.maximum(norms, 1e-12)
    labels, _ = kmeans(basis, k, seed=seed)
    return labels, w


def fit_patterns(windows, cluster_counts: dict | None = None, seed: int = 0) -> PatternModel:
    """Fit per-category pattern clusters from the observation segments.

    Categories absent from the data are skipped; categories present with
    fewer trajectories than their cluster count raise ConfigError.
    """
    if not windows:
        raise ValidationError("cannot fit patterns on an empty window list")
    t_obs = windows[0].t_obs
    counts = dict(DEFAULT_CLUSTER_COUNTS)
    if cluster_counts:
        counts.update(cluster_counts)

    by_category = {cat: [] for cat in AgentCategory}
    for window in windows:
        obs = window.observed()  # (t_obs, N, 2)
        for idx, track in enumerate(window.tracks):
            by_category[track.category].append(normalize_trajectory(obs[:, idx]))

    per_category = {}
    for cat in AgentCategory:
        trajs = by_category[cat]
        if not trajs:
            continue
        k = counts[cat]
        if len(trajs) < k:
            raise ConfigError(
                f"category {cat.value!r} has {len(trajs)} trajectories, "
                f"fewer than its {k} clusters"
            )
        vectors = np.stack(trajs)
        w, bandwidth = rbf_affinity(vectors)
        lsym = normalized_laplacian(w)
        eigvals, eigvecs = np.linalg.eigh(lsym)
        order = np.argsort(eigvals)
        basis = eigvecs[:, order[:k]]
        basis = basis / np.maximum(np.linalg.norm(basis, axis=1, keepdims=True), 1e-12)
        labels, _ = kmeans(basis, k, seed=seed)
        centroids = np.stack([vectors[labels == c].mean(axis=0) for c in range(k)])
        per_category[cat] = CategoryPatterns(k=k, bandwidth=bandwidth, centroids=centroids)
    return PatternModel(t_obs=t_obs, per_category=per_category)


def assign_pattern(observed_points: np.ndarray, category: AgentCategory, model: PatternModel) -> int:
    """Index of the nearest pattern centroid for one observation segment."""
    if category not in model.per_category:
        raise ConfigError(f"no fitted patterns for category {category.value!r}")
    points = np.asarray(observed_points, dtype=np.float64)
    if points.shape != (model.t_obs, 2):
        raise ValidationError(
            f"expected an observation segment of shape ({model.t_obs}, 2), got {points.shape}"
        )
    vec = normalize_trajectory(points)
    cp = model.per_category[category]
    d2 = np.sum((cp.centroids - vec) ** 2, axis=1)
    return int(np.argmin(d2))


def patterns_to_arrays(model: PatternModel) -> dict:
    """Flatten a PatternModel into named checkpoint arrays."""
    out = {"patterns/t_obs": np.array([model.t_obs], dtype=np.int64)}
    for cat, cp in model.per_category.items():
        out[f"patterns/{cat.value}/centroids"] = cp.centroids
        out[f"patterns/{cat.value}/bandwidth"] = np.array([cp.bandwidth])
    return out


def patterns_from_arrays(arrays: dict) -> PatternModel:
    t_obs = int(arrays["patterns/t_obs"][0])
    per_category = {}
    for cat in AgentCategory:
        key = f"patterns/{cat.value}/centroids"
        if key not in arrays:
            continue
        centroids = np.array(arrays[key], dtype=np.float64)
        bandwidth = float(arrays[f"patterns/{cat.value}/bandwidth"][0])
        per_category[cat] = CategoryPatterns(
            k=len(centroids), bandwidth=bandwidth, centroids=centroids
        )
    return PatternModel(t_obs=t_obs, per_category=per_category)

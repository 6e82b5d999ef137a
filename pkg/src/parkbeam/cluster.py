"""Spectral clustering of zone profiles with silhouette model selection.

Follows the standard normalized-cut construction: RBF affinity with the
median pairwise distance as bandwidth, symmetric normalized Laplacian,
eigenvectors from a cyclic Jacobi sweep (dense, deterministic), row
renormalization, then seeded k-means++ with restarts. Everything is pinned
for bit-reproducible labels given (X, k, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np


@dataclass
class FeatureMatrix:
    """Zone x feature matrix, z-scored per column with population sd."""

    zone_ids: list[str]
    feature_names: list[str]
    X: np.ndarray
    scaler_mean: np.ndarray
    scaler_sd: np.ndarray
    constant_columns: list[str] = field(default_factory=list)


@dataclass
class ClusterResult:
    labels: np.ndarray
    k: int
    silhouette: float
    seed: int
    eigenvalues: np.ndarray
    eigengaps: np.ndarray
    inertia: float


def build_features(
    zone_rsca: Mapping[str, Mapping[str, float]],
    ratios: Mapping[str, float],
    apps: Sequence[str],
) -> FeatureMatrix:
    """Assemble per-app RSCA plus the weekday/weekend ratio and z-score.

    Zones without a defined ratio are dropped with a warning; constant
    columns are zeroed and flagged.
    """
    import logging

    zone_ids = sorted(zone_rsca)
    kept = [z for z in zone_ids if z in ratios]
    dropped = [z for z in zone_ids if z not in ratios]
    if dropped:
        logging.getLogger(__name__).warning(
            "dropping %d zones without wd/we ratio: %s", len(dropped), dropped[:5]
        )
    if not kept:
        raise ValueError("no zones with both RSCA and ratio features")
    names = [f"rsca:{a}" for a in apps] + ["wd_we_ratio"]
    raw = np.zeros((len(kept), len(names)))
    for i, z in enumerate(kept):
        row = zone_rsca[z]
        for j, a in enumerate(apps):
            if a not in row:
                raise ValueError(f"zone {z} missing RSCA for app {a}")
            raw[i, j] = row[a]
        raw[i, -1] = ratios[z]
    mean = raw.mean(axis=0)
    sd = raw.std(axis=0)  # population convention
    constant = sd <= 1e-12 * np.maximum(np.abs(mean), 1.0)
    safe_sd = np.where(constant, 1.0, sd)
    X = (raw - mean) / safe_sd
    X[:, constant] = 0.0
    flagged = [names[j] for j in np.where(constant)[0]]
    return FeatureMatrix(kept, names, X, mean, sd, flagged)


def _jacobi_eigh(A: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi diagonalization of a symmetric matrix.

    Returns eigenvalues and orthonormal eigenvectors (columns), both in
    ascending eigenvalue order with deterministic tie handling.
    """
    n = A.shape[0]
    a = A.copy()
    v = np.eye(n)
    scale = np.abs(A).max() or 1.0
    for sweep in range(max_sweeps):
        off = math.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot_p = a[:, p].copy()
                rot_q = a[:, q].copy()
                a[:, p] = c * rot_p - s * rot_q
                a[:, q] = s * rot_p + c * rot_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    else:
        raise ArithmeticError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    w, v = w[order], v[:, order]
    # Canonical sign: largest-magnitude component positive (first on ties).
    for j in range(n):
        i = int(np.argmax(np.abs(v[:, j])))
        if v[i, j] < 0:
            v[:, j] = -v[:, j]
    return w, v


def _rbf_affinity(X: np.ndarray, sigma: float | None = None) -> tuple[np.ndarray, float]:
    diff = X[:, None, :] - X[None, :, :]
    d2 = np.sum(diff * diff, axis=2)
    if sigma is None:
        tri = d2[np.triu_indices(len(X), k=1)]
        sigma = math.sqrt(float(np.median(tri))) if len(tri) else 0.0
    if sigma <= 0.0:
        raise ValueError("all points identical: affinity bandwidth is zero")
    return np.exp(-d2 / (2.0 * sigma * sigma)), sigma


def _normalized_laplacian(A: np.ndarray, kind: str = "symmetric") -> np.ndarray:
    d = A.sum(axis=1)
    if kind == "symmetric":
        inv_sqrt = 1.0 / np.sqrt(d)
        return np.eye(len(A)) - inv_sqrt[:, None] * A * inv_sqrt[None, :]
    if kind == "unnormalized":
        return np.diag(d) - A
    raise ValueError(f"laplacian must be 'symmetric' or 'unnormalized', got {kind!r}")


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    centers = np.empty((k, X.shape[1]))
    first = int(rng.integers(n))
    centers[0] = X[first]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), r))
            idx = min(idx, n - 1)
        centers[j] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[j]) ** 2, axis=1))
    return centers


def _lloyd(X: np.ndarray, centers: np.ndarray, max_iter: int = 300):
    k = len(centers)
    labels = np.full(len(X), -1)
    for _ in range(max_iter):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)  # lowest index wins ties
        for j in range(k):
            members = new_labels == j
            if not members.any():
                # Re-seed an empty cluster with the worst-fit point.
                worst = int(np.argmax(d2[np.arange(len(X)), new_labels]))
                new_labels[worst] = j
                members = new_labels == j
            centers[j] = X[members].mean(axis=0)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    inertia = float(d2[np.arange(len(X)), labels].sum())
    return labels, inertia


def kmeans(X: np.ndarray, k: int, seed: int, restarts: int = 50):
    """Seeded k-means++ with restarts; best (inertia, restart index) wins."""
    best = None
    for restart in range(restarts):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, restart))))
        centers = _kmeans_pp_init(X, k, rng)
        labels, inertia = _lloyd(X, centers.copy())
        key = (inertia, restart)
        if best is None or key < best[0]:
            best = (key, labels)
    return _canonical_labels(best[1]), best[0][0]


def _canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Relabel clusters in order of first appearance for stable output."""
    mapping: dict[int, int] = {}
    out = np.empty_like(labels)
    for i, lab in enumerate(labels):
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out[i] = mapping[lab]
    return out


def spectral_cluster(
    features: FeatureMatrix | np.ndarray,
    k: int,
    seed: int = 0,
    sigma: float | None = None,
    laplacian: str = "symmetric",
) -> ClusterResult:
    """Normalized spectral clustering with deterministic seeded k-means.

    sigma defaults to the median pairwise distance; laplacian may be
    'symmetric' (default) or 'unnormalized'.
    """
    X = features.X if isinstance(features, FeatureMatrix) else np.asarray(features, dtype=float)
    n = len(X)
    if not 2 <= k <= n - 1:
        raise ValueError(f"k must be in [2, {n - 1}], got {k}")
    A, _sigma = _rbf_affinity(X, sigma)
    L = _normalized_laplacian(A, laplacian)
    w, v = _jacobi_eigh(L)
    U = v[:, :k]
    norms = np.linalg.norm(U, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    U = U / norms
    labels, inertia = kmeans(U, k, seed)
    score = silhouette(X, labels)
    gaps = np.diff(w)
    return ClusterResult(labels, k, score, seed, w, gaps, inertia)


def silhouette(X: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette score (b - a) / max(a, b); singletons score 0."""
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    clusters = np.unique(labels)
    if len(clusters) < 2:
        raise ValueError("silhouette needs at least two clusters")
    diff = X[:, None, :] - X[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    n = len(X)
    scores = np.zeros(n)
    for i in range(n):
        own = labels == labels[i]
        n_own = own.sum()
        if n_own == 1:
            scores[i] = 0.0
            continue
        a = dist[i, own].sum() / (n_own - 1)
        b = math.inf
        for c in clusters:
            if c == labels[i]:
                continue
            other = labels == c
            b = min(b, dist[i, other].mean())
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean())


def select_k(
    features: FeatureMatrix | np.ndarray,
    k_range: Sequence[int] = range(2, 9),
    seed: int = 0,
) -> tuple[int, list[dict]]:
    """Cluster for each k and pick the silhouette argmax (lowest k on ties).

    The full score table is returned for qualitative judgment alongside.
    """
    X = features.X if isinstance(features, FeatureMatrix) else np.asarray(features, dtype=float)
    n = len(X)
    ks = [k for k in k_range if 2 <= k <= n - 1]
    if not ks:
        raise ValueError("no feasible k in range for this sample size")
    table = []
    for k in ks:
        result = spectral_cluster(features, k, seed)
        table.append({"k": k, "silhouette": result.silhouette, "inertia": result.inertia})
    best = max(table, key=lambda row: (row["silhouette"], -row["k"]))
    return int(best["k"]), table


def adjusted_rand(labels_a: Sequence, labels_b: Sequence) -> float:
    """Adjusted Rand index between two labelings of the same points."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("labelings must be 1-d and equally long")
    n = len(a)
    if n < 2:
        raise ValueError("ARI needs at least two points")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    contingency = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(contingency, (ai, bi), 1)

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_ij = comb2(contingency).sum()
    sum_a = comb2(contingency.sum(axis=1)).sum()
    sum_b = comb2(contingency.sum(axis=0)).sum()
    expected = sum_a * sum_b / comb2(n)
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0 if np.array_equal(ai, bi) else 0.0
    return float((sum_ij - expected) / (max_index - expected))

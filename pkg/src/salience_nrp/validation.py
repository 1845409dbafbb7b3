"""Cluster validity indices and the majority rule for choosing the number of clusters.

Five indices vote: silhouette, Calinski-Harabasz and Dunn (higher is better),
Davies-Bouldin (lower is better) and the gap statistic with Tibshirani's
one-standard-error rule. The k named by the most indices wins; ties go to the
smaller k.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from salience_nrp._io import write_json
from salience_nrp.grouping import (
    CLUSTER_METHODS,
    DEFAULT_RESTARTS,
    ClusterPartition,
    FeatureMatrix,
    _kmeans_labels,
    _pam_labels,
    cluster,
    cut_merges,
    pairwise_distances,
    ward_merges,
    within_ss,
)

INDICES = ("silhouette", "calinski_harabasz", "davies_bouldin", "dunn", "gap")
DEFAULT_K_RANGE = (2, 6)
REFERENCE_SAMPLES = 50
# restarts used when clustering the gap statistic's uniform reference sets
REFERENCE_RESTARTS = 5


def _labels(features: FeatureMatrix, partition: ClusterPartition) -> np.ndarray:
    try:
        return np.array([partition.assignment[sid] for sid in features.ids], dtype=int)
    except KeyError as exc:
        raise ValueError(f"partition has no assignment for {exc.args[0]!r}") from None


def _require_k2(labels: np.ndarray, name: str) -> None:
    if len(np.unique(labels)) < 2:
        raise ValueError(f"{name} needs at least 2 clusters")


def _silhouette(X: np.ndarray, labels: np.ndarray, D: np.ndarray | None = None) -> float:
    if D is None:
        D = pairwise_distances(X)
    ks, inv = np.unique(labels, return_inverse=True)
    onehot = np.eye(len(ks))[inv]
    counts = onehot.sum(axis=0)
    sums = D @ onehot
    idx = np.arange(len(X))
    own_n = counts[inv]
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(own_n > 1, sums[idx, inv] / (own_n - 1), 0.0)
        means = sums / counts
    means[idx, inv] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(denom > 0, (b - a) / denom, 0.0)
    s[own_n == 1] = 0.0
    return float(s.mean())


def _calinski_harabasz(X: np.ndarray, labels: np.ndarray) -> float:
    n = len(X)
    ks = np.unique(labels)
    k = len(ks)
    mean = X.mean(axis=0)
    between = sum(float((labels == c).sum() * ((X[labels == c].mean(axis=0) - mean) ** 2).sum()) for c in ks)
    if k < 2 or between == 0.0:
        return 0.0
    within = within_ss(X, labels)
    if within == 0.0:
        return math.inf
    return (between / (k - 1)) / (within / (n - k))


def _davies_bouldin(X: np.ndarray, labels: np.ndarray) -> float:
    ks = np.unique(labels)
    cents = np.array([X[labels == c].mean(axis=0) for c in ks])
    spread = np.array([np.linalg.norm(X[labels == c] - cents[i], axis=1).mean() for i, c in enumerate(ks)])
    sep = pairwise_distances(cents)
    num = spread[:, None] + spread[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(sep > 0, num / sep, np.where(num > 0, np.inf, 0.0))
    np.fill_diagonal(ratio, -np.inf)
    return float(ratio.max(axis=1).mean())


def _dunn(X: np.ndarray, labels: np.ndarray, D: np.ndarray | None = None) -> float:
    if D is None:
        D = pairwise_distances(X)
    same = labels[:, None] == labels[None, :]
    min_between = float(D[~same].min())
    max_diam = float(D[same].max())
    if max_diam == 0.0:
        return math.inf if min_between > 0 else 0.0
    return min_between / max_diam


def silhouette_index(features: FeatureMatrix, partition: ClusterPartition) -> float:
    """Mean silhouette width; points alone in their cluster score 0."""
    labels = _labels(features, partition)
    _require_k2(labels, "silhouette")
    return _silhouette(features.data, labels)


def calinski_harabasz(features: FeatureMatrix, partition: ClusterPartition) -> float:
    """Between/within dispersion ratio; 0 when the between-group dispersion is 0."""
    return _calinski_harabasz(features.data, _labels(features, partition))


def davies_bouldin(features: FeatureMatrix, partition: ClusterPartition) -> float:
    labels = _labels(features, partition)
    _require_k2(labels, "Davies-Bouldin")
    return _davies_bouldin(features.data, labels)


def dunn_index(features: FeatureMatrix, partition: ClusterPartition) -> float:
    """Smallest between-cluster point distance over the largest cluster diameter."""
    labels = _labels(features, partition)
    _require_k2(labels, "Dunn")
    return _dunn(features.data, labels)


def _reference_sets(X: np.ndarray, seed: int, samples: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    lo, hi = X.min(axis=0), X.max(axis=0)
    return [rng.uniform(lo, hi, size=X.shape) for _ in range(samples)]


def _log_w(w: float) -> float:
    return math.log(max(w, 1e-300))


def _labels_for(X: np.ndarray, method: str, k: int, seed: int, restarts: int) -> np.ndarray:
    if k == 1:
        return np.zeros(len(X), dtype=int)
    if method == "kmeans":
        return _kmeans_labels(X, k, seed, restarts)[0]
    if method == "kmedoids":
        return _pam_labels(X, k)[0]
    if method == "hierarchical":
        return cut_merges(ward_merges(X), len(X), k)
    raise ValueError(f"gap statistic cannot re-cluster reference data for method {method!r}")


def _reference_log_w(refs, method: str, ks, seed: int, restarts: int) -> np.ndarray:
    """log W_k for each reference set (rows) and each k (columns)."""
    out = np.empty((len(refs), len(ks)))
    for b, R in enumerate(refs):
        merges = ward_merges(R) if method == "hierarchical" else None
        for j, k in enumerate(ks):
            if merges is not None:
                lab = cut_merges(merges, len(R), k)
            else:
                lab = _labels_for(R, method, k, seed + b, restarts)
            out[b, j] = _log_w(within_ss(R, lab))
    return out


def gap_curve(
    features: FeatureMatrix,
    method: str,
    ks,
    seed: int = 0,
    reference_samples: int = REFERENCE_SAMPLES,
    restarts: int = DEFAULT_RESTARTS,
    partitions: dict[int, ClusterPartition] | None = None,
) -> dict[int, tuple[float, float]]:
    """Gap(k) and its standard error s_k = sd * sqrt(1 + 1/B) for each k in ``ks``."""
    X = features.data
    ks = list(ks)
    refs = _reference_sets(X, seed, reference_samples)
    ref_logw = _reference_log_w(refs, method, ks, seed, min(restarts, REFERENCE_RESTARTS))
    out = {}
    for j, k in enumerate(ks):
        if partitions and k in partitions:
            lab = _labels(features, partitions[k])
        else:
            lab = _labels_for(X, method, k, seed, restarts)
        col = ref_logw[:, j]
        gap = float(col.mean() - _log_w(within_ss(X, lab)))
        se = float(col.std() * math.sqrt(1.0 + 1.0 / reference_samples))
        out[k] = (gap, se)
    return out


def gap_statistic(
    features: FeatureMatrix,
    partition: ClusterPartition,
    seed: int = 0,
    reference_samples: int = REFERENCE_SAMPLES,
) -> tuple[float, float]:
    """Gap value and standard error for ``partition`` against uniform references.

    Reference sets are clustered with the partition's own method at the same k.
    """
    method = partition.method if partition.k > 1 else "kmeans"
    res = gap_curve(features, method, [partition.k], seed, reference_samples, partitions={partition.k: partition})
    return res[partition.k]


def gap_choice(curve: dict[int, tuple[float, float]]) -> int:
    """Smallest k with Gap(k) >= Gap(k+1) - s_{k+1}; the largest k if none qualifies."""
    ks = sorted(curve)
    for k, nxt in zip(ks, ks[1:]):
        if nxt == k + 1 and curve[k][0] >= curve[nxt][0] - curve[nxt][1]:
            return k
    return ks[-1]


@dataclass(frozen=True)
class KRecommendation:
    method: str
    k_range: tuple[int, int]
    votes: dict[str, int]
    tally: dict[int, int]
    winner: int
    scores: dict[str, dict[int, float]] = field(default_factory=dict)
    gap_k: int | None = None

    def as_dict(self) -> dict:
        def clean(v: float):
            return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")

        return {
            "method": self.method,
            "k_range": list(self.k_range),
            "votes": dict(self.votes),
            "tally": {str(k): n for k, n in sorted(self.tally.items())},
            "winner": self.winner,
            "gap_k": self.gap_k,
            "scores": {idx: {str(k): clean(v) for k, v in sorted(s.items())} for idx, s in self.scores.items()},
        }

    def write_json(self, path) -> None:
        write_json(path, self.as_dict())


def majority(votes: dict[str, int]) -> tuple[int, dict[int, int]]:
    """Winner by vote count, smaller k on ties."""
    if not votes:
        raise ValueError("no index produced a vote")
    tally = dict(Counter(votes.values()))
    winner = min(tally, key=lambda k: (-tally[k], k))
    return winner, tally


def _best(scores: dict[int, float], higher: bool) -> int:
    sign = -1.0 if higher else 1.0
    return min(scores, key=lambda k: (sign * scores[k], k))


def recommend_k(
    features: FeatureMatrix,
    method: str = "kmeans",
    k_range: tuple[int, int] = DEFAULT_K_RANGE,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    reference_samples: int = REFERENCE_SAMPLES,
) -> KRecommendation:
    """Cluster at each k in ``k_range`` and let the five indices vote.

    The gap rule is evaluated from k = 1 up to the top of the range (plus one
    for its look-ahead). When it settles below the range it casts no vote; its
    choice is still reported as ``gap_k``.
    """
    if method not in CLUSTER_METHODS:
        raise ValueError(f"recommend_k needs a clustering method, got {method!r}")
    lo, hi = int(k_range[0]), int(k_range[1])
    n = len(features)
    if lo > hi:
        raise ValueError(f"empty k range [{lo}, {hi}]")
    if lo < 2 or hi > n - 1:
        raise ValueError(f"k range [{lo}, {hi}] must lie within [2, {n - 1}]")

    X = features.data
    D = pairwise_distances(X)
    partitions = {k: cluster(features, method, k, seed=seed, restarts=restarts) for k in range(lo, hi + 2)}
    scores: dict[str, dict[int, float]] = {name: {} for name in INDICES}
    for k in range(lo, hi + 1):
        lab = _labels(features, partitions[k])
        scores["silhouette"][k] = _silhouette(X, lab, D)
        scores["calinski_harabasz"][k] = _calinski_harabasz(X, lab)
        scores["davies_bouldin"][k] = _davies_bouldin(X, lab)
        scores["dunn"][k] = _dunn(X, lab, D)
    curve = gap_curve(features, method, range(1, hi + 2), seed, reference_samples, restarts, partitions)
    scores["gap"] = {k: g for k, (g, _) in curve.items()}

    votes = {
        "silhouette": _best(scores["silhouette"], higher=True),
        "calinski_harabasz": _best(scores["calinski_harabasz"], higher=True),
        "davies_bouldin": _best(scores["davies_bouldin"], higher=False),
        "dunn": _best(scores["dunn"], higher=True),
    }
    gap_k = gap_choice({k: v for k, v in curve.items() if k <= hi + 1})
    gap_k = min(gap_k, hi)
    if lo <= gap_k <= hi:
        votes["gap"] = gap_k
    winner, tally = majority(votes)
    return KRecommendation(method, (lo, hi), votes, tally, winner, scores, gap_k)

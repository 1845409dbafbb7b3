"""Stakeholder grouping in (power, legitimacy, urgency) space.

Three clustering methods are provided: k-means (Lloyd iterations, k-means++
seeding, best of several restarts), k-medoids (PAM build + swap) and
agglomerative clustering with Ward linkage. All of them work on a
:class:`FeatureMatrix` whose rows are sorted by stakeholder id, and all return
a :class:`ClusterPartition` whose centroids are in the original units.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from salience_nrp._io import fmt_num, write_csv
from salience_nrp.salience import SalienceTable

log = logging.getLogger(__name__)

METHODS = ("quartile", "kmeans", "kmedoids", "hierarchical")
CLUSTER_METHODS = ("kmeans", "kmedoids", "hierarchical")
SCALINGS = ("raw", "zscore")

MAX_ITER = 300
DEFAULT_RESTARTS = 25
_TIE_RTOL = 1e-9


class InvariantError(RuntimeError):
    """An internal consistency check failed."""


@dataclass(frozen=True)
class FeatureMatrix:
    """Rows of (power, legitimacy, urgency) ordered by stakeholder id."""

    ids: tuple[str, ...]
    raw: np.ndarray
    scaling: str = "raw"
    data: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.scaling not in SCALINGS:
            raise ValueError(f"unknown scaling {self.scaling!r}; expected one of {SCALINGS}")
        raw = np.asarray(self.raw, dtype=float)
        if raw.ndim != 2 or raw.shape[0] != len(self.ids):
            raise ValueError("raw must be a 2-D array with one row per id")
        order = sorted(range(len(self.ids)), key=lambda i: self.ids[i])
        object.__setattr__(self, "ids", tuple(self.ids[i] for i in order))
        raw = raw[order]
        object.__setattr__(self, "raw", raw)
        if self.scaling == "zscore" and len(raw):
            sd = raw.std(axis=0, ddof=1) if len(raw) > 1 else np.ones(raw.shape[1])
            sd = np.where(sd > 0, sd, 1.0)
            data = (raw - raw.mean(axis=0)) / sd
        else:
            data = raw.copy()
        object.__setattr__(self, "data", data)

    @classmethod
    def from_table(cls, table: SalienceTable, scaling: str = "raw") -> "FeatureMatrix":
        ids = tuple(table.ids)
        raw = np.array([table.rows[sid].components for sid in ids], dtype=float).reshape(len(ids), 3)
        return cls(ids, raw, scaling)

    def __len__(self) -> int:
        return len(self.ids)


def designate_definitive(centroids, sizes) -> int:
    """1-based index of the cluster whose centroid has the largest component sum.

    Ties go to the larger cluster, then to the lower index. Accepts a
    :class:`ClusterPartition` as the only argument as well.
    """
    if isinstance(centroids, ClusterPartition):
        centroids, sizes = centroids.centroids, centroids.sizes
    return _salience_order(np.asarray(centroids, dtype=float), sizes)[0] + 1


def _salience_order(centroids: np.ndarray, sizes: Sequence[int]) -> list[int]:
    """0-based cluster indices from highest to lowest centroid salience."""
    sums = centroids.sum(axis=1)
    scale = max(1.0, float(np.abs(sums).max())) if len(sums) else 1.0
    # snap near-equal sums together so the size tie-break can apply
    keys = np.round(sums / (scale * _TIE_RTOL))
    return sorted(range(len(sums)), key=lambda c: (-keys[c], -sizes[c], c))


@dataclass(frozen=True)
class ClusterPartition:
    k: int
    assignment: dict[str, int]
    centroids: np.ndarray
    sizes: tuple[int, ...]
    definitive_cluster: int
    method: str
    medoids: tuple[str, ...] | None = None
    merge_heights: tuple[float, ...] | None = None
    wss: float | None = None
    wss_history: tuple[float, ...] | None = None
    restart_wss: tuple[float, ...] | None = None

    @classmethod
    def from_labels(
        cls,
        ids: Sequence[str],
        labels: Sequence[int],
        raw: np.ndarray,
        method: str,
        definitive: int | None = None,
        **extras,
    ) -> "ClusterPartition":
        """Build a partition from 1-based labels; centroids are means of ``raw`` rows."""
        labels = np.asarray(labels, dtype=int)
        raw = np.asarray(raw, dtype=float)
        k = int(labels.max()) if len(labels) else 0
        sizes = tuple(int((labels == c).sum()) for c in range(1, k + 1))
        if any(s == 0 for s in sizes):
            raise InvariantError(f"{method}: empty cluster in partition with sizes {sizes}")
        centroids = np.array([raw[labels == c].mean(axis=0) for c in range(1, k + 1)]).reshape(k, raw.shape[1])
        if definitive is None:
            definitive = designate_definitive(centroids, sizes)
        return cls(
            k=k,
            assignment={sid: int(c) for sid, c in zip(ids, labels)},
            centroids=centroids,
            sizes=sizes,
            definitive_cluster=int(definitive),
            method=method,
            **extras,
        )

    def members(self, cluster: int) -> list[str]:
        return sorted(sid for sid, c in self.assignment.items() if c == cluster)

    @property
    def definitive_ids(self) -> list[str]:
        return self.members(self.definitive_cluster)

    def centroid_salience(self, cluster: int) -> float:
        return float(self.centroids[cluster - 1].sum())

    def export_order(self) -> dict[int, int]:
        """Map internal cluster index to its rank by decreasing centroid salience (1 = highest)."""
        order = _salience_order(self.centroids, self.sizes)
        return {c + 1: rank + 1 for rank, c in enumerate(order)}

    def centroid_rows(self) -> list[dict]:
        """Centroid table in export order."""
        relabel = self.export_order()
        rows = []
        for c in sorted(relabel, key=relabel.get):
            p, lg, u = (float(x) for x in self.centroids[c - 1])
            rows.append(
                {
                    "cluster": relabel[c],
                    "size": self.sizes[c - 1],
                    "power": p,
                    "legitimacy": lg,
                    "urgency": u,
                    "salience": p + lg + u,
                    "definitive": c == self.definitive_cluster,
                }
            )
        return rows

    def write_csv(self, clusters_path, centroids_path) -> None:
        relabel = self.export_order()
        write_csv(
            clusters_path,
            ("id", "cluster", "definitive"),
            (
                (sid, relabel[c], int(c == self.definitive_cluster))
                for sid, c in sorted(self.assignment.items())
            ),
        )
        write_csv(
            centroids_path,
            ("cluster", "size", "power", "legitimacy", "urgency", "salience"),
            (
                (r["cluster"], r["size"], *(fmt_num(round(r[x], 6)) for x in ("power", "legitimacy", "urgency", "salience")))
                for r in self.centroid_rows()
            ),
        )


def _check_k(k: int, n: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValueError(f"k = {k} exceeds the number of rows ({n})")


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def within_ss(X: np.ndarray, labels: np.ndarray) -> float:
    """Total within-cluster sum of squared distances to the cluster means (labels any ints)."""
    total = 0.0
    for c in np.unique(labels):
        pts = X[labels == c]
        total += float(((pts - pts.mean(axis=0)) ** 2).sum())
    return total


# ---------------------------------------------------------------- k-means


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    centers = [int(rng.integers(n))]
    d2 = _sq_dists(X, X[centers]).ravel()
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            nxt = int(rng.integers(n))
        centers.append(nxt)
        d2 = np.minimum(d2, _sq_dists(X, X[[nxt]]).ravel())
    return X[centers].copy()


def _lloyd(X: np.ndarray, centers: np.ndarray, max_iter: int = MAX_ITER) -> tuple[np.ndarray, float, list[float]]:
    """Run Lloyd iterations; returns 0-based labels, final WSS and the per-iteration WSS."""
    k = len(centers)
    labels = None
    history: list[float] = []
    for _ in range(max_iter):
        d2 = _sq_dists(X, centers)
        new = d2.argmin(axis=1)
        counts = np.bincount(new, minlength=k)
        for c in np.flatnonzero(counts == 0):
            # move the point farthest from its own centroid into the empty cluster
            own = d2[np.arange(len(X)), new]
            movable = counts[new] > 1
            cand = np.where(movable, own, -1.0)
            p = int(cand.argmax())
            counts[new[p]] -= 1
            new[p] = c
            counts[c] = 1
            d2[p] = 0.0
        centers = np.array([X[new == c].mean(axis=0) for c in range(k)])
        wss = float(((X - centers[new]) ** 2).sum())
        history.append(wss)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
    return labels, history[-1], history


def _kmeans_labels(X: np.ndarray, k: int, seed: int, restarts: int):
    """Best-of-``restarts`` k-means. Returns (labels 0-based, wss, history, all restart wss)."""
    best = None
    runs = []
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        labels, wss, history = _lloyd(X, _kmeanspp(X, k, rng))
        runs.append(wss)
        if best is None or wss < best[1]:
            best = (labels, wss, history)
    return best[0], best[1], best[2], runs


def kmeans(features: FeatureMatrix, k: int, seed: int = 0, restarts: int = DEFAULT_RESTARTS) -> ClusterPartition:
    """k-means with k-means++ seeding, keeping the restart with the lowest within-cluster SS."""
    _check_k(k, len(features))
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    labels, wss, history, runs = _kmeans_labels(features.data, k, seed, restarts)
    return ClusterPartition.from_labels(
        features.ids,
        labels + 1,
        features.raw,
        method="kmeans",
        wss=wss,
        wss_history=tuple(history),
        restart_wss=tuple(runs),
    )


# ---------------------------------------------------------------- k-medoids


def pairwise_distances(X: np.ndarray) -> np.ndarray:
    return np.sqrt(_sq_dists(X, X))


def _pam(D: np.ndarray, k: int) -> tuple[list[int], float]:
    n = len(D)
    medoids = [int(D.sum(axis=1).argmin())]
    nearest = D[medoids[0]].copy()
    # BUILD: add the point that most reduces the total distance
    for _ in range(1, k):
        gain = np.maximum(nearest[None, :] - D, 0.0).sum(axis=1)
        gain[medoids] = -np.inf
        m = int(gain.argmax())
        medoids.append(m)
        nearest = np.minimum(nearest, D[m])
    cost = float(nearest.sum())
    # SWAP: best improving (medoid, non-medoid) exchange until none improves
    tol = 1e-12 * max(1.0, cost)
    while True:
        best = (cost, -1, -1)
        for pos in range(k):
            others = [m for i, m in enumerate(medoids) if i != pos]
            base = D[others].min(axis=0) if others else np.full(n, np.inf)
            costs = np.minimum(base[None, :], D).sum(axis=1)
            costs[medoids] = np.inf
            h = int(costs.argmin())
            if costs[h] < best[0] - tol:
                best = (float(costs[h]), pos, h)
        if best[1] < 0:
            break
        cost, pos, h = best
        medoids[pos] = h
    return medoids, cost


def _pam_labels(X: np.ndarray, k: int) -> tuple[np.ndarray, list[int], float]:
    D = pairwise_distances(X)
    medoids, cost = _pam(D, k)
    labels = D[medoids].argmin(axis=0)
    # a medoid always belongs to its own cluster, even with duplicate points
    labels[medoids] = np.arange(k)
    return labels, medoids, cost


def kmedoids(features: FeatureMatrix, k: int, seed: int = 0) -> ClusterPartition:
    """Partitioning Around Medoids with Euclidean distance.

    The algorithm is deterministic; ``seed`` is accepted for interface symmetry
    with :func:`kmeans` and ignored.
    """
    _check_k(k, len(features))
    labels, medoids, cost = _pam_labels(features.data, k)
    return ClusterPartition.from_labels(
        features.ids,
        labels + 1,
        features.raw,
        method="kmedoids",
        medoids=tuple(features.ids[m] for m in medoids),
        wss=within_ss(features.data, labels),
    )


# ---------------------------------------------------------------- hierarchical


def ward_merges(X: np.ndarray) -> list[tuple[int, int, float]]:
    """Ward agglomeration via the Lance-Williams update on Euclidean distances.

    Returns ``n - 1`` merges ``(slot_a, slot_b, height)``; after a merge the
    combined cluster lives in ``slot_a`` (the lower row index).
    """
    n = len(X)
    D = pairwise_distances(X)
    D[np.tril_indices(n)] = np.inf
    size = np.ones(n)
    active = np.ones(n, dtype=bool)
    merges = []
    for _ in range(n - 1):
        flat = int(D.argmin())
        a, b = divmod(flat, n)
        h = float(D[a, b])
        merges.append((a, b, h))
        na, nb = size[a], size[b]
        others = np.flatnonzero(active)
        others = others[(others != a) & (others != b)]
        if len(others):
            dak = np.where(others < a, D[others, a], D[a, others])
            dbk = np.where(others < b, D[others, b], D[b, others])
            nk = size[others]
            new = np.sqrt(((na + nk) * dak**2 + (nb + nk) * dbk**2 - nk * h * h) / (na + nb + nk))
            lo = others < a
            D[others[lo], a] = new[lo]
            D[a, others[~lo]] = new[~lo]
        active[b] = False
        D[b, :] = np.inf
        D[:, b] = np.inf
        size[a] = na + nb
    return merges


def cut_merges(merges: list[tuple[int, int, float]], n: int, k: int) -> np.ndarray:
    """0-based labels after applying the first ``n - k`` merges.

    Clusters are numbered by their lowest row index.
    """
    root = list(range(n))

    def find(i: int) -> int:
        while root[i] != i:
            root[i] = root[root[i]]
            i = root[i]
        return i

    for a, b, _ in merges[: n - k]:
        ra, rb = find(a), find(b)
        root[max(ra, rb)] = min(ra, rb)
    reps = [find(i) for i in range(n)]
    numbering = {r: i for i, r in enumerate(sorted(set(reps)))}
    return np.array([numbering[r] for r in reps], dtype=int)


def hierarchical(features: FeatureMatrix, k: int) -> ClusterPartition:
    """Agglomerative Ward clustering cut to exactly ``k`` clusters."""
    _check_k(k, len(features))
    merges = ward_merges(features.data)
    labels = cut_merges(merges, len(features), k)
    return ClusterPartition.from_labels(
        features.ids,
        labels + 1,
        features.raw,
        method="hierarchical",
        merge_heights=tuple(h for _, _, h in merges),
        wss=within_ss(features.data, labels),
    )


def cluster(features: FeatureMatrix, method: str, k: int, seed: int = 0, restarts: int = DEFAULT_RESTARTS) -> ClusterPartition:
    if method == "kmeans":
        return kmeans(features, k, seed=seed, restarts=restarts)
    if method == "kmedoids":
        return kmedoids(features, k, seed=seed)
    if method == "hierarchical":
        return hierarchical(features, k)
    raise ValueError(f"unknown clustering method {method!r}")

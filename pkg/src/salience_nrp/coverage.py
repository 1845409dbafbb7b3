"""Stakeholder coverage of requirement selections and paired comparisons between fronts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from salience_nrp._io import write_csv, write_json
from salience_nrp.nrp import ParetoFront, Solution

EQUAL_TOL = 1e-9
# differences are rounded before ranking so float noise does not break ties
DIFF_DECIMALS = 12
EXACT_MAX_N = 25

Votes = Mapping[tuple[str, str], float]


def _points_by_stakeholder(votes: Votes) -> dict[str, dict[str, float]]:
    out: dict[str, dict[str, float]] = {}
    for (sid, rid), pts in votes.items():
        out.setdefault(sid, {})[rid] = pts
    return out


def st_coverage(solution: Solution, stakeholder: str, votes: Votes) -> float:
    """Share of the stakeholder's 100 points that fall on selected requirements."""
    mine = {rid: pts for (sid, rid), pts in votes.items() if sid == stakeholder}
    if not mine:
        raise ValueError(f"stakeholder {stakeholder!r} cast no votes")
    return math.fsum(pts for rid, pts in mine.items() if rid in solution.selected) / 100.0


@dataclass(frozen=True)
class CoverageVector:
    front_id: str
    values: dict[str, float]

    def array(self, keys: Sequence[str] | None = None) -> np.ndarray:
        keys = sorted(self.values) if keys is None else keys
        return np.array([self.values[k] for k in keys], dtype=float)

    @property
    def mean(self) -> float:
        return float(self.array().mean())

    @property
    def sd(self) -> float:
        a = self.array()
        return float(a.std(ddof=1)) if len(a) > 1 else 0.0

    @property
    def coef_var(self) -> float:
        m = self.mean
        return self.sd / m if m != 0 else math.nan


def front_coverage(front: ParetoFront | Iterable[Solution], votes: Votes, front_id: str = "front") -> CoverageVector:
    """Mean coverage over the front's solutions, for every stakeholder with a vote."""
    sols = list(front)
    if not sols:
        raise ValueError("front is empty")
    by_stk = _points_by_stakeholder(votes)
    values = {}
    for sid in sorted(by_stk):
        pts = by_stk[sid]
        per = [math.fsum(p for rid, p in pts.items() if rid in s.selected) / 100.0 for s in sols]
        values[sid] = math.fsum(per) / len(per)
    return CoverageVector(front_id, values)


# ---------------------------------------------------------------- Wilcoxon


def _average_ranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    xs = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def signed_rank_counts(n: int) -> np.ndarray:
    """Number of sign assignments giving each W+ = 0..n(n+1)/2 for ranks 1..n."""
    counts = np.zeros(n * (n + 1) // 2 + 1)
    counts[0] = 1.0
    top = 0
    for r in range(1, n + 1):
        counts[r : top + r + 1] += counts[: top + 1].copy()
        top += r
    return counts


def wilcoxon_signed_rank(diffs: Iterable[float], method: str = "auto") -> float:
    """Two-sided p-value of the paired Wilcoxon signed-rank test.

    Exact zeros are dropped. ``method="auto"`` uses the exact null distribution
    when at most 25 differences remain and their magnitudes are all distinct,
    otherwise the normal approximation with tie and continuity corrections.
    All-zero input gives 1.0.
    """
    d = np.asarray(list(diffs), dtype=float)
    d = d[d != 0]
    n = len(d)
    if n == 0:
        return 1.0
    mag = np.abs(d)
    ranks = _average_ranks(mag)
    w_plus = float(ranks[d > 0].sum())
    tied = len(np.unique(mag)) < n
    if method not in ("auto", "exact", "normal"):
        raise ValueError(f"unknown method {method!r}")
    if method == "exact" and tied:
        raise ValueError("exact distribution needs distinct absolute differences")
    if method == "exact" or (method == "auto" and n <= EXACT_MAX_N and not tied):
        counts = signed_rank_counts(n)
        w = int(round(w_plus))
        total = 2.0**n
        lower = counts[: w + 1].sum() / total
        upper = counts[w:].sum() / total
        return float(min(1.0, 2.0 * min(lower, upper)))
    mu = n * (n + 1) / 4.0
    _, t = np.unique(mag, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float((t**3 - t).sum()) / 48.0
    if var <= 0:
        return 1.0
    z = max(abs(w_plus - mu) - 0.5, 0.0) / math.sqrt(var)
    return float(min(1.0, math.erfc(z / math.sqrt(2.0))))


@dataclass(frozen=True)
class CoverageComparison:
    baseline_id: str
    candidate_id: str
    n_lower: int
    n_equal: int
    n_higher: int
    baseline_mean: float
    baseline_sd: float
    baseline_cv: float
    candidate_mean: float
    candidate_sd: float
    candidate_cv: float
    wilcoxon_p: float

    def as_dict(self) -> dict:
        def pct(x: float) -> float | None:
            return None if math.isnan(x) else round(100.0 * x, 2)

        def r(x: float) -> float | None:
            return None if math.isnan(x) else round(x, 4)

        return {
            "baseline": self.baseline_id,
            "candidate": self.candidate_id,
            "n_lower": self.n_lower,
            "n_equal": self.n_equal,
            "n_higher": self.n_higher,
            "baseline_mean_pct": pct(self.baseline_mean),
            "baseline_sd_pct": pct(self.baseline_sd),
            "baseline_coef_var": r(self.baseline_cv),
            "candidate_mean_pct": pct(self.candidate_mean),
            "candidate_sd_pct": pct(self.candidate_sd),
            "candidate_coef_var": r(self.candidate_cv),
            "wilcoxon_p": float(f"{self.wilcoxon_p:.6g}"),
        }


def compare(baseline: CoverageVector, candidate: CoverageVector) -> CoverageComparison:
    """Head-to-head counts, summary statistics and Wilcoxon p of candidate vs baseline."""
    if set(baseline.values) != set(candidate.values):
        raise ValueError(
            f"coverage vectors {baseline.front_id!r} and {candidate.front_id!r} cover different stakeholders"
        )
    keys = sorted(baseline.values)
    diff = candidate.array(keys) - baseline.array(keys)
    diff = np.where(np.abs(diff) <= EQUAL_TOL, 0.0, np.round(diff, DIFF_DECIMALS))
    return CoverageComparison(
        baseline.front_id,
        candidate.front_id,
        int((diff < 0).sum()),
        int((diff == 0).sum()),
        int((diff > 0).sum()),
        baseline.mean,
        baseline.sd,
        baseline.coef_var,
        candidate.mean,
        candidate.sd,
        candidate.coef_var,
        wilcoxon_signed_rank(diff),
    )


def comparison_matrix(vectors: Sequence[CoverageVector]) -> list[CoverageComparison]:
    """Every ordered pair (earlier front as baseline, later as candidate)."""
    return [compare(vectors[i], vectors[j]) for i in range(len(vectors)) for j in range(i + 1, len(vectors))]


def write_coverage_csv(path, vectors: Sequence[CoverageVector]) -> None:
    write_csv(
        path,
        ("front_id", "stakeholder_id", "coverage_pct"),
        ((v.front_id, sid, f"{100.0 * c:.2f}") for v in vectors for sid, c in sorted(v.values.items())),
    )


def write_comparison_json(path, comparisons: Sequence[CoverageComparison]) -> None:
    write_json(path, [c.as_dict() for c in comparisons])

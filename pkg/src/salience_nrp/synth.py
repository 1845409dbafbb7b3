"""Synthetic project datasets in the on-disk input format.

Stakeholders are drawn from ``n_groups`` groups around given (power,
legitimacy) means. Legitimacy is realised as integer recommendation weights
(1..8) from distinct other stakeholders, and every stakeholder spends exactly
100 points over a few requirements, so urgency is always 100. The urgency
entry of a group mean therefore has no effect on the generated files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from salience_nrp._io import fmt_num, write_csv
from salience_nrp.model import EFFORTS_FILE, RECOMMENDATIONS_FILE, STAKEHOLDERS_FILE, VOTES_FILE

TRUTH_FILE = "truth.csv"


def default_means(n_groups: int) -> tuple[tuple[float, float, float], ...]:
    """Group means spread along the diagonal, 40 units apart in power and legitimacy."""
    return tuple((10.0 + 40.0 * g, 20.0 + 40.0 * g, 100.0) for g in range(n_groups))


@dataclass(frozen=True)
class SynthSpec:
    n_stakeholders: int = 80
    n_requirements: int = 40
    n_groups: int = 4
    component_means: tuple[tuple[float, float, float], ...] | None = None
    component_sd: float = 2.0
    votes_per_stakeholder: tuple[int, int] = (2, 6)
    effort_range: tuple[float, float] = (4.0, 400.0)
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.n_stakeholders, self.n_requirements, self.n_groups) < 1:
            raise ValueError("counts must be positive")
        if self.n_groups > self.n_stakeholders:
            raise ValueError("more groups than stakeholders")
        lo, hi = self.votes_per_stakeholder
        if not 1 <= lo <= hi <= min(self.n_requirements, 100):
            raise ValueError(f"votes_per_stakeholder {self.votes_per_stakeholder} out of range")
        if not 0 < self.effort_range[0] <= self.effort_range[1]:
            raise ValueError("effort range must be positive and ordered")
        if self.component_sd < 0:
            raise ValueError("component_sd must be >= 0")
        means = self.means
        if len(means) != self.n_groups or any(len(m) != 3 for m in means):
            raise ValueError("component_means needs one 3-vector per group")

    @property
    def means(self) -> tuple[tuple[float, float, float], ...]:
        return self.component_means if self.component_means is not None else default_means(self.n_groups)


def _ballot(rng: np.random.Generator, m: int) -> list[int]:
    """m positive integers summing to 100."""
    cuts = np.sort(rng.choice(np.arange(1, 100), size=m - 1, replace=False)) if m > 1 else np.array([], dtype=int)
    edges = np.concatenate(([0], cuts, [100]))
    return np.diff(edges).astype(int).tolist()


def synth(spec: SynthSpec, output_dir: str | Path) -> Path:
    """Write the four input CSVs plus ``truth.csv`` (id, group) to ``output_dir``."""
    out = Path(output_dir)
    rng = np.random.default_rng(spec.seed)
    n, nr = spec.n_stakeholders, spec.n_requirements
    width = len(str(max(n, nr)))
    sids = [f"s{i + 1:0{width}d}" for i in range(n)]
    rids = [f"r{j + 1:0{width}d}" for j in range(nr)]
    groups = np.arange(n) % spec.n_groups
    means = np.array(spec.means, dtype=float)

    power = np.maximum(rng.normal(means[groups, 0], spec.component_sd), 0.0).round(2)
    max_legit = 8 * (n - 1)
    legit = np.clip(np.rint(rng.normal(means[groups, 1], spec.component_sd)), 0, max_legit).astype(int)

    recs = []
    for i in range(n):
        remaining = int(legit[i])
        others = [j for j in rng.permutation(n).tolist() if j != i]
        for pos, j in enumerate(others):
            if remaining == 0:
                break
            w = int(min(remaining, rng.integers(1, 9)))
            # keep the remainder reachable with the recommenders still left
            left = len(others) - pos - 1
            w = max(w, remaining - 8 * left)
            recs.append((sids[j], sids[i], w))
            remaining -= w

    votes = []
    lo, hi = spec.votes_per_stakeholder
    for i in range(n):
        m = int(rng.integers(lo, hi + 1))
        reqs = sorted(rng.choice(nr, size=m, replace=False).tolist())
        for j, pts in zip(reqs, _ballot(rng, m)):
            votes.append((sids[i], rids[j], pts))

    efforts = rng.uniform(spec.effort_range[0], spec.effort_range[1], size=nr).round(1)
    efforts = np.maximum(efforts, spec.effort_range[0])

    write_csv(
        out / STAKEHOLDERS_FILE,
        ("id", "name", "power"),
        ((sid, f"Stakeholder {sid[1:]}", fmt_num(p)) for sid, p in zip(sids, power)),
    )
    write_csv(out / RECOMMENDATIONS_FILE, ("recommender_id", "recommendee_id", "weight"), recs)
    write_csv(out / VOTES_FILE, ("stakeholder_id", "requirement_id", "points"), votes)
    write_csv(out / EFFORTS_FILE, ("requirement_id", "effort"), ((r, fmt_num(e)) for r, e in zip(rids, efforts)))
    write_csv(out / TRUTH_FILE, ("id", "group"), ((sid, int(g) + 1) for sid, g in zip(sids, groups)))
    return out

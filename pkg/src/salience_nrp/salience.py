"""Salience as power + legitimacy + urgency, its summary, and quartile grouping."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from salience_nrp._io import fmt_num, write_csv
from salience_nrp.model import ProjectDataset

COMPONENTS = ("power", "legitimacy", "urgency")


@dataclass(frozen=True)
class SalienceRow:
    power: float
    legitimacy: float
    urgency: float

    @property
    def salience(self) -> float:
        return self.power + self.legitimacy + self.urgency

    @property
    def components(self) -> tuple[float, float, float]:
        return (self.power, self.legitimacy, self.urgency)


@dataclass(frozen=True)
class SalienceTable:
    rows: Mapping[str, SalienceRow]

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def ids(self) -> list[str]:
        return list(self.rows)

    def salience(self, sid: str) -> float:
        return self.rows[sid].salience

    def values(self, column: str = "salience") -> np.ndarray:
        return np.array([getattr(r, column) for r in self.rows.values()], dtype=float)

    def to_csv(self, path) -> None:
        write_csv(
            path,
            ("id", *COMPONENTS, "salience"),
            ((sid, *(fmt_num(c) for c in r.components), fmt_num(r.salience)) for sid, r in self.rows.items()),
        )


@dataclass(frozen=True)
class Stats:
    min: float
    q1: float
    median: float
    mean: float
    q3: float
    max: float

    def as_dict(self) -> dict[str, float]:
        return {"min": self.min, "q1": self.q1, "median": self.median, "mean": self.mean, "q3": self.q3, "max": self.max}


@dataclass(frozen=True)
class SalienceSummary:
    power: Stats
    legitimacy: Stats
    urgency: Stats
    salience: Stats

    def as_dict(self) -> dict[str, dict[str, float]]:
        return {name: getattr(self, name).as_dict() for name in (*COMPONENTS, "salience")}


def compute_salience(dataset: ProjectDataset) -> SalienceTable:
    return SalienceTable({s.id: SalienceRow(s.power, s.legitimacy, s.urgency) for s in dataset.stakeholders})


def _stats(values: np.ndarray) -> Stats:
    # numpy's default "linear" method is the type-7 estimator
    q1, med, q3 = np.quantile(values, [0.25, 0.5, 0.75])
    return Stats(float(values.min()), float(q1), float(med), float(values.mean()), float(q3), float(values.max()))


def summarize(table: SalienceTable) -> SalienceSummary:
    if len(table) == 0:
        raise ValueError("cannot summarize an empty salience table")
    return SalienceSummary(*(_stats(table.values(c)) for c in (*COMPONENTS, "salience")))


def quartile_groups(table: SalienceTable):
    """Split stakeholders into (<=Q1], (Q1,Q2], (Q2,Q3], (>Q3) by salience.

    Group 4 (above the third quartile, strictly) is the definitive one. Groups
    that come out empty because of ties are dropped and the rest renumbered.
    """
    from salience_nrp.grouping import ClusterPartition

    if len(table) < 4:
        raise ValueError(f"quartile grouping needs at least 4 stakeholders, got {len(table)}")
    sal = table.values()
    q1, q2, q3 = np.quantile(sal, [0.25, 0.5, 0.75])
    raw = np.where(sal <= q1, 1, np.where(sal <= q2, 2, np.where(sal <= q3, 3, 4)))
    present = sorted(set(raw.tolist()))
    relabel = {g: i + 1 for i, g in enumerate(present)}
    labels = [relabel[g] for g in raw.tolist()]
    comps = np.array([table.rows[sid].components for sid in table.ids], dtype=float)
    return ClusterPartition.from_labels(
        table.ids,
        labels,
        comps,
        method="quartile",
        definitive=relabel[max(present)],
    )

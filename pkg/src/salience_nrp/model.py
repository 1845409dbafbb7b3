"""Domain records and loading of a project dataset from a directory of CSV files.

The input directory holds four files::

    stakeholders.csv     id,name,power[,urgency]
    recommendations.csv  recommender_id,recommendee_id,weight   (integer weight in 1..8)
    votes.csv            stakeholder_id,requirement_id,points   (points > 0)
    efforts.csv          requirement_id,effort                  (effort > 0)

Legitimacy is the plain sum of received recommendation weights and urgency the
sum of a stakeholder's vote points.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping

from salience_nrp._io import fmt_num, write_csv

STAKEHOLDERS_FILE = "stakeholders.csv"
RECOMMENDATIONS_FILE = "recommendations.csv"
VOTES_FILE = "votes.csv"
EFFORTS_FILE = "efforts.csv"

URGENCY_TOLERANCE = 1e-9


class DatasetError(ValueError):
    """Raised for any problem with the on-disk dataset or its consistency."""


@dataclass(frozen=True)
class StakeholderRecord:
    id: str
    name: str
    power: float
    legitimacy: float
    urgency: float

    def __post_init__(self) -> None:
        for attr in ("power", "legitimacy", "urgency"):
            value = getattr(self, attr)
            if not math.isfinite(value) or value < 0:
                raise DatasetError(f"stakeholder {self.id!r}: {attr} must be a finite value >= 0, got {value}")

    @property
    def components(self) -> tuple[float, float, float]:
        return (self.power, self.legitimacy, self.urgency)

    @property
    def n_positive_components(self) -> int:
        return sum(1 for c in self.components if c > 0)


@dataclass(frozen=True)
class RequirementRecord:
    id: str
    effort: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.effort) or self.effort <= 0:
            raise DatasetError(f"requirement {self.id!r}: effort must be > 0, got {self.effort}")


@dataclass(frozen=True)
class Recommendation:
    recommender_id: str
    recommendee_id: str
    weight: int


@dataclass(frozen=True)
class ProjectDataset:
    """Validated stakeholders, requirements and votes.

    ``votes`` maps ``(stakeholder_id, requirement_id)`` to positive points; an
    absent pair means zero. ``recommendations`` is kept so the dataset can be
    written back out; downstream code only reads ``legitimacy``.
    """

    stakeholders: tuple[StakeholderRecord, ...]
    requirements: tuple[RequirementRecord, ...]
    votes: Mapping[tuple[str, str], float]
    recommendations: tuple[Recommendation, ...] = ()
    _by_id: dict[str, StakeholderRecord] = field(init=False, repr=False, compare=False)
    _req_by_id: dict[str, RequirementRecord] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_id: dict[str, StakeholderRecord] = {}
        for s in self.stakeholders:
            if s.id in by_id:
                raise DatasetError(f"duplicate stakeholder id {s.id!r}")
            by_id[s.id] = s
        req_by_id: dict[str, RequirementRecord] = {}
        for r in self.requirements:
            if r.id in req_by_id:
                raise DatasetError(f"duplicate requirement id {r.id!r}")
            req_by_id[r.id] = r
        for (sid, rid), pts in self.votes.items():
            if sid not in by_id:
                raise DatasetError(f"vote references unknown stakeholder {sid!r}")
            if rid not in req_by_id:
                raise DatasetError(f"vote references unknown requirement {rid!r}")
            if not pts > 0:
                raise DatasetError(f"vote ({sid!r}, {rid!r}) must have points > 0, got {pts}")
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_req_by_id", req_by_id)

    def stakeholder(self, sid: str) -> StakeholderRecord:
        return self._by_id[sid]

    def requirement(self, rid: str) -> RequirementRecord:
        return self._req_by_id[rid]

    @property
    def stakeholder_ids(self) -> list[str]:
        return [s.id for s in self.stakeholders]

    @property
    def requirement_ids(self) -> list[str]:
        return [r.id for r in self.requirements]

    def points_by_stakeholder(self) -> dict[str, dict[str, float]]:
        out: dict[str, dict[str, float]] = defaultdict(dict)
        for (sid, rid), pts in self.votes.items():
            out[sid][rid] = pts
        return dict(out)

    def demanding_ids(self) -> list[str]:
        """Stakeholders with at least one vote, in dataset order."""
        voters = {sid for sid, _ in self.votes}
        return [s.id for s in self.stakeholders if s.id in voters]

    def total_effort(self) -> float:
        return math.fsum(r.effort for r in self.requirements)

    def __len__(self) -> int:
        return len(self.stakeholders)


def _rows(path: Path, required: tuple[str, ...]) -> Iterator[tuple[int, dict[str, str]]]:
    if not path.is_file():
        raise DatasetError(f"missing file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise DatasetError(f"{path.name}: missing column(s) {', '.join(missing)}")
        for row in reader:
            line = reader.line_num
            if None in row or any(row.get(c) is None for c in header):
                raise DatasetError(f"{path.name}:{line}: wrong number of fields")
            yield line, {k: v.strip() for k, v in row.items()}


def _number(raw: str, where: str, column: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise DatasetError(f"{where}: column {column!r} is not a number: {raw!r}") from None
    if not math.isfinite(value):
        raise DatasetError(f"{where}: column {column!r} is not finite: {raw!r}")
    return value


def ingest(input_dir: str | Path) -> ProjectDataset:
    """Read and validate the four CSV files under ``input_dir``.

    Raises :class:`DatasetError` on a missing file, a malformed row (the
    message carries ``file:line``), a duplicate id, a dangling reference, or a
    given urgency that disagrees with the vote totals.
    """
    root = Path(input_dir)
    if not root.is_dir():
        raise DatasetError(f"input directory does not exist: {root}")
    paths = {name: root / name for name in (STAKEHOLDERS_FILE, RECOMMENDATIONS_FILE, VOTES_FILE, EFFORTS_FILE)}
    for p in paths.values():
        if not p.is_file():
            raise DatasetError(f"missing file: {p}")

    raw_stk: list[tuple[str, str, float, float | None, str]] = []
    seen: set[str] = set()
    for line, row in _rows(paths[STAKEHOLDERS_FILE], ("id", "name", "power")):
        where = f"{STAKEHOLDERS_FILE}:{line}"
        sid = row["id"]
        if not sid:
            raise DatasetError(f"{where}: empty id")
        if sid in seen:
            raise DatasetError(f"{where}: duplicate stakeholder id {sid!r}")
        seen.add(sid)
        power = _number(row["power"], where, "power")
        if power < 0:
            raise DatasetError(f"{where}: power must be >= 0")
        urgency = None
        if row.get("urgency", "") != "":
            urgency = _number(row["urgency"], where, "urgency")
        raw_stk.append((sid, row["name"], power, urgency, where))

    recommendations: list[Recommendation] = []
    legitimacy: dict[str, float] = defaultdict(float)
    for line, row in _rows(paths[RECOMMENDATIONS_FILE], ("recommender_id", "recommendee_id", "weight")):
        where = f"{RECOMMENDATIONS_FILE}:{line}"
        w = _number(row["weight"], where, "weight")
        if not w.is_integer() or not 1 <= w <= 8:
            raise DatasetError(f"{where}: weight must be an integer in [1, 8], got {row['weight']!r}")
        for col in ("recommender_id", "recommendee_id"):
            if row[col] not in seen:
                raise DatasetError(f"{where}: unknown stakeholder {row[col]!r} in {col}")
        recommendations.append(Recommendation(row["recommender_id"], row["recommendee_id"], int(w)))
        legitimacy[row["recommendee_id"]] += w

    requirements: list[RequirementRecord] = []
    req_ids: set[str] = set()
    for line, row in _rows(paths[EFFORTS_FILE], ("requirement_id", "effort")):
        where = f"{EFFORTS_FILE}:{line}"
        rid = row["requirement_id"]
        if not rid:
            raise DatasetError(f"{where}: empty requirement id")
        if rid in req_ids:
            raise DatasetError(f"{where}: duplicate requirement id {rid!r}")
        effort = _number(row["effort"], where, "effort")
        if effort <= 0:
            raise DatasetError(f"{where}: effort must be > 0")
        req_ids.add(rid)
        requirements.append(RequirementRecord(rid, effort))

    votes: dict[tuple[str, str], float] = {}
    vote_sum: dict[str, list[float]] = defaultdict(list)
    for line, row in _rows(paths[VOTES_FILE], ("stakeholder_id", "requirement_id", "points")):
        where = f"{VOTES_FILE}:{line}"
        sid, rid = row["stakeholder_id"], row["requirement_id"]
        if sid not in seen:
            raise DatasetError(f"{where}: unknown stakeholder {sid!r}")
        if rid not in req_ids:
            raise DatasetError(f"{where}: unknown requirement {rid!r}")
        if (sid, rid) in votes:
            raise DatasetError(f"{where}: duplicate vote ({sid!r}, {rid!r})")
        pts = _number(row["points"], where, "points")
        if pts <= 0:
            raise DatasetError(f"{where}: points must be > 0")
        votes[(sid, rid)] = pts
        vote_sum[sid].append(pts)

    stakeholders = []
    for sid, name, power, urgency, where in raw_stk:
        computed = math.fsum(vote_sum.get(sid, ()))
        if urgency is not None and abs(urgency - computed) > URGENCY_TOLERANCE * max(1.0, computed):
            raise DatasetError(f"{where}: urgency {urgency} does not match vote total {computed}")
        stakeholders.append(StakeholderRecord(sid, name, power, legitimacy.get(sid, 0.0), computed))

    return ProjectDataset(tuple(stakeholders), tuple(requirements), votes, tuple(recommendations))


def serialize(dataset: ProjectDataset, output_dir: str | Path) -> None:
    """Write ``dataset`` in the format read by :func:`ingest`.

    Recommendations are written as stored. A dataset produced by
    :func:`filter_expectant` may keep edges from dropped recommenders, so only
    ingested (unfiltered) datasets are guaranteed to read back identically.
    """
    out = Path(output_dir)
    write_csv(
        out / STAKEHOLDERS_FILE,
        ("id", "name", "power", "urgency"),
        ((s.id, s.name, fmt_num(s.power), fmt_num(s.urgency)) for s in dataset.stakeholders),
    )
    write_csv(
        out / RECOMMENDATIONS_FILE,
        ("recommender_id", "recommendee_id", "weight"),
        ((r.recommender_id, r.recommendee_id, r.weight) for r in dataset.recommendations),
    )
    write_csv(
        out / VOTES_FILE,
        ("stakeholder_id", "requirement_id", "points"),
        ((sid, rid, fmt_num(p)) for (sid, rid), p in dataset.votes.items()),
    )
    write_csv(
        out / EFFORTS_FILE,
        ("requirement_id", "effort"),
        ((r.id, fmt_num(r.effort)) for r in dataset.requirements),
    )


def filter_expectant(dataset: ProjectDataset) -> ProjectDataset:
    """Keep stakeholders with at least two strictly positive salience components.

    Votes of dropped stakeholders go with them, and requirements left without
    any vote are removed. Legitimacy values are kept as computed on the full
    recommendation network.
    """
    kept = tuple(s for s in dataset.stakeholders if s.n_positive_components >= 2)
    kept_ids = {s.id for s in kept}
    votes = {key: pts for key, pts in dataset.votes.items() if key[0] in kept_ids}
    voted = {rid for _, rid in votes}
    requirements = tuple(r for r in dataset.requirements if r.id in voted)
    recs = tuple(r for r in dataset.recommendations if r.recommendee_id in kept_ids)
    return ProjectDataset(kept, requirements, votes, recs)

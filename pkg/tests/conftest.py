from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np
import pytest

from salience_nrp.grouping import FeatureMatrix

_ACCEPTANCE: list[tuple[str, str, str]] = []


def write_dataset(root: Path, stakeholders, recommendations, votes, efforts) -> Path:
    """Write the four input CSVs. ``stakeholders`` rows are (id, name, power[, urgency])."""
    root.mkdir(parents=True, exist_ok=True)
    with_urgency = any(len(r) > 3 for r in stakeholders)
    tables = {
        "stakeholders.csv": (("id", "name", "power", "urgency") if with_urgency else ("id", "name", "power"), stakeholders),
        "recommendations.csv": (("recommender_id", "recommendee_id", "weight"), recommendations),
        "votes.csv": (("stakeholder_id", "requirement_id", "points"), votes),
        "efforts.csv": (("requirement_id", "effort"), efforts),
    }
    for name, (header, rows) in tables.items():
        with open(root / name, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    return root


@pytest.fixture
def tiny_dataset(tmp_path):
    """Three stakeholders, three requirements; s3 has only power so it is filtered out."""
    return write_dataset(
        tmp_path / "tiny",
        [("s1", "Alice", "10"), ("s2", "Bob", "5"), ("s3", "Carol", "7")],
        [("s2", "s1", "3"), ("s3", "s1", "5"), ("s1", "s2", "2")],
        [("s1", "r1", "30"), ("s1", "r2", "70"), ("s2", "r1", "100")],
        [("r1", "10"), ("r2", "20"), ("r3", "5")],
    )


def blobs(g: int, per: int = 8, spread: float = 1.0, seed: int = 0) -> FeatureMatrix:
    """g tight Gaussian blobs along the diagonal, 60 units apart."""
    rng = np.random.default_rng(seed)
    rows, ids = [], []
    for c in range(g):
        centre = np.array([10.0 + 60 * c, 20.0 + 60 * c, 30.0 + 60 * c])
        for j in range(per):
            rows.append(centre + rng.normal(0, spread, 3))
            ids.append(f"b{c}_{j:02d}")
    return FeatureMatrix(tuple(ids), np.array(rows))


def ralic_dir() -> Path | None:
    d = os.environ.get("RALIC_DIR")
    return Path(d) if d and Path(d).is_dir() else None


def record_acceptance(name: str, ok: bool, detail: str = "") -> None:
    _ACCEPTANCE.append((name, "PASS" if ok else "FAIL", detail))


def record_skip(name: str, reason: str) -> None:
    _ACCEPTANCE.append((name, "SKIP", reason))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"{status:4s} {name}" + (f"  ({detail})" if detail else ""))

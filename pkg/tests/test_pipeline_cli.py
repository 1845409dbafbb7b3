from __future__ import annotations

import csv
import json
import logging
import re
from collections import defaultdict

import numpy as np
import pytest

from conftest import write_dataset
from salience_nrp.cli import EXIT_INFEASIBLE, EXIT_INPUT, main
from salience_nrp.coverage import CoverageVector
from salience_nrp.grouping import FeatureMatrix
from salience_nrp.model import filter_expectant, ingest
from salience_nrp.pipeline import PipelineConfig, run_pipeline
from salience_nrp.radar import render_radar
from salience_nrp.salience import SalienceRow, SalienceTable, compute_salience
from salience_nrp.synth import SynthSpec, synth
from salience_nrp.validation import recommend_k

FAST = dict(steps=10, attempts=5, restarts=3)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def four_blobs(tmp_path_factory):
    return synth(SynthSpec(n_stakeholders=40, n_requirements=20, seed=1), tmp_path_factory.mktemp("blobs"))


def test_synth_byte_identical(tmp_path):
    spec = SynthSpec(n_stakeholders=30, n_requirements=12, seed=7)
    a, b = synth(spec, tmp_path / "a"), synth(spec, tmp_path / "b")
    for f in sorted(p.name for p in a.iterdir()):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_synth_votes_sum_to_100(four_blobs):
    totals = defaultdict(float)
    for row in read_rows(four_blobs / "votes.csv"):
        totals[row["stakeholder_id"]] += float(row["points"])
    assert len(totals) == 40 and set(totals.values()) == {100.0}
    ds = ingest(four_blobs)
    assert all(s.urgency == 100 for s in ds.stakeholders)


def test_synth_single_vote(tmp_path):
    out = synth(SynthSpec(n_stakeholders=10, n_requirements=5, votes_per_stakeholder=(1, 1)), tmp_path)
    rows = read_rows(out / "votes.csv")
    assert len(rows) == 10 and all(r["points"] == "100" for r in rows)


def test_synth_single_group_gap_picks_one(tmp_path):
    out = synth(SynthSpec(n_stakeholders=40, n_groups=1, seed=3), tmp_path)
    fm = FeatureMatrix.from_table(compute_salience(filter_expectant(ingest(out))))
    rec = recommend_k(fm, "kmeans", (2, 6), seed=0, restarts=5, reference_samples=20)
    assert rec.gap_k == 1
    assert "gap" not in rec.votes


def test_four_blobs_kmeans_picks_top_blob(four_blobs, tmp_path):
    res = run_pipeline(PipelineConfig(str(four_blobs), str(tmp_path), method="kmeans", **FAST), stage="group")
    g = res.groupings[0]
    assert g.recommendation.winner == 4
    truth = {r["id"]: int(r["group"]) for r in read_rows(four_blobs / "truth.csv")}
    assert sorted(g.partition.definitive_ids) == sorted(s for s, grp in truth.items() if grp == 4)
    rec = json.loads((tmp_path / "kmeans" / "k_recommendation.json").read_text())
    assert rec["winner"] == 4 and {"method", "k_range", "votes", "tally"} <= set(rec)


def test_full_run_outputs_and_reduction(four_blobs, tmp_path):
    res = run_pipeline(PipelineConfig(str(four_blobs), str(tmp_path), **FAST))
    for name in ("salience.csv", "coverage.csv", "comparison.json", "report.json", "radar.svg", "def0/front.csv"):
        assert (tmp_path / name).is_file()
    report = json.loads((tmp_path / "report.json").read_text())
    retained = report["dataset"]["stakeholders_retained"]
    for g in report["groups"]:
        assert g["reduction_pct"] == round(100 * (1 - g["definitive_size"] / retained), 2)
        assert (tmp_path / g["label"] / "front.csv").is_file()
    assert [r["front"] for r in report["coverage"]] == ["def0", "quartile", "kmeans", "kmedoids", "hierarchical"]
    assert len({json.dumps(f["solver"], sort_keys=True) for f in report["fronts"]}) == 1
    assert "input_dir" not in report["config"]
    assert res.report == report


def test_quartile_with_k_warns(four_blobs, tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        res = run_pipeline(PipelineConfig(str(four_blobs), str(tmp_path), method="quartile", k=3, **FAST), stage="group")
    assert res.groupings[0].k == 4
    assert any("ignored" in r.message for r in caplog.records)


def test_radar_axis_order():
    sal = SalienceTable({"a": SalienceRow(5, 0, 0), "b": SalienceRow(9, 0, 0), "c": SalienceRow(1, 0, 0)})
    cov = CoverageVector("def0", {"a": 0.5, "b": 0.5, "c": 0.5})
    svg = render_radar([cov], sal, {("a", "r"): 100, ("b", "r"): 100, ("c", "r"): 100})
    assert re.findall(r'data-stakeholder="(\w+)"', svg) == ["b", "a", "c"]


def test_radar_single_axis_full_scale():
    sal = SalienceTable({"a": SalienceRow(5, 0, 0)})
    svg = render_radar([CoverageVector("def0", {"a": 1.0})], sal, {("a", "r"): 100})
    axis = re.search(r'class="axis"[^>]*x2="([\d.]+)" y2="([\d.]+)"', svg)
    front = re.search(r'class="front"[^>]*points="([\d.]+),([\d.]+)"', svg)
    assert axis.groups() == front.groups()
    assert "<metadata" not in svg


def test_cli_exit_codes(four_blobs, tmp_path, capsys):
    assert main(["ingest", "--input-dir", str(tmp_path / "missing")]) == EXIT_INPUT
    assert main(["solve", "--input-dir", str(four_blobs), "--output-dir", str(tmp_path), "--method", "quartile",
                 "--b1-abs", "0.001", "--b2-abs", "0.002", "--steps", "3"]) == EXIT_INFEASIBLE
    assert main(["ingest", "--input-dir", str(four_blobs)]) == 0
    counts = json.loads(capsys.readouterr().out)
    assert counts["stakeholders_retained"] == 40


def test_cli_synth_then_run(tmp_path, capsys):
    data = tmp_path / "data"
    assert main(["synth", "--output-dir", str(data), "--n-stakeholders", "24", "--n-requirements", "10"]) == 0
    assert main(["run", "--input-dir", str(data), "--output-dir", str(tmp_path / "out"), "--method", "hierarchical",
                 "--k", "4", "--steps", "5", "--attempts", "3"]) == 0
    out = capsys.readouterr().out
    assert "def0: coverage" in out and "hierarchical: coverage" in out


def test_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig("i", "o", b1_frac=0.3, b2_frac=0.2)
    with pytest.raises(ValueError):
        PipelineConfig("i", "o", b1_abs=5.0)
    with pytest.raises(ValueError):
        PipelineConfig("i", "o", method="dbscan")


def test_def0_is_all_retained(tmp_path):
    root = write_dataset(
        tmp_path / "d",
        [("s1", "a", "10"), ("s2", "b", "0"), ("s3", "c", "4")],
        [("s1", "s2", "1"), ("s2", "s3", "2"), ("s3", "s1", "3")],
        [("s1", "r1", "100"), ("s2", "r2", "100"), ("s3", "r3", "100")],
        [("r1", "1"), ("r2", "2"), ("r3", "3"), ("r4", "4")],
    )
    res = run_pipeline(PipelineConfig(str(root), str(tmp_path / "o"), method="hierarchical", k=2,
                                      b1_frac=0.1, b2_frac=0.5, **FAST), stage="coverage")
    assert res.fronts["def0"].solutions[0].total_effort <= 3.0
    assert sorted(res.coverages[0].values) == ["s1", "s2", "s3"]
    assert np.all(np.isfinite(list(res.coverages[0].values.values())))

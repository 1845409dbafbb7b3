"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line (printed in the terminal summary) before
asserting. Criteria that need the RALIC dataset read it from ``$RALIC_DIR``
(converted to this package's four-CSV input format) and are skipped when it
is not set.
"""

from __future__ import annotations

import itertools
import time

import numpy as np
import pytest

from conftest import blobs, ralic_dir, record_acceptance, record_skip
from salience_nrp.cli import main
from salience_nrp.coverage import wilcoxon_signed_rank
from salience_nrp.grouping import (
    FeatureMatrix,
    _kmeanspp,
    _lloyd,
    designate_definitive,
    hierarchical,
    kmeans,
    kmedoids,
    pairwise_distances,
    ward_merges,
)
from salience_nrp.model import filter_expectant, ingest
from salience_nrp.nrp import NrpInstance, dominates, greedy_front
from salience_nrp.pipeline import PipelineConfig, run_pipeline
from salience_nrp.salience import compute_salience, quartile_groups, summarize
from salience_nrp.synth import SynthSpec, synth
from salience_nrp.validation import recommend_k

pytestmark = pytest.mark.acceptance


def _ralic_or_skip(name: str):
    d = ralic_dir()
    if d is None:
        record_skip(name, "RALIC_DIR not set")
        pytest.skip("RALIC-format dataset not available (set RALIC_DIR)")
    return d


def _same_partition(a: dict, b: dict) -> bool:
    pairs = {(a[s], b[s]) for s in a}
    return len(pairs) == len({x for x, _ in pairs}) == len({y for _, y in pairs})


# ------------------------------------------------------------------ 1-3, RALIC


def test_c1_salience_golden():
    name = "C1 salience golden check"
    d = _ralic_or_skip(name)
    t0 = time.perf_counter()
    ds = filter_expectant(ingest(d))
    s = summarize(compute_salience(ds)).salience
    elapsed = time.perf_counter() - t0
    want = {"min": 2.00, "q1": 37.00, "median": 73.00, "mean": 83.07, "q3": 113.05, "max": 333.50}
    got = s.as_dict()
    ok = len(ds) == 98 and all(abs(got[k] - v) <= 0.01 for k, v in want.items()) and elapsed < 1
    record_acceptance(name, ok, f"n={len(ds)} summary={ {k: round(v, 2) for k, v in got.items()} } {elapsed:.2f}s")
    assert ok


def test_c2_quartile_golden():
    name = "C2 quartile grouping golden check"
    d = _ralic_or_skip(name)
    t0 = time.perf_counter()
    part = quartile_groups(compute_salience(filter_expectant(ingest(d))))
    elapsed = time.perf_counter() - t0
    cen = part.centroids[part.definitive_cluster - 1]
    ok = (
        part.sizes == (26, 23, 24, 25)
        and part.definitive_cluster == 4
        and np.all(np.abs(cen - [34.91, 94.40, 31.88]) <= 0.01)
        and elapsed < 1
    )
    record_acceptance(name, ok, f"sizes={part.sizes} centroid={np.round(cen, 2).tolist()} {elapsed:.2f}s")
    assert ok


def test_c3_ward_soft_golden():
    name = "C3 hierarchical k3/k4 definitive identity"
    d = _ralic_or_skip(name)
    t0 = time.perf_counter()
    fm = FeatureMatrix.from_table(compute_salience(filter_expectant(ingest(d))))
    p4, p3 = hierarchical(fm, 4), hierarchical(fm, 3)
    elapsed = time.perf_counter() - t0
    dominant = all(
        p.centroid_salience(p.definitive_cluster) >= max(p.centroid_salience(c) for c in range(1, p.k + 1))
        for p in (p3, p4)
    )
    same = p4.definitive_ids == p3.definitive_ids
    cen = p4.centroids[p4.definitive_cluster - 1]
    ok = same and dominant and elapsed < 5
    record_acceptance(
        name,
        ok,
        f"size={len(p4.definitive_ids)} (expected 20) centroid={np.round(cen, 2).tolist()} "
        f"(expected [42.34, 93.25, 11.15]) {elapsed:.2f}s",
    )
    assert ok


# ------------------------------------------------------------- 4 clustering


def test_c4_clustering_properties():
    name = "C4 clustering property suite"
    t0 = time.perf_counter()
    problems = []

    rng = np.random.default_rng(2024)
    for trial in range(20):
        n = int(rng.integers(5, 51))
        k = int(rng.integers(1, 6))
        X = rng.normal(0, 10, (n, 3))
        fm = FeatureMatrix(tuple(f"x{i:02d}" for i in range(n)), X)
        part = kmedoids(fm, k)
        D = pairwise_distances(fm.data)
        idx = {s: i for i, s in enumerate(fm.ids)}
        for c, med in enumerate(part.medoids, 1):
            members = [idx[s] for s in part.members(c)]
            best = min(D[m, members].sum() for m in members)
            if D[idx[med], members].sum() > best + 1e-9:
                problems.append(f"PAM medoid not optimal (trial {trial}, cluster {c})")

        _, _, hist = _lloyd(X, _kmeanspp(X, k, rng))
        if any(b > a + 1e-9 * max(1.0, a) for a, b in zip(hist, hist[1:])):
            problems.append(f"k-means WSS increased (trial {trial})")
        heights = [h for _, _, h in ward_merges(X)]
        if any(b < a - 1e-9 for a, b in zip(heights, heights[1:])):
            problems.append(f"Ward heights decreased (trial {trial})")

    for g in (2, 3, 4, 5):
        fm = blobs(g, per=8, spread=1.0, seed=g)
        truth = {s: s.split("_")[0] for s in fm.ids}
        for method in ("kmeans", "kmedoids", "hierarchical"):
            part = hierarchical(fm, g) if method == "hierarchical" else (kmeans if method == "kmeans" else kmedoids)(fm, g, seed=0)
            if not _same_partition(part.assignment, truth):
                problems.append(f"{method} did not recover {g} blobs")
            rec = recommend_k(fm, method, (2, 6), seed=0)
            if rec.winner != g:
                problems.append(f"recommend_k({method}) = {rec.winner} for {g} blobs")
    elapsed = time.perf_counter() - t0
    ok = not problems and elapsed < 30
    record_acceptance(name, ok, f"{elapsed:.1f}s" + (f"; {problems[:3]}" if problems else ""))
    assert ok, problems


# ---------------------------------------------------------------- 5 solver


def _oracle(inst: NrpInstance):
    """Satisfaction and effort of every feasible subset, by enumeration."""
    n = len(inst)
    masks = np.arange(1 << n)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    sat, eff = bits @ inst.sat, bits @ inst.effort
    ok = (eff >= inst.b1) & (eff <= inst.b2)
    return sat[ok], eff[ok]


def _instances(count: int, seed: int):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(3, 19))
        sat = rng.uniform(0, 100, n) * (rng.random(n) > 0.1)
        eff = rng.uniform(1, 50, n)
        total = eff.sum()
        lo = rng.uniform(0.1, 0.5)
        hi = min(1.0, lo + rng.uniform(0.0, 0.3))
        yield NrpInstance(tuple(f"r{i:02d}" for i in range(n)), sat, eff, lo * total, hi * total)


def test_c5_solver_oracle():
    name = "C5 solver oracle suite"
    t0 = time.perf_counter()
    infeasible, dominated, worst, below, missed = 0, 0, 1.0, 0, 0
    for inst in _instances(200, seed=0):
        front = greedy_front(inst)
        sat, eff = _oracle(inst)
        if len(front) == 0 and len(sat):
            missed += 1
        for s in front:
            if not inst.b1 <= s.total_effort <= inst.b2:
                infeasible += 1
            best = sat[eff <= s.total_effort + 1e-9].max()
            ratio = s.total_sat / best if best > 0 else 1.0
            worst = min(worst, ratio)
            below += ratio < 0.9
        dominated += sum(dominates(a, b) for a, b in itertools.permutations(front.solutions, 2))
    elapsed = time.perf_counter() - t0
    ok = infeasible == 0 and dominated == 0 and below == 0 and elapsed < 120
    record_acceptance(
        name,
        ok,
        f"worst ratio {worst:.3f}, {below} solutions below 0.9, infeasible {infeasible}, "
        f"dominated pairs {dominated}, empty fronts on feasible instances {missed}, {elapsed:.1f}s",
    )
    assert infeasible == 0 and dominated == 0
    assert below == 0, f"worst satisfaction ratio {worst:.3f}"
    assert elapsed < 120


# --------------------------------------------------------------- 6 Wilcoxon


def _w_counts(n: int) -> np.ndarray:
    def half(ranks):
        sums = np.zeros(1, dtype=np.int64)
        for r in ranks:
            sums = np.concatenate([sums, sums + r])
        return np.bincount(sums)

    return np.convolve(half(range(1, n // 2 + 1)), half(range(n // 2 + 1, n + 1))).astype(float)


def test_c6_wilcoxon_oracle():
    name = "C6 Wilcoxon oracle suite"
    t0 = time.perf_counter()
    exact_err = 0.0
    for n in range(1, 13):
        ranks = np.arange(1, n + 1)
        ws = np.array([ranks[np.array(s, bool)].sum() for s in itertools.product((0, 1), repeat=n)])
        for signs in itertools.product((-1, 1), repeat=n):
            d = np.array(signs) * ranks
            w = ranks[d > 0].sum()
            ref = min(1.0, 2 * min((ws <= w).mean(), (ws >= w).mean()))
            exact_err = max(exact_err, abs(wilcoxon_signed_rank(d, "exact") - ref))

    n = 25
    counts = _w_counts(n)
    total = counts.sum()
    normal_err, tail_err = 0.0, 0.0
    for w in range(len(counts)):
        ref = min(1.0, 2 * min(counts[: w + 1].sum(), counts[w:].sum()) / total)
        pos, rest = set(), w
        for r in range(n, 0, -1):
            if r <= rest:
                pos.add(r)
                rest -= r
        d = [r if r in pos else -r for r in range(1, n + 1)]
        err = abs(wilcoxon_signed_rank(d, "normal") - ref)
        normal_err = max(normal_err, err)
        if ref <= 0.2:
            tail_err = max(tail_err, err)
    elapsed = time.perf_counter() - t0
    ok = exact_err <= 1e-12 and normal_err <= 0.005 and elapsed < 60
    record_acceptance(
        name,
        ok,
        f"exact max err {exact_err:.1e}; normal max err {normal_err:.4f} over all W+ "
        f"({tail_err:.4f} where p<=0.2); {elapsed:.1f}s",
    )
    assert exact_err <= 1e-12
    assert normal_err <= 0.005
    assert elapsed < 60


# --------------------------------------------------------- 7-8, RALIC runs


@pytest.fixture(scope="module")
def ralic_report(tmp_path_factory):
    d = ralic_dir()
    if d is None:
        return None
    out = tmp_path_factory.mktemp("ralic")
    t0 = time.perf_counter()
    res = run_pipeline(PipelineConfig(str(d), str(out)))
    return res.report, time.perf_counter() - t0


def test_c7_coverage_preservation(ralic_report):
    name = "C7 coverage preservation"
    _ralic_or_skip(name)
    report, elapsed = ralic_report
    rows = {r["front"]: r for r in report["coverage"]}
    clustering = {k: rows[k]["wilcoxon_p_vs_def0"] for k in ("kmeans", "kmedoids", "hierarchical")}
    quart = rows["quartile"]["wilcoxon_p_vs_def0"]
    base = rows["def0"]["mean_pct"]
    ok = all(p > 0.05 for p in clustering.values()) and quart < 0.01 and abs(base - 84.89) <= 5 and elapsed < 120
    record_acceptance(name, ok, f"p clustering={clustering} quartile={quart} def0 mean={base} {elapsed:.1f}s")
    assert ok


def test_c8_reduction(ralic_report):
    name = "C8 reduction check"
    _ralic_or_skip(name)
    report, _ = ralic_report
    red = report["reduction_pct"]
    ok = all(60 <= v <= 90 for v in red.values())
    record_acceptance(name, ok, f"{red}")
    assert ok


# ------------------------------------------------------------ 9 determinism


def test_c9_end_to_end_determinism(tmp_path):
    name = "C9 end-to-end determinism"
    data = synth(SynthSpec(seed=5), tmp_path / "data")
    t0 = time.perf_counter()
    for run in ("a", "b"):
        assert main(["run", "--input-dir", str(data), "--output-dir", str(tmp_path / run)]) == 0
    elapsed = time.perf_counter() - t0
    same = (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()
    svg = (tmp_path / "a" / "radar.svg").read_bytes() == (tmp_path / "b" / "radar.svg").read_bytes()
    ok = same and elapsed < 120
    record_acceptance(name, ok, f"report identical={same} radar identical={svg} {elapsed:.1f}s")
    assert ok

"""End-to-end run: ingest, salience, grouping, one front per stakeholder group, coverage.

Output layout under ``output_dir``::

    salience.csv
    <method>/k_recommendation.json   (clustering methods without a fixed k)
    <method>/clusters.csv, <method>/centroids.csv
    def0/front.csv, <method>/front.csv
    coverage.csv, comparison.json, report.json, radar.svg
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from pathlib import Path

from salience_nrp._io import write_json
from salience_nrp.coverage import (
    CoverageVector,
    compare,
    comparison_matrix,
    front_coverage,
    write_comparison_json,
    write_coverage_csv,
)
from salience_nrp.grouping import (
    METHODS,
    SCALINGS,
    ClusterPartition,
    FeatureMatrix,
    InvariantError,
    cluster,
)
from salience_nrp.model import ProjectDataset, filter_expectant, ingest
from salience_nrp.nrp import InfeasibleError, ParetoFront, build_instance, greedy_front
from salience_nrp.radar import emit_radar
from salience_nrp.salience import SalienceTable, compute_salience, quartile_groups, summarize
from salience_nrp.validation import DEFAULT_K_RANGE, KRecommendation, recommend_k

log = logging.getLogger(__name__)

BASELINE = "def0"
STAGES = ("ingest", "salience", "group", "recommend-k", "solve", "coverage", "run")


@dataclass(frozen=True)
class PipelineConfig:
    input_dir: str
    output_dir: str
    method: str = "all"
    k: int | None = None
    scaling: str = "raw"
    b1_frac: float = 0.20
    b2_frac: float = 0.25
    b1_abs: float | None = None
    b2_abs: float | None = None
    steps: int = 100
    attempts: int = 50
    restarts: int = 25
    seed: int = 0
    k_min: int = DEFAULT_K_RANGE[0]
    k_max: int = DEFAULT_K_RANGE[1]

    def __post_init__(self) -> None:
        if self.method not in (*METHODS, "all"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.scaling not in SCALINGS:
            raise ValueError(f"unknown scaling {self.scaling!r}")
        if not 0 < self.b1_frac <= self.b2_frac <= 1:
            raise ValueError("need 0 < b1_frac <= b2_frac <= 1")
        if (self.b1_abs is None) != (self.b2_abs is None):
            raise ValueError("--b1-abs and --b2-abs must be given together")
        if self.b1_abs is not None and not 0 < self.b1_abs <= self.b2_abs:
            raise ValueError("need 0 < b1_abs <= b2_abs")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1")
        if self.steps < 1 or self.attempts < 0 or self.restarts < 1:
            raise ValueError("steps and restarts must be >= 1, attempts >= 0")

    @property
    def methods(self) -> tuple[str, ...]:
        return METHODS if self.method == "all" else (self.method,)

    def echo(self) -> dict:
        """Parameters that determine the results; directory paths are left out."""
        d = asdict(self)
        d.pop("input_dir")
        d.pop("output_dir")
        return d


@dataclass
class Grouping:
    label: str
    method: str
    partition: ClusterPartition
    recommendation: KRecommendation | None = None

    @property
    def k(self) -> int:
        return self.partition.k


@dataclass
class PipelineResult:
    dataset: ProjectDataset
    salience: SalienceTable
    groupings: list[Grouping]
    fronts: dict[str, ParetoFront]
    coverages: list[CoverageVector]
    report: dict | None


def _groupings(config: PipelineConfig, table: SalienceTable, out: Path, stage: str) -> list[Grouping]:
    features = FeatureMatrix.from_table(table, config.scaling)
    result = []
    for method in config.methods:
        if method == "quartile":
            if config.k is not None:
                log.warning("k=%s ignored for quartile grouping (always 4 groups)", config.k)
            if stage == "recommend-k":
                continue
            result.append(Grouping("quartile", "quartile", quartile_groups(table)))
            continue
        rec = None
        k = config.k
        if k is None or stage == "recommend-k":
            hi = min(config.k_max, len(features) - 1)
            rec = recommend_k(features, method, (config.k_min, hi), seed=config.seed, restarts=config.restarts)
            rec.write_json(out / method / "k_recommendation.json")
            log.info("%s: recommended k = %d (tally %s)", method, rec.winner, rec.tally)
            if stage == "recommend-k":
                continue
            k = rec.winner
        part = cluster(features, method, k, seed=config.seed, restarts=config.restarts)
        result.append(Grouping(method, method, part, rec))
    for g in result:
        g.partition.write_csv(out / g.label / "clusters.csv", out / g.label / "centroids.csv")
    return result


def _reduction_pct(group_size: int, retained: int) -> float:
    return 100.0 * (1.0 - group_size / retained)


def run_pipeline(config: PipelineConfig, stage: str = "run") -> PipelineResult:
    """Run every step up to and including ``stage`` and write its outputs."""
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}")
    out = Path(config.output_dir)
    raw = ingest(config.input_dir)
    dataset = filter_expectant(raw)
    log.info(
        "retained %d of %d stakeholders, %d requirements", len(dataset), len(raw), len(dataset.requirements)
    )
    table = compute_salience(dataset)
    result = PipelineResult(dataset, table, [], {}, [], None)
    if stage == "ingest":
        return result
    table.to_csv(out / "salience.csv")
    if stage == "salience":
        return result

    result.groupings = _groupings(config, table, out, stage)
    if stage in ("group", "recommend-k"):
        return result

    subsets = {BASELINE: dataset.stakeholder_ids}
    for g in result.groupings:
        subsets[g.label] = g.partition.definitive_ids
    for label, subset in subsets.items():
        inst = build_instance(
            dataset, table, subset, config.b1_frac, config.b2_frac, config.b1_abs, config.b2_abs
        )
        front = greedy_front(inst, steps=config.steps, attempts=config.attempts, seed=config.seed)
        if front.infeasible:
            raise InfeasibleError(f"no feasible solution for {label} within [{inst.b1:g}, {inst.b2:g}]")
        front.write_csv(out / label / "front.csv")
        result.fronts[label] = front
    if stage == "solve":
        return result

    votes = dataset.votes
    result.coverages = [front_coverage(f, votes, label) for label, f in result.fronts.items()]
    comparisons = comparison_matrix(result.coverages)
    write_coverage_csv(out / "coverage.csv", result.coverages)
    write_comparison_json(out / "comparison.json", comparisons)
    if stage == "coverage":
        return result

    result.report = build_report(config, raw, result, comparisons)
    write_json(out / "report.json", result.report)
    emit_radar(result.coverages, table, votes, out / "radar.svg")
    return result


def build_report(config: PipelineConfig, raw: ProjectDataset, result: PipelineResult, comparisons) -> dict:
    dataset = result.dataset
    retained = len(dataset)
    demanding = set(dataset.demanding_ids())
    settings = {label: f.settings for label, f in result.fronts.items()}
    reference = settings[BASELINE]
    if any(s != reference for s in settings.values()):
        raise InvariantError("fronts were produced with different solver settings")

    groups = []
    reductions = {}
    for g in result.groupings:
        members = g.partition.definitive_ids
        reductions[g.label] = round(_reduction_pct(len(members), retained), 2)
        row = {
            "label": g.label,
            "method": g.method,
            "k": g.k,
            "definitive_size": len(members),
            "definitive_demanding": len(demanding.intersection(members)),
            "reduction_pct": reductions[g.label],
            "clusters": [
                {key: (round(v, 4) if isinstance(v, float) else v) for key, v in row.items()}
                for row in g.partition.centroid_rows()
            ],
            "definitive_ids": members,
        }
        if g.recommendation is not None:
            row["k_recommendation"] = g.recommendation.as_dict()
        groups.append(row)

    base_cov = result.coverages[0]
    coverage_rows = []
    for cov in result.coverages:
        row = {
            "front": cov.front_id,
            "stakeholders": len(dataset.stakeholder_ids) if cov.front_id == BASELINE else None,
            "mean_pct": round(100 * cov.mean, 2),
            "sd_pct": round(100 * cov.sd, 2),
            "coef_var": None if cov.coef_var != cov.coef_var else round(cov.coef_var, 4),
        }
        if cov.front_id != BASELINE:
            cmp = compare(base_cov, cov)
            row.update(
                n_lower=cmp.n_lower,
                n_equal=cmp.n_equal,
                n_higher=cmp.n_higher,
                wilcoxon_p_vs_def0=float(f"{cmp.wilcoxon_p:.6g}"),
            )
            grouping = next(g for g in result.groupings if g.label == cov.front_id)
            row["stakeholders"] = len(grouping.partition.definitive_ids)
        coverage_rows.append(row)

    p_matrix: dict[str, dict[str, float]] = {}
    for cmp in comparisons:
        p_matrix.setdefault(cmp.candidate_id, {})[cmp.baseline_id] = float(f"{cmp.wilcoxon_p:.6g}")

    return {
        "config": config.echo(),
        "dataset": {
            "stakeholders_total": len(raw),
            "stakeholders_retained": retained,
            "requirements": len(dataset.requirements),
            "demanding": len(demanding),
            "total_effort": dataset.total_effort(),
        },
        "salience_summary": {
            comp: {key: round(v, 4) for key, v in stats.items()}
            for comp, stats in summarize(result.salience).as_dict().items()
        },
        "groups": groups,
        "fronts": [
            {"front": label, **f.summary(), "solver": f.settings} for label, f in result.fronts.items()
        ],
        "coverage": coverage_rows,
        "p_values": p_matrix,
        "reduction_pct": reductions,
    }

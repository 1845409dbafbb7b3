"""Stakeholder salience grouping and downsized next-release-problem solving."""

from salience_nrp.model import (
    DatasetError,
    ProjectDataset,
    RequirementRecord,
    StakeholderRecord,
    filter_expectant,
    ingest,
    serialize,
)
from salience_nrp.salience import SalienceSummary, SalienceTable, compute_salience, quartile_groups, summarize
from salience_nrp.grouping import (
    ClusterPartition,
    FeatureMatrix,
    designate_definitive,
    hierarchical,
    kmeans,
    kmedoids,
)
from salience_nrp.validation import KRecommendation, recommend_k
from salience_nrp.nrp import NrpInstance, ParetoFront, Solution, build_instance, dominates, greedy_front
from salience_nrp.coverage import (
    CoverageComparison,
    CoverageVector,
    compare,
    front_coverage,
    st_coverage,
    wilcoxon_signed_rank,
)

__version__ = "0.1.0"

__all__ = [
    "ClusterPartition",
    "CoverageComparison",
    "CoverageVector",
    "DatasetError",
    "FeatureMatrix",
    "KRecommendation",
    "NrpInstance",
    "ParetoFront",
    "ProjectDataset",
    "RequirementRecord",
    "SalienceSummary",
    "SalienceTable",
    "Solution",
    "StakeholderRecord",
    "build_instance",
    "compare",
    "compute_salience",
    "designate_definitive",
    "dominates",
    "filter_expectant",
    "front_coverage",
    "greedy_front",
    "hierarchical",
    "ingest",
    "kmeans",
    "kmedoids",
    "quartile_groups",
    "recommend_k",
    "serialize",
    "st_coverage",
    "summarize",
    "wilcoxon_signed_rank",
]

"""Discovery of anomalous categorical combinations in access logs.

The pipeline ingests delimited logs into a combination-by-entity index,
derives the expected combinations from per-category value frequencies, ranks
every entity inside each combination's cohort, and reports the combinations
where an entity sits furthest from its own baseline behaviour.
"""

from .baseline import (
    BaselineSet,
    CombinationClass,
    EmptyCategoryError,
    classify,
    generate_baseline,
    top_p_values,
)
from .config import (
    AnalysisSpec,
    ConfigError,
    FieldMapping,
    RunSettings,
    settings_from_file,
)
from .explain import (
    ChartData,
    ExplanationBundle,
    emit_report,
    explain,
    parse_reports,
    render_chart,
    write_explanation,
)
from .ingest import (
    CategoryMarginals,
    ContingencyIndex,
    LogRecord,
    MalformedLine,
    SchemaMismatch,
    aggregate,
    aggregate_lines,
    ingest_file,
    ingest_paths,
    merge_indexes,
    merge_marginals,
    parse_record,
    resolve_mapping,
)
from .rankstats import (
    DistanceEntry,
    DistanceTable,
    EntityBaselineStats,
    RankOrdering,
    baseline_stats,
    compute_distances,
    compute_mrr,
    mrr_from_ranks,
    rank_ordering,
    reciprocal_rank,
)
from .recommend import AnomalyItem, EntityAnomalyReport, recommend_all, top_k

__version__ = "0.1.0"

__all__ = [
    "AnalysisSpec",
    "AnomalyItem",
    "BaselineSet",
    "CategoryMarginals",
    "ChartData",
    "CombinationClass",
    "ConfigError",
    "ContingencyIndex",
    "DistanceEntry",
    "DistanceTable",
    "EmptyCategoryError",
    "EntityAnomalyReport",
    "EntityBaselineStats",
    "ExplanationBundle",
    "FieldMapping",
    "LogRecord",
    "MalformedLine",
    "RankOrdering",
    "RunSettings",
    "SchemaMismatch",
    "aggregate",
    "aggregate_lines",
    "baseline_stats",
    "classify",
    "compute_distances",
    "compute_mrr",
    "emit_report",
    "explain",
    "generate_baseline",
    "ingest_file",
    "ingest_paths",
    "merge_indexes",
    "merge_marginals",
    "mrr_from_ranks",
    "parse_record",
    "parse_reports",
    "rank_ordering",
    "recommend_all",
    "reciprocal_rank",
    "render_chart",
    "resolve_mapping",
    "settings_from_file",
    "top_k",
    "top_p_values",
    "write_explanation",
]

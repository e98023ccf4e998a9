"""Per-entity anomaly reports: the top-K furthest-from-baseline combinations."""

from __future__ import annotations

from dataclasses import dataclass

from .baseline import BaselineSet
from .config import AnalysisSpec
from .ingest import ContingencyIndex
from .rankstats import DistanceEntry, DistanceTable, baseline_stats, compute_distances


@dataclass(frozen=True)
class AnomalyItem:
    """One reported combination with the evidence behind its score."""

    combination: tuple[str, ...]
    distance: float
    rr: float
    rank: int
    cohort_size: int
    count: int


@dataclass(frozen=True)
class EntityAnomalyReport:
    """An entity's baseline summary and its highest-distance combinations.

    ``mrr`` is None for entities absent from every baseline combination;
    such entities carry no items because they cannot be scored.
    """

    entity: str
    mrr: float | None
    expected_rank: float | None
    baseline_presence: int
    items: tuple[AnomalyItem, ...]


def _as_item(entry: DistanceEntry) -> AnomalyItem:
    return AnomalyItem(
        entry.combination, entry.distance, entry.rr, entry.rank, entry.cohort_size, entry.count
    )


def top_k(entity: str, table: DistanceTable, k: int) -> EntityAnomalyReport:
    """The entity's k highest-distance combinations, ties broken by combination.

    Ordering is distance descending, then combination ascending, so equal
    scores always list in the same order.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    stats = table.entity_stats.get(entity)
    if stats is None:
        raise KeyError(f"unknown entity {entity!r}")
    candidates = table.by_entity.get(entity)
    items: tuple[AnomalyItem, ...] = ()
    if candidates:
        ordered = sorted(candidates.values(), key=lambda e: (-e.distance, e.combination))
        items = tuple(_as_item(entry) for entry in ordered[:k])
    return EntityAnomalyReport(
        entity, stats.mrr, stats.expected_rank, stats.baseline_presence, items
    )


def recommend_all(
    index: ContingencyIndex,
    baseline: BaselineSet,
    spec: AnalysisSpec,
) -> list[EntityAnomalyReport]:
    """One report per observed entity, sorted by entity for stable output."""
    if index.total_records == 0:
        raise ValueError("empty index: no accepted records to analyse")
    stats = baseline_stats(index, baseline)
    table = compute_distances(stats, index, baseline, spec.min_support)
    return [top_k(entity, table, spec.k) for entity in sorted(stats)]

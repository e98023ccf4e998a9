"""Streaming log ingestion into marginal counts and a combination-by-entity index.

Aggregates form a merge monoid: aggregating any chunking of a record stream
and merging the partials gives exactly the same counts as one pass over the
whole stream.  That makes multi-process ingestion bit-identical to
single-process ingestion, which the rest of the pipeline relies on.

Two routes produce the same aggregates:

* ``parse_record`` + ``aggregate`` is the reference route over explicit
  records, used by tests and small inputs.
* ``ingest_paths`` is the production route: a fused parse-and-count loop over
  raw lines, optionally fanned out over byte ranges of the file with
  ``workers`` processes.  Gzip inputs are always read in a single context
  because the stream does not support random access.

Malformed lines (wrong column count after splitting) are counted and skipped,
never fatal.  Bytes that do not decode as UTF-8 are replaced, not rejected.
"""

from __future__ import annotations

import gzip
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from os import cpu_count
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

from .config import AnalysisSpec, ConfigError, FieldMapping

LogRecord = tuple[str, ...]
"""One parsed log entry: one stripped value per mapped column."""

_MIN_CHUNK_BYTES = 1 << 16


class MalformedLine(ValueError):
    """A physical line that cannot become a record; ``reason`` says why."""

    def __init__(self, reason: str) -> None:
        super().__init__(reason)
        self.reason = reason


class SchemaMismatch(ValueError):
    """Merging aggregates that were built under different specifications."""


@dataclass
class CategoryMarginals:
    """Per-category value counts over the accepted records.

    ``counts`` maps category name to ``{value: occurrences}``; keys follow
    the analysis category order.
    """

    counts: dict[str, dict[str, int]]

    @classmethod
    def empty(cls, categories: Sequence[str]) -> "CategoryMarginals":
        return cls({c: {} for c in categories})

    @property
    def categories(self) -> tuple[str, ...]:
        return tuple(self.counts)

    def cardinality(self, category: str) -> int:
        if category not in self.counts:
            raise ConfigError(f"unknown category {category!r}")
        return len(self.counts[category])

    def total(self, category: str) -> int:
        if category not in self.counts:
            raise ConfigError(f"unknown category {category!r}")
        return sum(self.counts[category].values())


@dataclass
class ContingencyIndex:
    """Counts of (combination, entity) pairs plus stream bookkeeping.

    ``cells`` maps each observed category-value combination to the entities
    seen with it and how often.  Every stored count is at least one, and the
    cell counts of an index built from a stream sum to ``total_records``.
    """

    categories: tuple[str, ...]
    entity_field: str
    cells: dict[tuple[str, ...], dict[str, int]] = field(default_factory=dict)
    total_records: int = 0
    rejected_records: int = 0

    @classmethod
    def empty(cls, spec: AnalysisSpec) -> "ContingencyIndex":
        return cls(tuple(spec.categories), spec.entity_field)

    def schema(self) -> tuple[tuple[str, ...], str]:
        return (self.categories, self.entity_field)

    def combination_total(self, combination: Sequence[str]) -> int:
        cell = self.cells.get(tuple(combination))
        return sum(cell.values()) if cell else 0

    def entities(self) -> set[str]:
        seen: set[str] = set()
        for cell in self.cells.values():
            seen.update(cell)
        return seen

    def cell_sum(self) -> int:
        return sum(n for cell in self.cells.values() for n in cell.values())


def parse_record(line: str, mapping: FieldMapping) -> LogRecord:
    """Split one physical line into a record, or raise MalformedLine.

    Fields are whitespace-stripped; a field that is empty after stripping
    becomes ``mapping.missing_token``.  The only rejection is a column-count
    mismatch, so any line with the right number of delimiters is a record.
    """
    fields = line.split(mapping.delimiter)
    if len(fields) != mapping.column_count:
        raise MalformedLine(
            f"expected {mapping.column_count} columns, got {len(fields)}"
        )
    return tuple(f.strip() or mapping.missing_token for f in fields)


def aggregate(
    records: Iterable[LogRecord],
    spec: AnalysisSpec,
    mapping: FieldMapping,
) -> tuple[CategoryMarginals, ContingencyIndex]:
    """Reference aggregation of already-parsed records under a spec."""
    spec.validate_mapping(mapping)
    cat_idx = [mapping.index_of(c) for c in spec.categories]
    ent_idx = mapping.index_of(spec.entity_field)
    marginals = {c: {} for c in spec.categories}
    per_cat = [marginals[c] for c in spec.categories]
    cells: dict[tuple[str, ...], dict[str, int]] = {}
    total = 0
    for rec in records:
        combination = tuple(rec[i] for i in cat_idx)
        entity = rec[ent_idx]
        for counts, value in zip(per_cat, combination):
            counts[value] = counts.get(value, 0) + 1
        cell = cells.get(combination)
        if cell is None:
            cells[combination] = {entity: 1}
        else:
            cell[entity] = cell.get(entity, 0) + 1
        total += 1
    index = ContingencyIndex(tuple(spec.categories), spec.entity_field, cells, total, 0)
    return CategoryMarginals(marginals), index


def aggregate_lines(
    lines: Iterable[str],
    spec: AnalysisSpec,
    mapping: FieldMapping,
) -> tuple[CategoryMarginals, ContingencyIndex]:
    """Reference parse-then-aggregate over raw lines, counting rejections."""
    rejected = 0

    def records() -> Iterator[LogRecord]:
        nonlocal rejected
        for line in lines:
            try:
                yield parse_record(line, mapping)
            except MalformedLine:
                rejected += 1

    marginals, index = aggregate(records(), spec, mapping)
    index.rejected_records = rejected
    return marginals, index


def merge_marginals(a: CategoryMarginals, b: CategoryMarginals) -> CategoryMarginals:
    """Pointwise sum of two marginal tables over the same categories."""
    if a.categories != b.categories:
        raise SchemaMismatch(f"marginal categories differ: {a.categories} vs {b.categories}")
    merged = {c: dict(counts) for c, counts in a.counts.items()}
    for category, counts in b.counts.items():
        mine = merged[category]
        for value, n in counts.items():
            mine[value] = mine.get(value, 0) + n
    return CategoryMarginals(merged)


def merge_indexes(a: ContingencyIndex, b: ContingencyIndex) -> ContingencyIndex:
    """Cell-wise sum of two indexes built under the same spec."""
    if a.schema() != b.schema():
        raise SchemaMismatch(f"index schemas differ: {a.schema()} vs {b.schema()}")
    cells = {combo: dict(cell) for combo, cell in a.cells.items()}
    for combo, cell in b.cells.items():
        mine = cells.get(combo)
        if mine is None:
            cells[combo] = dict(cell)
        else:
            for entity, n in cell.items():
                mine[entity] = mine.get(entity, 0) + n
    return ContingencyIndex(
        a.categories,
        a.entity_field,
        cells,
        a.total_records + b.total_records,
        a.rejected_records + b.rejected_records,
    )


# --- fused fast path ---------------------------------------------------------

def _count_lines(
    lines: Iterable[str],
    delimiter: str,
    column_count: int,
    used_indexes: tuple[int, ...],
    missing_token: str,
) -> tuple[dict[tuple[str, ...], int], int, int]:
    """Hot loop: count (combination..., entity) keys straight from raw lines."""
    flat: dict[tuple[str, ...], int] = {}
    get = flat.get
    total = 0
    rejected = 0
    for line in lines:
        fields = line.split(delimiter)
        if len(fields) != column_count:
            rejected += 1
            continue
        key = tuple([fields[i].strip() or missing_token for i in used_indexes])
        flat[key] = get(key, 0) + 1
        total += 1
    return flat, total, rejected


def _merge_flat(
    into: dict[tuple[str, ...], int],
    other: dict[tuple[str, ...], int],
) -> None:
    get = into.get
    for key, n in other.items():
        into[key] = get(key, 0) + n


def _flat_to_aggregates(
    flat: dict[tuple[str, ...], int],
    total: int,
    rejected: int,
    spec: AnalysisSpec,
) -> tuple[CategoryMarginals, ContingencyIndex]:
    """Expand flat keyed counts into the nested index plus derived marginals.

    Marginals are derived from the cells rather than counted per line; the
    two agree exactly because every accepted record lands in exactly one cell.
    """
    marginals = {c: {} for c in spec.categories}
    per_cat = [marginals[c] for c in spec.categories]
    cells: dict[tuple[str, ...], dict[str, int]] = {}
    for key, n in flat.items():
        combination = key[:-1]
        entity = key[-1]
        cell = cells.get(combination)
        if cell is None:
            cells[combination] = {entity: n}
        else:
            cell[entity] = cell.get(entity, 0) + n
        for counts, value in zip(per_cat, combination):
            counts[value] = counts.get(value, 0) + n
    index = ContingencyIndex(tuple(spec.categories), spec.entity_field, cells, total, rejected)
    return CategoryMarginals(marginals), index


def _used_indexes(spec: AnalysisSpec, mapping: FieldMapping) -> tuple[int, ...]:
    return tuple(
        [mapping.index_of(c) for c in spec.categories] + [mapping.index_of(spec.entity_field)]
    )


def _is_gzip(path: Path) -> bool:
    return path.suffix == ".gz"


def open_log_text(path: str | Path) -> IO[str]:
    """Open a plain or .gz log for line iteration; undecodable bytes are replaced."""
    path = Path(path)
    if _is_gzip(path):
        return gzip.open(path, "rt", encoding="utf-8", errors="replace")
    return open(path, "r", encoding="utf-8", errors="replace")


def read_header(path: str | Path, delimiter: str) -> tuple[str, ...]:
    """Column names from the first line of a log file."""
    with open_log_text(path) as handle:
        first = handle.readline()
    if not first:
        raise ConfigError(f"{path}: empty file, no header to read")
    names = tuple(name.strip() for name in first.rstrip("\r\n").split(delimiter))
    if any(not n for n in names):
        raise ConfigError(f"{path}: header has empty column names: {first!r}")
    return names


def resolve_mapping(
    path: str | Path,
    *,
    delimiter: str = ",",
    header: bool = True,
    columns: Sequence[str] | None = None,
    missing_token: str = "Unknown",
) -> FieldMapping:
    """Build the FieldMapping from a header row or from configured columns."""
    if header:
        names = read_header(path, delimiter)
    else:
        if not columns:
            raise ConfigError("columns must be configured when the log has no header")
        names = tuple(columns)
    return FieldMapping(names, delimiter=delimiter, missing_token=missing_token)


def _data_offset(path: Path, header: bool) -> int:
    """Byte offset of the first data line in a plain-text log."""
    if not header:
        return 0
    with open(path, "rb") as handle:
        first = handle.readline()
    return len(first)


def _parse_byte_range(
    path_str: str,
    start: int,
    end: int,
    data_start: int,
    delimiter: str,
    column_count: int,
    used_indexes: tuple[int, ...],
    missing_token: str,
) -> tuple[dict[tuple[str, ...], int], int, int]:
    """Count every line whose first byte lies in [start, end).

    A line straddling ``end`` belongs to this range; a line straddling
    ``start`` belongs to the previous one.  Together the ranges of a file
    partition its data lines exactly once.
    """
    if start >= end:
        return {}, 0, 0
    with open(path_str, "rb") as handle:
        if start == data_start:
            handle.seek(start)
            owns_first = True
        else:
            handle.seek(start - 1)
            owns_first = handle.read(1) == b"\n"
        buf = handle.read(end - start)
        if not owns_first:
            cut = buf.find(b"\n")
            if cut < 0:
                return {}, 0, 0
            buf = buf[cut + 1 :]
        if buf and not buf.endswith(b"\n"):
            tail = []
            while True:
                block = handle.read(_MIN_CHUNK_BYTES)
                if not block:
                    break
                cut = block.find(b"\n")
                if cut >= 0:
                    tail.append(block[: cut + 1])
                    break
                tail.append(block)
            buf += b"".join(tail)
    lines = buf.decode("utf-8", errors="replace").splitlines()
    return _count_lines(lines, delimiter, column_count, used_indexes, missing_token)


def _chunk_ranges(size: int, data_start: int, workers: int) -> list[tuple[int, int]]:
    span = size - data_start
    if span <= 0:
        return []
    chunks = max(1, min(workers, span // _MIN_CHUNK_BYTES + 1))
    step = span // chunks
    bounds = [data_start + i * step for i in range(chunks)] + [size]
    return [(bounds[i], bounds[i + 1]) for i in range(chunks)]


def resolve_workers(workers: int) -> int:
    if workers < 0:
        raise ConfigError(f"workers must be >= 0, got {workers}")
    if workers == 0:
        return cpu_count() or 1
    return workers


def ingest_file(
    path: str | Path,
    spec: AnalysisSpec,
    mapping: FieldMapping,
    *,
    header: bool = True,
    workers: int = 1,
) -> tuple[CategoryMarginals, ContingencyIndex]:
    """Aggregate one log file, fanning plain files out over byte ranges.

    ``workers`` is the process count (0 = one per CPU).  Gzip files are
    always streamed in a single context.  The result is identical for every
    worker count because partial aggregates merge exactly.
    """
    path = Path(path)
    spec.validate_mapping(mapping)
    workers = resolve_workers(workers)
    used = _used_indexes(spec, mapping)
    if header:
        observed = read_header(path, mapping.delimiter)
        if observed != mapping.column_names:
            raise SchemaMismatch(
                f"{path}: header {observed} does not match mapping {mapping.column_names}"
            )

    if _is_gzip(path) or workers == 1:
        with open_log_text(path) as handle:
            if header:
                handle.readline()
            flat, total, rejected = _count_lines(
                handle, mapping.delimiter, mapping.column_count, used, mapping.missing_token
            )
        return _flat_to_aggregates(flat, total, rejected, spec)

    size = path.stat().st_size
    data_start = _data_offset(path, header)
    ranges = _chunk_ranges(size, data_start, workers)
    if len(ranges) <= 1:
        return ingest_file(path, spec, mapping, header=header, workers=1)
    flat: dict[tuple[str, ...], int] = {}
    total = 0
    rejected = 0
    with ProcessPoolExecutor(max_workers=len(ranges)) as pool:
        futures = [
            pool.submit(
                _parse_byte_range,
                str(path),
                lo,
                hi,
                data_start,
                mapping.delimiter,
                mapping.column_count,
                used,
                mapping.missing_token,
            )
            for lo, hi in ranges
        ]
        for future in futures:
            part, part_total, part_rejected = future.result()
            _merge_flat(flat, part)
            total += part_total
            rejected += part_rejected
    return _flat_to_aggregates(flat, total, rejected, spec)


def ingest_paths(
    paths: Sequence[str | Path],
    spec: AnalysisSpec,
    mapping: FieldMapping,
    *,
    header: bool = True,
    workers: int = 1,
) -> tuple[CategoryMarginals, ContingencyIndex]:
    """Aggregate several log files under one mapping and merge the results."""
    if not paths:
        raise ConfigError("no input paths given")
    merged_marginals: CategoryMarginals | None = None
    merged_index: ContingencyIndex | None = None
    for path in paths:
        marginals, index = ingest_file(path, spec, mapping, header=header, workers=workers)
        if merged_marginals is None or merged_index is None:
            merged_marginals, merged_index = marginals, index
        else:
            merged_marginals = merge_marginals(merged_marginals, marginals)
            merged_index = merge_indexes(merged_index, index)
    assert merged_marginals is not None and merged_index is not None
    return merged_marginals, merged_index

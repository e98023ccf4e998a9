"""Command-line front end: discover, recommend, explain, synth, bench.

Exit codes: 0 success, 1 usage errors (bad flags, missing subcommand),
2 input or configuration errors (unreadable files, invalid config, empty
logs, unknown entities), 3 unexpected internal failures.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .baseline import BaselineSet, baseline_as_dict, generate_baseline
from .config import (
    AnalysisSpec,
    ConfigError,
    FieldMapping,
    RunSettings,
    parse_name_list,
    parse_p,
    settings_from_file,
)
from .explain import emit_report, explain, write_explanation
from .ingest import CategoryMarginals, ContingencyIndex, ingest_paths, resolve_mapping
from .rankstats import baseline_stats, compute_distances
from .recommend import EntityAnomalyReport, top_k
from .synthgen import bench_config, config_from_json, generate_log

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    """Bad command line; maps to exit code 1."""


class InputError(Exception):
    """Bad input data or configuration; maps to exit code 2."""


@dataclass
class RunConfig:
    """One resolved pipeline invocation."""

    inputs: tuple[Path, ...]
    out_dir: Path
    settings: RunSettings
    threads: int = 1
    report_format: str = "json"


@dataclass
class StageTimes:
    ingest_s: float = 0.0
    baseline_s: float = 0.0
    rank_s: float = 0.0
    recommend_s: float = 0.0

    @property
    def total_s(self) -> float:
        return self.ingest_s + self.baseline_s + self.rank_s + self.recommend_s


@dataclass(frozen=True)
class BenchResult:
    """One timed pipeline run over a generated log."""

    entries: int
    threads: int
    ingest_s: float
    baseline_s: float
    rank_s: float
    recommend_s: float
    total_s: float
    throughput: float


@dataclass
class PipelineResult:
    mapping: FieldMapping
    spec: AnalysisSpec
    marginals: CategoryMarginals
    index: ContingencyIndex
    baseline: BaselineSet
    reports: list[EntityAnomalyReport]
    times: StageTimes


def _resolve_inputs(paths: Sequence[str | Path]) -> tuple[Path, ...]:
    if not paths:
        raise UsageError("at least one --input is required")
    resolved = tuple(Path(p) for p in paths)
    for path in resolved:
        if not path.is_file():
            raise InputError(f"input file not found: {path}")
    return resolved


def _prepare(config: RunConfig) -> tuple[FieldMapping, AnalysisSpec]:
    settings = config.settings
    try:
        mapping = resolve_mapping(
            config.inputs[0],
            delimiter=settings.delimiter,
            header=settings.header,
            columns=settings.columns,
            missing_token=settings.missing_token,
        )
        spec = settings.analysis_spec()
        spec.validate_mapping(mapping)
    except ConfigError as exc:
        raise InputError(str(exc)) from exc
    return mapping, spec


def run_pipeline(config: RunConfig) -> PipelineResult:
    """Ingest, baseline, rank, and report; raises InputError on bad input."""
    inputs = _resolve_inputs(config.inputs)
    mapping, spec = _prepare(config)
    times = StageTimes()

    started = time.perf_counter()
    try:
        marginals, index = ingest_paths(
            inputs, spec, mapping, header=config.settings.header, workers=config.threads
        )
    except (ConfigError, OSError) as exc:
        raise InputError(str(exc)) from exc
    times.ingest_s = time.perf_counter() - started
    if index.total_records == 0:
        raise InputError("no accepted records in input (empty log or every line malformed)")

    started = time.perf_counter()
    baseline = generate_baseline(marginals, spec)
    times.baseline_s = time.perf_counter() - started

    started = time.perf_counter()
    stats = baseline_stats(index, baseline)
    table = compute_distances(stats, index, baseline, spec.min_support)
    times.rank_s = time.perf_counter() - started

    started = time.perf_counter()
    reports = [top_k(entity, table, spec.k) for entity in sorted(stats)]
    times.recommend_s = time.perf_counter() - started

    return PipelineResult(mapping, spec, marginals, index, baseline, reports, times)


def write_artifacts(result: PipelineResult, out_dir: Path, report_format: str) -> list[Path]:
    """Write baseline.json and reports; reports.json is always the canonical one."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    baseline_path = out_dir / "baseline.json"
    baseline_path.write_text(
        json.dumps(baseline_as_dict(result.baseline), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    written.append(baseline_path)
    reports_path = out_dir / "reports.json"
    reports_path.write_text(emit_report(result.reports, "json"), encoding="utf-8")
    written.append(reports_path)
    if report_format == "csv":
        csv_path = out_dir / "reports.csv"
        csv_path.write_text(emit_report(result.reports, "csv"), encoding="utf-8")
        written.append(csv_path)
    return written


def _print_summary(result: PipelineResult, threads: int) -> None:
    times = result.times
    index = result.index
    rate = index.total_records / times.total_s if times.total_s > 0 else 0.0
    print(
        f"ingest: {index.total_records} records ({index.rejected_records} rejected) "
        f"in {times.ingest_s:.2f}s [{threads} worker(s)]"
    )
    print(f"baseline: {result.baseline.size} expected combinations in {times.baseline_s:.2f}s")
    print(f"rank: scored distances in {times.rank_s:.2f}s")
    print(f"recommend: {len(result.reports)} entity reports in {times.recommend_s:.2f}s")
    print(f"discovery time: {times.total_s:.2f}s ({rate:,.0f} entries/s)")


# --- subcommands -----------------------------------------------------------------

def _settings_from_args(args: argparse.Namespace) -> RunSettings:
    settings = settings_from_file(args.config) if args.config else RunSettings()
    if args.categories is not None:
        settings.categories = args.categories
    if args.entity_field is not None:
        settings.entity = args.entity_field
    if args.p is not None:
        settings.p = args.p
    if args.k is not None:
        settings.k = args.k
    if args.min_support is not None:
        settings.min_support = args.min_support
    return settings


def _run_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        inputs=tuple(Path(p) for p in (args.input or ())),
        out_dir=Path(args.out),
        settings=_settings_from_args(args),
        threads=args.threads,
        report_format=args.format,
    )


def cmd_discover(args: argparse.Namespace) -> int:
    config = _run_config(args)
    inputs = _resolve_inputs(config.inputs)
    mapping, spec = _prepare(config)
    try:
        marginals, index = ingest_paths(
            inputs, spec, mapping, header=config.settings.header, workers=config.threads
        )
    except (ConfigError, OSError) as exc:
        raise InputError(str(exc)) from exc
    if index.total_records == 0:
        raise InputError("no accepted records in input (empty log or every line malformed)")
    baseline = generate_baseline(marginals, spec)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    baseline_path = config.out_dir / "baseline.json"
    baseline_path.write_text(
        json.dumps(baseline_as_dict(baseline), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    print(
        f"ingest: {index.total_records} records ({index.rejected_records} rejected), "
        f"baseline: {baseline.size} expected combinations"
    )
    print(f"wrote {baseline_path}")
    return EXIT_OK


def cmd_recommend(args: argparse.Namespace) -> int:
    config = _run_config(args)
    result = run_pipeline(config)
    written = write_artifacts(result, config.out_dir, config.report_format)
    _print_summary(result, config.threads)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_explain(args: argparse.Namespace) -> int:
    config = _run_config(args)
    result = run_pipeline(config)
    by_entity = {report.entity: report for report in result.reports}
    report = by_entity.get(args.entity)
    if report is None:
        raise InputError(f"entity {args.entity!r} not observed in the input")
    bundle = explain(args.entity, report, result.index, result.baseline)
    written = write_artifacts(result, config.out_dir, config.report_format)
    target = write_explanation(bundle, config.out_dir / "explanations")
    _print_summary(result, config.threads)
    for path in written:
        print(f"wrote {path}")
    print(
        f"wrote {target} ({len(bundle.baseline_charts)} baseline charts, "
        f"{len(bundle.anomaly_charts)} anomaly charts)"
    )
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    if not args.config:
        raise UsageError("synth requires --config with a generator config (JSON)")
    config_path = Path(args.config)
    if not config_path.is_file():
        raise InputError(f"generator config not found: {config_path}")
    try:
        config = config_from_json(config_path.read_text(encoding="utf-8"))
    except ConfigError as exc:
        raise InputError(str(exc)) from exc
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "synthetic_log.csv"
    manifest_path = out_dir / "plant_manifest.json"
    manifest = generate_log(config, log_path, manifest_path)
    planted_lines = sum(p.records for p in manifest.planted)
    print(
        f"wrote {log_path} ({manifest.total_entries} background entries, "
        f"{planted_lines} planted entries)"
    )
    print(f"wrote {manifest_path}")
    return EXIT_OK


def run_bench(
    sizes: Sequence[int],
    thread_counts: Sequence[int],
    out_dir: Path,
    *,
    seed: int = 20_240_801,
) -> list[BenchResult]:
    """Generate one log per size and time the pipeline per thread count.

    Logs are deleted after timing; bench.csv keeps the measurements.  The
    reported time covers the four analysis stages, not artifact writing.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    results = []
    for size in sizes:
        config = bench_config(seed + size, size)
        log_path = out_dir / f"bench_{size}.csv"
        generate_log(config, log_path)
        mapping = config.field_mapping()
        spec = config.analysis_spec()
        try:
            for threads in thread_counts:
                run = RunConfig(
                    inputs=(log_path,),
                    out_dir=out_dir,
                    settings=RunSettings(
                        categories=spec.categories,
                        entity=spec.entity_field,
                        p=spec.p,
                        k=spec.k,
                        min_support=spec.min_support,
                        delimiter=mapping.delimiter,
                        header=True,
                    ),
                    threads=threads,
                )
                result = run_pipeline(run)
                times = result.times
                results.append(
                    BenchResult(
                        entries=result.index.total_records,
                        threads=threads,
                        ingest_s=times.ingest_s,
                        baseline_s=times.baseline_s,
                        rank_s=times.rank_s,
                        recommend_s=times.recommend_s,
                        total_s=times.total_s,
                        throughput=result.index.total_records / times.total_s
                        if times.total_s > 0
                        else 0.0,
                    )
                )
        finally:
            log_path.unlink(missing_ok=True)
    return results


def bench_csv(results: Sequence[BenchResult]) -> str:
    lines = [
        "entries,threads,ingest_s,baseline_s,rank_s,recommend_s,total_s,entries_per_s,speedup_vs_t1"
    ]
    base: dict[int, float] = {}
    for row in results:
        if row.threads == 1:
            base.setdefault(row.entries, row.total_s)
    for row in results:
        reference = base.get(row.entries)
        speedup = f"{reference / row.total_s:.2f}" if reference and row.total_s > 0 else ""
        lines.append(
            f"{row.entries},{row.threads},{row.ingest_s:.4f},{row.baseline_s:.4f},"
            f"{row.rank_s:.4f},{row.recommend_s:.4f},{row.total_s:.4f},"
            f"{row.throughput:.0f},{speedup}"
        )
    return "\n".join(lines) + "\n"


def cmd_bench(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    results = run_bench(args.sizes, args.threads, out_dir)
    csv_text = bench_csv(results)
    bench_path = out_dir / "bench.csv"
    bench_path.write_text(csv_text, encoding="utf-8")
    print(csv_text, end="")
    print(f"wrote {bench_path}")
    return EXIT_OK


# --- argument parsing ---------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # noqa: A003 - argparse API
        raise UsageError(message)


def _name_list_flag(text: str) -> tuple[str, ...]:
    try:
        return parse_name_list(text, "categories")
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _p_flag(text: str) -> int | tuple[int, ...]:
    try:
        return parse_p(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(float(part)) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _analysis_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value analysis config file")
    parser.add_argument("--input", action="append", help="log file (repeatable)")
    parser.add_argument("--out", default="comborank_out", help="output directory")
    parser.add_argument(
        "--threads", type=_positive_int, default=1, help="worker processes (0 = one per CPU)"
    )
    parser.add_argument(
        "--categories", type=_name_list_flag, default=None, help="category columns, comma-separated"
    )
    parser.add_argument(
        "--entity", dest="entity_field", default=None, help="entity column name"
    )
    parser.add_argument("--p", type=_p_flag, default=None, help="top values per category")
    parser.add_argument("--k", type=_positive_int, default=None, help="items per entity report")
    parser.add_argument(
        "--min-support", type=_positive_int, default=None, help="minimum combination count"
    )
    parser.add_argument(
        "--format", choices=("json", "csv"), default="json", help="additional report format"
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="comborank", description=__doc__)
    commands = parser.add_subparsers(dest="command", metavar="command")

    discover = commands.add_parser("discover", help="ingest and write the expected combinations")
    _analysis_flags(discover)
    discover.set_defaults(handler=cmd_discover)

    recommend = commands.add_parser("recommend", help="full pipeline: rank and report anomalies")
    _analysis_flags(recommend)
    recommend.set_defaults(handler=cmd_recommend)

    explain_cmd = commands.add_parser("explain", help="render the evidence behind one entity")
    explain_cmd.add_argument("entity", help="entity value to explain")
    _analysis_flags(explain_cmd)
    explain_cmd.set_defaults(handler=cmd_explain)

    synth = commands.add_parser("synth", help="generate a synthetic log with planted anomalies")
    synth.add_argument("--config", help="generator config (JSON)")
    synth.add_argument("--out", default="comborank_out", help="output directory")
    synth.set_defaults(handler=cmd_synth)

    bench = commands.add_parser("bench", help="time the pipeline across sizes and workers")
    bench.add_argument("--sizes", type=_int_list, default=(1_000_000,), help="log sizes")
    bench.add_argument(
        "--threads", type=_int_list, default=(1, 2, 4), help="worker counts to compare"
    )
    bench.add_argument("--out", default="comborank_out", help="output directory")
    bench.set_defaults(handler=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        return args.handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

"""Measure ingest-to-report throughput across input sizes and worker counts.

Writes bench.csv (one row per size/workers cell, with entries_per_s and
speedup_vs_t1 columns) and prints the same table.

    python3 scripts/bench_scaling.py --sizes 1e6,1e7 --threads 1,2,4 --out bench_out
"""

import argparse
import sys
from pathlib import Path

from comborank.cli import bench_csv, run_bench


def _int_list(text: str) -> list[int]:
    return [int(float(part)) for part in text.split(",") if part.strip()]


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=_int_list, default=[1_000_000, 10_000_000])
    parser.add_argument("--threads", type=_int_list, default=[1, 2, 4])
    parser.add_argument("--out", type=Path, default=Path("bench_out"))
    parser.add_argument("--seed", type=int, default=20_240_801)
    args = parser.parse_args(argv)

    results = run_bench(args.sizes, args.threads, args.out, seed=args.seed)
    table = bench_csv(results)
    args.out.mkdir(parents=True, exist_ok=True)
    csv_path = args.out / "bench.csv"
    csv_path.write_text(table, encoding="utf-8")
    print(table, end="")
    print(f"wrote {csv_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Parameter, latency and memory comparison across encoder configurations."""

from distillkit.bench.harness import CSV_COLUMNS, peak_bytes, run_bench, write_bench_csv, write_bench_json
from distillkit.bench.models import BenchConfig, BenchResult

__all__ = [
    "CSV_COLUMNS",
    "BenchConfig",
    "BenchResult",
    "peak_bytes",
    "run_bench",
    "write_bench_csv",
    "write_bench_json",
]

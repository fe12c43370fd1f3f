"""Inference latency and memory harness."""

from __future__ import annotations

import csv
import json
import logging
import time
from collections.abc import Sequence
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from distillkit.bench.models import BenchConfig, BenchResult
from distillkit.corpus import MaskedBatch
from distillkit.encoder import (
    CaptureMode,
    EncoderConfig,
    count_params,
    estimate_activation_bytes,
    forward,
    init_model_state,
)
from distillkit.numerics import TRAIN_DTYPE, no_grad
from distillkit.tokenizer import IGNORE_INDEX, SPECIAL_TOKENS

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("config", "batch", "seq_len", "median_ms", "p90_ms", "peak_bytes", "params")


def peak_bytes(config: EncoderConfig, batch: int, seq_len: int) -> int:
    """Analytic float32 peak of one inference pass."""
    return estimate_activation_bytes(config, batch, seq_len, itemsize=np.dtype(TRAIN_DTYPE).itemsize)


def _random_batch(rng: np.random.Generator, vocab_size: int, batch: int, seq_len: int) -> MaskedBatch:
    ids = rng.integers(len(SPECIAL_TOKENS), vocab_size, size=(batch, seq_len), dtype=np.int64)
    return MaskedBatch.unmasked(ids, pad_id=-1, ignore_index=IGNORE_INDEX)


def _skip_reason(config: EncoderConfig, batch: int, seq_len: int, bench: BenchConfig) -> str | None:
    if seq_len > config.max_position:
        return f"seq_len {seq_len} exceeds max_position {config.max_position}"
    estimate = peak_bytes(config, batch, seq_len)
    if estimate > bench.memory_budget_bytes:
        return f"estimated {estimate:,} bytes exceeds budget {bench.memory_budget_bytes:,}"
    return None


def run_bench(configs: Sequence[EncoderConfig], bench: BenchConfig | None = None) -> list[BenchResult]:
    """Time backbone forward passes of randomly initialised encoders over the grid.

    Runs on a single kernel thread without gradient recording. Grid points
    that do not fit ``bench.memory_budget_bytes`` (or the position table) are
    recorded as skipped.
    """
    bench = bench or BenchConfig()
    if not configs:
        raise ValueError("run_bench needs at least one configuration")
    results: list[BenchResult] = []
    with threadpool_limits(limits=1), no_grad():
        for config in configs:
            params = count_params(config)
            state = None
            for batch in bench.batch_sizes:
                for seq_len in bench.seq_lens:
                    result = BenchResult(
                        config=config.name,
                        batch=batch,
                        seq_len=seq_len,
                        params=params,
                        peak_bytes=peak_bytes(config, batch, seq_len),
                    )
                    reason = _skip_reason(config, batch, seq_len, bench)
                    if reason is not None:
                        logger.warning(f"Skipping {config.name} at batch={batch} seq_len={seq_len}: {reason}")
                        results.append(result.model_copy(update={"skipped": True, "reason": reason}))
                        continue
                    if state is None:
                        state = init_model_state(config, seed=bench.seed, dtype=TRAIN_DTYPE)
                    rng = np.random.default_rng((bench.seed, batch, seq_len))
                    inputs = _random_batch(rng, config.vocab_size, batch, seq_len)
                    for _ in range(bench.warmups):
                        forward(state, inputs, CaptureMode.BACKBONE)
                    timings = []
                    for _ in range(bench.repetitions):
                        started = time.perf_counter()
                        forward(state, inputs, CaptureMode.BACKBONE)
                        timings.append((time.perf_counter() - started) * 1000.0)
                    result = result.model_copy(
                        update={
                            "median_ms": float(np.median(timings)),
                            "p90_ms": float(np.percentile(timings, 90)),
                            "repetitions": len(timings),
                        }
                    )
                    logger.info(
                        f"{config.name} batch={batch} seq_len={seq_len}: "
                        f"median {result.median_ms:.2f} ms, p90 {result.p90_ms:.2f} ms"
                    )
                    results.append(result)
    return results


def write_bench_csv(results: Sequence[BenchResult], path: str | Path) -> Path:
    """CSV with one row per grid point; skipped points have empty latency cells."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in results:
            writer.writerow(
                [
                    r.config,
                    r.batch,
                    r.seq_len,
                    "" if r.median_ms is None else f"{r.median_ms:.4f}",
                    "" if r.p90_ms is None else f"{r.p90_ms:.4f}",
                    r.peak_bytes,
                    r.params,
                ]
            )
    return path


def write_bench_json(results: Sequence[BenchResult], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = [r.model_dump(mode="json") for r in results]
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path

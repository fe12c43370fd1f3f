"""Batch production and background prefetching."""

from __future__ import annotations

import logging
from collections import deque
from collections.abc import Callable, Iterator
from concurrent.futures import Future, ThreadPoolExecutor
from typing import Generic, TypeVar

import numpy as np

from distillkit.corpus import MaskedBatch, MaskingConfig, apply_masking, pack_blocks
from distillkit.tokenizer import Vocab
from distillkit.train.models import MLMCorpus

logger = logging.getLogger(__name__)

T = TypeVar("T")

# Masking seeds of held-out evaluation batches are offset from training ones.
EVAL_SEED_OFFSET = 1_000_003


class BatchPrefetcher(Generic[T]):
    """Produce ``produce(0) .. produce(count - 1)`` on one background worker.

    At most ``depth`` batches are prepared ahead of the consumer. Batches come
    back in index order and each depends only on its index, so results do not
    depend on thread timing. Exceptions raised by the producer surface when
    the failing batch is consumed.
    """

    def __init__(self, produce: Callable[[int], T], count: int, depth: int = 2) -> None:
        if depth < 1:
            raise ValueError(f"prefetch depth must be at least 1, got {depth}")
        self._produce = produce
        self._count = count
        self._depth = depth
        self._executor: ThreadPoolExecutor | None = None

    def __iter__(self) -> Iterator[T]:
        self._executor = ThreadPoolExecutor(max_workers=1, thread_name_prefix="distillkit-prefetch")
        pending: deque[Future[T]] = deque()
        submitted = 0
        try:
            while submitted < min(self._depth, self._count):
                pending.append(self._executor.submit(self._produce, submitted))
                submitted += 1
            while pending:
                batch = pending.popleft().result()
                if submitted < self._count:
                    pending.append(self._executor.submit(self._produce, submitted))
                    submitted += 1
                yield batch
        finally:
            for future in pending:
                future.cancel()
            self.close()

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True, cancel_futures=True)
            self._executor = None


def build_mlm_corpus(
    train_texts: list[str], heldout_texts: list[str], vocab: Vocab, max_len: int
) -> MLMCorpus:
    """Pack both splits into fixed-length blocks."""
    train = pack_blocks(train_texts, vocab, max_len)
    heldout = pack_blocks(heldout_texts, vocab, max_len) if heldout_texts else train[:0]
    return MLMCorpus(train=train, heldout=heldout, vocab=vocab)


def mlm_batch_producer(
    corpus: MLMCorpus, masking: MaskingConfig, batch_size: int, seed: int
) -> Callable[[int], MaskedBatch]:
    """Step index -> freshly masked batch of rows sampled from the training blocks."""
    blocks = corpus.train

    def produce(step: int) -> MaskedBatch:
        rng = np.random.default_rng((seed, step))
        rows = rng.choice(len(blocks), size=batch_size, replace=len(blocks) < batch_size)
        return apply_masking(blocks[rows], corpus.vocab, masking, rng_seed=int(rng.integers(2**31)))

    return produce


def heldout_batches(
    corpus: MLMCorpus, masking: MaskingConfig, batch_size: int, seed: int
) -> list[MaskedBatch]:
    """Fixed masked batches over the whole held-out split."""
    blocks = corpus.heldout
    return [
        apply_masking(blocks[start : start + batch_size], corpus.vocab, masking, seed + EVAL_SEED_OFFSET + start)
        for start in range(0, len(blocks), batch_size)
    ]

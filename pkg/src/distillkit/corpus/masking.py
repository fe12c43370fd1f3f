"""MLM corruption and block packing."""

from __future__ import annotations

import logging
from collections.abc import Iterable

import numpy as np
from numpy.typing import ArrayLike

from distillkit.corpus.models import IntArray, MaskedBatch, MaskingConfig
from distillkit.tokenizer import IGNORE_INDEX, Vocab, tokenize

logger = logging.getLogger(__name__)


def mask_batch(
    ids: ArrayLike,
    vocab: Vocab,
    select_rate: float = 0.15,
    mask_prob: float = 0.8,
    rng_seed: int = 0,
    random_prob: float | None = None,
) -> MaskedBatch:
    """Select and corrupt ordinary tokens for MLM.

    Every non-special token is selected independently with ``select_rate``.
    A selected token becomes MASK with ``mask_prob``, otherwise a uniformly
    drawn ordinary token different from the original with ``random_prob``
    (default ``1 - mask_prob``), otherwise it is kept.
    """
    config = MaskingConfig(
        select_rate=select_rate,
        mask_prob=mask_prob,
        random_prob=1.0 - mask_prob if random_prob is None else random_prob,
    )
    return apply_masking(ids, vocab, config, rng_seed)


def apply_masking(ids: ArrayLike, vocab: Vocab, config: MaskingConfig, rng_seed: int) -> MaskedBatch:
    tokens: IntArray = np.asarray(ids, dtype=np.int64)
    if tokens.ndim != 2:
        raise ValueError(f"ids must be a [batch, N] matrix, got shape {tokens.shape}")
    if tokens.size and (tokens.min() < 0 or tokens.max() >= len(vocab)):
        raise ValueError(f"ids out of range for a vocabulary of {len(vocab)} tokens")
    candidates = vocab.non_special_ids()
    if len(candidates) < 2:
        raise ValueError(
            f"random replacement needs at least 2 non-special tokens, vocabulary has {len(candidates)}"
        )

    rng = np.random.default_rng(rng_seed)
    # all draws are made for every position so results depend on the seed only
    select_draw = rng.random(tokens.shape)
    action_draw = rng.random(tokens.shape)
    replace_draw = rng.integers(0, len(candidates) - 1, size=tokens.shape)

    eligible = ~np.isin(tokens, list(vocab.special_ids))
    selected = eligible & (select_draw < config.select_rate)
    to_mask = selected & (action_draw < config.mask_prob)
    to_random = (
        selected
        & (action_draw >= config.mask_prob)
        & (action_draw < config.mask_prob + config.random_prob)
    )

    # skip over the original id so a random replacement never restores it
    original_slot = np.searchsorted(candidates, tokens)
    shifted = replace_draw + (replace_draw >= original_slot)
    replacement = candidates[np.minimum(shifted, len(candidates) - 1)]

    corrupted = tokens.copy()
    corrupted[to_mask] = vocab.mask_id
    corrupted[to_random] = replacement[to_random]
    labels = np.where(selected, tokens, IGNORE_INDEX).astype(np.int64)

    batch = MaskedBatch(
        input_ids=corrupted,
        labels=labels,
        mask_indicator=selected.astype(np.int64),
        attention_mask=(tokens != vocab.pad_id).astype(np.int64),
    )
    logger.debug(
        f"Masked {batch.num_masked}/{int(eligible.sum())} eligible tokens "
        f"({int(to_mask.sum())} MASK, {int(to_random.sum())} random)"
    )
    return batch


def pack_blocks(texts: Iterable[str], vocab: Vocab, max_len: int) -> IntArray:
    """Pack sentences into fixed-length MLM blocks.

    Sentences are concatenated with SEP after each one and cut into windows
    of ``max_len - 1`` ids, each prefixed with CLS; the last block is padded.
    """
    if max_len < 3:
        raise ValueError(f"max_len must be at least 3 for packed blocks, got {max_len}")
    stream: list[int] = []
    for text in texts:
        pieces = [piece for word in tokenize(text, vocab) for piece in word]
        if not pieces:
            continue
        stream.extend(vocab.id_of(p) for p in pieces)
        stream.append(vocab.sep_id)
    width = max_len - 1
    blocks: list[list[int]] = []
    for start in range(0, len(stream), width):
        block = [vocab.cls_id] + stream[start : start + width]
        block.extend([vocab.pad_id] * (max_len - len(block)))
        blocks.append(block)
    logger.info(f"Packed {len(stream)} ids into {len(blocks)} blocks of {max_len}")
    return np.array(blocks, dtype=np.int64).reshape(len(blocks), max_len)

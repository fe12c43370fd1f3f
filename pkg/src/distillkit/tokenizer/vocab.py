"""WordPiece vocabulary: construction, persistence and lookup."""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import NDArray

from distillkit.errors import DataFormatError
from distillkit.tokenizer.models import (
    CLS_TOKEN,
    CONTINUATION_PREFIX,
    MASK_TOKEN,
    PAD_TOKEN,
    SEP_TOKEN,
    SPECIAL_TOKENS,
    UNK_TOKEN,
)
from distillkit.tokenizer.wordpiece import basic_tokenize

logger = logging.getLogger(__name__)


class Vocab:
    """Immutable bijection between token strings and ids."""

    def __init__(self, tokens: Sequence[str], cased: bool = False) -> None:
        if len(set(tokens)) != len(tokens):
            dupes = sorted(t for t, n in Counter(tokens).items() if n > 1)
            raise ValueError(f"vocabulary has duplicate tokens: {dupes[:5]}")
        missing = [t for t in SPECIAL_TOKENS if t not in tokens]
        if missing:
            raise ValueError(f"vocabulary is missing special tokens {missing}")
        self._id_to_token: tuple[str, ...] = tuple(tokens)
        self._token_to_id: dict[str, int] = {t: i for i, t in enumerate(tokens)}
        self.cased = cased

    # ------------------------------------------------------------- specials

    @property
    def pad_id(self) -> int:
        return self._token_to_id[PAD_TOKEN]

    @property
    def unk_id(self) -> int:
        return self._token_to_id[UNK_TOKEN]

    @property
    def cls_id(self) -> int:
        return self._token_to_id[CLS_TOKEN]

    @property
    def sep_id(self) -> int:
        return self._token_to_id[SEP_TOKEN]

    @property
    def mask_id(self) -> int:
        return self._token_to_id[MASK_TOKEN]

    @property
    def special_ids(self) -> frozenset[int]:
        return frozenset(self._token_to_id[t] for t in SPECIAL_TOKENS)

    def non_special_ids(self) -> NDArray[np.int64]:
        """Sorted ids of every ordinary piece (candidates for random replacement)."""
        specials = self.special_ids
        return np.array([i for i in range(len(self)) if i not in specials], dtype=np.int64)

    # --------------------------------------------------------------- lookup

    def __len__(self) -> int:
        return len(self._id_to_token)

    def __contains__(self, token: object) -> bool:
        return token in self._token_to_id

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Vocab):
            return NotImplemented
        return self._id_to_token == other._id_to_token and self.cased == other.cased

    def __hash__(self) -> int:
        return hash((self._id_to_token, self.cased))

    def __repr__(self) -> str:
        return f"Vocab(size={len(self)}, cased={self.cased})"

    @property
    def tokens(self) -> tuple[str, ...]:
        return self._id_to_token

    def id_of(self, token: str) -> int:
        return self._token_to_id.get(token, self.unk_id)

    def token_of(self, token_id: int) -> str:
        return self._id_to_token[token_id]

    # ---------------------------------------------------------- persistence

    def save(self, path: str | Path) -> Path:
        """Write one token per line; the line number is the id."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="\n") as handle:
            for token in self._id_to_token:
                handle.write(token + "\n")
        return path


def load_vocab(path: str | Path, cased: bool = False) -> Vocab:
    """Read a vocabulary written by :meth:`Vocab.save`."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for lineno, token in enumerate(lines, start=1):
        if not token or token != token.strip():
            raise DataFormatError(path, lineno, f"invalid vocabulary entry {token!r}")
    try:
        vocab = Vocab(lines, cased=cased)
    except ValueError as exc:
        raise DataFormatError(path, None, str(exc)) from exc
    logger.info(f"Loaded vocabulary of {len(vocab)} tokens from {path}")
    return vocab


# ------------------------------------------------------------------ induction


def _split_word(word: str) -> tuple[str, ...]:
    return (word[0],) + tuple(CONTINUATION_PREFIX + ch for ch in word[1:])


def _merge_symbols(left: str, right: str) -> str:
    return left + right.removeprefix(CONTINUATION_PREFIX)


def base_pieces(words: Iterable[str]) -> list[str]:
    """Every seen character as a word-initial piece."""
    return sorted({ch for word in words for ch in word})


def continuation_pieces(word_counts: Counter[str]) -> list[str]:
    """``##c`` for every character seen after a word's first, most frequent first."""
    counts: Counter[str] = Counter()
    for word, count in word_counts.items():
        for ch in word[1:]:
            counts[CONTINUATION_PREFIX + ch] += count
    return [piece for piece, _ in sorted(counts.items(), key=lambda item: (-item[1], item[0]))]


def build_vocab(corpus: Iterable[str], target_size: int, cased: bool = False) -> Vocab:
    """Induce a WordPiece vocabulary by greedy pair merging.

    Starts from the specials and every seen character. Continuation pieces
    (``##c``) come next, most frequent first, while the budget allows. The
    rest of the budget goes to merging the adjacent symbol pair with the
    highest corpus frequency (ties broken lexicographically) until
    ``target_size`` tokens exist or no pair is left.
    """
    word_counts: Counter[str] = Counter()
    for line in corpus:
        word_counts.update(basic_tokenize(line, cased=cased))
    if not word_counts:
        raise ValueError("cannot build a vocabulary from an empty corpus")

    tokens: list[str] = list(SPECIAL_TOKENS) + base_pieces(word_counts)
    minimum = len(tokens)
    if target_size < minimum:
        raise ValueError(
            f"target_size {target_size} is smaller than the {len(SPECIAL_TOKENS)} specials "
            f"plus {minimum - len(SPECIAL_TOKENS)} base pieces"
        )
    tokens.extend(continuation_pieces(word_counts)[: target_size - minimum])

    known = set(tokens)
    splits = {word: _split_word(word) for word in sorted(word_counts)}
    while len(tokens) < target_size:
        pair_counts: Counter[tuple[str, str]] = Counter()
        for word, symbols in splits.items():
            count = word_counts[word]
            for pair in zip(symbols, symbols[1:], strict=False):
                pair_counts[pair] += count
        if not pair_counts:
            break
        best = min(pair_counts.items(), key=lambda item: (-item[1], item[0]))[0]
        merged = _merge_symbols(*best)
        for word, symbols in splits.items():
            splits[word] = _apply_merge(symbols, best, merged)
        if merged not in known:
            known.add(merged)
            tokens.append(merged)

    logger.info(
        f"Built {'cased' if cased else 'uncased'} vocabulary: {len(tokens)} tokens "
        f"from {len(word_counts)} distinct words"
    )
    return Vocab(tokens, cased=cased)


def _apply_merge(symbols: tuple[str, ...], pair: tuple[str, str], merged: str) -> tuple[str, ...]:
    out: list[str] = []
    i = 0
    while i < len(symbols):
        if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == pair:
            out.append(merged)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return tuple(out)


def vocab_stats(vocab: Vocab) -> dict[str, Any]:
    """Summary used by ``distillkit build-vocab``."""
    continuation = sum(1 for t in vocab.tokens if t.startswith(CONTINUATION_PREFIX))
    return {
        "size": len(vocab),
        "cased": vocab.cased,
        "specials": len(SPECIAL_TOKENS),
        "continuation_pieces": continuation,
        "word_initial_pieces": len(vocab) - continuation - len(SPECIAL_TOKENS),
    }

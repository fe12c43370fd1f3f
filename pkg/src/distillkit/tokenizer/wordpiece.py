"""Greedy longest-match-first WordPiece encoding and label alignment."""

from __future__ import annotations

import unicodedata
from collections.abc import Sequence
from typing import TYPE_CHECKING, Any, TypeVar

import numpy as np
from numpy.typing import NDArray

from distillkit.tokenizer.models import CONTINUATION_PREFIX, IGNORE_INDEX, Encoding

if TYPE_CHECKING:
    from distillkit.tokenizer.vocab import Vocab

T = TypeVar("T")


def _is_punctuation(ch: str) -> bool:
    code = ord(ch)
    # ASCII symbols such as "$" and "^" are not in the Unicode P* categories
    if 33 <= code <= 47 or 58 <= code <= 64 or 91 <= code <= 96 or 123 <= code <= 126:
        return True
    return unicodedata.category(ch).startswith("P")


def basic_tokenize(text: str, cased: bool = False) -> list[str]:
    """Split on whitespace, then isolate every punctuation character."""
    if not cased:
        text = text.lower()
    words: list[str] = []
    for chunk in text.split():
        current: list[str] = []
        for ch in chunk:
            if _is_punctuation(ch):
                if current:
                    words.append("".join(current))
                    current = []
                words.append(ch)
            else:
                current.append(ch)
        if current:
            words.append("".join(current))
    return words


def wordpiece(word: str, vocab: Vocab) -> list[str] | None:
    """Greedy longest-match decomposition of one word, or None if impossible."""
    pieces: list[str] = []
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while start < end:
            candidate = word[start:end]
            if start > 0:
                candidate = CONTINUATION_PREFIX + candidate
            if candidate in vocab:
                match = candidate
                break
            end -= 1
        if match is None:
            return None
        pieces.append(match)
        start = end
    return pieces


def tokenize(text: str, vocab: Vocab) -> list[list[str]]:
    """Pieces of every word of ``text`` (no specials); unknown words become UNK."""
    unk = vocab.token_of(vocab.unk_id)
    return [wordpiece(word, vocab) or [unk] for word in basic_tokenize(text, cased=vocab.cased)]


def encode(text: str, vocab: Vocab, max_len: int) -> Encoding:
    """Encode ``text`` as ``[CLS] pieces... [SEP]`` padded to ``max_len``.

    Pieces beyond ``max_len - 2`` are dropped before SEP is appended.
    """
    return _frame(tokenize(text, vocab), vocab, max_len)


def encode_words(words: Sequence[str], vocab: Vocab, max_len: int) -> Encoding:
    """Encode pre-split words (CoNLL style), one ``word_index`` per given word.

    A word that basic tokenization would split further keeps all of its
    pieces under the same word index.
    """
    unk = vocab.token_of(vocab.unk_id)
    word_pieces: list[list[str]] = []
    for word in words:
        pieces: list[str] = []
        for unit in basic_tokenize(word, cased=vocab.cased):
            pieces.extend(wordpiece(unit, vocab) or [unk])
        word_pieces.append(pieces or [unk])
    return _frame(word_pieces, vocab, max_len)


def _frame(word_pieces: list[list[str]], vocab: Vocab, max_len: int) -> Encoding:
    if max_len < 2:
        raise ValueError(f"max_len must leave room for CLS and SEP, got {max_len}")
    ids = [vocab.cls_id]
    words = [-1]
    for index, pieces in enumerate(word_pieces):
        for piece in pieces:
            ids.append(vocab.id_of(piece))
            words.append(index)
    ids, words = ids[: max_len - 1], words[: max_len - 1]
    ids.append(vocab.sep_id)
    words.append(-1)
    attention = [1] * len(ids)
    padding = max_len - len(ids)
    ids.extend([vocab.pad_id] * padding)
    words.extend([-1] * padding)
    attention.extend([0] * padding)
    return Encoding(
        token_ids=ids,
        word_index=words,
        attention_mask=attention,
        num_words=len(word_pieces),
        tokens=[vocab.token_of(i) for i in ids],
    )


def encode_batch(
    texts: Sequence[str], vocab: Vocab, max_len: int
) -> tuple[NDArray[np.int64], NDArray[np.int64], list[Encoding]]:
    """Encode several texts; returns ``(ids, attention_mask, encodings)``."""
    encodings = [encode(text, vocab, max_len) for text in texts]
    ids = np.array([e.token_ids for e in encodings], dtype=np.int64).reshape(len(texts), max_len)
    mask = np.array([e.attention_mask for e in encodings], dtype=np.int64).reshape(len(texts), max_len)
    return ids, mask, encodings


def decode(token_ids: Sequence[int], vocab: Vocab, skip_special: bool = True) -> str:
    """Join pieces back into words; continuation pieces attach to their head."""
    specials = vocab.special_ids
    words: list[str] = []
    for token_id in token_ids:
        if skip_special and token_id in specials:
            continue
        token = vocab.token_of(int(token_id))
        if token.startswith(CONTINUATION_PREFIX) and words:
            words[-1] += token[len(CONTINUATION_PREFIX) :]
        else:
            words.append(token)
    return " ".join(words)


def align_labels(word_labels: Sequence[T], enc: Encoding, ignore: Any = IGNORE_INDEX) -> list[Any]:
    """Propagate each word's label to all of its sub-word pieces.

    Special and padding positions receive ``ignore``.
    """
    if len(word_labels) != enc.num_words:
        raise ValueError(
            f"got {len(word_labels)} word labels for an encoding of {enc.num_words} words"
        )
    return [ignore if w < 0 else word_labels[w] for w in enc.word_index]

"""WordPiece vocabulary induction, encoding and label alignment."""

from distillkit.tokenizer.models import (
    IGNORE_INDEX,
    SPECIAL_TOKENS,
    Encoding,
)
from distillkit.tokenizer.vocab import Vocab, build_vocab, load_vocab, vocab_stats
from distillkit.tokenizer.wordpiece import (
    align_labels,
    basic_tokenize,
    decode,
    encode,
    encode_batch,
    encode_words,
    tokenize,
    wordpiece,
)

__all__ = [
    "IGNORE_INDEX",
    "SPECIAL_TOKENS",
    "Encoding",
    "Vocab",
    "align_labels",
    "basic_tokenize",
    "build_vocab",
    "decode",
    "encode",
    "encode_batch",
    "encode_words",
    "load_vocab",
    "tokenize",
    "vocab_stats",
    "wordpiece",
]
